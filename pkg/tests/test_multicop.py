import numpy as np
import pytest
from scipy.special import ndtr
from scipy.stats import ks_2samp

from copaug import rng
from copaug.bicop import Family, PairCopula, h_inv, kendall_tau
from copaug.dataset import LevelGrid, Profile, ProfileSet, flatten, generate_surrogate
from copaug.multicop import (
    CopulaSpec,
    fit_gaussian,
    fit_synth_model,
    fit_vine,
    load_model,
    sample_synth_model,
    save_model,
    select_structure,
    simulate_gaussian,
    simulate_vine,
    synthesize,
)


def gaussian_umatrix(R, n, seed):
    z = rng.normals(seed, (n, len(R)))
    return np.clip(ndtr(z @ np.linalg.cholesky(np.asarray(R)).T), 1e-10, 1 - 1e-10)


def known_three_dim_vine(n, seed):
    """C12 = Gaussian(0.7), C23 = Clayton(2), C13|2 = Independence."""
    W = rng.uniforms(seed, (n, 3))
    c12 = PairCopula(Family.GAUSSIAN, 0, 0.7)
    c23 = PairCopula(Family.CLAYTON, 0, 2.0)
    u2 = W[:, 1]
    u1 = h_inv(c12, W[:, 0], u2, direction=1)
    u3 = h_inv(c23, W[:, 2], u2, direction=2)
    return np.column_stack([u1, u2, u3])


class TestGaussianCopula:
    def test_independent_columns(self):
        u = rng.uniforms(4, (5000, 4))
        R = fit_gaussian(u).R
        off = R[~np.eye(4, dtype=bool)]
        assert np.abs(off).max() < 0.05

    def test_recovers_correlation(self):
        u = gaussian_umatrix([[1.0, 0.8], [0.8, 1.0]], 5000, 11)
        assert abs(fit_gaussian(u).R[0, 1] - 0.8) < 0.03

    def test_single_feature(self):
        u = rng.uniforms(1, (50, 1))
        np.testing.assert_array_equal(fit_gaussian(u).R, [[1.0]])

    def test_constant_column_rejected(self):
        u = rng.uniforms(2, (50, 2))
        u[:, 0] = 0.5
        with pytest.raises(ValueError, match="constant"):
            fit_gaussian(u)

    def test_cholesky_reconstruction(self):
        u = gaussian_umatrix(0.6 ** np.abs(np.subtract.outer(range(5), range(5))), 500, 7)
        m = fit_gaussian(u)
        assert np.abs(m.L @ m.L.T - m.R).max() < 1e-10

    def test_degenerate_correlation_regularized(self):
        base = rng.uniforms(9, (200, 1))
        u = np.column_stack([base, base, rng.uniforms(10, 200)])  # two identical columns
        m = fit_gaussian(np.clip(u, 1e-10, 1 - 1e-10))
        assert np.all(np.isfinite(m.L))

    def test_simulation_identity_matrix(self):
        from copaug.multicop import GaussianCopulaModel
        m = GaussianCopulaModel(np.eye(3), np.eye(3))
        sim = simulate_gaussian(m, 2000, 5)
        for i in range(3):
            for j in range(i + 1, 3):
                assert abs(kendall_tau(sim[:, i], sim[:, j])) < 0.05

    def test_simulation_greiner_relation(self):
        u = gaussian_umatrix([[1.0, 0.8], [0.8, 1.0]], 4000, 2)
        sim = simulate_gaussian(fit_gaussian(u), 5000, 3)
        expected = 2.0 / np.pi * np.arcsin(0.8)
        assert abs(kendall_tau(sim[:, 0], sim[:, 1]) - expected) < 0.04

    def test_simulation_deterministic_and_open_interval(self):
        m = fit_gaussian(rng.uniforms(1, (100, 2)))
        a = simulate_gaussian(m, 500, 9)
        b = simulate_gaussian(m, 500, 9)
        np.testing.assert_array_equal(a, b)
        assert a.min() > 0.0 and a.max() < 1.0

    def test_simulation_recovers_correlation_matrix(self):
        from scipy.special import ndtri
        from copaug.multicop import GaussianCopulaModel
        R = np.array([[1.0, 0.6, -0.3], [0.6, 1.0, 0.1], [-0.3, 0.1, 1.0]])
        m = GaussianCopulaModel(R, np.linalg.cholesky(R))
        sim = simulate_gaussian(m, 5000, 77)
        R_hat = np.corrcoef(ndtri(sim), rowvar=False)
        assert np.abs(R_hat - R).max() < 0.05


class TestStructureSelection:
    def test_hand_checkable_mst(self):
        # |tau| targets: (0,1)=0.8, (1,2)=0.7, (0,2)=0.56 -> tree 1 is {01, 12}.
        rho = lambda tau: np.sin(np.pi * tau / 2.0)
        R = np.array([
            [1.0, rho(0.8), rho(0.56)],
            [rho(0.8), 1.0, rho(0.7)],
            [rho(0.56), rho(0.7), 1.0],
        ])
        u = gaussian_umatrix(R, 4000, 21)
        structure = select_structure(u)
        tree1 = {cond for cond, _ in structure.trees[0]}
        assert tree1 == {(0, 1), (1, 2)}

    def test_two_features(self):
        u = rng.uniforms(3, (200, 2))
        s = select_structure(u)
        assert s.trees == (((((0, 1), frozenset()),))[0],) or s.trees[0][0][0] == (0, 1)
        assert len(s.trees) == 1

    def test_truncation_keeps_structure(self):
        u = gaussian_umatrix(0.6 ** np.abs(np.subtract.outer(range(5), range(5))), 800, 5)
        s = select_structure(u, truncation=1)
        assert len(s.trees) == 4
        assert s.truncation == 1

    def test_deterministic(self):
        u = rng.uniforms(8, (300, 4))
        assert select_structure(u) == select_structure(u)

    def test_edge_count_quadratic(self):
        d = 7
        u = gaussian_umatrix(0.5 ** np.abs(np.subtract.outer(range(d), range(d))), 400, 3)
        s = select_structure(u)
        assert sum(len(t) for t in s.trees) == d * (d - 1) // 2


class TestVineFit:
    def test_known_vine_recovery(self):
        data = known_three_dim_vine(3000, 11)
        vm = fit_vine(data, CopulaSpec(kind="vine"))
        tree1 = {e.cond: e for e in vm.trees[0]}
        assert set(tree1) == {(0, 1), (1, 2)}
        assert abs(tree1[(0, 1)].tau_hat - 2 / np.pi * np.arcsin(0.7)) < 0.05
        assert abs(tree1[(1, 2)].tau_hat - 0.5) < 0.05
        assert vm.trees[1][0].copula.family is Family.INDEPENDENCE

    def test_independent_uniforms_all_independence(self):
        u = rng.uniforms(77, (2000, 5))
        vm = fit_vine(u, CopulaSpec(kind="vine"))
        assert all(e.copula.family is Family.INDEPENDENCE for tree in vm.trees for e in tree)

    def test_catalogue_restriction(self):
        u = gaussian_umatrix(0.7 ** np.abs(np.subtract.outer(range(4), range(4))), 1500, 13)
        vm = fit_vine(u, CopulaSpec(kind="vine", catalogue=frozenset({Family.GAUSSIAN})))
        for tree in vm.trees:
            for e in tree:
                assert e.copula.family in (Family.GAUSSIAN, Family.INDEPENDENCE)

    def test_truncation_gives_independence_beyond(self):
        u = gaussian_umatrix(0.7 ** np.abs(np.subtract.outer(range(5), range(5))), 1000, 17)
        vm = fit_vine(u, CopulaSpec(kind="vine", truncation=1))
        assert all(e.copula.family is Family.INDEPENDENCE for tree in vm.trees[1:] for e in tree)
        assert any(e.copula.family is not Family.INDEPENDENCE for e in vm.trees[0])


class TestVineSimulation:
    def test_round_trip_taus(self):
        data = known_three_dim_vine(3000, 19)
        vm = fit_vine(data, CopulaSpec(kind="vine"))
        sim = simulate_vine(vm, 5000, 23)
        assert sim.min() > 0.0 and sim.max() < 1.0
        expected12 = 2 / np.pi * np.arcsin(0.7)
        assert abs(kendall_tau(sim[:, 0], sim[:, 1]) - expected12) < 0.04
        assert abs(kendall_tau(sim[:, 1], sim[:, 2]) - 0.5) < 0.04

    def test_independence_vine_passthrough(self):
        u = rng.uniforms(31, (1500, 4))
        vm = fit_vine(u, CopulaSpec(kind="vine"))
        sim = simulate_vine(vm, 2000, 7)
        for i in range(4):
            for j in range(i + 1, 4):
                assert abs(kendall_tau(sim[:, i], sim[:, j])) < 0.05

    def test_deterministic(self):
        vm = fit_vine(known_three_dim_vine(800, 3), CopulaSpec(kind="vine"))
        np.testing.assert_array_equal(simulate_vine(vm, 300, 5), simulate_vine(vm, 300, 5))

    def test_refit_recovers_tree1_taus(self):
        data = known_three_dim_vine(5000, 41)
        vm = fit_vine(data, CopulaSpec(kind="vine"))
        sim = simulate_vine(vm, 5000, 43)
        refit = fit_vine(sim, CopulaSpec(kind="vine"))
        orig = {frozenset(e.cond): abs(e.tau_hat) for e in vm.trees[0]}
        new = {frozenset(e.cond): abs(e.tau_hat) for e in refit.trees[0]}
        for pair, tau in orig.items():
            assert pair in new
            assert abs(new[pair] - tau) < 0.05

    def test_deeper_vine_pairwise_taus(self):
        R = 0.75 ** np.abs(np.subtract.outer(range(5), range(5)))
        u = gaussian_umatrix(R, 3000, 29)
        vm = fit_vine(u, CopulaSpec(kind="vine"))
        sim = simulate_vine(vm, 4000, 31)
        for i in range(5):
            for j in range(i + 1, 5):
                target = kendall_tau(u[:, i], u[:, j])
                assert abs(kendall_tau(sim[:, i], sim[:, j]) - target) < 0.06


class TestSynthesize:
    def test_factor_and_validity(self):
        train = generate_surrogate(50, LevelGrid(6), 123)
        synth = synthesize(train, CopulaSpec(kind="gaussian"), factor=1, seed=9)
        assert len(synth) == 50
        assert synth.grid.n_full == 6  # Profile invariants hold by construction

    def test_factor_multiplies(self):
        train = generate_surrogate(40, LevelGrid(5), 3)
        assert len(synthesize(train, CopulaSpec(kind="gaussian"), 5, 1)) == 200

    def test_marginal_fidelity_ks(self):
        train = generate_surrogate(400, LevelGrid(8), 7)
        synth = synthesize(train, CopulaSpec(kind="gaussian"), 1, 2)
        Xt = flatten(train).values
        Xs = flatten(synth).values
        stats = [ks_2samp(Xt[:, j], Xs[:, j]).statistic for j in range(Xt.shape[1])]
        assert max(stats) < 0.1

    def test_tau_c_nonnegative(self):
        train = generate_surrogate(100, LevelGrid(8), 5)
        synth = synthesize(train, CopulaSpec(kind="gaussian"), 1, 77)
        assert all(np.all(p.tau_c >= 0.0) for p in synth.profiles)

    def test_pressure_resort_counted(self):
        # Weakly dependent overlapping pressure columns force occasional
        # inversions that synthesis must repair.
        gen = np.random.default_rng(0)
        profs = []
        for _ in range(150):
            p = np.sort(gen.uniform(1e4, 1e5, 4))
            profs.append(Profile(200 + 50 * gen.random(4), p, np.zeros(4)))
        train = ProfileSet(LevelGrid(4), tuple(profs))
        model = fit_synth_model(train, CopulaSpec(kind="gaussian"))
        synth, diag = sample_synth_model(model, 400, 3)
        assert diag.pressure_resorted > 0
        assert all(np.all(np.diff(p.p) > 0) for p in synth.profiles)

    def test_vine_kind_works(self):
        train = generate_surrogate(120, LevelGrid(5), 11)
        synth = synthesize(train, CopulaSpec(kind="vine", truncation=2), 1, 13)
        assert len(synth) == 120

    def test_deterministic(self):
        train = generate_surrogate(60, LevelGrid(5), 2)
        a = synthesize(train, CopulaSpec(kind="gaussian"), 1, 5)
        b = synthesize(train, CopulaSpec(kind="gaussian"), 1, 5)
        assert all(np.array_equal(x.T, y.T) for x, y in zip(a.profiles, b.profiles))


class TestModelArtifact:
    @pytest.mark.parametrize("kind,trunc", [("gaussian", None), ("vine", 2)])
    def test_round_trip_sampling_identical(self, tmp_path, kind, trunc):
        train = generate_surrogate(80, LevelGrid(5), 31)
        model = fit_synth_model(train, CopulaSpec(kind=kind, truncation=trunc))
        path = tmp_path / "model.json"
        save_model(path, model)
        reloaded = load_model(path)
        a, _ = sample_synth_model(model, 50, 7)
        b, _ = sample_synth_model(reloaded, 50, 7)
        np.testing.assert_array_equal(flatten(a).values, flatten(b).values)

    def test_version_field_required(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"kind": "gaussian"}')
        with pytest.raises(ValueError, match="version"):
            load_model(path)

    def test_save_deterministic_bytes(self, tmp_path):
        train = generate_surrogate(40, LevelGrid(4), 3)
        model = fit_synth_model(train, CopulaSpec(kind="gaussian"))
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_model(p1, model)
        save_model(p2, model)
        assert p1.read_bytes() == p2.read_bytes()
