import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from copaug.evaluation import (
    PROJECTION_STATISTICS,
    band_depth,
    depth_groups,
    error_metrics,
    random_projection_report,
    write_depth_report,
    write_level_quantiles,
    write_projection_report,
)


class TestProjectionReport:
    def test_identical_matrices_exact_diagonal(self):
        x = np.random.default_rng(0).normal(size=(40, 6))
        rep = random_projection_report(x, x, iters=20, seed=3)
        for name in PROJECTION_STATISTICS:
            s_real, s_synth = rep.pairs(name)
            np.testing.assert_array_equal(s_real, s_synth)

    def test_row_permutation_invariance(self):
        gen = np.random.default_rng(1)
        x = gen.normal(size=(30, 4))
        rep = random_projection_report(x, x[gen.permutation(30)], iters=10, seed=5)
        for name in PROJECTION_STATISTICS:
            s_real, s_synth = rep.pairs(name)
            np.testing.assert_allclose(s_real, s_synth, rtol=1e-12)

    def test_column_mismatch(self):
        with pytest.raises(ValueError, match="column"):
            random_projection_report(np.zeros((5, 3)), np.zeros((5, 4)), 2, 0)

    def test_deterministic(self):
        x = np.random.default_rng(2).normal(size=(25, 5))
        y = np.random.default_rng(3).normal(size=(20, 5))
        a = random_projection_report(x, y, iters=7, seed=11)
        b = random_projection_report(x, y, iters=7, seed=11)
        for name in PROJECTION_STATISTICS:
            np.testing.assert_array_equal(a.pairs(name)[1], b.pairs(name)[1])

    def test_report_file(self, tmp_path):
        x = np.random.default_rng(4).normal(size=(10, 3))
        rep = random_projection_report(x, x, iters=3, seed=1)
        path = tmp_path / "proj.csv"
        write_projection_report(path, rep)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "statistic,iteration,s_real,s_synth"
        assert len(lines) == 1 + len(PROJECTION_STATISTICS) * 3


class TestBandDepth:
    def test_three_nested_curves(self):
        curves = np.array([[1.0, 1, 1], [2, 2, 2], [3, 3, 3]])
        np.testing.assert_allclose(band_depth(curves), [2 / 3, 1.0, 2 / 3])

    def test_four_ordered_curves(self):
        curves = np.array([[1.0, 1], [2, 2], [3, 3], [4, 4]])
        np.testing.assert_allclose(band_depth(curves), [0.5, 5 / 6, 5 / 6, 0.5])

    def test_identical_curves_all_one(self):
        curves = np.ones((5, 4))
        np.testing.assert_array_equal(band_depth(curves), np.ones(5))

    def test_crossing_curve_outside(self):
        # A curve leaving the band at a single point is not enveloped there.
        a = np.array([[0.0, 0.0], [2.0, 2.0], [1.0, 3.0]])
        depths = band_depth(a)
        assert depths[2] < 1.0

    def test_needs_three(self):
        with pytest.raises(ValueError):
            band_depth(np.zeros((2, 4)))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=0, max_value=1000),
           st.floats(min_value=0.1, max_value=5.0),
           st.floats(min_value=-10.0, max_value=10.0))
    def test_positive_affine_invariance(self, seed, scale, shift):
        curves = np.random.default_rng(seed).normal(size=(6, 5))
        np.testing.assert_array_equal(band_depth(curves), band_depth(scale * curves + shift))


class TestDepthGroups:
    def test_group_sizes_n4(self):
        r = depth_groups(np.array([0.9, 0.7, 0.5, 0.3]))
        assert (len(r.groups["central"]), len(r.groups["middle"]), len(r.groups["outer"])) == (1, 1, 2)

    def test_tie_breaks_by_index(self):
        r = depth_groups(np.array([0.5, 0.5, 0.5, 0.5]))
        np.testing.assert_array_equal(r.order, [0, 1, 2, 3])

    def test_nested_median(self):
        curves = np.array([[1.0, 1, 1], [2, 2, 2], [3, 3, 3]])
        r = depth_groups(band_depth(curves))
        assert r.median_index == 1

    def test_groups_partition(self):
        depths = np.random.default_rng(3).random(11)
        r = depth_groups(depths)
        combined = np.concatenate([r.groups["central"], r.groups["middle"], r.groups["outer"]])
        assert sorted(combined.tolist()) == list(range(11))


class TestErrorMetrics:
    def test_perfect_prediction(self):
        y = np.random.default_rng(0).normal(size=(8, 3))
        em = error_metrics(y, y)
        assert em.mb == 0.0 and em.mae == 0.0

    def test_cancellation(self):
        em = error_metrics(np.array([[1.0], [-1.0]]), np.zeros((2, 1)))
        assert em.mb == 0.0 and em.mae == 1.0

    def test_arithmetic(self):
        em = error_metrics(np.array([[2.0], [4.0]]), np.zeros((2, 1)))
        assert em.mb == 3.0 and em.mae == 3.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            error_metrics(np.zeros((2, 3)), np.zeros((3, 2)))

    def test_level_quantiles_shape(self):
        em = error_metrics(np.random.normal(size=(40, 6)), np.zeros((40, 6)))
        assert em.level_quantiles.shape == (6, 3)
        assert np.all(em.level_quantiles[:, 0] <= em.level_quantiles[:, 2])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_mae_dominates_bias(self, seed):
        gen = np.random.default_rng(seed)
        yt = gen.normal(size=(7, 4))
        yp = gen.normal(size=(7, 4))
        em = error_metrics(yt, yp)
        assert em.mae >= abs(em.mb)

    def test_quantile_file(self, tmp_path):
        em = error_metrics(np.random.normal(size=(10, 4)), np.zeros((10, 4)))
        path = tmp_path / "levels.csv"
        write_level_quantiles(path, em)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "level,q_low,q_mid,q_high"
        assert len(lines) == 5


def test_depth_report_file(tmp_path):
    curves = np.random.default_rng(5).normal(size=(9, 4))
    ranking = depth_groups(band_depth(curves))
    path = tmp_path / "depth.csv"
    write_depth_report(path, curves, ranking)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "level,q_low,q_mid,q_high"
    assert len(lines) == 5
