"""Multivariate dependence models on pseudo-observations.

Two model kinds share one surface: the full Gaussian copula (correlation
matrix of normal scores, Cholesky sampling) and the regular vine built by
the sequential greedy algorithm: per tree level, a maximum spanning tree
on |Kendall tau| weights restricted by the proximity condition, each edge
fitted by AIC family selection, conditional pseudo-data pushed through
the fitted h-functions to the next level.  Simulation inverts the
Rosenblatt transform through chained h-inverses.

The synthesize entry point ties marginals and copula together: fit both
on a flattened training set, simulate, map columns back through the
marginal quantiles and rebuild profiles.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from . import rng
from .bicop import (
    DEFAULT_CATALOGUE,
    EPS,
    INDEPENDENCE,
    Family,
    PairCopula,
    fit_pair,
    h_func,
    h_inv,
    kendall_tau,
)
from .dataset import LevelGrid, Profile, ProfileSet, flatten
from .marginals import EmpiricalMarginal, fit_empirical, pseudo_observations, quantile

MODEL_FORMAT_VERSION = 1

# Full vines are allowed but quadratic; above this width default to truncating.
TRUNCATION_FREE_LIMIT = 60
DEFAULT_TRUNCATION = 5


@dataclass(frozen=True)
class GaussianCopulaModel:
    """Correlation matrix R with Cholesky factor L, L @ L.T = R."""

    R: np.ndarray
    L: np.ndarray

    @property
    def d(self) -> int:
        return self.R.shape[0]


@dataclass(frozen=True)
class VineEdge:
    """One pair copula of the vine: conditioned pair given a conditioning set.

    cond is ordered: the copula's first argument is F(cond[0] | given).
    """

    cond: tuple
    given: frozenset
    copula: PairCopula
    tau_hat: float

    @property
    def constraint(self) -> frozenset:
        return frozenset(self.cond) | self.given


@dataclass(frozen=True)
class VineStructure:
    """Tree sequence of conditioned pairs and conditioning sets."""

    d: int
    trees: tuple  # tree t (1-based) at index t-1: tuple of (cond, given)
    truncation: int

    def __post_init__(self):
        if len(self.trees) != self.d - 1:
            raise ValueError(f"expected {self.d - 1} trees, got {len(self.trees)}")
        for t, tree in enumerate(self.trees, start=1):
            if len(tree) != self.d - t:
                raise ValueError(f"tree {t} must have {self.d - t} edges, got {len(tree)}")
            for cond, given in tree:
                if len(given) != t - 1:
                    raise ValueError(f"tree {t} edge {cond}: conditioning size {len(given)} != {t - 1}")


@dataclass(frozen=True)
class VineModel:
    """Fitted regular vine: structure plus one PairCopula per edge."""

    d: int
    trees: tuple  # tuple per tree of VineEdge
    truncation: int

    @property
    def structure(self) -> VineStructure:
        return VineStructure(
            self.d,
            tuple(tuple((e.cond, e.given) for e in tree) for tree in self.trees),
            self.truncation,
        )

    @property
    def n_params(self) -> int:
        return sum(e.copula.n_params for tree in self.trees for e in tree)

    @property
    def loglik(self) -> float:
        return sum(e.copula.loglik for tree in self.trees for e in tree)


@dataclass(frozen=True)
class CopulaSpec:
    """Which dependence model to fit and with what options."""

    kind: str = "gaussian"  # "gaussian" or "vine"
    catalogue: frozenset = DEFAULT_CATALOGUE
    truncation: int | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "vine"):
            raise ValueError(f"kind must be 'gaussian' or 'vine', got {self.kind!r}")
        if self.kind == "vine" and not self.catalogue:
            raise ValueError("vine fitting needs a nonempty catalogue")


@dataclass(frozen=True)
class SynthModel:
    """Serializable generative model: per-column marginals plus a copula.

    Constant training columns carry no dependence information and break
    rank correlations, so the copula covers only the `active` columns;
    degenerate columns are reproduced by their (constant) quantile map.
    """

    kind: str
    columns: tuple
    marginals: tuple  # EmpiricalMarginal per column
    active: tuple  # column indices covered by the copula
    gaussian: GaussianCopulaModel | None = None
    vine: VineModel | None = None

    @property
    def d(self) -> int:
        return len(self.columns)


@dataclass
class SynthesisDiagnostics:
    """Bookkeeping of invariant enforcement during synthesis."""

    n_rows: int = 0
    pressure_resorted: int = 0


def _check_umatrix(u) -> np.ndarray:
    u = np.asarray(getattr(u, "values", u), dtype=float)
    if u.ndim != 2:
        raise ValueError("pseudo-observation matrix must be 2-dimensional")
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError("pseudo-observations must lie strictly inside (0, 1)")
    return u


# ---------------------------------------------------------------------------
# Gaussian copula.
# ---------------------------------------------------------------------------

def fit_gaussian(u) -> GaussianCopulaModel:
    """Correlation of normal scores, eigenvalue-clipped and renormalized."""
    u = _check_umatrix(u)
    n, d = u.shape
    if n < 10:
        raise ValueError("need at least 10 rows to fit a Gaussian copula")
    z = ndtri(u)
    if np.any(np.std(z, axis=0) == 0.0):
        raise ValueError("constant column: correlation undefined")
    if d == 1:
        R = np.array([[1.0]])
    else:
        R = np.corrcoef(z, rowvar=False)
    # Clip tiny/negative eigenvalues so the factorization always succeeds.
    w, V = np.linalg.eigh(R)
    w = np.maximum(w, 1e-6)
    R = (V * w) @ V.T
    scale = np.sqrt(np.diag(R))
    R = R / np.outer(scale, scale)
    R = 0.5 * (R + R.T)
    np.fill_diagonal(R, 1.0)
    L = np.linalg.cholesky(R)
    return GaussianCopulaModel(R, L)


def simulate_gaussian(m: GaussianCopulaModel, n: int, seed: int) -> np.ndarray:
    """n rows of Phi(L z) with z standard normal via inverse CDF."""
    z = rng.normals(seed, (n, m.d))
    return np.clip(ndtr(z @ m.L.T), EPS, 1.0 - EPS)


# ---------------------------------------------------------------------------
# Vine fitting.
# ---------------------------------------------------------------------------

class _Node:
    """Working node during fitting: a fitted edge plus conditional data."""

    __slots__ = ("pieces", "constraint", "hdata")

    def __init__(self, pieces, constraint, hdata):
        self.pieces = pieces          # ids of the two lower-level nodes joined
        self.constraint = constraint  # all variables this node involves
        self.hdata = hdata            # var -> F(var | constraint - {var})


def _kruskal_max(n_nodes: int, edges: list) -> list:
    """Maximum spanning forest; edges are (weight, tiebreak, i, j, payload)."""
    parent = list(range(n_nodes))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    chosen = []
    for w, tb, i, j, payload in sorted(edges, key=lambda e: (-e[0], e[1])):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            chosen.append(payload)
    return chosen


def resolve_truncation(truncation: int | None, d: int) -> int:
    if truncation is not None:
        if truncation < 1:
            raise ValueError("truncation level must be >= 1")
        return min(truncation, d - 1)
    return d - 1 if d <= TRUNCATION_FREE_LIMIT else DEFAULT_TRUNCATION


def fit_vine(u, spec: CopulaSpec = CopulaSpec(kind="vine")) -> VineModel:
    """Fit a regular vine level by level.

    Tree 1 is the maximum spanning tree of |tau| over all variable pairs;
    deeper trees connect previous-level edges that share a node, weighted
    by |tau| of the conditional pseudo-data.  Edges at levels beyond the
    truncation level keep the structure but get the independence copula.
    Ties in the spanning trees break toward the lowest conditioned index
    pair, so selection is deterministic.
    """
    u = _check_umatrix(u)
    n, d = u.shape
    if d < 2:
        raise ValueError("vine fitting needs at least 2 features")
    trunc = resolve_truncation(spec.truncation, d)
    catalogue = spec.catalogue

    def fit_edge(level, a, b, za, zb):
        if level > trunc:
            return INDEPENDENCE
        try:
            return fit_pair(za, zb, catalogue)
        except ValueError as exc:
            raise ValueError(f"tree {level} edge ({a},{b}): {exc}") from None

    # Tree 1: nodes are the variables themselves.
    candidates = []
    for i in range(d):
        for j in range(i + 1, d):
            tau = kendall_tau(u[:, i], u[:, j])
            candidates.append((abs(tau), (i, j), i, j, (i, j, tau)))
    chosen = sorted(_kruskal_max(d, candidates), key=lambda e: (e[0], e[1]))

    nodes, tree_edges = [], []
    for i, j, tau in chosen:
        cop = fit_edge(1, i, j, u[:, i], u[:, j])
        hdata = {
            i: h_func(cop, u[:, i], u[:, j], direction=1),
            j: h_func(cop, u[:, i], u[:, j], direction=2),
        }
        nodes.append(_Node((("v", i), ("v", j)), frozenset((i, j)), hdata))
        tree_edges.append(VineEdge((i, j), frozenset(), cop, tau))
    trees = [tuple(tree_edges)]

    # Trees 2..d-1: nodes are the previous tree's edges.
    for level in range(2, d):
        candidates = []
        for x in range(len(nodes)):
            for y in range(x + 1, len(nodes)):
                e, f = nodes[x], nodes[y]
                if not set(e.pieces) & set(f.pieces):
                    continue  # proximity condition
                (a,) = e.constraint - f.constraint
                (b,) = f.constraint - e.constraint
                tau = kendall_tau(e.hdata[a], f.hdata[b])
                tb = (min(a, b), max(a, b))
                candidates.append((abs(tau), tb, x, y, (x, y, a, b, tau)))
        chosen = _kruskal_max(len(nodes), candidates)
        chosen.sort(key=lambda e: (min(e[2], e[3]), max(e[2], e[3])))
        new_nodes, tree_edges = [], []
        for idx, (x, y, a, b, tau) in enumerate(chosen):
            e, f = nodes[x], nodes[y]
            given = e.constraint & f.constraint
            za, zb = e.hdata[a], f.hdata[b]
            cop = fit_edge(level, a, b, za, zb)
            hdata = {
                a: h_func(cop, za, zb, direction=1),
                b: h_func(cop, za, zb, direction=2),
            }
            new_nodes.append(_Node((("e", level - 1, x), ("e", level - 1, y)),
                                   e.constraint | f.constraint, hdata))
            tree_edges.append(VineEdge((a, b), given, cop, tau))
        if len(tree_edges) != d - level:
            raise ValueError(f"tree {level}: proximity graph yielded {len(tree_edges)} edges")
        nodes = new_nodes
        trees.append(tuple(tree_edges))

    return VineModel(d, tuple(trees), trunc)


def select_structure(u, truncation: int | None = None) -> VineStructure:
    """Structure selection only (edges still fitted internally to produce
    the conditional pseudo-data the deeper trees are built on)."""
    return fit_vine(u, CopulaSpec(kind="vine", truncation=truncation)).structure


# ---------------------------------------------------------------------------
# Vine simulation (inverse Rosenblatt through h-inverses).
# ---------------------------------------------------------------------------

def _constraint_lookup(m: VineModel) -> list:
    return [{e.constraint: k for k, e in enumerate(tree)} for tree in m.trees]


def _elimination_chains(m: VineModel, lookup: list) -> list:
    """Variables in elimination order with their per-tree edge chains.

    The eliminated variable of the current top edge is a conditioned
    variable of exactly one edge per lower tree, with nested constraint
    sets; removing the chain leaves a valid vine on the remaining
    variables.
    """
    remaining = [set(range(len(tree))) for tree in m.trees]
    chains = []
    for level in range(m.d - 1, 0, -1):
        tree_i = level - 1
        if len(remaining[tree_i]) != 1:
            raise AssertionError("invalid vine: ambiguous top edge during elimination")
        top_idx = next(iter(remaining[tree_i]))
        top = m.trees[tree_i][top_idx]
        var = max(top.cond)
        chain = [(tree_i, top_idx)]
        cur = top
        for t in range(tree_i - 1, -1, -1):
            a, b = cur.cond
            other = b if var == a else a
            child_idx = lookup[t][cur.constraint - {other}]
            cur = m.trees[t][child_idx]
            if var not in cur.cond:
                raise AssertionError("invalid vine: broken conditioned chain")
            chain.append((t, child_idx))
        chain.reverse()
        chains.append((var, chain))
        for t_i, e_i in chain:
            remaining[t_i].discard(e_i)
    return chains


def _value_for(m: VineModel, lookup, u_samples, constraint, var, memo) -> np.ndarray:
    """F(var | constraint - {var}) at the current samples, memoized."""
    if len(constraint) == 1:
        return u_samples[var]
    tree_i = len(constraint) - 2
    edge_i = lookup[tree_i][constraint]
    key = (tree_i, edge_i, var)
    if key in memo:
        return memo[key]
    e = m.trees[tree_i][edge_i]
    a, b = e.cond
    za = _value_for(m, lookup, u_samples, e.constraint - {b}, a, memo)
    zb = _value_for(m, lookup, u_samples, e.constraint - {a}, b, memo)
    val = h_func(e.copula, za, zb, direction=1 if var == a else 2)
    memo[key] = val
    return val


def simulate_vine(m: VineModel, n: int, seed: int) -> np.ndarray:
    """Simulate n rows from the vine; deterministic given the seed."""
    d = m.d
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 4 * d + 100))
    W = rng.uniforms(seed, (n, d))
    lookup = _constraint_lookup(m)
    chains = _elimination_chains(m, lookup)
    first_var = (set(range(d)) - {var for var, _ in chains}).pop()
    u_samples = {first_var: W[:, 0]}
    memo = {}
    for k, (var, chain) in enumerate(reversed(chains), start=2):
        w = W[:, k - 1]
        for tree_i, edge_i in reversed(chain):
            e = m.trees[tree_i][edge_i]
            a, b = e.cond
            try:
                if var == a:
                    z = _value_for(m, lookup, u_samples, e.constraint - {a}, b, memo)
                    w = h_inv(e.copula, w, z, direction=1)
                else:
                    z = _value_for(m, lookup, u_samples, e.constraint - {b}, a, memo)
                    w = h_inv(e.copula, w, z, direction=2)
            except ValueError as exc:
                raise ValueError(f"tree {tree_i + 1} edge {e.cond}|{sorted(e.given)}: {exc}") from None
        u_samples[var] = w
    return np.column_stack([u_samples[i] for i in range(d)])


# ---------------------------------------------------------------------------
# Synthesis: marginals + copula -> new profiles.
# ---------------------------------------------------------------------------

def fit_synth_model(train: ProfileSet, spec: CopulaSpec) -> SynthModel:
    """Fit marginals and the chosen copula on the flattened training inputs."""
    if len(train) == 0:
        raise ValueError("training set is empty")
    X = flatten(train, "inputs")
    margs = tuple(fit_empirical(X.values[:, j]) for j in range(X.n_cols))
    active = tuple(j for j in range(X.n_cols) if np.ptp(X.values[:, j]) > 0.0)
    if len(active) < 2:
        return SynthModel(spec.kind, X.columns, margs, active)
    U = pseudo_observations(X.values[:, active])
    if spec.kind == "gaussian":
        return SynthModel("gaussian", X.columns, margs, active, gaussian=fit_gaussian(U))
    return SynthModel("vine", X.columns, margs, active, vine=fit_vine(U, spec))


def sample_synth_model(model: SynthModel, n: int, seed: int):
    """Simulate n profiles; returns (ProfileSet, SynthesisDiagnostics).

    Each simulated uniform column maps through its marginal quantile;
    non-monotone pressure columns of individual profiles are re-sorted
    ascending (marginals are preserved exactly) and counted.
    """
    n_full = model.d // 3
    grid = LevelGrid(n_full)
    if len(model.active) < 2:
        U_act = rng.uniforms(seed, (n, len(model.active)))
    elif model.kind == "gaussian":
        U_act = simulate_gaussian(model.gaussian, n, seed)
    else:
        U_act = simulate_vine(model.vine, n, seed)
    U = np.full((n, model.d), 0.5)
    U[:, list(model.active)] = U_act
    Z = np.empty_like(U)
    for j in range(model.d):
        Z[:, j] = quantile(model.marginals[j], U[:, j])
    diag = SynthesisDiagnostics(n_rows=n)
    profiles = []
    for row in Z:
        T, p, tau_c = row[:n_full].copy(), row[n_full:2 * n_full].copy(), row[2 * n_full:].copy()
        if np.any(np.diff(p) <= 0):
            p = np.sort(p)
            for i in range(1, n_full):
                if p[i] <= p[i - 1]:
                    p[i] = np.nextafter(p[i - 1], np.inf)
            diag.pressure_resorted += 1
        profiles.append(Profile(T, p, tau_c))
    return ProfileSet(grid, tuple(profiles)), diag


def synthesize(train: ProfileSet, spec: CopulaSpec, factor: int, seed: int) -> ProfileSet:
    """Fit marginals + copula on the training set and simulate factor * N profiles."""
    if factor < 1:
        raise ValueError("augmentation factor must be >= 1")
    model = fit_synth_model(train, spec)
    synth, _ = sample_synth_model(model, factor * len(train), seed)
    return synth


# ---------------------------------------------------------------------------
# Model artifact (JSON, versioned).
# ---------------------------------------------------------------------------

def _copula_to_dict(c: PairCopula) -> dict:
    return {
        "family": c.family.value,
        "rotation": c.rotation,
        "theta": c.theta,
        "nu": c.nu,
        "loglik": c.loglik,
    }


def _copula_from_dict(d: dict) -> PairCopula:
    return PairCopula(Family(d["family"]), d["rotation"], d["theta"], d["nu"], d["loglik"])


def model_to_dict(model: SynthModel) -> dict:
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "d": model.d,
        "columns": list(model.columns),
        "marginals": [m.values.tolist() for m in model.marginals],
        "active": list(model.active),
    }
    if len(model.active) < 2:
        pass
    elif model.kind == "gaussian":
        doc["correlation"] = model.gaussian.R.ravel().tolist()  # row-major
    else:
        doc["vine"] = {
            "truncation": model.vine.truncation,
            "trees": [
                [
                    {
                        "cond": list(e.cond),
                        "given": sorted(e.given),
                        "tau_hat": e.tau_hat,
                        **_copula_to_dict(e.copula),
                    }
                    for e in tree
                ]
                for tree in model.vine.trees
            ],
        }
    return doc


def model_from_dict(doc: dict) -> SynthModel:
    if "version" not in doc:
        raise ValueError("model artifact is missing the version field")
    if doc["version"] != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc['version']}")
    columns = tuple(doc["columns"])
    margs = tuple(EmpiricalMarginal(np.asarray(v, dtype=float)) for v in doc["marginals"])
    active = tuple(doc["active"])
    if len(active) < 2:
        return SynthModel(doc["kind"], columns, margs, active)
    da = len(active)
    if doc["kind"] == "gaussian":
        R = np.asarray(doc["correlation"], dtype=float).reshape(da, da)
        return SynthModel("gaussian", columns, margs, active,
                          gaussian=GaussianCopulaModel(R, np.linalg.cholesky(R)))
    trees = tuple(
        tuple(
            VineEdge(tuple(e["cond"]), frozenset(e["given"]), _copula_from_dict(e), e["tau_hat"])
            for e in tree
        )
        for tree in doc["vine"]["trees"]
    )
    return SynthModel("vine", columns, margs, active,
                      vine=VineModel(da, trees, doc["vine"]["truncation"]))


def save_model(path, model: SynthModel) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)
        fh.write("\n")


def load_model(path) -> SynthModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
