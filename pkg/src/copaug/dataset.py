"""Atmospheric profile data model: ingestion, splitting, flattening.

A profile is a vertical column of dry-bulb temperature T [K], pressure p
[Pa] and cloud layer optical depth tau_c [-] on a fixed grid of full
levels, index 1 at the top of the atmosphere and index n_full at the
surface.  Collections of profiles convert to and from flat sample-by-
feature matrices for the statistical models, and a surrogate generator
provides desk-scale stand-in data with realistic cross-level dependence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from . import rng

# Constants of the cloud optical depth conversion.
DENSITY_LIQUID = 1000.0   # kg m^-3
DENSITY_ICE = 917.0       # kg m^-3
GRAVITY = 9.81            # m s^-2

# Surrogate generator contract constants (kept in one place on purpose:
# tests depend on the statistical contract, not the exact values).
SURROGATE_T_TOP = 210.0         # K, baseline temperature aloft
SURROGATE_T_SURFACE = 288.0     # K, baseline temperature at the surface
SURROGATE_T_OFFSET = 8.0        # K, std of the per-profile offset
SURROGATE_T_NOISE = 3.0         # K, std of level-correlated perturbations
SURROGATE_AR1 = 0.9             # lag-1 correlation of the perturbations
SURROGATE_P0_MEAN = 101325.0    # Pa
SURROGATE_P0_SPREAD = 2000.0    # Pa, half-width of the surface pressure draw
SURROGATE_CLOUD_FRACTION = 0.4  # fraction of profiles containing cloud
SURROGATE_CLOUD_SIGMA_LO = 0.45  # cloud blocks live between these sigmas
SURROGATE_CLOUD_SIGMA_HI = 0.97
SURROGATE_CLOUD_LOGMEAN = 0.0   # lognormal magnitude of block optical depth
SURROGATE_CLOUD_LOGSTD = 1.0
SURROGATE_SIGMA_EXPONENT = 1.6  # shape of the fixed sigma grid


class SchemaError(ValueError):
    """Profile file does not match the expected wide-format schema."""


@dataclass(frozen=True)
class LevelGrid:
    """Vertical grid: n_full full levels, n_full + 1 half levels."""

    n_full: int

    def __post_init__(self):
        if self.n_full < 1:
            raise ValueError(f"n_full must be >= 1, got {self.n_full}")

    @property
    def n_half(self) -> int:
        return self.n_full + 1

    def input_labels(self) -> list[str]:
        n = self.n_full
        return (
            [f"T_{i}" for i in range(1, n + 1)]
            + [f"p_{i}" for i in range(1, n + 1)]
            + [f"tauc_{i}" for i in range(1, n + 1)]
        )

    def output_labels(self) -> list[str]:
        return [f"L_{i}" for i in range(self.n_half)]


@dataclass(frozen=True)
class Profile:
    """One atmospheric column on a LevelGrid.

    T and p run from the top of the atmosphere (index 0) down to the
    surface; p must increase strictly toward the surface.
    """

    T: np.ndarray
    p: np.ndarray
    tau_c: np.ndarray

    def __post_init__(self):
        T = np.asarray(self.T, dtype=float)
        p = np.asarray(self.p, dtype=float)
        tau_c = np.asarray(self.tau_c, dtype=float)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "tau_c", tau_c)
        n = T.shape[0]
        if p.shape[0] != n or tau_c.shape[0] != n:
            raise ValueError("T, p and tau_c must have equal length")
        if not np.all(np.isfinite(T)) or not np.all(np.isfinite(p)) or not np.all(np.isfinite(tau_c)):
            raise ValueError("profile contains non-finite values")
        if np.any(T <= 0):
            raise ValueError("temperature must be positive everywhere")
        if np.any(np.diff(p) <= 0):
            raise ValueError("pressure must increase strictly toward the surface")
        if np.any(tau_c < 0):
            raise ValueError("cloud optical depth must be nonnegative")

    @property
    def n_full(self) -> int:
        return self.T.shape[0]


@dataclass(frozen=True)
class ProfileSet:
    """Ordered collection of profiles sharing one grid, with optional fluxes.

    fluxes, when present, is an (n_profiles, n_half) array of downwelling
    longwave flux per half level.
    """

    grid: LevelGrid
    profiles: tuple
    fluxes: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))
        for k, prof in enumerate(self.profiles):
            if prof.n_full != self.grid.n_full:
                raise ValueError(f"profile {k} has {prof.n_full} levels, grid expects {self.grid.n_full}")
        if self.fluxes is not None:
            fluxes = np.asarray(self.fluxes, dtype=float)
            object.__setattr__(self, "fluxes", fluxes)
            if fluxes.shape != (len(self.profiles), self.grid.n_half):
                raise ValueError(
                    f"fluxes must have shape {(len(self.profiles), self.grid.n_half)}, got {fluxes.shape}"
                )

    def __len__(self) -> int:
        return len(self.profiles)

    def subset(self, indices) -> "ProfileSet":
        indices = np.asarray(indices, dtype=int)
        profs = tuple(self.profiles[i] for i in indices)
        fluxes = self.fluxes[indices] if self.fluxes is not None else None
        return ProfileSet(self.grid, profs, fluxes)

    def with_fluxes(self, fluxes: np.ndarray) -> "ProfileSet":
        return ProfileSet(self.grid, self.profiles, fluxes)


@dataclass(frozen=True)
class DataMatrix:
    """Samples-by-features matrix with per-column quantity/level labels."""

    values: np.ndarray
    columns: tuple

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "columns", tuple(self.columns))
        if values.ndim != 2:
            raise ValueError("DataMatrix values must be 2-dimensional")
        if values.shape[1] != len(self.columns):
            raise ValueError(f"{values.shape[1]} columns but {len(self.columns)} labels")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SplitSpec:
    """Shuffle-and-split fractions plus the shuffle seed."""

    train: float = 0.4
    val: float = 0.2
    test: float = 0.4
    seed: int = 0

    def __post_init__(self):
        for name in ("train", "val", "test"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} fraction must be positive")
        if self.train + self.val + self.test > 1.0 + 1e-9:
            raise ValueError("split fractions must sum to at most 1")


def load_profiles(path, grid: LevelGrid) -> ProfileSet:
    """Read a wide-format delimited profile file.

    The header must be T_1..T_n, p_1..p_n, tauc_1..tauc_n, optionally
    followed by L_0..L_n flux columns.  Schema or invariant violations
    raise SchemaError naming the offending row.
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header:
            raise SchemaError(f"{path}: empty file")
        names = header.split(",")
        expected = grid.input_labels()
        with_flux = expected + grid.output_labels()
        if names == expected:
            has_flux = False
        elif names == with_flux:
            has_flux = True
        else:
            raise SchemaError(
                f"{path}: header mismatch, expected {len(expected)} or {len(with_flux)} "
                f"columns for n_full={grid.n_full}, got {len(names)}"
            )
        n = grid.n_full
        profiles = []
        fluxes = [] if has_flux else None
        for row_idx, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(names):
                raise SchemaError(f"{path}: row {row_idx}: expected {len(names)} values, got {len(parts)}")
            try:
                vals = np.array([float(x) for x in parts])
            except ValueError as exc:
                raise SchemaError(f"{path}: row {row_idx}: {exc}") from None
            try:
                profiles.append(Profile(vals[:n], vals[n:2 * n], vals[2 * n:3 * n]))
            except ValueError as exc:
                raise SchemaError(f"{path}: row {row_idx}: {exc}") from None
            if has_flux:
                fluxes.append(vals[3 * n:])
    flux_arr = np.array(fluxes) if has_flux and fluxes else None
    return ProfileSet(grid, tuple(profiles), flux_arr)


def save_profiles(path, data: ProfileSet) -> None:
    """Write a ProfileSet in the wide text format (exact float round trip)."""
    labels = data.grid.input_labels()
    if data.fluxes is not None:
        labels = labels + data.grid.output_labels()
    lines = [",".join(labels)]
    for k, prof in enumerate(data.profiles):
        vals = np.concatenate([prof.T, prof.p, prof.tau_c])
        if data.fluxes is not None:
            vals = np.concatenate([vals, data.fluxes[k]])
        lines.append(",".join(map(repr, vals.tolist())))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def derive_cloud_optical_depth(q_l, q_i, r_l, r_i, dp) -> np.ndarray:
    """Per-layer cloud optical depth from condensate mixing ratios.

    tau_c = (3/2) (dp/g) (q_l / (rho_l r_l) + q_i / (rho_i r_i)) with the
    liquid/ice water densities and standard gravity fixed above.  Where a
    mixing ratio is zero the corresponding term is zero regardless of the
    effective radius.
    """
    q_l = np.asarray(q_l, dtype=float)
    q_i = np.asarray(q_i, dtype=float)
    r_l = np.broadcast_to(np.asarray(r_l, dtype=float), q_l.shape)
    r_i = np.broadcast_to(np.asarray(r_i, dtype=float), q_i.shape)
    dp = np.broadcast_to(np.asarray(dp, dtype=float), q_l.shape)
    if np.any(q_l < 0) or np.any(q_i < 0):
        raise ValueError("mixing ratios must be nonnegative")
    if np.any(dp <= 0):
        raise ValueError("layer pressure thickness must be positive")
    if np.any((q_l > 0) & (r_l <= 0)):
        raise ValueError("liquid effective radius must be positive where q_l > 0")
    if np.any((q_i > 0) & (r_i <= 0)):
        raise ValueError("ice effective radius must be positive where q_i > 0")
    liq = np.where(q_l > 0, q_l / (DENSITY_LIQUID * np.where(r_l > 0, r_l, 1.0)), 0.0)
    ice = np.where(q_i > 0, q_i / (DENSITY_ICE * np.where(r_i > 0, r_i, 1.0)), 0.0)
    return 1.5 * (dp / GRAVITY) * (liq + ice)


def split_shuffle(data: ProfileSet, spec: SplitSpec):
    """Shuffle deterministically and split into train/val/test sets.

    Train and validation sizes are round(fraction * N); the remainder
    goes to test.
    """
    n = len(data)
    if n == 0:
        raise ValueError("cannot split an empty ProfileSet")
    order = rng.permutation(n, spec.seed)
    n_train = int(math.floor(spec.train * n + 0.5))
    n_val = int(math.floor(spec.val * n + 0.5))
    if n_train + n_val > n:
        raise ValueError("split fractions leave no room for the test set")
    train = data.subset(order[:n_train])
    val = data.subset(order[n_train:n_train + n_val])
    test = data.subset(order[n_train + n_val:])
    return train, val, test


def flatten(data: ProfileSet, which: str = "inputs") -> DataMatrix:
    """Reshape a ProfileSet into a samples-by-features matrix.

    Input columns are quantity-major: T_1..T_n, p_1..p_n, tauc_1..tauc_n.
    Output columns are the half-level fluxes L_0..L_n.
    """
    if which == "inputs":
        rows = np.array([np.concatenate([pr.T, pr.p, pr.tau_c]) for pr in data.profiles])
        rows = rows.reshape(len(data), 3 * data.grid.n_full)
        return DataMatrix(rows, data.grid.input_labels())
    if which == "outputs":
        if data.fluxes is None:
            raise ValueError("ProfileSet has no fluxes to flatten")
        return DataMatrix(np.array(data.fluxes), data.grid.output_labels())
    raise ValueError(f"which must be 'inputs' or 'outputs', got {which!r}")


def unflatten(m: DataMatrix, grid: LevelGrid) -> ProfileSet:
    """Inverse of flatten for input matrices."""
    n = grid.n_full
    if m.n_cols != 3 * n:
        raise ValueError(f"expected {3 * n} columns for n_full={n}, got {m.n_cols}")
    profiles = tuple(
        Profile(row[:n], row[n:2 * n], row[2 * n:3 * n]) for row in m.values
    )
    return ProfileSet(grid, profiles)


def surrogate_sigma_grid(n_full: int) -> np.ndarray:
    """Fixed full-level sigma grid used by the surrogate generator."""
    return ((np.arange(n_full) + 1.0) / n_full) ** SURROGATE_SIGMA_EXPONENT


def generate_surrogate(n: int, grid: LevelGrid, seed: int) -> ProfileSet:
    """Generate a deterministic surrogate ProfileSet for desk-scale runs.

    Temperature is a smooth baseline in sigma plus a per-profile offset
    and AR(1) level-correlated noise; pressure is sigma times a randomly
    drawn surface pressure; a fraction of profiles carries 1-3 contiguous
    cloud blocks with lognormal optical depth in the mid-to-low levels.
    """
    if n < 1:
        raise ValueError("profile count must be >= 1")
    nl = grid.n_full
    sigma = surrogate_sigma_grid(nl)
    t_base = SURROGATE_T_TOP + (SURROGATE_T_SURFACE - SURROGATE_T_TOP) * sigma
    gen = rng.stream(seed)
    lo = int(np.searchsorted(sigma, SURROGATE_CLOUD_SIGMA_LO))
    hi = max(int(np.searchsorted(sigma, SURROGATE_CLOUD_SIGMA_HI)), lo + 1)
    profiles = []
    phi = SURROGATE_AR1
    for _ in range(n):
        # Fixed number of draws per profile keeps the stream aligned.
        u = np.clip(gen.random(nl + 13), 1e-12, 1 - 1e-12)
        offset = SURROGATE_T_OFFSET * ndtri(u[0])
        eps = ndtri(u[1:nl + 1])
        noise = np.empty(nl)
        noise[0] = eps[0]
        for i in range(1, nl):
            noise[i] = phi * noise[i - 1] + math.sqrt(1 - phi * phi) * eps[i]
        T = t_base + offset + SURROGATE_T_NOISE * noise
        p0 = SURROGATE_P0_MEAN + SURROGATE_P0_SPREAD * (2 * u[nl + 1] - 1)
        p = sigma * p0
        tau_c = np.zeros(nl)
        if u[nl + 2] < SURROGATE_CLOUD_FRACTION:
            n_blocks = 1 + int(u[nl + 3] * 3)
            for b in range(n_blocks):
                start = lo + int(u[nl + 4 + 3 * b] * max(hi - lo, 1))
                length = 1 + int(u[nl + 5 + 3 * b] * 4)
                mag = math.exp(SURROGATE_CLOUD_LOGMEAN + SURROGATE_CLOUD_LOGSTD * ndtri(u[nl + 6 + 3 * b]))
                tau_c[start:min(start + length, nl)] += mag
        profiles.append(Profile(T, p, tau_c))
    return ProfileSet(grid, tuple(profiles))
