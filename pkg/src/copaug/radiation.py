"""Toy downwelling longwave radiation model.

Grey-atmosphere flux recursion on half levels: each layer absorbs a
fraction eps = 1 - exp(-D tau) of the incoming flux and re-emits its own
Planck flux, marching from a zero flux at the top of the atmosphere down
to the surface.  Layer optical depth combines the cloud optical depth
with a fixed total-column gas optical depth distributed by sigma mass
fraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Profile, ProfileSet

STEFAN_BOLTZMANN = 5.670374419e-8  # W m^-2 K^-4


@dataclass(frozen=True)
class RadiationConstants:
    """Physical constants of the toy model; D and tau_g are overridable."""

    sigma_sb: float = STEFAN_BOLTZMANN
    diffusivity: float = 1.66         # effective slant path factor, 1/cos(53 deg)
    gas_optical_depth: float = 1.7    # total-column gas optical depth

    def __post_init__(self):
        if self.sigma_sb <= 0 or self.diffusivity <= 0 or self.gas_optical_depth < 0:
            raise ValueError("radiation constants must be positive (tau_g >= 0)")


@dataclass(frozen=True)
class SigmaLayers:
    """Per-layer fraction of total column mass; sums to 1."""

    delta_sigma: np.ndarray
    p_half: np.ndarray

    def __post_init__(self):
        ds = np.asarray(self.delta_sigma, dtype=float)
        object.__setattr__(self, "delta_sigma", ds)
        object.__setattr__(self, "p_half", np.asarray(self.p_half, dtype=float))
        if np.any(ds <= 0):
            raise ValueError("delta_sigma must be positive elementwise")
        if abs(ds.sum() - 1.0) > 1e-9:
            raise ValueError("delta_sigma must sum to 1")


def half_level_pressures(p_full) -> np.ndarray:
    """Half-level pressures: midpoints inside, 0 at the top, mirror at the surface."""
    p_full = np.asarray(p_full, dtype=float)
    if np.any(np.diff(p_full) <= 0):
        raise ValueError("full-level pressures must be strictly increasing")
    n = p_full.shape[0]
    p_half = np.empty(n + 1)
    p_half[0] = 0.0
    p_half[1:n] = 0.5 * (p_full[:-1] + p_full[1:])
    p_half[n] = p_full[-1] + (p_full[-1] - p_half[n - 1])
    # Full levels one ulp apart can collapse a midpoint onto its neighbour;
    # keep the output strictly increasing regardless.
    for i in range(1, n + 1):
        if p_half[i] <= p_half[i - 1]:
            p_half[i] = np.nextafter(p_half[i - 1], np.inf)
    return p_half


def sigma_layers(p_half) -> SigmaLayers:
    """Layer mass fractions delta_sigma from half-level pressures."""
    p_half = np.asarray(p_half, dtype=float)
    if p_half[0] != 0.0:
        raise ValueError("top half-level pressure must be 0")
    if np.any(np.diff(p_half) <= 0):
        raise ValueError("half-level pressures must be strictly increasing")
    p0 = p_half[-1]
    if p0 <= 0:
        raise ValueError("surface pressure must be positive")
    sig = p_half / p0
    return SigmaLayers(np.diff(sig), p_half)


def planck_flux(T) -> np.ndarray:
    """Black-body flux sigma_SB * T^4 [W m^-2]."""
    T = np.asarray(T, dtype=float)
    if np.any(T < 0):
        raise ValueError("temperature must be nonnegative")
    return STEFAN_BOLTZMANN * T ** 4


def layer_optical_depth(tau_c, delta_sigma, consts: RadiationConstants = RadiationConstants()) -> np.ndarray:
    """Per-layer optical depth tau = tau_c + tau_g * delta_sigma."""
    tau_c = np.asarray(tau_c, dtype=float)
    delta_sigma = np.asarray(delta_sigma, dtype=float)
    if np.any(tau_c < 0) or np.any(delta_sigma < 0):
        raise ValueError("optical depth inputs must be nonnegative")
    return tau_c + consts.gas_optical_depth * delta_sigma


def layer_emissivity(tau, consts: RadiationConstants = RadiationConstants()) -> np.ndarray:
    """Layer emissivity 1 - exp(-D tau), in [0, 1)."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("optical depth must be nonnegative")
    return -np.expm1(-consts.diffusivity * tau)


def downwelling_longwave(profile: Profile, consts: RadiationConstants = RadiationConstants()) -> np.ndarray:
    """Downwelling flux on half levels, L[0] = 0 at the top of the atmosphere.

    L[i] = L[i-1] * (1 - eps_i) + B_i * eps_i for layers i = 1..n_full,
    with B and eps constant within each layer.
    """
    p_half = half_level_pressures(profile.p)
    layers = sigma_layers(p_half)
    tau = layer_optical_depth(profile.tau_c, layers.delta_sigma, consts)
    eps = layer_emissivity(tau, consts)
    B = consts.sigma_sb * profile.T ** 4
    L = np.empty(profile.n_full + 1)
    L[0] = 0.0
    for i in range(1, L.shape[0]):
        L[i] = L[i - 1] * (1.0 - eps[i - 1]) + B[i - 1] * eps[i - 1]
    return L


def radiate_set(s: ProfileSet, consts: RadiationConstants = RadiationConstants()) -> ProfileSet:
    """Attach downwelling flux profiles to every profile in the set."""
    fluxes = np.empty((len(s), s.grid.n_half))
    for k, prof in enumerate(s.profiles):
        try:
            fluxes[k] = downwelling_longwave(prof, consts)
        except ValueError as exc:
            raise ValueError(f"profile {k}: {exc}") from None
    return s.with_fluxes(fluxes)
