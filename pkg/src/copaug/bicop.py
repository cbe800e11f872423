"""Parametric bivariate copulas: densities, h-functions, fitting.

Families: Independence, Gaussian, Student-t, Clayton, Gumbel, Frank and
Joe, with 90/180/270 degree rotations for the asymmetric Archimedean
families.  Fitting inverts the empirical Kendall tau for a starting
parameter, refines it by golden-section maximum likelihood and selects
the family (and rotation) by AIC.

Conventions
-----------
* h_func(c, u, v, direction=1) is the conditional CDF of the first
  argument given the second, direction=2 the reverse.
* h_inv(c, w, z, direction) inverts the conditioned argument; z is the
  value of the conditioning variable.
* Rotations transform density arguments as 90: (u,v)->(v,1-u),
  180: (u,v)->(1-u,1-v), 270: (u,v)->(1-v,u), so 90/270 capture negative
  dependence for Clayton, Gumbel and Joe.
* All evaluations clamp arguments into [1e-10, 1 - 1e-10]; exact 0 or 1
  is rejected at the public surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import ndtr, ndtri, gammaln, stdtr, stdtrit
from scipy.stats import kendalltau as _scipy_kendalltau

from . import rng

EPS = 1e-10

STUDENT_NU_GRID = (2.0, 3.0, 4.0, 6.0, 10.0, 20.0, 30.0)

# Tau-space search clamps keep parameters inside numerically safe ranges.
_TAU_CAP = {
    "gaussian": 0.99,
    "student": 0.99,
    "clayton": 0.93,
    "gumbel": 0.93,
    "joe": 0.93,
    "frank": 0.91,
}
_FRANK_THETA_CAP = 45.0


class Family(Enum):
    INDEPENDENCE = "independence"
    GAUSSIAN = "gaussian"
    STUDENT_T = "student"
    CLAYTON = "clayton"
    GUMBEL = "gumbel"
    FRANK = "frank"
    JOE = "joe"


#: Families whose rotations are meaningful (tail-asymmetric ones).
ROTATABLE = frozenset({Family.CLAYTON, Family.GUMBEL, Family.JOE})

DEFAULT_CATALOGUE = frozenset(
    {Family.GAUSSIAN, Family.STUDENT_T, Family.CLAYTON, Family.GUMBEL, Family.FRANK, Family.JOE}
)


@dataclass(frozen=True)
class PairCopula:
    """A fitted (or constructed) bivariate copula."""

    family: Family
    rotation: int = 0
    theta: float = 0.0
    nu: float | None = None
    loglik: float = 0.0

    def __post_init__(self):
        if self.rotation not in (0, 90, 180, 270):
            raise ValueError(f"rotation must be one of 0/90/180/270, got {self.rotation}")
        if self.rotation != 0 and self.family not in ROTATABLE:
            raise ValueError(f"{self.family.value} copula only supports rotation 0")
        f, t = self.family, self.theta
        if f in (Family.GAUSSIAN, Family.STUDENT_T) and not -1 < t < 1:
            raise ValueError(f"correlation parameter must lie in (-1, 1), got {t}")
        if f is Family.CLAYTON and t <= 0:
            raise ValueError(f"Clayton theta must be > 0, got {t}")
        if f in (Family.GUMBEL, Family.JOE) and t < 1:
            raise ValueError(f"{f.value} theta must be >= 1, got {t}")
        if f is Family.FRANK and t == 0:
            raise ValueError("Frank theta must be nonzero")
        if f is Family.STUDENT_T:
            if self.nu is None or self.nu < 2:
                raise ValueError("Student-t copula needs nu >= 2")

    @property
    def n_params(self) -> int:
        if self.family is Family.INDEPENDENCE:
            return 0
        return 2 if self.family is Family.STUDENT_T else 1

    @property
    def tau(self) -> float:
        """Population Kendall tau implied by the parameters (rotation applied)."""
        base = param_to_tau(self.family, self.theta)
        return -base if self.rotation in (90, 270) else base


INDEPENDENCE = PairCopula(Family.INDEPENDENCE)


def _clip(x) -> np.ndarray:
    return np.clip(np.asarray(x, dtype=float), EPS, 1.0 - EPS)


def _check_unit(*args) -> None:
    for x in args:
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0.0) or np.any(x >= 1.0):
            raise ValueError("copula arguments must lie strictly inside (0, 1)")


# ---------------------------------------------------------------------------
# Unrotated building blocks.  h1(u, v) = P(U <= u | V = v), h2 = reverse.
# ---------------------------------------------------------------------------

def _frank_denom(t: float, u, v):
    """expm1(-t) + expm1(-t u) expm1(-t v), grouped so the two summands
    share a sign (no catastrophic cancellation at extreme theta)."""
    return np.exp(-t * u) * np.expm1(-t * v) + np.exp(-t * v) * np.expm1(-t * (1.0 - v))


def _logpdf_base(family: Family, u, v, theta: float, nu: float | None):
    if family is Family.INDEPENDENCE:
        return np.zeros(np.broadcast(u, v).shape)
    if family is Family.GAUSSIAN:
        r = theta
        x, y = ndtri(u), ndtri(v)
        s2 = 1.0 - r * r
        return -0.5 * math.log(s2) - (r * r * (x * x + y * y) - 2.0 * r * x * y) / (2.0 * s2)
    if family is Family.STUDENT_T:
        r, df = theta, float(nu)
        x, y = stdtrit(df, u), stdtrit(df, v)
        s2 = 1.0 - r * r
        q = (x * x - 2.0 * r * x * y + y * y) / (df * s2)
        log_joint = (
            gammaln((df + 2.0) / 2.0)
            + gammaln(df / 2.0)
            - 2.0 * gammaln((df + 1.0) / 2.0)
            - 0.5 * math.log(s2)
            - ((df + 2.0) / 2.0) * np.log1p(q)
        )
        log_marg = -((df + 1.0) / 2.0) * (np.log1p(x * x / df) + np.log1p(y * y / df))
        return log_joint - log_marg
    if family is Family.CLAYTON:
        t = theta
        a, b = -t * np.log(u), -t * np.log(v)
        m = np.maximum(a, b)
        log_s = m + np.log(np.exp(a - m) + np.exp(b - m) - np.exp(-m))
        return math.log1p(t) - (1.0 + t) * (np.log(u) + np.log(v)) - (2.0 + 1.0 / t) * log_s
    if family is Family.GUMBEL:
        t = theta
        x, y = -np.log(u), -np.log(v)
        s = x ** t + y ** t
        s_rt = s ** (1.0 / t)
        return (
            -s_rt
            + (t - 1.0) * (np.log(x) + np.log(y))
            + (1.0 / t - 2.0) * np.log(s)
            + np.log(s_rt + t - 1.0)
            + x
            + y
        )
    if family is Family.FRANK:
        t = theta
        d = _frank_denom(t, u, v)
        return math.log(t * (-np.expm1(-t))) - t * (u + v) - 2.0 * np.log(np.abs(d))
    if family is Family.JOE:
        t = theta
        ub, vb = 1.0 - u, 1.0 - v
        ut, vt = ub ** t, vb ** t
        a = np.maximum(ut + vt - ut * vt, 1e-300)
        return (
            (1.0 / t - 2.0) * np.log(a)
            + (t - 1.0) * (np.log(ub) + np.log(vb))
            + np.log(t - 1.0 + a)
        )
    raise ValueError(f"unknown family {family}")


def _h1_base(family: Family, u, v, theta: float, nu: float | None):
    if family is Family.INDEPENDENCE:
        return np.broadcast_to(np.asarray(u, dtype=float), np.broadcast(u, v).shape).copy()
    if family is Family.GAUSSIAN:
        r = theta
        return ndtr((ndtri(u) - r * ndtri(v)) / math.sqrt(1.0 - r * r))
    if family is Family.STUDENT_T:
        r, df = theta, float(nu)
        x, y = stdtrit(df, u), stdtrit(df, v)
        scale = np.sqrt((df + y * y) * (1.0 - r * r) / (df + 1.0))
        return stdtr(df + 1.0, (x - r * y) / scale)
    if family is Family.CLAYTON:
        t = theta
        with np.errstate(over="ignore"):
            base = (v / u) ** t + 1.0 - v ** t
            return base ** (-(1.0 + t) / t)
    if family is Family.GUMBEL:
        t = theta
        x, y = -np.log(u), -np.log(v)
        s = x ** t + y ** t
        return np.exp(-(s ** (1.0 / t)) + (t - 1.0) * np.log(y) + (1.0 / t - 1.0) * np.log(s) + y)
    if family is Family.FRANK:
        t = theta
        return np.exp(-t * v) * np.expm1(-t * u) / _frank_denom(t, u, v)
    if family is Family.JOE:
        t = theta
        ub, vb = 1.0 - u, 1.0 - v
        ut, vt = ub ** t, vb ** t
        a = np.maximum(ut + vt - ut * vt, 1e-300)
        return a ** (1.0 / t - 1.0) * vb ** (t - 1.0) * (1.0 - ut)
    raise ValueError(f"unknown family {family}")


def _h2_base(family: Family, u, v, theta: float, nu: float | None):
    # Every catalogue family is exchangeable, so h2 is h1 with swapped args.
    return _h1_base(family, v, u, theta, nu)


def _bisect_conditioned(func, w, n_iter: int = 64) -> np.ndarray:
    """Solve func(t) = w for t in (0,1), func monotone increasing in t."""
    w = np.asarray(w, dtype=float)
    lo = np.full(w.shape, EPS)
    hi = np.full(w.shape, 1.0 - EPS)
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        below = func(mid) < w
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _h1_inv_base(family: Family, w, v, theta: float, nu: float | None):
    """Solve h1(u, v) = w for u."""
    if family is Family.INDEPENDENCE:
        return np.broadcast_to(np.asarray(w, dtype=float), np.broadcast(w, v).shape).copy()
    if family is Family.GAUSSIAN:
        r = theta
        x = ndtri(w) * math.sqrt(1.0 - r * r) + r * ndtri(v)
        return _clip(ndtr(x))
    if family is Family.STUDENT_T:
        r, df = theta, float(nu)
        y = stdtrit(df, v)
        scale = np.sqrt((df + y * y) * (1.0 - r * r) / (df + 1.0))
        x = stdtrit(df + 1.0, w) * scale + r * y
        return _clip(stdtr(df, x))
    if family is Family.CLAYTON:
        t = theta
        with np.errstate(over="ignore"):
            u = v * (w ** (-t / (1.0 + t)) - 1.0 + v ** t) ** (-1.0 / t)
        return _clip(u)
    if family is Family.FRANK:
        t = theta
        # u = v - log(num/den)/t with num and den free of cancellation.
        num = 1.0 + w * np.expm1(-t * (1.0 - v))
        den = w + (1.0 - w) * np.exp(-t * v)
        return _clip(v - np.log(num / den) / t)
    # Gumbel and Joe have no closed-form inverse: bracketed bisection.
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    return _bisect_conditioned(lambda t_: _h1_base(family, t_, v, theta, nu), w)


def _h2_inv_base(family: Family, w, u, theta: float, nu: float | None):
    """Solve h2(u, v) = w for v (exchangeable families: reuse h1_inv)."""
    return _h1_inv_base(family, w, u, theta, nu)


# ---------------------------------------------------------------------------
# Rotation dispatch.
# ---------------------------------------------------------------------------

def _log_pdf(c: PairCopula, u, v):
    rot = c.rotation
    if rot == 0:
        return _logpdf_base(c.family, u, v, c.theta, c.nu)
    if rot == 90:
        return _logpdf_base(c.family, v, 1.0 - u, c.theta, c.nu)
    if rot == 180:
        return _logpdf_base(c.family, 1.0 - u, 1.0 - v, c.theta, c.nu)
    return _logpdf_base(c.family, 1.0 - v, u, c.theta, c.nu)


def pair_pdf(c: PairCopula, u, v) -> np.ndarray:
    """Copula density at (u, v), rotation applied."""
    _check_unit(u, v)
    return np.exp(_log_pdf(c, _clip(u), _clip(v)))


def pair_loglik(c: PairCopula, u, v) -> float:
    """Sum of log densities over paired observations."""
    return float(np.sum(_log_pdf(c, _clip(u), _clip(v))))


def h_func(c: PairCopula, u, v, direction: int = 1) -> np.ndarray:
    """Conditional CDF h; see module docstring for the direction convention."""
    _check_unit(u, v)
    u, v = _clip(u), _clip(v)
    f, t, nu, rot = c.family, c.theta, c.nu, c.rotation
    if direction == 1:
        if rot == 0:
            out = _h1_base(f, u, v, t, nu)
        elif rot == 90:
            out = 1.0 - _h2_base(f, v, 1.0 - u, t, nu)
        elif rot == 180:
            out = 1.0 - _h1_base(f, 1.0 - u, 1.0 - v, t, nu)
        else:
            out = _h2_base(f, 1.0 - v, u, t, nu)
    elif direction == 2:
        if rot == 0:
            out = _h2_base(f, u, v, t, nu)
        elif rot == 90:
            out = _h1_base(f, v, 1.0 - u, t, nu)
        elif rot == 180:
            out = 1.0 - _h2_base(f, 1.0 - u, 1.0 - v, t, nu)
        else:
            out = 1.0 - _h1_base(f, 1.0 - v, u, t, nu)
    else:
        raise ValueError("direction must be 1 or 2")
    return _clip(out)


def h_inv(c: PairCopula, w, z, direction: int = 1) -> np.ndarray:
    """Invert the conditioned argument of h given conditioning value z."""
    _check_unit(w, z)
    w, z = _clip(w), _clip(z)
    f, t, nu, rot = c.family, c.theta, c.nu, c.rotation
    if direction == 1:
        if rot == 0:
            out = _h1_inv_base(f, w, z, t, nu)
        elif rot == 90:
            out = 1.0 - _h2_inv_base(f, 1.0 - w, z, t, nu)
        elif rot == 180:
            out = 1.0 - _h1_inv_base(f, 1.0 - w, 1.0 - z, t, nu)
        else:
            out = _h2_inv_base(f, w, 1.0 - z, t, nu)
    elif direction == 2:
        if rot == 0:
            out = _h2_inv_base(f, w, z, t, nu)
        elif rot == 90:
            out = _h1_inv_base(f, w, 1.0 - z, t, nu)
        elif rot == 180:
            out = 1.0 - _h2_inv_base(f, 1.0 - w, 1.0 - z, t, nu)
        else:
            out = 1.0 - _h1_inv_base(f, 1.0 - w, z, t, nu)
    else:
        raise ValueError("direction must be 1 or 2")
    return _clip(out)


# ---------------------------------------------------------------------------
# Kendall tau and parameter conversions.
# ---------------------------------------------------------------------------

def kendall_tau(u, v) -> float:
    """Tie-adjusted Kendall tau-b (O(n log n) merge counting)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError("kendall_tau expects two equal-length vectors")
    if u.shape[0] < 2:
        raise ValueError("kendall_tau needs at least 2 observations")
    # Perfectly monotone tie-free data has tau exactly +-1; the sqrt-based
    # tau-b evaluation loses an ulp there.
    order = np.lexsort((v, u))
    us, vs = u[order], v[order]
    if np.all(np.diff(us) > 0):
        dv = np.diff(vs)
        if np.all(dv > 0):
            return 1.0
        if np.all(dv < 0):
            return -1.0
    tau = _scipy_kendalltau(u, v).statistic
    return float(tau) if np.isfinite(tau) else 0.0


def tau_independence_threshold(n: int) -> float:
    """Critical |tau| of the asymptotic 5% independence test."""
    return 1.96 * math.sqrt(2.0 * (2.0 * n + 5.0) / (9.0 * n * (n - 1.0)))


def _frank_tau(theta: float) -> float:
    if theta == 0.0:
        return 0.0
    t = abs(theta)
    debye, _ = quad(lambda x: x / math.expm1(x), 0.0, t, limit=200)
    tau = 1.0 - 4.0 / t * (1.0 - debye / t)
    return math.copysign(tau, theta)


def _joe_tau(theta: float) -> float:
    if theta == 1.0:
        return 0.0
    k = np.arange(1.0, 5001.0)
    terms = 1.0 / (k * (theta * k + 2.0) * (theta * (k - 1.0) + 2.0))
    return float(1.0 - 4.0 * terms.sum())


def param_to_tau(f: Family, theta: float) -> float:
    """Population Kendall tau of the unrotated family at parameter theta."""
    if f is Family.INDEPENDENCE:
        return 0.0
    if f in (Family.GAUSSIAN, Family.STUDENT_T):
        return 2.0 / math.pi * math.asin(theta)
    if f is Family.CLAYTON:
        return theta / (theta + 2.0)
    if f is Family.GUMBEL:
        return 1.0 - 1.0 / theta
    if f is Family.FRANK:
        return _frank_tau(theta)
    if f is Family.JOE:
        return _joe_tau(theta)
    raise ValueError(f"unknown family {f}")


def tau_to_param(f: Family, tau: float) -> float:
    """Invert param_to_tau; raises when tau is incompatible with the family."""
    if abs(tau) >= 1.0:
        raise ValueError("|tau| must be < 1")
    if f is Family.INDEPENDENCE:
        return 0.0
    if f in (Family.GAUSSIAN, Family.STUDENT_T):
        return math.sin(math.pi * tau / 2.0)
    if f is Family.CLAYTON:
        if tau <= 0.0:
            raise ValueError("Clayton requires tau > 0 (use a rotation for negative dependence)")
        return 2.0 * tau / (1.0 - tau)
    if f is Family.GUMBEL:
        if tau < 0.0:
            raise ValueError("Gumbel requires tau >= 0 (use a rotation for negative dependence)")
        return 1.0 / (1.0 - tau)
    if f is Family.FRANK:
        if tau == 0.0:
            raise ValueError("Frank tau must be nonzero")
        target = abs(tau)
        cap_tau = _frank_tau(_FRANK_THETA_CAP)
        if target >= cap_tau:
            theta = _FRANK_THETA_CAP
        else:
            theta = brentq(lambda t: _frank_tau(t) - target, 1e-9, _FRANK_THETA_CAP, xtol=1e-12)
        return math.copysign(theta, tau)
    if f is Family.JOE:
        if tau < 0.0:
            raise ValueError("Joe requires tau >= 0 (use a rotation for negative dependence)")
        if tau == 0.0:
            return 1.0
        return brentq(lambda t: _joe_tau(t) - tau, 1.0 + 1e-9, 120.0, xtol=1e-10)
    raise ValueError(f"unknown family {f}")


# ---------------------------------------------------------------------------
# Fitting.
# ---------------------------------------------------------------------------

def _tau_range(f: Family, rotation: int) -> tuple[float, float]:
    cap = _TAU_CAP[f.value if f is not Family.STUDENT_T else "student"]
    if f in (Family.GAUSSIAN, Family.STUDENT_T, Family.FRANK):
        return (-cap, cap)
    # Asymmetric families are fitted on |tau| regardless of rotation.
    return (1e-4, cap)


def _golden_max(fun, lo: float, hi: float, tol: float | None = None) -> tuple[float, float]:
    """Golden-section maximization of fun on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    if tol is None:
        tol = 1e-6 * max(b - a, 1e-3)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return (c, fc) if fc > fd else (d, fd)


def _rotate_args(rotation: int, u, v):
    if rotation == 0:
        return u, v
    if rotation == 90:
        return v, 1.0 - u
    if rotation == 180:
        return 1.0 - u, 1.0 - v
    return 1.0 - v, u


def _fit_family(f: Family, rotation: int, tau_hat: float, u, v) -> PairCopula:
    """Tau inversion plus golden-section MLE for one family/rotation.

    The search runs in parameter space over the bracket obtained by
    mapping [tau0 - 0.5, tau0 + 0.5] (clamped to the family's admissible
    tau range) through the tau inversion.
    """
    lo_t, hi_t = _tau_range(f, rotation)
    base_tau = abs(tau_hat) if f in ROTATABLE else tau_hat
    base_tau = min(max(base_tau, lo_t), hi_t)
    lo_tau = max(lo_t, base_tau - 0.5)
    hi_tau = min(hi_t, base_tau + 0.5)
    if f is Family.FRANK:
        # Exclude the removable singularity at theta = 0 from the bracket.
        if lo_tau <= 0.0 <= hi_tau:
            lo_tau, hi_tau = (1e-4, max(hi_tau, 2e-4)) if base_tau >= 0 else (min(lo_tau, -2e-4), -1e-4)
    th_lo = tau_to_param(f, lo_tau)
    th_hi = tau_to_param(f, hi_tau)
    ur, vr = _rotate_args(rotation, u, v)

    if f is Family.GAUSSIAN:
        x, y = ndtri(ur), ndtri(vr)
        xx_yy, xy = x * x + y * y, x * y

        def loglik_of(r: float) -> float:
            s2 = 1.0 - r * r
            return float(np.sum(-0.5 * math.log(s2) - (r * r * xx_yy - 2.0 * r * xy) / (2.0 * s2)))

        theta, ll = _golden_max(loglik_of, th_lo, th_hi)
        return PairCopula(f, rotation, theta, None, ll)

    if f is Family.STUDENT_T:
        best = None
        for df in STUDENT_NU_GRID:
            x, y = stdtrit(df, ur), stdtrit(df, vr)
            const = float(
                gammaln((df + 2.0) / 2.0) + gammaln(df / 2.0) - 2.0 * gammaln((df + 1.0) / 2.0)
            )
            log_marg = -((df + 1.0) / 2.0) * (np.log1p(x * x / df) + np.log1p(y * y / df))
            xx_yy, xy = x * x + y * y, x * y

            def loglik_of(r: float) -> float:
                s2 = 1.0 - r * r
                q = (xx_yy - 2.0 * r * xy) / (df * s2)
                lp = const - 0.5 * math.log(s2) - ((df + 2.0) / 2.0) * np.log1p(q) - log_marg
                return float(np.sum(lp))

            theta, ll = _golden_max(loglik_of, th_lo, th_hi)
            if best is None or ll > best[2]:
                best = (theta, df, ll)
        theta, df, ll = best
        return PairCopula(f, rotation, theta, df, ll)

    def loglik_of(theta: float) -> float:
        ll = float(np.sum(_logpdf_base(f, ur, vr, theta, None)))
        return ll if np.isfinite(ll) else -1e300

    theta, ll = _golden_max(loglik_of, th_lo, th_hi)
    return PairCopula(f, rotation, theta, None, ll)


def aic(c: PairCopula) -> float:
    return 2.0 * c.n_params - 2.0 * c.loglik


def fit_pair(u, v, catalogue=DEFAULT_CATALOGUE) -> PairCopula:
    """Fit the AIC-best pair copula from the catalogue to pseudo-observations.

    An independence test on the empirical tau short-circuits to the
    independence copula; otherwise each family is fitted at the rotation(s)
    admissible for the sign of tau and the lowest-AIC candidate wins.
    """
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise ValueError("u and v must have equal length")
    n = u.shape[0]
    if n < 10:
        raise ValueError("need at least 10 paired observations")
    _check_unit(u, v)
    if np.ptp(u) == 0.0 or np.ptp(v) == 0.0:
        raise ValueError("degenerate (constant) pseudo-observation column")
    tau_hat = kendall_tau(u, v)
    if abs(tau_hat) < tau_independence_threshold(n):
        return INDEPENDENCE
    candidates = []
    for f in catalogue:
        if f is Family.INDEPENDENCE:
            candidates.append(INDEPENDENCE)
            continue
        if f in ROTATABLE:
            rotations = (0, 180) if tau_hat > 0 else (90, 270)
        else:
            rotations = (0,)
        for rot in rotations:
            candidates.append(_fit_family(f, rot, tau_hat, u, v))
    if not candidates:
        raise ValueError("catalogue is empty")
    return min(candidates, key=aic)


def sample_pair(c: PairCopula, n: int, seed: int) -> np.ndarray:
    """Draw n pairs by conditional inversion: (v, h_inv(w | v)).

    Returns an (n, 2) array; deterministic for a given seed.
    """
    draws = rng.uniforms(seed, (n, 2))
    first = draws[:, 0]
    second = h_inv(c, draws[:, 1], first, direction=2)
    return np.column_stack([first, second])
