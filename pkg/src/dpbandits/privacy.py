"""Gaussian trade-off privacy accounting.

Standard-normal primitives (cdf, log-cdf, quantile), the trade-off curve
G_eta, composition, the conversion from a Gaussian guarantee to classical
(epsilon, delta) points, the noise levels implied by each policy, and the
variance scale that equalizes two policies' guarantees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .policies import (
    BUDGET_SCALE,
    DpTsUcbConfig,
    MTsGaussianConfig,
    PolicyConfig,
    TsGaussianConfig,
    Ucb1Config,
    _check_alpha,
    _check_horizon,
)

__all__ = [
    "DpPoint",
    "GdpParam",
    "compose",
    "eta_dp_ts_ucb",
    "eta_m_ts_gaussian",
    "eta_ts_gaussian",
    "gdp_to_dp",
    "match_c",
    "policy_gdp",
    "std_normal_cdf",
    "std_normal_logcdf",
    "std_normal_quantile",
    "tradeoff_G",
]

_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# standard-normal primitives


def std_normal_cdf(x):
    """Phi(x) through the complementary error function; scalar or ndarray."""
    arr = np.asarray(x, dtype=np.float64)
    out = 0.5 * special.erfc(-arr / _SQRT2)
    return float(out) if arr.ndim == 0 else out


def std_normal_logcdf(x):
    """log Phi(x), accurate far into both tails.

    x > 0 goes through log1p(-Phi(-x)), where Phi(-x) carries full relative
    precision, so even results around -1e-300 are faithful; the deep lower
    tail uses the scaled complementary error function,
    log erfc(z) = log erfcx(z) - z^2, which never underflows.
    """
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = np.empty_like(arr)
    hi = arr > 0.0
    deep = arr < -37.0
    mid = ~(hi | deep)
    if hi.any():
        out[hi] = np.log1p(-0.5 * special.erfc(arr[hi] / _SQRT2))
    if mid.any():
        out[mid] = np.log(0.5 * special.erfc(-arr[mid] / _SQRT2))
    if deep.any():
        z = -arr[deep] / _SQRT2
        out[deep] = np.log(0.5 * special.erfcx(z)) - z * z
    return float(out[0]) if np.asarray(x).ndim == 0 else out


# Rational initial estimate for the quantile (relative error ~1e-9),
# then one Halley step against std_normal_cdf polishes to machine precision.
_QA = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
       1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_QB = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
       6.680131188771972e+01, -1.328068155288572e+01)
_QC = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
       -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_QD = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
       3.754408661907416e+00)
_Q_LOW = 0.02425


def _quantile_tail(q: np.ndarray) -> np.ndarray:
    # lower-tail branch, q = quantile argument in (0, _Q_LOW)
    r = np.sqrt(-2.0 * np.log(q))
    num = ((((_QC[0] * r + _QC[1]) * r + _QC[2]) * r + _QC[3]) * r + _QC[4]) * r + _QC[5]
    den = (((_QD[0] * r + _QD[1]) * r + _QD[2]) * r + _QD[3]) * r + 1.0
    return num / den


def _quantile_lower(q: np.ndarray) -> np.ndarray:
    # Phi^{-1}(q) for q in (0, 0.5]; the root is <= 0, where the cdf keeps
    # full relative precision, so the Halley residual never cancels.
    x = np.empty_like(q)
    lo = q < _Q_LOW
    if lo.any():
        x[lo] = _quantile_tail(q[lo])
    mid = ~lo
    if mid.any():
        c = q[mid] - 0.5
        r = c * c
        num = ((((_QA[0] * r + _QA[1]) * r + _QA[2]) * r + _QA[3]) * r + _QA[4]) * r + _QA[5]
        den = ((((_QB[0] * r + _QB[1]) * r + _QB[2]) * r + _QB[3]) * r + _QB[4]) * r + 1.0
        x[mid] = c * num / den
    # Halley polish; skip where the density underflows (|x| ~ 38) since the
    # rational estimate's relative error is already far below any cdf change.
    pdf = np.exp(-0.5 * x * x) / _SQRT_2PI
    ok = pdf > 1e-300
    if ok.any():
        err = 0.5 * special.erfc(-x[ok] / _SQRT2) - q[ok]
        u = err / pdf[ok]
        x[ok] -= u / (1.0 + 0.5 * x[ok] * u)
    return x


def std_normal_quantile(p):
    """Phi^{-1}(p) for 0 < p < 1; scalar or ndarray.

    The upper half maps to the lower half through the exact complement
    (1 - p is exact for p >= 0.5), so accuracy is symmetric: the roundtrip
    error |Phi(Phi^{-1}(p)) - p| stays within a few ulps of p across the
    whole open interval.
    """
    arr = np.asarray(p, dtype=np.float64)
    flat = np.atleast_1d(arr)
    if not ((flat > 0.0) & (flat < 1.0)).all():  # NaN fails both comparisons
        raise ValueError("quantile argument must lie strictly inside (0, 1)")
    x = np.empty_like(flat)
    lower = flat <= 0.5
    upper = ~lower
    if lower.any():
        x[lower] = _quantile_lower(flat[lower])
    if upper.any():
        x[upper] = -_quantile_lower(1.0 - flat[upper])
    return float(x[0]) if arr.ndim == 0 else x


# ---------------------------------------------------------------------------
# Gaussian guarantees


@dataclass(frozen=True)
class GdpParam:
    """A Gaussian guarantee's noise level; eta = 0 is perfect privacy and
    larger eta is weaker."""

    eta: float

    def __post_init__(self) -> None:
        eta = float(self.eta)
        if not (math.isfinite(eta) and eta >= 0.0):
            raise ValueError(f"eta must be finite and >= 0, got {self.eta}")
        object.__setattr__(self, "eta", eta)


@dataclass(frozen=True)
class DpPoint:
    """One classical (epsilon, delta) point on a privacy curve."""

    epsilon: float
    delta: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0.0):
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon}")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must lie in [0, 1], got {self.delta}")


def _eta_value(eta) -> float:
    value = eta.eta if isinstance(eta, GdpParam) else float(eta)
    if not (math.isfinite(value) and value >= 0.0):
        raise ValueError(f"eta must be finite and >= 0, got {eta}")
    return value


def tradeoff_G(eta, x: float) -> float:
    """The Gaussian trade-off curve G_eta(x) = Phi(Phi^{-1}(1 - x) - eta):
    the best type-II error at type-I error x.  G_0 is the powerless line 1-x."""
    value = _eta_value(eta)
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"type-I error must lie in [0, 1], got {x}")
    if x == 0.0:
        return 1.0
    if x == 1.0:
        return 0.0
    return float(std_normal_cdf(std_normal_quantile(1.0 - x) - value))


def compose(etas) -> GdpParam:
    """Adaptive composition of Gaussian guarantees: the root-sum-square.

    fsum keeps the result exactly permutation-invariant.
    """
    squares = [(_eta_value(e)) ** 2 for e in etas]
    return GdpParam(math.sqrt(math.fsum(squares)))


def gdp_to_dp(eta, epsilon: float) -> DpPoint:
    """Tightest (epsilon, delta) implied by an eta-Gaussian guarantee:

        delta = Phi(eta/2 - eps/eta) - e^eps * Phi(-eta/2 - eps/eta).

    Both terms are taken in the log domain so e^eps * Phi(...) stays finite
    for any eps, and the subtraction runs through expm1 to keep tiny deltas
    accurate.  The result is clamped to [0, 1] only against sub-ulp spill.
    """
    value = _eta_value(eta)
    epsilon = float(epsilon)
    if not (math.isfinite(epsilon) and epsilon >= 0.0):
        raise ValueError(f"epsilon must be finite and >= 0, got {epsilon}")
    if value == 0.0:
        return DpPoint(epsilon, 0.0)
    log_hi = std_normal_logcdf(0.5 * value - epsilon / value)
    log_lo = epsilon + std_normal_logcdf(-0.5 * value - epsilon / value)
    # delta = e^a - e^b with b <= a; min() guards a one-ulp crossover
    delta = -math.exp(log_hi) * math.expm1(min(log_lo - log_hi, 0.0))
    return DpPoint(epsilon, min(max(delta, 0.0), 1.0))


# ---------------------------------------------------------------------------
# per-policy noise levels


def eta_dp_ts_ucb(alpha: float, horizon: int) -> GdpParam:
    """Noise level of the budgeted policy over a full horizon:
    sqrt(2 * BUDGET_SCALE * T^{0.5(1-alpha)} * ln(T)^{1.5(1-alpha)}).
    At alpha=1 this is the horizon-free constant sqrt(2 * BUDGET_SCALE)."""
    alpha = _check_alpha(alpha)
    T = float(_check_horizon(horizon))
    return GdpParam(
        math.sqrt(
            2.0 * BUDGET_SCALE * T ** (0.5 * (1.0 - alpha)) * math.log(T) ** (1.5 * (1.0 - alpha))
        )
    )


def eta_ts_gaussian(horizon: int) -> GdpParam:
    """Plain Gaussian Thompson sampling releases one unit-information model
    per round: eta = sqrt(T / 2)."""
    T = float(_check_horizon(horizon, minimum=1))
    return GdpParam(math.sqrt(0.5 * T))


def eta_m_ts_gaussian(horizon: int, b: int, c: float) -> GdpParam:
    """Pre-pulled Gaussian Thompson sampling: eta = sqrt(T / (c (b+1)))."""
    T = float(_check_horizon(horizon, minimum=1))
    if b != int(b) or b < 0:
        raise ValueError(f"b must be a non-negative integer, got {b}")
    if not (math.isfinite(c) and c > 0):
        raise ValueError(f"c must be positive and finite, got {c}")
    return GdpParam(math.sqrt(T / (c * (b + 1))))


def match_c(alpha: float, horizon: int, b: int) -> float:
    """Variance scale that gives the pre-pulled baseline the same guarantee
    as the budgeted policy at this alpha:

        c = T^{0.5(1+alpha)} / (2 * BUDGET_SCALE * (b+1) * ln(T)^{1.5(1-alpha)})

    so that eta_m_ts_gaussian(T, b, match_c(alpha, T, b)) equals
    eta_dp_ts_ucb(alpha, T) identically.
    """
    alpha = _check_alpha(alpha)
    T = float(_check_horizon(horizon))
    if b != int(b) or b < 0:
        raise ValueError(f"b must be a non-negative integer, got {b}")
    return T ** (0.5 * (1.0 + alpha)) / (
        2.0 * BUDGET_SCALE * (b + 1) * math.log(T) ** (1.5 * (1.0 - alpha))
    )


def policy_gdp(config: PolicyConfig) -> GdpParam | None:
    """The Gaussian guarantee a policy configuration carries over its horizon;
    None for UCB1, whose deterministic index offers no such guarantee."""
    v = config.variant
    if isinstance(v, DpTsUcbConfig):
        return eta_dp_ts_ucb(v.alpha, config.horizon)
    if isinstance(v, TsGaussianConfig):
        return eta_ts_gaussian(config.horizon)
    if isinstance(v, MTsGaussianConfig):
        return eta_m_ts_gaussian(config.horizon, v.b, v.c)
    if isinstance(v, Ucb1Config):
        return None
    raise ValueError(f"unknown policy variant: {v!r}")
