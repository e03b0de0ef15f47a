"""
Gamma-family special functions and the constants built from them.

Every other module evaluates Gamma only through this module, always in log
space. The heavy lifting is done by ``scipy.special`` (double precision,
relative error ~1e-15 on the positive axis); this module adds domain
checking, the Stirling remainder and the small-s power Γ(1+st)^{1/s}.
"""

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import optimize, special

from core.errors import DomainError

ArrayLike = Union[float, np.ndarray]

EULER_GAMMA = float(np.euler_gamma)
_HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)


def _positive_argument(z: ArrayLike, name: str) -> ArrayLike:
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)) or not np.all(arr > 0):
        raise DomainError(f"{name} requires finite z > 0, got {z!r}")
    return arr


def _as_output(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def log_gamma(z: ArrayLike) -> ArrayLike:
    """Natural log of Γ(z) for z > 0 (scalar or array)."""
    return _as_output(special.gammaln(_positive_argument(z, "log_gamma")))


def digamma(z: ArrayLike) -> ArrayLike:
    """Logarithmic derivative Γ'(z)/Γ(z) for z > 0 (scalar or array)."""
    return _as_output(special.digamma(_positive_argument(z, "digamma")))


def stirling_remainder(z: float) -> float:
    """
    Relative error of the two-term Stirling approximation,
    Γ(z) / (e^{-z} z^{z-1/2} √(2π) (1 + 1/(12z))) - 1, evaluated in log space.
    """
    arr = _positive_argument(z, "stirling_remainder")
    if np.ndim(arr) != 0 or float(arr) < 1.0:
        raise DomainError(f"stirling_remainder requires a scalar z >= 1, got {z!r}")
    z = float(arr)
    approx = -z + (z - 0.5) * math.log(z) + _HALF_LOG_TWO_PI + math.log1p(1.0 / (12.0 * z))
    return math.expm1(float(special.gammaln(z)) - approx)


@dataclass(frozen=True)
class GammaEval:
    z: float
    log_gamma: float
    digamma: float

    @classmethod
    def at(cls, z: float) -> "GammaEval":
        return cls(z=float(z), log_gamma=log_gamma(z), digamma=digamma(z))


@dataclass(frozen=True)
class Constants:
    euler_gamma: float
    exp_neg_gamma: float
    euclidean_center: float

    @classmethod
    def compute(cls) -> "Constants":
        return cls(
            euler_gamma=EULER_GAMMA,
            exp_neg_gamma=math.exp(-EULER_GAMMA),
            euclidean_center=math.sqrt(2.0) * math.exp(digamma(0.5) / 2.0),
        )


CONSTANTS = Constants.compute()


def log_gamma_power(s: float, t: ArrayLike = 1.0) -> ArrayLike:
    """log of Γ(1+st)^{1/s}; the s = 0 value is the limit -tγ."""
    t_arr = np.asarray(t, dtype=float)
    if s == 0.0:
        return _as_output(-EULER_GAMMA * t_arr)
    arg = 1.0 + s * t_arr
    if not np.all(arg > 0):
        raise DomainError(f"gamma_power needs 1 + s*t > 0 (s={s})")
    return _as_output(special.gammaln(arg) / s)


def gamma_power(s: float, t: ArrayLike = 1.0) -> ArrayLike:
    return _as_output(np.exp(log_gamma_power(s, t)))


def _lgamma_slope_excess(x: float) -> float:
    # log Γ(1+x)/x + γ, which vanishes at x = 0 with slope π²/12
    if abs(x) < 1e-8:
        return (math.pi ** 2 / 12.0) * x
    return float(special.gammaln(1.0 + x)) / x + EULER_GAMMA


def gamma_power_delta(M: float, epsilon: float) -> float:
    """
    A δ > 0 such that (1-ε)e^{-tγ} < Γ(1+st)^{1/s} < (1+ε)e^{-tγ} for every
    0 < |s| < δ and t in (0, M].

    log Γ(1+x)/x is increasing, so the deviation t·(log Γ(1+st)/(st) + γ) is
    largest in absolute value at t = M on either side of s = 0; both sides
    are solved with Brent's method and the smaller root is returned.
    """
    if M < 1.0 or not 0.0 < epsilon < 1.0:
        raise DomainError(f"gamma_power_delta needs M >= 1 and 0 < eps < 1 (M={M}, eps={epsilon})")
    upper, lower = math.log1p(epsilon), math.log1p(-epsilon)
    hi = (1.0 - 1e-12) / M

    def above(d: float) -> float:
        return M * _lgamma_slope_excess(d * M) - upper

    def below(d: float) -> float:
        return lower - M * _lgamma_slope_excess(-d * M)

    roots = []
    for excess in (above, below):
        if excess(hi) < 0.0:
            roots.append(hi)
        else:
            roots.append(optimize.brentq(excess, 1e-15, hi, xtol=1e-15))
    return min(roots) * (1.0 - 1e-9)
