"""
Closed-form moments of the geometric-mean functional.

Weighted ℓ1 sphere S_a (uniform probability), for 1 + s·a_max > 0:

    E ∏|x_i|^{a_i s} = Γ(n)/Γ((1+s)n) · ∏ Γ(1 + a_i s) / a_i^{a_i s}

Euclidean sphere, for s > -1:

    E ∏|y_i|^{s} = (Γ((1+s)/2)/Γ(1/2))^n · Γ(n/2)/Γ((1+s)n/2)

Both are evaluated as compensated sums of log-gamma terms; Γ itself overflows
long before the dimensions of interest.
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from core.errors import DomainError
from core.special_fns import CONSTANTS, log_gamma
from core.weights import WeightLevels, require_valid

# Smallest log-moment whose exponential is still a normal double.
_LOG_TINY = math.log(np.finfo(float).tiny)

WEIGHTED = "weighted"
EUCLIDEAN = "euclidean"


@dataclass(frozen=True)
class MomentResult:
    log_moment: float
    # None at s = 0, where n·E^{1/(sn)} is a 0/0 limit
    normalized_root: Optional[float]
    s: float
    n: int
    sphere: str = WEIGHTED

    @property
    def moment(self) -> Optional[float]:
        """E itself, or None when it underflows a double."""
        if self.log_moment < _LOG_TINY:
            return None
        return math.exp(self.log_moment)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sphere": self.sphere,
            "n": self.n,
            "s": self.s,
            "log_moment": self.log_moment,
            "moment": self.moment,
            "normalized_root": self.normalized_root,
        }


@dataclass(frozen=True)
class MomentQuery:
    """(weights, s) for the weighted sphere, or (n, s) with weights=None for the Euclidean one."""

    s: float
    weights: Optional[Any] = None
    n: Optional[int] = None

    def __post_init__(self):
        if self.weights is None and self.n is None:
            raise DomainError("a moment query needs weights or a Euclidean dimension n")

    @property
    def euclidean(self) -> bool:
        return self.weights is None

    def evaluate(self) -> MomentResult:
        if self.euclidean:
            return exact_moment_euclidean(int(self.n), self.s)
        return exact_moment_weighted(self.weights, self.s)


def check_moment_domain(levels: WeightLevels, s: float) -> None:
    if not math.isfinite(s):
        raise DomainError(f"moment exponent must be finite, got s={s!r}")
    if 1.0 + s * levels.a_max <= 0.0:
        raise DomainError(
            f"1 + s*a_1 must be positive: s={s!r}, a_1={levels.a_max!r} "
            f"(admissible s > {-1.0 / levels.a_max!r})")


def weighted_log_moment_parts(levels: WeightLevels, s: float) -> Tuple[float, float]:
    """
    (log Γ(n) - log Γ((1+s)n),  Σ_i [log Γ(1 + a_i s) - a_i s ln a_i]).

    Their sum is the weighted log-moment; the split is the one used by the
    Chebyshev factor decomposition.
    """
    check_moment_domain(levels, s)
    n = levels.n
    gamma_ratio = math.fsum([log_gamma(float(n)), -log_gamma((1.0 + s) * n)])
    values = levels.values
    terms = log_gamma(1.0 + s * values) - s * values * np.log(values)
    return gamma_ratio, levels.total(np.atleast_1d(terms))


def exact_moment_weighted(weights: Any, s: float) -> MomentResult:
    levels = require_valid(weights)
    n = levels.n
    if s == 0.0:
        check_moment_domain(levels, s)
        return MomentResult(log_moment=0.0, normalized_root=None, s=0.0, n=n)
    gamma_ratio, product = weighted_log_moment_parts(levels, s)
    log_moment = math.fsum([gamma_ratio, product])
    root = n * math.exp(log_moment / (s * n))
    return MomentResult(log_moment=log_moment, normalized_root=root, s=s, n=n)


def exact_moment_euclidean(n: int, s: float) -> MomentResult:
    if int(n) != n or n < 2:
        raise DomainError(f"Euclidean dimension must be an integer >= 2, got {n!r}")
    if not math.isfinite(s) or s <= -1.0:
        raise DomainError(f"Euclidean moments need s > -1, got s={s!r}")
    n = int(n)
    if s == 0.0:
        return MomentResult(log_moment=0.0, normalized_root=None, s=0.0, n=n, sphere=EUCLIDEAN)
    per_coordinate = math.fsum([log_gamma((1.0 + s) / 2.0), -log_gamma(0.5)])
    log_moment = math.fsum([
        n * per_coordinate,
        log_gamma(n / 2.0),
        -log_gamma((1.0 + s) * n / 2.0),
    ])
    root = math.sqrt(n) * math.exp(log_moment / (s * n))
    return MomentResult(log_moment=log_moment, normalized_root=root, s=s, n=n, sphere=EUCLIDEAN)


def sphere_area_weighted(weights: Any) -> float:
    """log of the (n-1)-dimensional area 2^n ‖a‖₂ / (Γ(n) ∏ a_i) of S_a."""
    levels = require_valid(weights)
    n = levels.n
    values = levels.values
    log_norm = 0.5 * math.log(levels.total(values * values))
    return math.fsum([
        n * math.log(2.0),
        log_norm,
        -log_gamma(float(n)),
        -levels.total(np.log(values)),
    ])


def euclidean_center() -> float:
    """√2·exp(ψ(1/2)/2), the Euclidean concentration centre."""
    return CONSTANTS.euclidean_center
