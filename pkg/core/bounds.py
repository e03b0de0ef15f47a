"""
Chebyshev concentration certificates for the GM/AM ratio.

For s ≠ 0 put t = 2 n^k E(∏|x_i|^{a_i s}). Chebyshev's inequality gives
P{∏|x_i|^{a_i s} >= t} <= 1/(2n^k), i.e. with probability >= 1 - 1/(2n^k)

    ratio < n t^{1/(sn)}   when s > 0,
    ratio > n t^{1/(sn)}   when s < 0,

and the two tails together hold with probability >= 1 - 1/n^k. The level
factors as

    n t^{1/(sn)} = (2n^k)^{1/(sn)} · [n (Γ(n)/Γ((1+s)n))^{1/(sn)}] · (∏ Γ(1+a_i s)/a_i^{a_i s})^{1/(sn)}.

`BoundOptimizer` searches s on a logarithmic grid, refines it with a bounded
scalar minimisation, and finds the least n on a doubling grid from which the
threshold stays on the right side of its target.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from core.errors import DomainError, OptimizationFailure
from core.moments import check_moment_domain, weighted_log_moment_parts
from core.special_fns import CONSTANTS, log_gamma
from core.weights import (WeightFamily, WeightKind, WeightLevels, WeightSequence,
                          require_valid, weight_family_from_spec, weight_stats)

UPPER = "upper"
LOWER = "lower"

S_GRID = tuple(2.0 ** e for e in range(-20, 1))
N_GRID = tuple(2 ** e for e in range(4, 25))
TIE_TOLERANCE = 1e-15


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def delta_for(epsilon: float) -> float:
    """δ with (1+δ)^3 = 1+ε."""
    return (1.0 + epsilon) ** (1.0 / 3.0) - 1.0


def gamma_ratio_bound(s: float) -> float:
    """e/(1+s)^{1/s}: the large-n bound on n (Γ(n)/Γ((1+s)n))^{1/(sn)} for s > 0."""
    if s == 0.0 or 1.0 + s <= 0.0:
        raise DomainError(f"gamma_ratio_bound needs s != 0 and s > -1, got {s!r}")
    return _exp(1.0 - math.log1p(s) / s)


def chebyshev_level(weights: Any, s: float, k: float) -> float:
    """log t, with t = 2 n^k E(∏|x_i|^{a_i s})."""
    levels = require_valid(weights)
    n = levels.n
    if s == 0.0:
        check_moment_domain(levels, s)
        log_moment = 0.0
    else:
        log_moment = math.fsum(weighted_log_moment_parts(levels, s))
    return math.fsum([math.log(2.0), k * math.log(n), log_moment])


def log_threshold(levels: WeightLevels, s: float, k: float) -> float:
    """log of n t^{1/(sn)}."""
    if s == 0.0:
        raise DomainError("the Chebyshev threshold needs s != 0")
    n = levels.n
    return math.log(n) + chebyshev_level(levels, s, k) / (s * n)


@dataclass(frozen=True)
class FactorDecomposition:
    n: int
    s: float
    k: float
    prefactor: float
    gamma_ratio_factor: float
    product_factor: float
    # e/(1+s)^{1/s}; the unscaled bound (1/n)·e/(1+s)^{1/s} times n
    gamma_ratio_bound: float

    @property
    def threshold(self) -> float:
        return self.prefactor * self.gamma_ratio_factor * self.product_factor

    def to_dict(self) -> Dict[str, float]:
        return {
            "n": self.n, "s": self.s, "k": self.k,
            "prefactor": self.prefactor,
            "gamma_ratio_factor": self.gamma_ratio_factor,
            "product_factor": self.product_factor,
            "gamma_ratio_bound": self.gamma_ratio_bound,
            "threshold": self.threshold,
        }


def factor_decomposition(weights: Any, s: float, k: float) -> FactorDecomposition:
    levels = require_valid(weights)
    if s == 0.0:
        raise DomainError("factor decomposition is undefined at s = 0")
    n = levels.n
    gamma_ratio, product = weighted_log_moment_parts(levels, s)
    scale = s * n
    return FactorDecomposition(
        n=n, s=s, k=k,
        prefactor=_exp((math.log(2.0) + k * math.log(n)) / scale),
        gamma_ratio_factor=n * _exp(gamma_ratio / scale),
        product_factor=_exp(product / scale),
        gamma_ratio_bound=gamma_ratio_bound(s) if s > -1.0 else math.nan,
    )


def product_bracket(weights: Any, s: float) -> float:
    """(∏ Γ(1 + a_i s))^{1/(sn)}, which tends to e^{-γ} as s → 0."""
    levels = require_valid(weights)
    if s == 0.0:
        return CONSTANTS.exp_neg_gamma
    check_moment_domain(levels, s)
    logs = np.atleast_1d(log_gamma(1.0 + s * levels.values))
    return _exp(levels.total(logs) / (s * levels.n))


def product_power_min(t: Sequence[float]) -> float:
    """∏ t_i^{t_i} (with 0^0 = 1) under the constraint Σ t_i >= n, evaluated in log space."""
    arr = np.asarray(t, dtype=float)
    n = arr.size
    if n == 0 or not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError(f"product_power_min needs finite t_i >= 0, got {t!r}")
    total = math.fsum(arr.tolist())
    if total < n * (1.0 - 1e-12):
        raise DomainError(f"product_power_min needs sum(t) >= n, got sum={total!r} < {n}")
    positive = arr[arr > 0]
    return _exp(math.fsum((positive * np.log(positive)).tolist()))


@dataclass(frozen=True)
class BoundQuery:
    weights: Any
    k: float
    epsilon: float

    def __post_init__(self):
        problems = []
        if not (math.isfinite(self.k) and self.k > 0):
            problems.append(f"k must be > 0, got {self.k!r}")
        if not (math.isfinite(self.epsilon) and 0.0 < self.epsilon < 1.0):
            problems.append(f"epsilon must lie in (0, 1), got {self.epsilon!r}")
        if problems:
            raise DomainError("; ".join(problems))

    @property
    def family(self) -> WeightFamily:
        if isinstance(self.weights, WeightFamily):
            return self.weights
        if isinstance(self.weights, WeightSequence):
            if self.weights.family != WeightKind.CUSTOM.value:
                try:
                    return weight_family_from_spec(self.weights.family)
                except DomainError:
                    pass
            return WeightFamily(WeightKind.CUSTOM, fixed=self.weights)
        raise DomainError(f"unsupported weights for a bound query: {type(self.weights).__name__}")

    @property
    def dimension(self) -> Optional[int]:
        """n of a materialized sequence; families have none."""
        if isinstance(self.weights, WeightSequence):
            return self.weights.n
        return None

    @property
    def delta(self) -> float:
        return delta_for(self.epsilon)


@dataclass(frozen=True)
class TailBound:
    side: str
    s: float
    n_min: int
    threshold: float
    target: float

    def __iter__(self):
        return iter((self.s, self.n_min, self.threshold))

    def to_dict(self) -> Dict[str, Any]:
        return {"side": self.side, "s": self.s, "n_min": self.n_min,
                "threshold": self.threshold, "target": self.target}


@dataclass(frozen=True)
class BoundCertificate:
    family: str
    n: int
    k: float
    epsilon: float
    s_upper: float
    s_lower: float
    n_min: int
    upper_threshold: float
    lower_threshold: float
    probability_floor: float
    predicted_center: float
    theorem_matching: bool
    tails: Tuple[TailBound, TailBound] = field(repr=False, default=())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "n": self.n,
            "k": self.k,
            "epsilon": self.epsilon,
            "s_upper": self.s_upper,
            "s_lower": self.s_lower,
            "n_min": self.n_min,
            "lower_threshold": self.lower_threshold,
            "upper_threshold": self.upper_threshold,
            "probability_floor": self.probability_floor,
            "predicted_center": self.predicted_center,
            "theorem_matching": self.theorem_matching,
        }


class BoundOptimizer:
    """
    Finds moment exponents s and dimensions n for which the Chebyshev
    thresholds certify (1-ε)·centre < ratio < (1+ε)·e^{-γ} with probability
    at least 1 - 1/n^k.
    """

    def __init__(self, query: BoundQuery, n_grid: Optional[Sequence[int]] = None,
                 s_grid: Sequence[float] = S_GRID):
        self.query = query
        self.family = query.family
        self.logger = logging.getLogger(f"BoundOptimizer.{self.family.spec}")
        self.s_grid = tuple(sorted(float(s) for s in s_grid))
        if self.family.fixed_n is not None:
            self.n_grid = (self.family.fixed_n,)
        else:
            self.n_grid = tuple(sorted(int(n) for n in (n_grid or N_GRID)))
        self._levels: Dict[int, WeightLevels] = {}
        self._log_thresholds: Dict[Tuple[float, int], float] = {}

    def levels(self, n: int) -> WeightLevels:
        if n not in self._levels:
            self._levels[n] = self.family.levels(n)
        return self._levels[n]

    def _admissible(self, s: float, n: int) -> bool:
        return 1.0 + s * self.levels(n).a_max > 0.0

    def log_threshold(self, s: float, n: int) -> float:
        key = (s, n)
        if key not in self._log_thresholds:
            self._log_thresholds[key] = log_threshold(self.levels(n), s, self.query.k)
        return self._log_thresholds[key]

    def upper_target(self, n: int) -> float:
        return (1.0 + self.query.epsilon) * CONSTANTS.exp_neg_gamma

    def lower_target(self, n: int) -> float:
        return (1.0 - self.query.epsilon) * weight_stats(self.levels(n)).predicted_center

    def _holds(self, side: str, s: float, n: int) -> bool:
        if not self._admissible(s, n):
            return False
        if side == UPPER:
            return self.log_threshold(s, n) < math.log(self.upper_target(n))
        target = self.lower_target(n)
        return target <= 0.0 or self.log_threshold(s, n) > math.log(target)

    def _n_min(self, side: str, s: float) -> Optional[int]:
        n_min = None
        for n in reversed(self.n_grid):
            if not self._holds(side, s, n):
                break
            n_min = n
        return n_min

    def _better(self, side: str, candidate: float, incumbent: float) -> bool:
        if side == UPPER:
            return candidate < incumbent - TIE_TOLERANCE
        return candidate > incumbent + TIE_TOLERANCE

    def _candidates(self, side: str) -> List[float]:
        if side == UPPER:
            limit = 1.0 + self.query.delta
            return [s for s in self.s_grid if gamma_ratio_bound(s) < limit]
        a_max = self.levels(self.n_grid[0]).a_max
        return sorted(-s for s in self.s_grid if 1.0 - s * a_max > 0.0)

    def _s_interval(self, side: str, s: float, grid: List[float]) -> Tuple[float, float]:
        i = grid.index(s)
        lo = grid[i - 1] if i > 0 else (s / 2.0 if side == UPPER else -(1.0 - 1e-9) / self.levels(self.n_grid[0]).a_max)
        hi = grid[i + 1] if i + 1 < len(grid) else (self._s_admissible_max() if side == UPPER else s / 2.0)
        return lo, hi

    def _s_admissible_max(self) -> float:
        limit = 1.0 + self.query.delta
        return optimize.brentq(lambda s: gamma_ratio_bound(s) - limit, 1e-12, 1.0)

    def _refine(self, side: str, s: float, n: int, lo: float, hi: float) -> float:
        sign = 1.0 if side == UPPER else -1.0

        def objective(x: float) -> float:
            if not self._admissible(x, n) or x == 0.0:
                return math.inf
            return sign * log_threshold(self.levels(n), x, self.query.k)

        result = optimize.minimize_scalar(objective, bounds=(min(lo, hi), max(lo, hi)),
                                          method="bounded", options={"xatol": 1e-12})
        if result.success and math.isfinite(result.fun) and result.fun < objective(s) - TIE_TOLERANCE:
            return float(result.x)
        return s

    def _optimize(self, side: str) -> TailBound:
        grid = self._candidates(side)
        if not grid:
            raise OptimizationFailure(f"no admissible {side} exponent on the s-grid")

        best_s, best_n, best_log = None, None, None
        fallback_s, fallback_log = None, None
        for s in grid:
            n_min = self._n_min(side, s)
            last = self.n_grid[-1]
            if self._admissible(s, last):
                value = self.log_threshold(s, last)
                if fallback_log is None or self._better(side, value, fallback_log):
                    fallback_s, fallback_log = s, value
            if n_min is None:
                continue
            value = self.log_threshold(s, n_min)
            if best_n is None or n_min < best_n or (n_min == best_n and self._better(side, value, best_log)):
                best_s, best_n, best_log = s, n_min, value

        if best_s is None:
            best = _exp(fallback_log) if fallback_log is not None else None
            self.logger.warning("%s tail: no exponent certifies the target up to n=%d (best threshold %r)",
                                side, self.n_grid[-1], best)
            raise OptimizationFailure(
                f"no {side} exponent certifies the target for n up to {self.n_grid[-1]}",
                best_threshold=best, best_s=fallback_s)

        lo, hi = self._s_interval(side, best_s, grid)
        refined = self._refine(side, best_s, best_n, lo, hi)
        if refined != best_s and all(self._holds(side, refined, n) for n in self.n_grid if n >= best_n):
            best_s = refined
        threshold = _exp(self.log_threshold(best_s, best_n))
        target = self.upper_target(best_n) if side == UPPER else self.lower_target(best_n)
        self.logger.info("%s tail: s=%.6g n_min=%d threshold=%.6g target=%.6g",
                         side, best_s, best_n, threshold, target)
        return TailBound(side=side, s=best_s, n_min=best_n, threshold=threshold, target=target)

    def optimize_upper(self) -> TailBound:
        return self._optimize(UPPER)

    def optimize_lower(self) -> TailBound:
        return self._optimize(LOWER)

    def certified_interval(self, n: Optional[int] = None) -> BoundCertificate:
        """
        Interval certified at dimension n with probability floor 1 - 1/n^k. n
        defaults to the length of a materialized sequence, else to the larger
        of the two n_min. Each tail's s is re-tuned at n; any s gives a valid
        Chebyshev bound, the tuning only tightens it.
        """
        upper, lower = self.optimize_upper(), self.optimize_lower()
        n_min = max(upper.n_min, lower.n_min)
        if n is None:
            n = self.query.dimension or n_min
        n = int(n)
        levels = self.levels(n)
        if not self._admissible(lower.s, n):
            raise OptimizationFailure(
                f"lower exponent s={lower.s!r} violates 1 + s*a_1 > 0 at n={n}", best_s=lower.s)

        s_upper = self._refine(UPPER, upper.s, n, upper.s / 2.0, min(2.0 * upper.s, self._s_admissible_max()))
        s_lower = self._refine(LOWER, lower.s, n, max(2.0 * lower.s, -(1.0 - 1e-9) / levels.a_max),
                               lower.s / 2.0)
        upper_threshold = _exp(log_threshold(levels, s_upper, self.query.k))
        lower_threshold = _exp(log_threshold(levels, s_lower, self.query.k))
        stats = weight_stats(levels)
        matching = (n >= n_min
                    and upper_threshold < self.upper_target(n)
                    and lower_threshold > self.lower_target(n))
        return BoundCertificate(
            family=self.family.spec, n=n, k=self.query.k, epsilon=self.query.epsilon,
            s_upper=s_upper, s_lower=s_lower, n_min=n_min,
            upper_threshold=upper_threshold, lower_threshold=lower_threshold,
            probability_floor=1.0 - _exp(-self.query.k * math.log(n)),
            predicted_center=stats.predicted_center,
            theorem_matching=matching,
            tails=(upper, lower),
        )


def optimize_upper(query: BoundQuery) -> TailBound:
    return BoundOptimizer(query).optimize_upper()


def optimize_lower(query: BoundQuery) -> TailBound:
    return BoundOptimizer(query).optimize_lower()


def certified_interval(weights: Any, n: Optional[int], k: float, epsilon: float) -> BoundCertificate:
    return BoundOptimizer(BoundQuery(weights, k, epsilon)).certified_interval(n)
