"""
Renormalized weight sequences a_{i,n} = n·α_{i,n} and their statistics.

A sequence is stored in non-increasing order and sums to n. Families used
by the concentration theorems (equal, two-level, diverging) are generated
directly in compressed form (`WeightLevels`: distinct values with their
multiplicities), so that sums over n terms cost O(number of levels) even
for n in the tens of millions.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np

from core.errors import ConstructionError, DomainError
from core.special_fns import CONSTANTS

logger = logging.getLogger("WeightFamily")

SUM_TOLERANCE = 1e-9
DIVERGING_FUNCTIONS = ("sqrt", "log")


class WeightKind(str, Enum):
    EQUAL = "equal"
    TWO_LEVEL = "two-level"
    DIVERGING = "diverging"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class WeightLevels:
    """Distinct weight values (decreasing) with multiplicities summing to n."""

    values: np.ndarray
    counts: np.ndarray
    family: str = WeightKind.CUSTOM.value

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def a_max(self) -> float:
        return float(self.values[0])

    @property
    def levels(self) -> "WeightLevels":
        return self

    def total(self, terms: np.ndarray) -> float:
        """Σ_i term(a_i), given one term per level, by compensated summation."""
        return math.fsum((self.counts * np.asarray(terms, dtype=float)).tolist())

    def materialize(self) -> np.ndarray:
        return np.repeat(self.values, self.counts)


def _merge_levels(pairs: Iterable[Tuple[float, int]], family: str) -> WeightLevels:
    merged: Dict[float, int] = {}
    for value, count in pairs:
        if count > 0:
            merged[float(value)] = merged.get(float(value), 0) + int(count)
    ordered = sorted(merged.items(), key=lambda item: -item[0])
    values = np.array([v for v, _ in ordered], dtype=float)
    counts = np.array([c for _, c in ordered], dtype=np.int64)
    values.setflags(write=False)
    counts.setflags(write=False)
    return WeightLevels(values=values, counts=counts, family=family)


@dataclass(frozen=True, eq=False)
class WeightSequence:
    """The vector (a_1, ..., a_n), sorted non-increasing and read-only once built."""

    a: np.ndarray
    family: str = WeightKind.CUSTOM.value

    def __post_init__(self):
        arr = -np.sort(-np.array(self.a, dtype=float).ravel())
        arr.setflags(write=False)
        object.__setattr__(self, "a", arr)

    @property
    def n(self) -> int:
        return int(self.a.size)

    @property
    def a_max(self) -> float:
        return float(np.max(self.a))

    @property
    def alpha(self) -> np.ndarray:
        return self.a / self.n

    @cached_property
    def levels(self) -> WeightLevels:
        values, counts = np.unique(self.a, return_counts=True)
        return _merge_levels(zip(values[::-1], counts[::-1]), self.family)

    @classmethod
    def from_levels(cls, levels: WeightLevels) -> "WeightSequence":
        return cls(a=levels.materialize(), family=levels.family)

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "a": [float(x) for x in self.a], "family": self.family}

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "WeightSequence":
        seq = cls(a=payload["a"], family=payload.get("family", WeightKind.CUSTOM.value))
        if int(payload["n"]) != seq.n:
            raise DomainError(f"declared n={payload['n']} but {seq.n} weights were given")
        return seq


@dataclass(frozen=True)
class Violation:
    invariant: str
    index: Optional[int]
    detail: str

    def __str__(self) -> str:
        where = f" at index {self.index}" if self.index is not None else ""
        return f"{self.invariant} violation{where}: {self.detail}"


@dataclass(frozen=True)
class WeightStats:
    a_max: float
    log_weight_gm: float
    predicted_center: float

    def to_dict(self) -> Dict[str, float]:
        return {
            "a_max": self.a_max,
            "log_weight_gm": self.log_weight_gm,
            "weight_gm": math.exp(self.log_weight_gm),
            "predicted_center": self.predicted_center,
        }


def _check_dimension(n: int) -> None:
    if int(n) != n or n < 2:
        raise DomainError(f"dimension n must be an integer >= 2, got {n!r}")


def equal_levels(n: int) -> WeightLevels:
    _check_dimension(n)
    return _merge_levels([(1.0, n)], WeightKind.EQUAL.value)


def two_level_levels(n: int, M: float, family: Optional[str] = None) -> WeightLevels:
    """
    M for j <= n/(M+1), 1/M for j >= 1 + n/(M+1), and one correction entry at
    the least index strictly above n/(M+1) chosen so the weights sum to n.
    """
    _check_dimension(n)
    if not math.isfinite(M) or M < 1.0:
        raise DomainError(f"two-level weights need a finite M >= 1, got {M!r}")
    family = family or f"{WeightKind.TWO_LEVEL.value}:{M:g}"
    quota = n / (M + 1.0)
    nearest = round(quota)
    if abs(quota - nearest) <= 1e-12 * max(1.0, quota):
        j = int(nearest)
        return _merge_levels([(M, j), (1.0 / M, n - j)], family)

    j = int(math.floor(quota))
    correction = n - j * M - (n - j - 1) / M
    low, high = 1.0 / M, M
    slack = 1e-12 * n
    if not (low - slack <= correction <= high + slack):
        raise ConstructionError(
            f"correction entry {correction!r} falls outside [{low!r}, {high!r}]", n=n, M=M)
    correction = min(max(correction, low), high)
    logger.debug("n=%d M=%g: %d entries at M, correction %r at index %d", n, M, j, correction, j + 1)
    return _merge_levels([(M, j), (correction, 1), (1.0 / M, n - j - 1)], family)


def growth_value(n: int, name: str) -> int:
    """f(n) for the supported diverging families."""
    if name == "sqrt":
        return math.isqrt(n)
    if name == "log":
        return max(2, int(math.floor(math.log(n))))
    raise DomainError(f"unknown growth function {name!r}; expected one of {DIVERGING_FUNCTIONS}")


def diverging_levels(n: int, name: str) -> WeightLevels:
    _check_dimension(n)
    f_n = growth_value(n, name)
    if not 1 <= f_n < n:
        raise DomainError(f"diverging weights need 1 <= f(n) < n, got f({n})={f_n} for {name}")
    return two_level_levels(n, float(f_n), family=f"{WeightKind.DIVERGING.value}:{name}")


def equal_weights(n: int) -> WeightSequence:
    return WeightSequence.from_levels(equal_levels(n))


def two_level_weights(n: int, M: float) -> WeightSequence:
    return WeightSequence.from_levels(two_level_levels(n, M))


def diverging_weights(n: int, f: str) -> WeightSequence:
    return WeightSequence.from_levels(diverging_levels(n, f))


def validate(w: WeightSequence) -> List[Violation]:
    """Every broken WeightSequence invariant, with 1-based indices."""
    a = np.asarray(w.a, dtype=float)
    n = a.size
    violations: List[Violation] = []
    if n < 2:
        violations.append(Violation("dimension", None, f"n={n} < 2"))
        return violations
    bad = np.flatnonzero(~np.isfinite(a))
    for idx in bad:
        violations.append(Violation("finiteness", int(idx) + 1, f"a={float(a[idx])!r}"))
    if bad.size:
        return violations
    for idx in np.flatnonzero(a <= 0):
        violations.append(Violation("positivity", int(idx) + 1, f"a={float(a[idx])!r} <= 0"))
    total = math.fsum(a.tolist())
    if abs(total - n) > SUM_TOLERANCE * n:
        violations.append(Violation("sum", None, f"sum={total!r} != {n}"))
    return violations


def require_valid(w: Any) -> WeightLevels:
    """Compressed form of `w`, raising DomainError if it is not a valid sequence."""
    if isinstance(w, WeightSequence):
        violations = validate(w)
        if violations:
            raise DomainError("invalid weights: " + "; ".join(str(v) for v in violations))
    return w.levels


def weight_stats(w: Any) -> WeightStats:
    """a_max, Σ (a_i/n) ln a_i and the centre e^{-γ}/∏ a_i^{a_i/n}."""
    levels = require_valid(w)
    log_gm = levels.total(levels.values * np.log(levels.values)) / levels.n
    return WeightStats(
        a_max=levels.a_max,
        log_weight_gm=log_gm,
        predicted_center=CONSTANTS.exp_neg_gamma * math.exp(-log_gm),
    )


@dataclass(frozen=True)
class WeightFamily:
    """A rule producing a weight sequence for every admissible dimension n."""

    kind: WeightKind
    param: Optional[Any] = None
    fixed: Optional[WeightSequence] = field(default=None, compare=False)

    @property
    def spec(self) -> str:
        if self.kind is WeightKind.EQUAL:
            return "equal"
        if self.kind is WeightKind.CUSTOM:
            return f"custom:@{self.param}" if self.param else "custom"
        value = f"{self.param:g}" if isinstance(self.param, float) else str(self.param)
        return f"{self.kind.value}:{value}"

    @property
    def fixed_n(self) -> Optional[int]:
        return self.fixed.n if self.fixed is not None else None

    def levels(self, n: int) -> WeightLevels:
        if self.kind is WeightKind.EQUAL:
            return equal_levels(n)
        if self.kind is WeightKind.TWO_LEVEL:
            return two_level_levels(n, float(self.param))
        if self.kind is WeightKind.DIVERGING:
            return diverging_levels(n, str(self.param))
        if self.fixed is None or self.fixed.n != n:
            raise DomainError(f"custom weights are only defined for n={self.fixed_n}, not n={n}")
        return require_valid(self.fixed)

    def build(self, n: int) -> WeightSequence:
        if self.kind is WeightKind.CUSTOM:
            self.levels(n)
            return self.fixed
        return WeightSequence.from_levels(self.levels(n))

    def theorem_center(self) -> Optional[float]:
        """The n → ∞ concentration centre, when the family has one."""
        if self.kind is WeightKind.EQUAL:
            return CONSTANTS.exp_neg_gamma
        if self.kind is WeightKind.TWO_LEVEL:
            M = float(self.param)
            return CONSTANTS.exp_neg_gamma / M ** ((M - 1.0) / (M + 1.0))
        if self.kind is WeightKind.DIVERGING:
            return 0.0
        return None


def weight_family_from_spec(spec: str, custom: Optional[WeightSequence] = None) -> WeightFamily:
    """Parse `equal`, `two-level:M`, `diverging:sqrt|log` or `custom:@file`."""
    head, _, arg = spec.partition(":")
    if head == WeightKind.EQUAL.value and not arg:
        return WeightFamily(WeightKind.EQUAL)
    if head == WeightKind.TWO_LEVEL.value:
        try:
            M = float(arg)
        except ValueError:
            raise DomainError(f"two-level spec needs a numeric M, got {spec!r}") from None
        if not math.isfinite(M) or M < 1.0:
            raise DomainError(f"two-level spec needs M >= 1, got {spec!r}")
        return WeightFamily(WeightKind.TWO_LEVEL, M)
    if head == WeightKind.DIVERGING.value and arg in DIVERGING_FUNCTIONS:
        return WeightFamily(WeightKind.DIVERGING, arg)
    if head == WeightKind.CUSTOM.value and arg.startswith("@"):
        if custom is None:
            raise DomainError(f"custom spec {spec!r} needs its weights loaded from {arg[1:]!r}")
        return WeightFamily(WeightKind.CUSTOM, arg[1:], fixed=custom)
    raise DomainError(
        f"unknown weight spec {spec!r}; expected equal, two-level:M, diverging:sqrt, "
        "diverging:log or custom:@file")

