"""
Monte Carlo sampling of the weighted ℓ1 sphere and the Euclidean sphere.

Weighted sphere S_a: with e_1..e_n i.i.d. Exp(1), u = e/Σe is uniform on the
simplex, and x_i = ε_i u_i / a_i (random signs ε_i) is uniform on S_a for
the surface measure, since the linear map u ↦ (u_i/a_i) has constant
Jacobian. Euclidean sphere: a standard Gaussian vector divided by its norm.

Randomness is explicit: every batch draws from its own numpy PCG64 stream
derived from (seed, batch index), so results depend only on the seed and
the batch partition, not on thread scheduling.
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from core.errors import DomainError, ExperimentFailure
from core.moments import check_moment_domain
from core.weights import WeightSequence, require_valid

HISTOGRAM_BINS = 1000
SKETCH_BINS = 2 ** 20
# floats per batch when --batch-size is not given
BATCH_BUDGET = 2 ** 22

WEIGHTED = "weighted"
EUCLIDEAN = "euclidean"
AMBIENT_LAWS = ("exponential", "ball")


@dataclass(frozen=True)
class SeededStream:
    """One independent PCG64 stream of the run seeded by `seed`."""

    seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(sequence))


RandomSource = Union[SeededStream, np.random.Generator]


def _generator(rng: RandomSource) -> np.random.Generator:
    if isinstance(rng, SeededStream):
        return rng.generator()
    return rng


def _weight_vector(w: Any) -> np.ndarray:
    if isinstance(w, WeightSequence):
        require_valid(w)
        return np.asarray(w.a, dtype=float)
    return require_valid(w).materialize()


@dataclass(frozen=True, eq=False)
class SpherePoint:
    coords: np.ndarray
    sphere: str
    weights: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return int(self.coords.size)

    def constraint_residual(self) -> float:
        """|Σ a_i|x_i| - 1| or |Σ y_i² - 1|."""
        if self.sphere == WEIGHTED:
            total = math.fsum((self.weights * np.abs(self.coords)).tolist())
        else:
            total = math.fsum((self.coords * self.coords).tolist())
        return abs(total - 1.0)


@dataclass(frozen=True)
class RatioSample:
    value: float


def _simplex_rows(gen: np.random.Generator, size: int, n: int) -> np.ndarray:
    draws = gen.standard_exponential((size, n))
    sums = draws.sum(axis=1)
    # an all-zero row has probability ~0 but would divide by zero
    while np.any(sums <= 0.0):
        bad = sums <= 0.0
        draws[bad] = gen.standard_exponential((int(bad.sum()), n))
        sums = draws.sum(axis=1)
    return draws / sums[:, None]


def _random_signs(gen: np.random.Generator, shape: Tuple[int, int]) -> np.ndarray:
    return np.where(gen.integers(0, 2, size=shape, dtype=np.int8) == 1, 1.0, -1.0)


def _weighted_rows(a: np.ndarray, gen: np.random.Generator, size: int) -> np.ndarray:
    u = _simplex_rows(gen, size, a.size)
    return _random_signs(gen, u.shape) * u / a


def sample_weighted_sphere_batch(w: Any, rng: RandomSource, size: int) -> np.ndarray:
    """`size` independent uniform points of S_a, one per row."""
    return _weighted_rows(_weight_vector(w), _generator(rng), size)


def sample_weighted_sphere(w: Any, rng: RandomSource) -> SpherePoint:
    a = _weight_vector(w)
    coords = _weighted_rows(a, _generator(rng), 1)[0]
    return SpherePoint(coords=coords, sphere=WEIGHTED, weights=a)


def sample_euclidean_sphere_batch(n: int, rng: RandomSource, size: int) -> np.ndarray:
    if int(n) != n or n < 2:
        raise DomainError(f"Euclidean dimension must be an integer >= 2, got {n!r}")
    gen = _generator(rng)
    draws = gen.standard_normal((size, int(n)))
    norms = np.linalg.norm(draws, axis=1)
    while np.any(norms <= 0.0):
        bad = norms <= 0.0
        draws[bad] = gen.standard_normal((int(bad.sum()), int(n)))
        norms = np.linalg.norm(draws, axis=1)
    return draws / norms[:, None]


def sample_euclidean_sphere(n: int, rng: RandomSource) -> SpherePoint:
    coords = sample_euclidean_sphere_batch(n, rng, 1)[0]
    return SpherePoint(coords=coords, sphere=EUCLIDEAN)


def sample_weighted_ambient(w: Any, rng: RandomSource, size: int, law: str = "exponential") -> np.ndarray:
    """
    Points of R^n whose direction is uniform on S_a.

    `exponential` draws independent Laplace coordinates with rates a_i
    (density ∝ exp(-Σ a_i|x_i|)); `ball` draws uniformly from the unit
    ball of the a-weighted ℓ1 norm.
    """
    if law not in AMBIENT_LAWS:
        raise DomainError(f"unknown ambient law {law!r}; expected one of {AMBIENT_LAWS}")
    a = _weight_vector(w)
    gen = _generator(rng)
    if law == "exponential":
        magnitudes = gen.standard_exponential((size, a.size)) / a
        return _random_signs(gen, magnitudes.shape) * magnitudes
    points = _weighted_rows(a, gen, size)
    radii = gen.random(size) ** (1.0 / a.size)
    return points * radii[:, None]


def sample_gaussian_ambient(n: int, rng: RandomSource, size: int) -> np.ndarray:
    if int(n) != n or n < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {n!r}")
    return _generator(rng).standard_normal((size, int(n)))


def _log_abs(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.abs(x))


def log_weighted_product_batch(x: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Σ_i a_i ln|x_i| per row (-inf when a coordinate is zero)."""
    return _log_abs(np.atleast_2d(x)) @ a


def _ratio_weighted(x: np.ndarray, a: np.ndarray) -> np.ndarray:
    n = a.size
    logs = math.log(n) + log_weighted_product_batch(x, a) / n
    return np.minimum(np.exp(logs), 1.0)


def ratio_weighted_batch(x: np.ndarray, w: Any) -> np.ndarray:
    """n ∏|x_i|^{a_i/n} per row of points on S_a."""
    return _ratio_weighted(x, _weight_vector(w))


def ratio_euclidean_batch(y: np.ndarray) -> np.ndarray:
    """√n ∏|y_i|^{1/n} per row of points on S^{n-1}."""
    y = np.atleast_2d(y)
    n = y.shape[1]
    logs = 0.5 * math.log(n) + _log_abs(y).mean(axis=1)
    return np.minimum(np.exp(logs), 1.0)


def gm_am_ratio_weighted(p: SpherePoint, w: Any = None) -> RatioSample:
    weights = p.weights if w is None else _weight_vector(w)
    if weights is None or weights.size != p.n:
        raise DomainError("weighted ratio needs weights of the point's dimension")
    return RatioSample(float(_ratio_weighted(p.coords, weights)[0]))


def gm_am_ratio_euclidean(p: SpherePoint) -> RatioSample:
    return RatioSample(float(ratio_euclidean_batch(p.coords)[0]))


def gm_am_ratio_homogeneous(x: np.ndarray, w: Any) -> float:
    """∏|x_i|^{α_i} / Σ α_i|x_i| for any nonzero x; invariant under scaling."""
    a = _weight_vector(w)
    x = np.asarray(x, dtype=float)
    alpha = a / a.size
    mean = math.fsum((alpha * np.abs(x)).tolist())
    if mean <= 0.0:
        raise DomainError("the ratio is undefined at the origin")
    log_gm = float(log_weighted_product_batch(x, alpha)[0])
    return math.exp(log_gm - math.log(mean)) if math.isfinite(log_gm) else 0.0


def l1_ratio_on_euclidean(p: SpherePoint) -> RatioSample:
    """Equal-weight GM/mean(|y|) at a Euclidean point; never exceeds the √n ratio."""
    y = np.abs(np.asarray(p.coords, dtype=float))
    mean = float(y.mean())
    log_gm = float(_log_abs(y).mean())
    return RatioSample(math.exp(log_gm - math.log(mean)) if math.isfinite(log_gm) else 0.0)


def lipschitz_witness(n: int) -> Dict[str, float]:
    """
    Two points of the equal-weight ℓ1 sphere whose ratio difference over
    their ℓ1 distance is n/2: the centre point and one with a coordinate
    pushed to zero.
    """
    if int(n) != n or n < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {n!r}")
    n = int(n)
    x = np.full(n, 1.0 / n)
    y = x.copy()
    y[0] = 0.0
    y[1] = 2.0 / n
    ones = np.ones(n)
    rx = float(_ratio_weighted(x, ones)[0])
    ry = float(_ratio_weighted(y, ones)[0])
    distance = math.fsum(np.abs(x - y).tolist())
    return {
        "n": n,
        "ratio_x": rx,
        "ratio_y": ry,
        "l1_distance": distance,
        "quotient": abs(rx - ry) / distance,
    }


@dataclass
class QuantileSketch:
    """Fixed-resolution histogram on [0, 1]; merging is bin-wise addition."""

    bins: int = SKETCH_BINS
    counts: np.ndarray = None

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros(self.bins, dtype=np.int64)

    def update(self, values: np.ndarray) -> None:
        self.counts += _bin_counts(values, self.bins)

    def merge(self, other: "QuantileSketch") -> "QuantileSketch":
        return QuantileSketch(self.bins, self.counts + other.counts)

    def quantile(self, q: float) -> Optional[float]:
        total = int(self.counts.sum())
        if total == 0:
            return None
        cumulative = np.cumsum(self.counts)
        target = q * total
        idx = min(int(np.searchsorted(cumulative, target, side="left")), self.bins - 1)
        before = float(cumulative[idx - 1]) if idx > 0 else 0.0
        within = (target - before) / self.counts[idx] if self.counts[idx] else 0.5
        return (idx + min(max(within, 0.0), 1.0)) / self.bins


def _bin_counts(values: np.ndarray, bins: int) -> np.ndarray:
    idx = np.clip((np.asarray(values) * bins).astype(np.int64), 0, bins - 1)
    return np.bincount(idx, minlength=bins).astype(np.int64)


@dataclass
class EstimatorState:
    """Streaming summary of ratio samples: moments, histogram, quantiles, interval counts."""

    intervals: Tuple[Tuple[float, float], ...] = ()
    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    histogram: np.ndarray = field(default_factory=lambda: np.zeros(HISTOGRAM_BINS, dtype=np.int64))
    sketch: QuantileSketch = field(default_factory=QuantileSketch)
    interval_counts: np.ndarray = None

    def __post_init__(self):
        self.intervals = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        if self.interval_counts is None:
            self.interval_counts = np.zeros(len(self.intervals), dtype=np.int64)

    def update(self, values: np.ndarray) -> "EstimatorState":
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0:
            return self
        batch = EstimatorState(self.intervals)
        batch.count = int(values.size)
        batch.mean = float(values.mean())
        batch.m2 = float(np.sum((values - batch.mean) ** 2))
        batch.histogram = _bin_counts(values, HISTOGRAM_BINS)
        batch.sketch.update(values)
        batch.interval_counts = np.array(
            [int(np.count_nonzero((values >= lo) & (values <= hi))) for lo, hi in self.intervals],
            dtype=np.int64)
        merged = self.merge(batch)
        self.count, self.mean, self.m2 = merged.count, merged.mean, merged.m2
        self.histogram, self.sketch = merged.histogram, merged.sketch
        self.interval_counts = merged.interval_counts
        return self

    def merge(self, other: "EstimatorState") -> "EstimatorState":
        """Combine two disjoint streams (pairwise mean/variance update)."""
        if self.intervals != other.intervals:
            raise DomainError("cannot merge estimator states tracking different intervals")
        merged = EstimatorState(self.intervals)
        total = self.count + other.count
        merged.count = total
        if total:
            delta = other.mean - self.mean
            merged.mean = self.mean + delta * other.count / total
            merged.m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / total
        merged.histogram = self.histogram + other.histogram
        merged.sketch = self.sketch.merge(other.sketch)
        merged.interval_counts = self.interval_counts + other.interval_counts
        return merged

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    @property
    def median(self) -> Optional[float]:
        return self.sketch.quantile(0.5)

    def quantile(self, q: float) -> Optional[float]:
        return self.sketch.quantile(q)

    def interval_probability(self, index: int) -> float:
        return float(self.interval_counts[index]) / self.count if self.count else 0.0

    def to_dict(self, include_histogram: bool = True) -> Dict[str, Any]:
        result: Dict[str, Any] = {
            "count": self.count,
            "mean": self.mean,
            "sd": self.sd,
            "median": self.median,
            "intervals": [
                {"lo": lo, "hi": hi, "probability": self.interval_probability(i)}
                for i, (lo, hi) in enumerate(self.intervals)
            ],
        }
        if include_histogram:
            result["histogram"] = {"bins": HISTOGRAM_BINS, "counts": self.histogram.tolist()}
        return result


@dataclass(frozen=True)
class MomentEstimate:
    estimate: float
    standard_error: float
    samples: int

    def __iter__(self) -> Iterator[float]:
        return iter((self.estimate, self.standard_error))


def _batch_sizes(samples: int, batch_size: int) -> List[int]:
    full, rest = divmod(samples, batch_size)
    return [batch_size] * full + ([rest] if rest else [])


def _default_batch_size(n: int) -> int:
    return max(1, BATCH_BUDGET // n)


def _moment_from_logs(chunks: Sequence[np.ndarray], s: float, samples: int) -> MomentEstimate:
    values = np.exp(s * np.concatenate(chunks))
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return MomentEstimate(mean, se, samples)


def empirical_moment(w: Any, s: float, samples: int, rng: RandomSource) -> MomentEstimate:
    """Sample mean and standard error of ∏|x_i|^{a_i s} over uniform points of S_a."""
    levels = require_valid(w)
    check_moment_domain(levels, s)
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    if s == 0.0:
        return MomentEstimate(1.0, 0.0, samples)
    a = _weight_vector(w)
    gen = _generator(rng)
    chunks = [
        log_weighted_product_batch(_weighted_rows(a, gen, size), a)
        for size in _batch_sizes(samples, _default_batch_size(a.size))
    ]
    return _moment_from_logs(chunks, s, samples)


def empirical_moment_euclidean(n: int, s: float, samples: int, rng: RandomSource) -> MomentEstimate:
    """Sample mean and standard error of ∏|y_i|^s over uniform points of S^{n-1}."""
    if s <= -1.0:
        raise DomainError(f"Euclidean moments need s > -1, got s={s!r}")
    if samples < 1:
        raise DomainError(f"samples must be >= 1, got {samples}")
    if s == 0.0:
        return MomentEstimate(1.0, 0.0, samples)
    gen = _generator(rng)
    chunks = [
        _log_abs(sample_euclidean_sphere_batch(n, gen, size)).sum(axis=1)
        for size in _batch_sizes(samples, _default_batch_size(int(n)))
    ]
    return _moment_from_logs(chunks, s, samples)


class MonteCarloRunner:
    """
    Draws GM/AM ratio samples in batches and folds them into one EstimatorState.

    Batch i always uses stream i of the seed, and batch results are merged in
    index order, so any worker count gives the same state.
    """

    def __init__(self, sphere: str, n: int, weights: Optional[Any] = None, seed: int = 0,
                 batch_size: Optional[int] = None, workers: int = 1, progress: bool = False,
                 intervals: Sequence[Tuple[float, float]] = ()):
        if sphere not in (WEIGHTED, EUCLIDEAN):
            raise DomainError(f"unknown sphere {sphere!r}")
        if sphere == WEIGHTED:
            if weights is None:
                raise DomainError("a weighted run needs weights")
            self.a = _weight_vector(weights)
            n = self.a.size
        self.sphere = sphere
        self.n = int(n)
        self.seed = int(seed)
        self.batch_size = batch_size or _default_batch_size(self.n)
        self.workers = max(1, int(workers))
        self.progress = progress
        self.intervals = tuple(intervals)
        self.logger = logging.getLogger(f"MonteCarloRunner.{sphere}")
        self.run_history: List[Dict[str, Any]] = []

    def plan_batches(self, samples: int) -> List[Tuple[int, int]]:
        return list(enumerate(_batch_sizes(samples, self.batch_size)))

    def run_batch(self, index: int, size: int) -> EstimatorState:
        stream = SeededStream(self.seed, index)
        if self.sphere == WEIGHTED:
            points = _weighted_rows(self.a, stream.generator(), size)
            values = _ratio_weighted(points, self.a)
        else:
            values = ratio_euclidean_batch(sample_euclidean_sphere_batch(self.n, stream, size))
        return EstimatorState(self.intervals).update(values)

    def run(self, samples: int) -> EstimatorState:
        if samples < 1:
            raise DomainError(f"samples must be >= 1, got {samples}")
        plan = self.plan_batches(samples)
        self.logger.info(f"Sampling {samples} points (n={self.n}) in {len(plan)} batches, {self.workers} worker(s)")
        start = time.time()
        state = EstimatorState(self.intervals)
        bar = tqdm(total=samples, disable=not self.progress, unit="pt", leave=False)
        try:
            if self.workers == 1:
                for index, size in plan:
                    state = state.merge(self.run_batch(index, size))
                    bar.update(size)
            else:
                with ThreadPoolExecutor(max_workers=self.workers) as pool:
                    for (index, size), batch in zip(plan, pool.map(lambda job: self.run_batch(*job), plan)):
                        state = state.merge(batch)
                        bar.update(size)
        except (MemoryError, KeyboardInterrupt) as e:
            self.logger.error(f"Sampling stopped after {state.count} points: {type(e).__name__}")
            raise ExperimentFailure(f"sampling stopped after {state.count} of {samples} points", state) from e
        finally:
            bar.close()
        duration = time.time() - start
        self.run_history.append({"samples": samples, "batches": len(plan), "duration": duration})
        self.logger.info(f"Finished in {duration:.2f}s; mean ratio {state.mean:.6f}")
        return state


def run_experiment(config: Any) -> EstimatorState:
    """Run the `simulate` experiment described by an ExperimentConfig."""
    from core.config import resolve_dimension, resolve_family

    family = resolve_family(config)
    n = resolve_dimension(config, family)
    runner = MonteCarloRunner(
        sphere=EUCLIDEAN if family is None else WEIGHTED,
        n=n,
        weights=None if family is None else family.levels(n),
        seed=config.seed,
        batch_size=config.batch_size,
        workers=config.workers,
        progress=config.progress,
        intervals=config.intervals,
    )
    return runner.run(config.samples)
