#!/usr/bin/env python3
"""
Acceptance Verifier
Runs the end-to-end acceptance checklist behind `verify`: exact-moment
oracles, sampler uniformity, concentration at desk scale, Chebyshev
certificates, special-function accuracy and determinism.
"""

import json
import logging
import math
import time
from typing import Any, Callable, Dict, List, Tuple

import numpy as np
from scipy import integrate

from core.bounds import (BoundOptimizer, BoundQuery, factor_decomposition, log_threshold,
                         product_power_min)
from core.config import ExperimentConfig
from core.errors import GmAmError
from core.moments import exact_moment_euclidean, exact_moment_weighted
from core.sampling import (EUCLIDEAN, WEIGHTED, EstimatorState, MonteCarloRunner, SeededStream,
                           empirical_moment)
from core.special_fns import CONSTANTS, EULER_GAMMA, digamma, log_gamma, stirling_remainder
from core.weights import (WeightFamily, WeightKind, WeightSequence, diverging_levels, equal_levels,
                          equal_weights, two_level_levels)

PASS = "PASS"
FAIL = "FAIL"
SKIP = "SKIP"

CONCENTRATION_N = 10_000
# per-check caps that keep `verify` at desk scale
UNIFORMITY_SAMPLES = 200_000
CONCENTRATION_SAMPLES = 20_000
CERTIFICATE_SAMPLES = 1_000_000
CERTIFICATE_MAX_N = 2048
MIN_UNIFORMITY_SAMPLES = 1000
MIN_CONCENTRATION_SAMPLES = 200


class CheckSkipped(Exception):
    """Raised by a check that cannot run with the available samples."""


class CheckFailed(Exception):
    """A check ran and its condition did not hold."""


def require(condition: bool, message: str) -> None:
    if not condition:
        raise CheckFailed(message)


def random_bounded_weights(gen: np.random.Generator, n: int, a_cap: float = 2.0) -> WeightSequence:
    """Positive weights summing to n with a_1 < a_cap."""
    while True:
        raw = gen.uniform(0.5, 1.5, size=n)
        a = raw * (n / raw.sum())
        if a.max() < a_cap:
            return WeightSequence(a=a)


class AcceptanceVerifier:
    """
    Runs every acceptance check and records one result per check:
    - status PASS / FAIL / SKIP with a short detail line
    - exceptions inside a check become FAIL with the error text
    """

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.seed = config.seed
        self.samples = config.samples
        self.logger = logging.getLogger("AcceptanceVerifier.verify")
        self.results: List[Dict[str, Any]] = []

    def checks(self) -> List[Tuple[str, Callable[[], str]]]:
        return [
            ("exact_moment_n2", self._check_exact_moment_n2),
            ("euclidean_moment_n2", self._check_euclidean_moment_n2),
            ("sampler_uniformity", self._check_sampler_uniformity),
            ("equal_concentration", self._check_equal_concentration),
            ("two_level_concentration", self._check_two_level_concentration),
            ("diverging_collapse", self._check_diverging_collapse),
            ("euclidean_concentration", self._check_euclidean_concentration),
            ("chebyshev_certificate", self._check_chebyshev_certificate),
            ("factor_identity", self._check_factor_identity),
            ("product_power_minimum", self._check_product_power_minimum),
            ("special_functions", self._check_special_functions),
            ("determinism", self._check_determinism),
        ]

    def run(self) -> List[Dict[str, Any]]:
        self.logger.info(f"Running {len(self.checks())} checks (samples={self.samples}, seed={self.seed})")
        self.results = [self.run_check(name, check) for name, check in self.checks()]
        return self.results

    def run_check(self, name: str, check: Callable[[], str]) -> Dict[str, Any]:
        start = time.time()
        result: Dict[str, Any] = {"check": name, "status": FAIL, "detail": ""}
        try:
            result["detail"] = check()
            result["status"] = PASS
        except CheckSkipped as e:
            result["status"] = SKIP
            result["detail"] = f"skipped: {e}"
        except CheckFailed as e:
            result["detail"] = str(e)
        except (GmAmError, ArithmeticError, ValueError) as e:
            self.logger.error(f"Check {name} raised {type(e).__name__}: {e}")
            result["detail"] = f"error: {e}"
            result["error"] = type(e).__name__
        result["duration"] = time.time() - start
        self.logger.info(f"{name}: {result['status']} ({result['duration']:.2f}s)")
        return result

    @property
    def passed(self) -> bool:
        return all(r["status"] != FAIL for r in self.results)

    def render_lines(self) -> str:
        return "".join(f"{r['status']} {r['check']}: {r['detail']}\n" for r in self.results)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "samples": self.samples,
            "passed": self.passed,
            "checks": [{k: v for k, v in r.items() if k != "duration"} for r in self.results],
        }

    # exact oracles

    def _check_exact_moment_n2(self) -> str:
        value = exact_moment_weighted(equal_weights(2), 1.0).moment
        quadrature, _ = integrate.quad(lambda x: x * (1.0 - x), 0.0, 1.0, epsabs=1e-14, epsrel=1e-14)
        require(abs(value - 1.0 / 6.0) <= 1e-12, f"moment {value!r} != 1/6")
        require(abs(value - quadrature) <= 1e-10, f"moment {value!r} disagrees with quadrature {quadrature!r}")
        return f"E = {value:.12g}, quadrature {quadrature:.12g}"

    def _check_euclidean_moment_n2(self) -> str:
        value = exact_moment_euclidean(2, 2.0).moment
        quadrature, _ = integrate.quad(
            lambda t: (math.cos(t) * math.sin(t)) ** 2 / (2.0 * math.pi), 0.0, 2.0 * math.pi,
            epsabs=1e-14, epsrel=1e-14)
        require(abs(value - 0.125) <= 1e-12, f"moment {value!r} != 1/8")
        require(abs(value - quadrature) <= 1e-10, f"moment {value!r} disagrees with quadrature {quadrature!r}")
        return f"E = {value:.12g}, quadrature {quadrature:.12g}"

    # statistical checks

    def _budget(self, cap: int, floor: int) -> int:
        samples = min(self.samples, cap)
        if samples < floor:
            raise CheckSkipped(f"insufficient samples ({samples} < {floor})")
        return samples

    def _check_sampler_uniformity(self) -> str:
        samples = self._budget(UNIFORMITY_SAMPLES, MIN_UNIFORMITY_SAMPLES)
        gen = SeededStream(self.seed, 10_000).generator()
        worst = 0.0
        for i in range(10):
            weights = random_bounded_weights(gen, int(gen.integers(2, 9)))
            for j, s in enumerate((0.5, 1.0, -0.2)):
                exact = exact_moment_weighted(weights, s).moment
                estimate, se = empirical_moment(weights, s, samples, SeededStream(self.seed, 10_001 + 3 * i + j))
                z = abs(estimate - exact) / se if se > 0 else 0.0
                worst = max(worst, z)
                require(z <= 4.0, f"n={weights.n} s={s}: estimate {estimate:.6g} vs exact {exact:.6g} ({z:.2f} SE)")
        return f"30 moments within 4 SE (worst {worst:.2f} SE, {samples} samples each)"

    def _ratio_state(self, sphere: str, n: int, levels: Any = None) -> EstimatorState:
        samples = self._budget(CONCENTRATION_SAMPLES, MIN_CONCENTRATION_SAMPLES)
        runner = MonteCarloRunner(sphere=sphere, n=n, weights=levels, seed=self.seed,
                                  batch_size=self.config.batch_size, workers=self.config.workers,
                                  progress=self.config.progress,
                                  intervals=self._intervals_for(sphere, levels))
        return runner.run(samples)

    @staticmethod
    def _intervals_for(sphere: str, levels: Any) -> Tuple[Tuple[float, float], ...]:
        if sphere == WEIGHTED and levels is not None and levels.family.startswith(WeightKind.DIVERGING.value):
            return ((0.0, 0.05),)
        center = CONSTANTS.exp_neg_gamma
        return ((0.95 * center, 1.05 * center),)

    def _check_equal_concentration(self) -> str:
        state = self._ratio_state(WEIGHTED, CONCENTRATION_N, equal_levels(CONCENTRATION_N))
        center = CONSTANTS.exp_neg_gamma
        inside = state.interval_probability(0)
        require(inside >= 0.99, f"P(ratio in (0.95, 1.05)e^-gamma) = {inside:.4f} < 0.99")
        require(abs(state.median - center) <= 0.01 * center, f"median {state.median:.6f} not within 1% of {center:.6f}")
        return f"median {state.median:.6f}, P(inside) {inside:.4f}"

    def _check_two_level_concentration(self) -> str:
        levels = two_level_levels(CONCENTRATION_N, 4.0)
        state = self._ratio_state(WEIGHTED, CONCENTRATION_N, levels)
        center = WeightFamily(WeightKind.TWO_LEVEL, 4.0).theorem_center()
        require(abs(state.median - center) <= 0.02 * center, f"median {state.median:.6f} not within 2% of {center:.6f}")
        return f"median {state.median:.6f} vs centre {center:.6f}"

    def _check_diverging_collapse(self) -> str:
        state = self._ratio_state(WEIGHTED, CONCENTRATION_N, diverging_levels(CONCENTRATION_N, "sqrt"))
        below = state.interval_probability(0)
        require(below >= 0.99, f"P(ratio < 0.05) = {below:.4f} < 0.99")
        return f"P(ratio < 0.05) = {below:.4f}, median {state.median:.6f}"

    def _check_euclidean_concentration(self) -> str:
        state = self._ratio_state(EUCLIDEAN, CONCENTRATION_N)
        center = CONSTANTS.euclidean_center
        require(abs(state.median - center) <= 0.01 * center, f"median {state.median:.6f} not within 1% of {center:.6f}")
        return f"median {state.median:.6f} vs centre {center:.6f}"

    def _check_chebyshev_certificate(self) -> str:
        samples = self._budget(CERTIFICATE_SAMPLES, MIN_UNIFORMITY_SAMPLES)
        optimizer = BoundOptimizer(BoundQuery(WeightFamily(WeightKind.EQUAL), k=1.0, epsilon=0.3))
        upper, lower = optimizer.optimize_upper(), optimizer.optimize_lower()
        # Chebyshev thresholds hold at every n; sample at a desk-sized n
        n = min(max(upper.n_min, lower.n_min), CERTIFICATE_MAX_N)
        certificate = optimizer.certified_interval(n)
        lo, hi = certificate.lower_threshold, certificate.upper_threshold
        runner = MonteCarloRunner(sphere=WEIGHTED, n=n, weights=equal_levels(n), seed=self.seed,
                                  batch_size=self.config.batch_size, workers=self.config.workers,
                                  intervals=((lo, hi),))
        state = runner.run(samples)
        frequency = state.interval_probability(0)
        floor = certificate.probability_floor
        se = math.sqrt(max(floor * (1.0 - floor), 1.0 / samples) / samples)
        require(frequency >= floor - 4.0 * se,
                f"n={n}: frequency {frequency:.6f} in [{lo:.6g}, {hi:.6g}] below floor {floor:.6f}")
        return (f"n_min upper {upper.n_min}, lower {lower.n_min}; at n={n} "
                f"P([{lo:.6g}, {hi:.6g}]) = {frequency:.6f} >= {floor:.6f}")

    # identities and special functions

    def _check_factor_identity(self) -> str:
        gen = SeededStream(self.seed, 20_000).generator()
        worst = 0.0
        for _ in range(100):
            weights = random_bounded_weights(gen, int(gen.integers(2, 65)))
            s = float(gen.uniform(-0.45, 1.0))
            if abs(s) < 1e-3:
                s = 0.5
            k = float(gen.uniform(0.5, 3.0))
            product = factor_decomposition(weights, s, k).threshold
            direct = math.exp(log_threshold(weights.levels, s, k))
            error = abs(product - direct) / direct
            worst = max(worst, error)
            require(error <= 1e-9, f"n={weights.n} s={s:.4g} k={k:.4g}: {product!r} vs {direct!r}")
        return f"100 decompositions, worst relative error {worst:.2e}"

    def _check_product_power_minimum(self) -> str:
        best_value, best_point = math.inf, None
        for i in range(61):
            for j in range(61 - i):
                t1, t2 = i / 20.0, j / 20.0
                t = (t1, t2, 3.0 - t1 - t2)
                value = product_power_min(t)
                if value < best_value:
                    best_value, best_point = value, t
        require(abs(best_value - 1.0) <= 1e-9, f"grid minimum {best_value!r} != 1")
        require(max(abs(x - 1.0) for x in best_point) <= 0.05 + 1e-12, f"minimiser {best_point} is not (1, 1, 1)")
        return f"minimum {best_value:.12g} at {best_point}"

    def _check_special_functions(self) -> str:
        require(abs(math.exp(2.0 * log_gamma(0.5)) - math.pi) <= 1e-12 * math.pi, "Gamma(1/2)^2 != pi")
        require(abs(digamma(1.0) + EULER_GAMMA) <= 1e-10, "psi(1) != -gamma")
        require(abs(digamma(0.5) + EULER_GAMMA + 2.0 * math.log(2.0)) <= 1e-10, "psi(1/2) != -gamma - 2 ln 2")
        for z in (10.0, 100.0, 1000.0):
            scaled = abs(stirling_remainder(z)) * z * z
            require(scaled <= 0.01, f"stirling remainder at z={z} scaled by z^2 is {scaled!r}")
        return "log_gamma, digamma and the Stirling remainder within tolerance"

    def _check_determinism(self) -> str:
        n, samples = 64, min(max(self.samples, 1000), 50_000)

        def run(workers: int) -> str:
            runner = MonteCarloRunner(sphere=WEIGHTED, n=n, weights=equal_levels(n), seed=self.seed,
                                      batch_size=1000, workers=workers)
            return json.dumps(runner.run(samples).to_dict(), sort_keys=True)

        first, second, threaded = run(1), run(1), run(2)
        require(first == second, "two identical runs differ")
        require(first == threaded, "threaded run differs from the sequential one")

        values = SeededStream(self.seed, 30_000).generator().random(samples)
        single = EstimatorState().update(values)
        merged = EstimatorState()
        for chunk in np.array_split(values, 7):
            merged = merged.merge(EstimatorState().update(chunk))
        require(abs(merged.mean - single.mean) <= 1e-12 * abs(single.mean), "merged mean differs")
        require(abs(merged.sd - single.sd) <= 1e-12 * single.sd, "merged sd differs")
        require(np.array_equal(merged.histogram, single.histogram), "merged histogram differs")
        return "identical reruns; merged-batch statistics match a single stream"
