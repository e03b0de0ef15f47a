"""
Tests for the Chebyshev threshold, its factor decomposition and the bound optimizer.
"""

import itertools
import math

import numpy as np
import pytest

from core.bounds import (LOWER, UPPER, BoundOptimizer, BoundQuery, certified_interval, chebyshev_level,
                         delta_for, factor_decomposition, gamma_ratio_bound, log_threshold,
                         optimize_lower, optimize_upper, product_bracket, product_power_min)
from core.errors import DomainError, OptimizationFailure
from core.moments import exact_moment_weighted
from core.sampling import SeededStream
from core.special_fns import CONSTANTS, gamma_power_delta
from core.weights import (WeightFamily, WeightKind, WeightSequence, equal_levels, equal_weights, two_level_levels,
                          two_level_weights)


def random_weights(gen, n):
    raw = gen.uniform(0.5, 1.5, size=n)
    return WeightSequence(a=raw * (n / raw.sum()))


def test_chebyshev_level_definition():
    w = equal_weights(10)
    expected = math.log(2.0) + 1.5 * math.log(10) + exact_moment_weighted(w, 0.3).log_moment
    assert chebyshev_level(w, 0.3, 1.5) == pytest.approx(expected, rel=1e-14)


def test_factor_identity_on_random_inputs():
    gen = SeededStream(1, 0).generator()
    for _ in range(100):
        w = random_weights(gen, int(gen.integers(2, 40)))
        s = float(gen.uniform(0.05, 1.0)) * (1 if gen.random() < 0.7 else -0.4)
        k = float(gen.uniform(0.5, 3.0))
        decomposition = factor_decomposition(w, s, k)
        direct = math.exp(log_threshold(w.levels, s, k))
        assert decomposition.threshold == pytest.approx(direct, rel=1e-9)


def test_factor_decomposition_rejects_zero_exponent():
    with pytest.raises(DomainError):
        factor_decomposition(equal_weights(4), 0.0, 1.0)


def test_gamma_ratio_bound_limits():
    assert gamma_ratio_bound(1.0) == pytest.approx(math.e / 2.0)
    assert gamma_ratio_bound(1e-8) == pytest.approx(1.0, abs=1e-7)
    with pytest.raises(DomainError):
        gamma_ratio_bound(0.0)


def test_gamma_ratio_factor_below_its_bound():
    decomposition = factor_decomposition(equal_levels(10 ** 4), 0.05, 1.0)
    assert decomposition.gamma_ratio_bound == pytest.approx(1.0247, abs=5e-4)
    assert decomposition.gamma_ratio_factor <= decomposition.gamma_ratio_bound


def test_gamma_ratio_factor_limit():
    decomposition = factor_decomposition(equal_levels(2 ** 20), 0.5, 1.0)
    assert decomposition.gamma_ratio_factor == pytest.approx(math.e / 1.5 ** 3, rel=1e-4)


def test_prefactor_tends_to_one():
    small = factor_decomposition(equal_levels(10 ** 4), 0.05, 1.0).prefactor
    large = factor_decomposition(equal_levels(10 ** 7), 0.05, 1.0).prefactor
    assert 1.0 < large < small
    assert large < 1.0001


def test_delta_for():
    delta = delta_for(0.3)
    assert (1.0 + delta) ** 3 == pytest.approx(1.3, rel=1e-14)


def test_product_bracket_near_euler_constant():
    w = two_level_levels(1000, 4.0)
    for s in (1e-4, -1e-4):
        assert product_bracket(w, s) == pytest.approx(CONSTANTS.exp_neg_gamma, rel=0.01)
    assert product_bracket(w, 0.0) == CONSTANTS.exp_neg_gamma


def test_product_bracket_stays_within_gamma_power_delta(stream):
    gen = stream.generator()
    epsilon = 0.1
    for _ in range(10):
        w = random_weights(gen, int(gen.integers(2, 200)))
        delta = gamma_power_delta(max(1.0, w.a_max), epsilon)
        for s in gen.uniform(-delta, delta, size=10):
            if s == 0.0:
                continue
            bracket = product_bracket(w, float(s))
            assert (1.0 - epsilon) * CONSTANTS.exp_neg_gamma < bracket < (1.0 + epsilon) * CONSTANTS.exp_neg_gamma


def test_product_power_min_grid():
    grid = [i / 20.0 for i in range(61)]
    best = min(
        (product_power_min((t1, t2, 3.0 - t1 - t2)), (t1, t2))
        for t1, t2 in itertools.product(grid, grid) if t1 + t2 <= 3.0
    )
    assert abs(best[0] - 1.0) <= 1e-9
    assert best[1] == (1.0, 1.0)


def test_product_power_min_zero_convention():
    assert product_power_min([0.0, 2.0]) == pytest.approx(4.0)
    with pytest.raises(DomainError):
        product_power_min([0.5, 0.5])


def test_bound_query_validation():
    with pytest.raises(DomainError):
        BoundQuery(WeightFamily(WeightKind.EQUAL), k=0.0, epsilon=0.3)
    with pytest.raises(DomainError):
        BoundQuery(WeightFamily(WeightKind.EQUAL), k=1.0, epsilon=1.0)


def test_bound_query_recovers_family_from_sequence():
    query = BoundQuery(WeightSequence(a=two_level_levels(10, 4.0).materialize(), family="two-level:4"), 1.0, 0.3)
    assert query.family.kind is WeightKind.TWO_LEVEL


class TestEqualWeightsCertificate:
    """Equal weights, k=1, eps=0.3: both tails certify."""

    @pytest.fixture(scope="class")
    def optimizer(self):
        return BoundOptimizer(BoundQuery(WeightFamily(WeightKind.EQUAL), k=1.0, epsilon=0.3))

    def test_upper_tail(self, optimizer):
        tail = optimizer.optimize_upper()
        assert tail.side == UPPER
        assert tail.s > 0
        assert tail.threshold < (1.3) * CONSTANTS.exp_neg_gamma
        s, n_min, threshold = tail
        assert n_min in optimizer.n_grid
        # holds for every larger grid dimension
        for n in optimizer.n_grid:
            if n >= n_min:
                assert math.exp(optimizer.log_threshold(s, n)) < tail.target

    def test_lower_tail(self, optimizer):
        tail = optimizer.optimize_lower()
        assert tail.side == LOWER
        assert -1.0 < tail.s < 0
        assert tail.threshold > 0.7 * CONSTANTS.exp_neg_gamma

    def test_certified_interval(self, optimizer):
        certificate = optimizer.certified_interval()
        assert certificate.n == certificate.n_min
        assert certificate.lower_threshold < CONSTANTS.exp_neg_gamma < certificate.upper_threshold
        assert certificate.theorem_matching
        assert certificate.probability_floor == pytest.approx(1.0 - 1.0 / certificate.n)
        payload = certificate.to_dict()
        assert payload["family"] == "equal"

    def test_certified_interval_at_small_n_is_valid_but_wide(self, optimizer):
        certificate = optimizer.certified_interval(256)
        assert certificate.lower_threshold < certificate.upper_threshold
        assert certificate.n == 256


def test_module_level_wrappers():
    query = BoundQuery(WeightFamily(WeightKind.TWO_LEVEL, 2.0), k=1.0, epsilon=0.5)
    upper, lower = optimize_upper(query), optimize_lower(query)
    assert upper.s > 0 > lower.s
    certificate = certified_interval(WeightFamily(WeightKind.TWO_LEVEL, 2.0), None, 1.0, 0.5)
    assert certificate.n_min == max(upper.n_min, lower.n_min)


def test_diverging_lower_tail_fails():
    optimizer = BoundOptimizer(BoundQuery(WeightFamily(WeightKind.DIVERGING, "sqrt"), k=1.0, epsilon=0.3),
                               n_grid=[2 ** e for e in range(4, 13)])
    with pytest.raises(OptimizationFailure) as info:
        optimizer.optimize_lower()
    assert info.value.to_dict()["status"] == "failed"


class TestTwoLevelHeightFour:
    """Two-level weights with M=4, k=1, eps=0.3."""

    family = WeightFamily(WeightKind.TWO_LEVEL, 4.0)
    centre = CONSTANTS.exp_neg_gamma / 4.0 ** 0.6

    def test_lower_threshold_approaches_the_two_level_centre(self):
        tail = optimize_lower(BoundQuery(self.family, k=1.0, epsilon=0.3))
        assert tail.threshold >= tail.target
        assert tail.target == pytest.approx(0.7 * self.centre, rel=0.06)
        assert tail.threshold > 0.7 * CONSTANTS.exp_neg_gamma / 4.0
        assert tail.threshold < 1.05 * self.centre

    def test_interval_at_large_n_contains_the_centre(self):
        certificate = certified_interval(self.family, 100_000, 1.0, 0.3)
        assert certificate.n == 100_000
        assert certificate.lower_threshold < 0.244389 < certificate.upper_threshold
        assert certificate.predicted_center == pytest.approx(0.244389, abs=5e-5)

    def test_materialized_sequence_keeps_its_dimension(self):
        w = two_level_weights(100, 4.0)
        assert BoundQuery(w, 1.0, 0.3).dimension == 100
        assert BoundQuery(self.family, 1.0, 0.3).dimension is None
        certificate = certified_interval(w, None, 1.0, 0.3)
        assert certificate.n == 100
        assert certificate.probability_floor == pytest.approx(0.99)
