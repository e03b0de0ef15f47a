"""
Tests for the closed-form moments on the weighted l1 sphere and the Euclidean sphere.
"""

import math

import numpy as np
import pytest
from scipy import integrate

from core.errors import DomainError
from core.moments import (MomentQuery, exact_moment_euclidean, exact_moment_weighted, euclidean_center,
                          sphere_area_weighted)
from core.weights import WeightSequence, equal_levels, equal_weights, two_level_levels, two_level_weights


def test_equal_weights_n2_is_one_sixth():
    result = exact_moment_weighted(equal_weights(2), 1.0)
    assert abs(result.moment - 1.0 / 6.0) <= 1e-12
    quadrature, _ = integrate.quad(lambda x: x * (1.0 - x), 0.0, 1.0)
    assert abs(result.moment - quadrature) <= 1e-10


def test_equal_weights_n2_normalized_root():
    result = exact_moment_weighted(equal_weights(2), 1.0)
    assert result.normalized_root == pytest.approx(2.0 * math.sqrt(1.0 / 6.0), rel=1e-12)


def test_unequal_weights_n2_by_quadrature():
    w = WeightSequence(a=[1.5, 0.5])
    s = 0.7
    # uniform on the segment a_1 x_1 + a_2 x_2 = 1 in the positive quadrant
    integrand = lambda u: (u / 1.5) ** (1.5 * s) * ((1.0 - u) / 0.5) ** (0.5 * s)
    quadrature, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13)
    assert exact_moment_weighted(w, s).moment == pytest.approx(quadrature, rel=1e-9)


def test_zero_exponent_gives_one():
    result = exact_moment_weighted(equal_weights(10), 0.0)
    assert result.moment == 1.0
    assert result.normalized_root is None


def test_moment_domain_is_enforced():
    w = two_level_levels(10, 4.0)
    with pytest.raises(DomainError):
        exact_moment_weighted(w, -0.25)
    assert exact_moment_weighted(w, -0.24).moment > 0


def test_invalid_weights_are_rejected():
    with pytest.raises(DomainError):
        exact_moment_weighted(WeightSequence(a=[1.0, -1.0]), 1.0)


def test_huge_dimension_moment_is_finite_in_log_space():
    result = exact_moment_weighted(equal_levels(2 ** 24), 1.0)
    assert math.isfinite(result.log_moment)
    assert result.moment is None
    # n (Γ(n)/Γ(2n))^{1/n} tends to e/4
    assert result.normalized_root == pytest.approx(math.e / 4.0, rel=1e-6)


def test_equal_normalized_root_approaches_centre():
    root = exact_moment_weighted(equal_levels(10 ** 6), 0.001).normalized_root
    assert root == pytest.approx(0.5615, rel=0.01)


def test_euclidean_n2_is_one_eighth():
    result = exact_moment_euclidean(2, 2.0)
    assert abs(result.moment - 0.125) <= 1e-12
    quadrature, _ = integrate.quad(lambda t: (math.cos(t) * math.sin(t)) ** 2 / (2.0 * math.pi), 0.0, 2.0 * math.pi)
    assert abs(result.moment - quadrature) <= 1e-10


def test_euclidean_n4_s2():
    assert exact_moment_euclidean(4, 2.0).moment == pytest.approx(1.0 / 1920.0, rel=1e-12)


def test_euclidean_zero_exponent():
    result = exact_moment_euclidean(5, 0.0)
    assert result.moment == 1.0
    assert result.sphere == "euclidean"


@pytest.mark.parametrize("s", [-1.0, -2.0, math.inf])
def test_euclidean_rejects_bad_exponent(s):
    with pytest.raises(DomainError):
        exact_moment_euclidean(4, s)


def test_euclidean_centre_constant():
    assert euclidean_center() == pytest.approx(0.529864, abs=5e-7)


def test_sphere_area_equal_n2():
    # the l1 circle |x|+|y|=1 has perimeter 4·√2
    assert math.exp(sphere_area_weighted(equal_weights(2))) == pytest.approx(4.0 * math.sqrt(2.0), rel=1e-12)


def test_moment_query_dispatch():
    assert MomentQuery(s=1.0, weights=equal_weights(2)).evaluate().moment == pytest.approx(1.0 / 6.0)
    assert MomentQuery(s=2.0, n=2).evaluate().moment == pytest.approx(0.125)
    with pytest.raises(DomainError):
        MomentQuery(s=1.0)


def test_moment_result_to_dict():
    payload = exact_moment_weighted(equal_weights(2), 1.0).to_dict()
    assert payload["sphere"] == "weighted"
    assert set(payload) == {"sphere", "n", "s", "log_moment", "moment", "normalized_root"}
    assert np.isclose(payload["moment"], 1.0 / 6.0)


def test_sphere_area_equal_n3_is_octahedron():
    # eight equilateral faces of area √3/2
    assert math.exp(sphere_area_weighted(equal_weights(3))) == pytest.approx(4.0 * math.sqrt(3.0), rel=1e-12)


@pytest.mark.parametrize("s", [-0.2, 0.5, 1.7])
def test_moment_is_invariant_under_shuffling(stream, s):
    w = two_level_weights(10, 3.0)
    gen = stream.generator()
    expected = exact_moment_weighted(w, s).log_moment
    for _ in range(5):
        shuffled = WeightSequence(a=gen.permutation(w.a))
        assert exact_moment_weighted(shuffled, s).log_moment == expected


@pytest.mark.parametrize("weights", [two_level_levels(10, 4.0), equal_levels(50), two_level_levels(1000, 2.5)])
def test_log_moment_is_convex_in_s(weights):
    grid = np.linspace(-0.2, 2.0, 45)
    values = np.array([exact_moment_weighted(weights, float(s)).log_moment for s in grid])
    second = values[2:] - 2.0 * values[1:-1] + values[:-2]
    assert np.all(second >= -1e-9)
