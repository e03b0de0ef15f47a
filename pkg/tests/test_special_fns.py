"""
Tests for the Gamma-family special functions and derived constants.
"""

import math

import numpy as np
import pytest

from core.errors import DomainError
from core.special_fns import (CONSTANTS, EULER_GAMMA, GammaEval, digamma, gamma_power,
                              gamma_power_delta, log_gamma, log_gamma_power, stirling_remainder)


def test_log_gamma_known_values():
    assert abs(math.exp(2.0 * log_gamma(0.5)) - math.pi) <= 1e-12 * math.pi
    assert log_gamma(1.0) == pytest.approx(0.0, abs=1e-15)
    assert log_gamma(2.0) == pytest.approx(0.0, abs=1e-15)
    assert log_gamma(10.0) == pytest.approx(math.log(362880.0), rel=1e-14)


def test_log_gamma_large_argument_is_finite():
    value = log_gamma(1e300)
    assert math.isfinite(value)
    assert value > 0


def test_log_gamma_accepts_arrays():
    values = log_gamma(np.array([1.0, 2.0, 3.0, 4.0]))
    assert np.allclose(values, np.log([1.0, 1.0, 2.0, 6.0]), atol=1e-14)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_log_gamma_rejects_non_positive(bad):
    with pytest.raises(DomainError):
        log_gamma(bad)


def test_digamma_known_values():
    assert abs(digamma(1.0) + EULER_GAMMA) <= 1e-10
    assert abs(digamma(0.5) + EULER_GAMMA + 2.0 * math.log(2.0)) <= 1e-10


def test_digamma_rejects_zero():
    with pytest.raises(DomainError):
        digamma(0.0)


@pytest.mark.parametrize("z", [10.0, 100.0, 1000.0])
def test_stirling_remainder_is_second_order(z):
    assert abs(stirling_remainder(z)) * z * z <= 0.01


def test_stirling_remainder_at_one():
    # Γ(1) = 1 against e^{-1}·√(2π)·(13/12)
    expected = 1.0 / (math.exp(-1.0) * math.sqrt(2.0 * math.pi) * (13.0 / 12.0)) - 1.0
    assert stirling_remainder(1.0) == pytest.approx(expected, rel=1e-10)
    assert abs(stirling_remainder(1.0)) < 0.002


def test_stirling_remainder_rejects_small_z():
    with pytest.raises(DomainError):
        stirling_remainder(0.5)


def test_gamma_eval_bundles_both_functions():
    evaluation = GammaEval.at(0.5)
    assert evaluation.log_gamma == pytest.approx(0.5 * math.log(math.pi), rel=1e-14)
    assert evaluation.digamma == pytest.approx(-EULER_GAMMA - 2.0 * math.log(2.0), rel=1e-12)


def test_constants():
    assert CONSTANTS.exp_neg_gamma == pytest.approx(0.561459, abs=5e-7)
    assert CONSTANTS.euclidean_center == pytest.approx(0.529864, abs=5e-7)


def test_gamma_power_limit_at_zero():
    assert gamma_power(0.0, 1.0) == pytest.approx(math.exp(-EULER_GAMMA), rel=1e-15)
    assert gamma_power(1e-9, 1.0) == pytest.approx(math.exp(-EULER_GAMMA), rel=1e-8)
    assert log_gamma_power(0.0, 2.0) == pytest.approx(-2.0 * EULER_GAMMA)


def test_gamma_power_rejects_non_positive_argument():
    with pytest.raises(DomainError):
        gamma_power(-1.0, 2.0)


@pytest.mark.parametrize("M,eps", [(1.0, 0.1), (4.0, 0.05), (16.0, 0.3)])
def test_gamma_power_delta_brackets(M, eps):
    delta = gamma_power_delta(M, eps)
    assert delta > 0
    t = np.linspace(1e-3, M, 200)
    for s in (delta * 0.999, -delta * 0.999, delta / 10.0, -delta / 10.0):
        ratio = gamma_power(s, t) / np.exp(-EULER_GAMMA * t)
        assert np.all(ratio > 1.0 - eps)
        assert np.all(ratio < 1.0 + eps)


def test_log_gamma_recurrence_on_random_arguments(stream):
    z = stream.generator().uniform(0.5, 50.0, size=1000)
    upper = log_gamma(z + 1.0)
    gap = np.abs(upper - log_gamma(z) - np.log(z))
    assert np.all(gap <= 1e-12 * np.maximum(1.0, np.abs(upper)))


def test_digamma_is_the_derivative_of_log_gamma():
    h = 1e-5
    z = np.linspace(0.5, 100.0, 400)
    central = (log_gamma(z + h) - log_gamma(z - h)) / (2.0 * h)
    assert np.max(np.abs(digamma(z) - central)) <= 1e-6
