"""Tests for divergences module."""

import math

import numpy as np
import pytest
from scipy.linalg import logm

from pystein.divergences import (
    log_derivative,
    petz_renyi,
    relative_entropy,
    relative_entropy_gradient,
    sandwiched_renyi,
    support_violated,
    to_bits,
)
from pystein.errors import ValidationError
from pystein.qcore import DensityOperator, HermitianOperator, random_density


@pytest.fixture
def pair():
    rng = np.random.default_rng(11)
    return random_density(3, rng), random_density(3, rng)


def test_commuting_relative_entropy():
    p = np.array([0.2, 0.8])
    q = np.array([0.5, 0.5])
    rho = DensityOperator(np.diag(p))
    sigma = DensityOperator(np.diag(q))
    assert relative_entropy(rho, sigma) == pytest.approx(float(np.sum(p * np.log(p / q))))
    assert relative_entropy(rho, rho) == pytest.approx(0.0, abs=1e-12)


def test_commuting_renyi_agree():
    p = np.array([0.1, 0.3, 0.6])
    q = np.array([0.3, 0.3, 0.4])
    rho = DensityOperator(np.diag(p))
    sigma = DensityOperator(np.diag(q))
    for alpha in (0.5, 1.5, 2.0):
        expected = math.log(float(np.sum(p**alpha * q ** (1 - alpha)))) / (alpha - 1)
        assert petz_renyi(rho, sigma, alpha) == pytest.approx(expected)
        assert sandwiched_renyi(rho, sigma, alpha) == pytest.approx(expected)


def test_support_violation_is_infinite():
    rho = DensityOperator.from_vector([1.0, 0.0])
    sigma = DensityOperator.from_vector([0.0, 1.0])
    assert support_violated(rho, sigma)
    assert relative_entropy(rho, sigma) == math.inf
    assert sandwiched_renyi(rho, sigma, 2.0) == math.inf
    assert petz_renyi(rho, sigma, 1.5) == math.inf
    assert not support_violated(sigma, DensityOperator.maximally_mixed(2))


def test_pure_state_in_support_is_finite():
    rho = DensityOperator.from_vector([1.0, 0.0])
    sigma = DensityOperator.maximally_mixed(2)
    assert relative_entropy(rho, sigma) == pytest.approx(math.log(2.0))


def test_alpha_ordering(pair):
    rho, sigma = pair
    d = relative_entropy(rho, sigma)
    for alpha in (1.5, 2.0):
        sandwiched = sandwiched_renyi(rho, sigma, alpha)
        assert d <= sandwiched + 1e-10
        assert sandwiched <= petz_renyi(rho, sigma, alpha) + 1e-10
    assert sandwiched_renyi(rho, sigma, 1.5) <= sandwiched_renyi(rho, sigma, 2.0) + 1e-10


def test_renyi_approaches_relative_entropy(pair):
    rho, sigma = pair
    d = relative_entropy(rho, sigma)
    assert sandwiched_renyi(rho, sigma, 1.0001) == pytest.approx(d, rel=1e-2)
    assert petz_renyi(rho, sigma, 1.0001) == pytest.approx(d, rel=1e-2)


def test_invalid_alpha(pair):
    rho, sigma = pair
    with pytest.raises(ValidationError):
        sandwiched_renyi(rho, sigma, 1.0)
    with pytest.raises(ValidationError):
        petz_renyi(rho, sigma, -0.5)


def test_shape_mismatch():
    with pytest.raises(ValidationError):
        relative_entropy(DensityOperator.maximally_mixed(2), DensityOperator.maximally_mixed(3))


def test_to_bits():
    assert to_bits(math.log(2.0)) == pytest.approx(1.0)


def test_log_derivative_matches_finite_difference(pair):
    _, sigma = pair
    rng = np.random.default_rng(12)
    h = rng.standard_normal((3, 3))
    h = (h + h.T) / 2
    t = 1e-5
    numeric = (logm(sigma.matrix + t * h) - logm(sigma.matrix - t * h)) / (2 * t)
    assert np.allclose(log_derivative(sigma.matrix, h), numeric, atol=1e-5)


def test_gradient_matches_directional_derivative(pair):
    rho, sigma = pair
    rng = np.random.default_rng(13)
    other = random_density(3, rng)
    direction = other.matrix - sigma.matrix
    t = 1e-6

    def value(s):
        return relative_entropy(rho, HermitianOperator(sigma.matrix + s * direction))

    numeric = (value(t) - value(-t)) / (2 * t)
    grad = relative_entropy_gradient(rho, sigma.matrix)
    assert float(np.real(np.vdot(grad, direction))) == pytest.approx(numeric, rel=1e-4)
