import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import expm

from glauber1d.dynamics import evolve_batch
from glauber1d.errors import InvalidParameterError
from glauber1d.model import InitialConditionKind as K
from glauber1d.model import ModelParams, make_initial, theta_of_beta
from glauber1d.semigroup import (
    SpectralVector,
    autocorrelation_l2_prediction,
    conditional_magnetization,
    from_spectral,
    mixing_constant,
    predicted_mixing_constant,
    semigroup_apply,
    spectral_rates,
    to_spectral,
    trig_basis,
    walk_eigenvalues,
)


def generator(n):
    g = -np.eye(n)
    for i in range(n):
        g[i, (i + 1) % n] += 0.5
        g[i, (i - 1) % n] += 0.5
    return g


vectors = st.integers(3, 40).flatmap(
    lambda n: arrays(np.float64, n, elements=st.floats(-10, 10, allow_nan=False, allow_infinity=False))
)


def test_eigenvalue_examples():
    ev = walk_eigenvalues(12)
    assert ev[0] == 0.0
    assert ev[6] == 2.0
    assert ev[3] == pytest.approx(1.0, abs=1e-15)
    assert walk_eigenvalues(7).max() < 2.0
    assert np.all((ev >= 0) & (ev <= 2))
    with pytest.raises(InvalidParameterError):
        walk_eigenvalues(2)


@pytest.mark.parametrize("n", [3, 4, 7, 8, 12, 31])
def test_eigenvalues_match_generator(n):
    dense = np.sort(-np.linalg.eigvalsh(generator(n)))
    assert np.allclose(np.sort(walk_eigenvalues(n)), dense, atol=1e-12)


@pytest.mark.parametrize("n", [3, 4, 7, 8, 12, 31])
def test_basis_orthonormal_eigenvectors(n):
    B = trig_basis(n)
    assert np.allclose(B @ B.T, np.eye(n), atol=1e-12)
    assert np.allclose(B @ generator(n), -spectral_rates(n)[:, None] * B, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(vectors)
def test_transform_round_trip_and_parseval(x):
    v = to_spectral(x)
    assert np.allclose(from_spectral(v), x, atol=1e-10)
    assert np.allclose(v.coefficients, trig_basis(len(x)) @ x, atol=1e-9)
    assert math.isclose(np.dot(v.coefficients, v.coefficients), np.dot(x, x), rel_tol=1e-10, abs_tol=1e-10)


@pytest.mark.parametrize("n", [8, 64, 4096])
@pytest.mark.parametrize("t", [0.0, 0.3, 1.0, 2.5])
def test_alternating_eigenvectors(n, t):
    alt = make_initial(K.ALT, n).astype(float)
    blt = make_initial(K.BLT, n).astype(float)
    assert np.allclose(semigroup_apply(alt, t, n), math.exp(-2 * t) * alt, atol=1e-10)
    assert np.allclose(semigroup_apply(blt, t, n), math.exp(-t) * blt, atol=1e-10)


def test_constant_preserved():
    one = np.ones(10)
    for t in (0.0, 1.0, 100.0):
        assert np.allclose(semigroup_apply(one, t), one, atol=1e-12)


def test_negative_time_rejected():
    with pytest.raises(InvalidParameterError):
        semigroup_apply(np.ones(4), -1.0)
    with pytest.raises(InvalidParameterError):
        semigroup_apply(np.ones(4), 1.0, n=6)


@pytest.mark.parametrize("n", [5, 8, 13])
def test_matches_matrix_exponential(rng, n):
    x = rng.normal(size=n)
    for t in (0.1, 1.0, 4.0):
        assert np.allclose(semigroup_apply(x, t), expm(t * generator(n)) @ x, atol=1e-10)


@settings(max_examples=150, deadline=None)
@given(vectors, st.floats(0, 5), st.floats(0, 5))
def test_semigroup_property(x, s, t):
    lhs = semigroup_apply(x, s + t)
    rhs = semigroup_apply(semigroup_apply(x, s), t)
    assert np.allclose(lhs, rhs, atol=1e-9)


@settings(max_examples=150, deadline=None)
@given(vectors, st.floats(0, 10))
def test_mass_conservation(x, t):
    assert math.isclose(semigroup_apply(x, t).mean(), x.mean(), abs_tol=1e-9)


@settings(max_examples=150, deadline=None)
@given(vectors, st.floats(0, 5), st.floats(0, 5))
def test_contraction(x, s, ds):
    a = np.linalg.norm(semigroup_apply(x, s))
    b = np.linalg.norm(semigroup_apply(x, s + ds))
    assert b <= a + 1e-9


@settings(max_examples=150, deadline=None)
@given(vectors, st.floats(0, 5))
def test_spectral_lower_bound(x, t):
    y = semigroup_apply(x, t)
    assert np.dot(y, y) >= math.exp(-4 * t) * np.dot(x, x) - 1e-9


def test_spectral_vector_length():
    v = to_spectral(np.arange(6.0))
    assert isinstance(v, SpectralVector) and v.n == 6
    assert np.array_equal(v.rates, spectral_rates(6))


@pytest.mark.parametrize("t", [0.0, 0.5, 2.0])
def test_conditional_magnetization_examples(t):
    p = ModelParams(12, 0.3)
    assert np.allclose(conditional_magnetization(make_initial(K.PLUS, 12), t, p), math.exp(-p.theta * t), atol=1e-12)
    alt = make_initial(K.ALT, 12)
    assert np.allclose(conditional_magnetization(alt, t, p), math.exp(-(2 - p.theta) * t) * alt, atol=1e-12)


def test_conditional_magnetization_time_zero(rng):
    p = ModelParams(10, 0.4)
    x0 = 2 * rng.integers(0, 2, size=10) - 1
    assert np.allclose(conditional_magnetization(x0, 0.0, p), x0, atol=1e-12)


def test_conditional_magnetization_mc(rng):
    p = ModelParams(12, 0.3)
    x0 = np.array([1, 1, -1, 1, -1, -1, -1, 1, 1, 1, -1, 1])
    x = evolve_batch(x0, 1.0, p, rng, replicas=1_000_000)
    mean = x.mean(axis=0)
    se = x.std(axis=0) / math.sqrt(len(x))
    assert np.all(np.abs(mean - conditional_magnetization(x0, 1.0, p)) < 3 * se)


@pytest.mark.parametrize("n,beta,t,kind", [(8, 0.1, 0.5, K.BLT), (16, 0.6, 1.5, K.PLUS), (10, 0.25, 0.8, K.ALT)])
def test_conditional_magnetization_mc_grid(rng, n, beta, t, kind):
    p = ModelParams(n, beta)
    x0 = make_initial(kind, n)
    x = evolve_batch(x0, t, p, rng, replicas=200_000)
    mean = x.mean(axis=0)
    se = x.std(axis=0) / math.sqrt(len(x))
    assert np.all(np.abs(mean - conditional_magnetization(x0, t, p)) < 3 * se + 1e-12)


@pytest.mark.parametrize("t", [0.0, 0.4, 1.3])
def test_autocorrelation_prediction(t):
    p = ModelParams(16, 0.35)
    assert autocorrelation_l2_prediction(make_initial(K.ALT, 16), t, p) == pytest.approx(
        16 * math.exp(-(4 - 2 * p.theta) * t), rel=1e-12
    )
    assert autocorrelation_l2_prediction(make_initial(K.BLT, 16), t, p) == pytest.approx(
        16 * math.exp(-2 * t), rel=1e-12
    )


def test_mixing_constant_exact_values():
    assert mixing_constant(K.ALT, Fraction(2, 3)) == Fraction(3, 8)
    assert mixing_constant(K.ALT, Fraction(2, 3)) == 1 / (4 * Fraction(2, 3))
    assert mixing_constant(K.ALT, Fraction(1)) == Fraction(1, 2)
    assert mixing_constant(K.BLT, Fraction(1, 2)) == Fraction(1, 2)
    assert mixing_constant(K.PLUS, Fraction(1, 2)) == 1
    assert mixing_constant(K.ANNEALED, Fraction(1, 2)) == Fraction(1, 2)
    assert mixing_constant("alt", Fraction(1, 5)) == Fraction(5, 4)
    with pytest.raises(InvalidParameterError):
        mixing_constant(K.ALT, Fraction(0))


def test_predicted_constant_at_crossings():
    # theta = 2/3 and 1/2 are the crossing points of the two branches
    p = ModelParams(12, 0.5 * math.atanh(1 / 3))
    assert p.theta == pytest.approx(2 / 3, abs=1e-14)
    assert predicted_mixing_constant(K.ALT, p) == pytest.approx(3 / 8, abs=1e-14)
    q = ModelParams(12, 0.5 * math.atanh(0.5))
    assert predicted_mixing_constant(K.BLT, q) == pytest.approx(0.5, abs=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 3.0))
def test_predicted_constant_ordering(beta):
    theta = theta_of_beta(beta)
    if theta <= 0:
        return
    alt, blt, plus, ann = (mixing_constant(k, theta) for k in (K.ALT, K.BLT, K.PLUS, K.ANNEALED))
    assert ann <= alt <= blt <= plus + 1e-15
