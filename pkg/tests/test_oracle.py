import math
from math import comb

import numpy as np
import pytest
from scipy.linalg import expm

from glauber1d.errors import CapacityError, ComputationError, InvalidParameterError
from glauber1d.model import InitialConditionKind as K
from glauber1d.model import ModelParams, gibbs_log_weight, make_initial, partition_function
from glauber1d.oracle import (
    DistributionVector,
    annealed_distribution,
    config_index,
    evolve_distribution,
    exact_mixing_time,
    point_mass,
    read_distribution,
    site_marginals,
    spin_table,
    stationary_vector,
    total_variation,
    tv_to_stationary,
    uniformized_step,
    write_distribution,
)
from glauber1d.semigroup import conditional_magnetization


def dense_generator(n, beta):
    """Heat-bath generator built from Boltzmann weights, independent of the library kernel."""
    N = 1 << n
    Q = np.zeros((N, N))
    for a in range(N):
        s = [1 if (a >> i) & 1 else -1 for i in range(n)]
        for i in range(n):
            h = s[(i - 1) % n] + s[(i + 1) % n]
            b = a ^ (1 << i)
            flipped = -s[i]
            rate = math.exp(beta * flipped * h) / (math.exp(beta * h) + math.exp(-beta * h))
            Q[a, b] += rate
            Q[a, a] -= rate
    return Q


def test_spin_table_indexing():
    tab = spin_table(3)
    assert tab.shape == (8, 3)
    assert list(tab[0]) == [-1, -1, -1] and list(tab[5]) == [1, -1, 1]
    assert config_index([1, -1, 1]) == 5


def test_stationary_uniform_at_zero_beta():
    assert np.allclose(stationary_vector(ModelParams(6, 0.0)).probs, 1 / 64, atol=1e-15)


def test_stationary_matches_gibbs_weights():
    p = ModelParams(4, 0.3)
    pi = stationary_vector(p).probs
    logz = partition_function(p)
    for a, s in enumerate(spin_table(4)):
        assert abs(pi[a] - math.exp(gibbs_log_weight(s, p) - logz)) < 1e-12


@pytest.mark.parametrize("beta", [0.0, 0.3, 1.1])
def test_stationary_invariant_under_step(beta):
    p = ModelParams(8, beta)
    pi = stationary_vector(p).probs
    assert np.allclose(uniformized_step(pi, p), pi, atol=1e-10)


def test_stationary_capacity():
    with pytest.raises(CapacityError):
        stationary_vector(ModelParams(16, 0.2))
    with pytest.raises(CapacityError):
        evolve_distribution(make_initial(K.ALT, 16), 1.0, ModelParams(16, 0.2))
    assert stationary_vector(ModelParams(6, 0.2), n_max=6).n == 6


def test_row_stochastic(rng):
    p = ModelParams(8, 0.4)
    q = rng.random(256)
    q /= q.sum()
    out = uniformized_step(q, p)
    assert abs(out.sum() - 1) < 1e-12 and out.min() >= 0


def test_time_zero_point_mass():
    p = ModelParams(8, 0.3)
    x0 = make_initial(K.BLT, 8)
    d = evolve_distribution(x0, 0.0, p)
    assert d.probs[config_index(x0)] == 1.0 and d.probs.sum() == 1.0


@pytest.mark.parametrize("n,beta", [(4, 0.3), (6, 0.7)])
def test_matches_dense_expm(n, beta):
    p = ModelParams(n, beta)
    x0 = make_initial(K.ALT, n)
    Q = dense_generator(n, beta)
    for t in (0.2, 1.0, 3.0):
        dense = expm(t * Q)[config_index(x0)]
        assert np.allclose(evolve_distribution(x0, t, p).probs, dense, atol=1e-10)


def test_large_time_converges():
    p = ModelParams(10, 0.3)
    d = evolve_distribution(make_initial(K.PLUS, 10), 50 * math.log(10), p)
    assert total_variation(d, stationary_vector(p)) < 1e-8


def test_single_site_marginal_alt():
    p = ModelParams(10, 0.2)
    d = evolve_distribution(make_initial(K.ALT, 10), 1.0, p)
    assert abs(site_marginals(d)[0] - (0.5 + 0.5 * math.exp(-(2 - p.theta)))) < 1e-8


@pytest.mark.parametrize("kind", [K.ALT, K.BLT, K.PLUS])
@pytest.mark.parametrize("beta,t", [(0.1, 0.5), (0.4, 1.0), (0.9, 2.0)])
def test_marginals_match_killed_walk(kind, beta, t):
    p = ModelParams(8, beta)
    x0 = make_initial(kind, 8)
    d = evolve_distribution(x0, t, p)
    assert np.allclose(site_marginals(d), 0.5 * (1 + conditional_magnetization(x0, t, p)), atol=1e-8)


def test_marginals_random_start(rng):
    p = ModelParams(10, 0.35)
    x0 = 2 * rng.integers(0, 2, size=10) - 1
    d = evolve_distribution(x0, 0.7, p)
    assert np.allclose(site_marginals(d), 0.5 * (1 + conditional_magnetization(x0, 0.7, p)), atol=1e-8)


def test_annealed_start_marginals():
    p = ModelParams(8, 0.3)
    d = evolve_distribution(annealed_distribution(8), 1.0, p)
    assert np.allclose(site_marginals(d), 0.5, atol=1e-12)


def test_alt_symmetries():
    n = 10
    p = ModelParams(n, 0.25)
    probs = evolve_distribution(make_initial(K.ALT, n), 0.8, p).probs
    tab = spin_table(n)
    weights = 1 << np.arange(n)
    rot2 = ((np.roll(tab, 2, axis=1) > 0) @ weights).astype(int)
    flip_rot1 = ((-np.roll(tab, 1, axis=1) > 0) @ weights).astype(int)
    assert np.allclose(probs[rot2], probs, atol=1e-10)
    assert np.allclose(probs[flip_rot1], probs, atol=1e-10)


def test_total_variation_examples():
    n = 5
    u = annealed_distribution(n)
    pm = point_mass([1, -1, 1, 1, -1])
    assert total_variation(u, u) == 0.0
    assert total_variation(pm, u) == pytest.approx(1 - 2**-n, abs=1e-15)
    p = ModelParams(6, 0.4)
    x0 = make_initial(K.ALT, 6)
    pi = stationary_vector(p)
    assert total_variation(point_mass(x0), pi) == pytest.approx(1 - pi.probs[config_index(x0)], abs=1e-14)
    with pytest.raises(InvalidParameterError):
        total_variation(u, annealed_distribution(4))


def test_distribution_vector_validation():
    with pytest.raises(InvalidParameterError):
        DistributionVector(np.full(8, 0.2), 3)
    with pytest.raises(InvalidParameterError):
        DistributionVector(np.full(4, 0.25), 3)


@pytest.mark.parametrize("kind", [K.ALT, K.PLUS])
@pytest.mark.parametrize("beta", [0.05, 0.5, 1.2])
def test_tv_monotone(kind, beta):
    p = ModelParams(8, beta)
    tv = tv_to_stationary(make_initial(kind, 8), np.linspace(0, 6, 25), p)
    assert np.all(np.diff(tv) <= 1e-12)
    assert tv[0] <= 1.0


def test_tv_grid_matches_pointwise():
    p = ModelParams(8, 0.3)
    x0 = make_initial(K.BLT, 8)
    times = [0.0, 0.4, 1.1, 2.0]
    pi = stationary_vector(p)
    direct = [total_variation(evolve_distribution(x0, t, p), pi) for t in times]
    assert np.allclose(tv_to_stationary(x0, times, p), direct, atol=1e-11)


def test_beta_zero_product_form():
    # independent sites: each keeps its initial spin with probability a = (1 + e^{-t}) / 2
    n, t = 8, 1.0
    a, b = 0.5 * (1 + math.exp(-t)), 0.5 * (1 - math.exp(-t))
    analytic = 0.5 * sum(comb(n, k) * abs(a ** (n - k) * b**k - 2**-n) for k in range(n + 1))
    p = ModelParams(n, 0.0)
    for kind in (K.ALT, K.PLUS):
        got = tv_to_stationary(make_initial(kind, n), [t], p)[0]
        assert abs(got - analytic) < 1e-8


def test_mixing_time_zero_when_already_close():
    p = ModelParams(6, 0.3)
    x0 = make_initial(K.PLUS, 6)
    gap = 1 - stationary_vector(p).probs[config_index(x0)]
    assert exact_mixing_time(x0, min(gap + 1e-9, 0.999999), p) == 0.0


def test_mixing_time_brackets_threshold():
    p = ModelParams(8, 0.3)
    x0 = make_initial(K.ALT, 8)
    t = exact_mixing_time(x0, 0.25, p)
    before, after = tv_to_stationary(x0, [max(t - 1e-3, 0.0), t], p)
    assert after <= 0.25 < before


def test_mixing_time_ordering():
    p = ModelParams(12, 0.2)
    alt, blt, plus = (exact_mixing_time(make_initial(k, 12), 0.25, p) for k in (K.ALT, K.BLT, K.PLUS))
    assert alt < blt < plus


def test_mixing_time_errors():
    p = ModelParams(6, 0.3)
    with pytest.raises(InvalidParameterError):
        exact_mixing_time(make_initial(K.ALT, 6), 1.0, p)
    with pytest.raises(CapacityError):
        exact_mixing_time(make_initial(K.ALT, 6), 0.2, p, n_max=4)


def test_mixing_time_bracket_failure(monkeypatch):
    import glauber1d.oracle as oracle

    monkeypatch.setattr(oracle, "_evolve_probs", lambda probs, t, p, tol: probs.copy())
    with pytest.raises(ComputationError, match="bracket"):
        exact_mixing_time(make_initial(K.ALT, 6), 0.1, ModelParams(6, 0.3))


def test_mixing_time_detects_tv_increase(monkeypatch):
    import glauber1d.oracle as oracle

    flat = annealed_distribution(6).probs
    monkeypatch.setattr(oracle, "_evolve_probs", lambda probs, t, p, tol: point_mass(make_initial(K.PLUS, 6)).probs)
    with pytest.raises(ComputationError, match="increased"):
        exact_mixing_time(DistributionVector(flat, 6), 0.01, ModelParams(6, 0.3))


def test_binary_round_trip(tmp_path):
    p = ModelParams(6, 0.3)
    d = evolve_distribution(make_initial(K.ALT, 6), 0.5, p)
    path = tmp_path / "d.bin"
    write_distribution(path, d)
    raw = path.read_bytes()
    assert len(raw) == 8 + 8 * 64
    assert raw[:8] == (6).to_bytes(4, "little") + (1).to_bytes(4, "little")
    back = read_distribution(path)
    assert back.n == 6 and np.array_equal(back.probs, d.probs)


def test_binary_rejects_bad_version(tmp_path):
    path = tmp_path / "d.bin"
    path.write_bytes((2).to_bytes(4, "little") + (9).to_bytes(4, "little") + np.full(4, 0.25).tobytes())
    with pytest.raises(InvalidParameterError):
        read_distribution(path)
