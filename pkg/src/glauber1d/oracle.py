"""Exact laws of the heat-bath chain for small cycles.

Configurations are indexed by bitmask: bit ``i`` set means spin ``+1`` at
site ``i``. The generator ``Q = sum_i (H_i - I)`` with ``H_i`` the heat-bath
refresh of site ``i`` is uniformised at rate ``n``, giving the kernel
``K = (1/n) sum_i H_i`` and ``exp(Qt) = sum_k Poisson(k; nt) K^k``. ``K`` is
applied matrix-free in ``O(n 2^n)``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from glauber1d.dynamics import heat_bath_plus_probability
from glauber1d.errors import CapacityError, ComputationError, InvalidParameterError
from glauber1d.model import ModelParams, as_spins

__all__ = [
    "DEFAULT_N_MAX",
    "DistributionVector",
    "annealed_distribution",
    "config_index",
    "evolve_distribution",
    "exact_mixing_time",
    "point_mass",
    "read_distribution",
    "site_marginals",
    "spin_table",
    "stationary_vector",
    "total_variation",
    "tv_to_stationary",
    "uniformized_step",
    "write_distribution",
]

DEFAULT_N_MAX = 14
DEFAULT_TOL = 1e-12
_FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class DistributionVector:
    probs: np.ndarray
    n: int

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.shape != (1 << self.n,):
            raise InvalidParameterError(f"expected {1 << self.n} probabilities, got shape {probs.shape}")
        if probs.min() < -1e-14 or abs(probs.sum() - 1.0) > 1e-10:
            raise InvalidParameterError("not a probability vector")
        object.__setattr__(self, "probs", probs)


def _check_capacity(n: int, n_max: int) -> None:
    if n > n_max:
        raise CapacityError(f"exact oracle limited to n <= {n_max} (2^{n_max} states), got n={n}")


@lru_cache(maxsize=8)
def spin_table(n: int) -> np.ndarray:
    """``(2^n, n)`` int8 table of the +/-1 configuration of every index."""
    idx = np.arange(1 << n, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n)) & 1
    out = (2 * bits - 1).astype(np.int8)
    out.setflags(write=False)
    return out


def config_index(x) -> int:
    s = as_spins(x)
    return int(np.sum((s > 0).astype(np.int64) << np.arange(len(s))))


def point_mass(x, n_max: int = DEFAULT_N_MAX) -> DistributionVector:
    s = as_spins(x)
    _check_capacity(len(s), n_max)
    probs = np.zeros(1 << len(s))
    probs[config_index(s)] = 1.0
    return DistributionVector(probs, len(s))


def annealed_distribution(n: int, n_max: int = DEFAULT_N_MAX) -> DistributionVector:
    """Uniform measure on configurations (the mixture of all point masses)."""
    _check_capacity(n, n_max)
    return DistributionVector(np.full(1 << n, 1.0 / (1 << n)), n)


def stationary_vector(p: ModelParams, n_max: int = DEFAULT_N_MAX) -> DistributionVector:
    _check_capacity(p.n, n_max)
    s = spin_table(p.n).astype(np.int64)
    logw = p.beta * np.sum(s * np.roll(s, -1, axis=1), axis=1)
    return DistributionVector(np.exp(logw - logsumexp(logw)), p.n)


@lru_cache(maxsize=16)
def _kernel(n: int, beta: float) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    p = ModelParams(n, beta)
    s = spin_table(n).astype(np.int64)
    idx = np.arange(1 << n, dtype=np.int64)
    plus = np.array([heat_bath_plus_probability(v, p) for v in (-2, 0, 2)])
    out = []
    for i in range(n):
        nb = s[:, (i - 1) % n] + s[:, (i + 1) % n]
        q_plus = plus[(nb + 2) // 2]
        q = np.where(s[:, i] > 0, q_plus, 1.0 - q_plus)
        out.append((idx ^ (1 << i), q))
    return tuple(out)


def uniformized_step(probs: np.ndarray, p: ModelParams) -> np.ndarray:
    """One step of ``K``: pick a uniform site and heat-bath refresh it."""
    out = np.zeros_like(probs)
    for partner, q in _kernel(p.n, p.beta):
        out += (probs + probs[partner]) * q
    return out / p.n


def _evolve_probs(probs: np.ndarray, t: float, p: ModelParams, tol: float) -> np.ndarray:
    if t < 0:
        raise InvalidParameterError(f"time must be non-negative, got {t}")
    if not tol > 0:
        raise InvalidParameterError(f"tolerance must be positive, got {tol}")
    rate = p.n * t
    if rate == 0:
        return probs.copy()
    kmax = int(stats.poisson.isf(tol, rate)) + 1
    weights = stats.poisson.pmf(np.arange(kmax + 1), rate)
    acc = weights[0] * probs
    cur = probs
    for k in range(1, kmax + 1):
        cur = uniformized_step(cur, p)
        acc += weights[k] * cur
    return acc / weights.sum()


def evolve_distribution(
    x0, t: float, p: ModelParams, tol: float = DEFAULT_TOL, n_max: int = DEFAULT_N_MAX
) -> DistributionVector:
    """Law of ``X_t`` started from ``x0`` (a configuration or a ``DistributionVector``)."""
    _check_capacity(p.n, n_max)
    mu0 = x0 if isinstance(x0, DistributionVector) else point_mass(as_spins(x0, p.n), n_max)
    if mu0.n != p.n:
        raise InvalidParameterError(f"initial law is on n={mu0.n}, params have n={p.n}")
    return DistributionVector(_evolve_probs(mu0.probs, t, p, tol), p.n)


def total_variation(a: DistributionVector, b: DistributionVector) -> float:
    if a.n != b.n:
        raise InvalidParameterError(f"dimension mismatch: n={a.n} vs n={b.n}")
    return float(min(1.0, 0.5 * np.abs(a.probs - b.probs).sum()))


def tv_to_stationary(x0, times, p: ModelParams, tol: float = DEFAULT_TOL, n_max: int = DEFAULT_N_MAX) -> np.ndarray:
    """Exact TV distance to stationarity on an increasing time grid (evolved incrementally)."""
    times = np.asarray(times, dtype=np.float64)
    if np.any(np.diff(times) < 0) or (times.size and times[0] < 0):
        raise InvalidParameterError("times must be non-negative and increasing")
    pi = stationary_vector(p, n_max)
    mu = x0 if isinstance(x0, DistributionVector) else point_mass(as_spins(x0, p.n), n_max)
    cur, now, out = mu.probs, 0.0, []
    for t in times:
        cur = _evolve_probs(cur, t - now, p, tol)
        now = t
        out.append(0.5 * np.abs(cur - pi.probs).sum())
    return np.minimum(np.asarray(out), 1.0)


def site_marginals(d: DistributionVector) -> np.ndarray:
    """``P(X(i) = +1)`` for every site."""
    bits = spin_table(d.n) > 0
    return d.probs @ bits


def exact_mixing_time(
    x0, eps: float, p: ModelParams, tol: float = DEFAULT_TOL, n_max: int = DEFAULT_N_MAX, resolution: float = 1e-3
) -> float:
    """Smallest ``t`` (to ``resolution``) with TV to stationarity at most ``eps``."""
    if not 0 < eps < 1:
        raise InvalidParameterError(f"eps must lie in (0, 1), got {eps}")
    _check_capacity(p.n, n_max)
    pi = stationary_vector(p, n_max).probs
    mu = x0 if isinstance(x0, DistributionVector) else point_mass(as_spins(x0, p.n), n_max)

    def tv(probs):
        return 0.5 * np.abs(probs - pi).sum()

    lo, lo_probs = 0.0, mu.probs
    lo_tv = tv(lo_probs)
    if lo_tv <= eps:
        return 0.0
    step = 1.0
    while True:
        hi = lo + step
        hi_probs = _evolve_probs(lo_probs, step, p, tol)
        hi_tv = tv(hi_probs)
        if hi_tv > lo_tv + 1e-12:
            raise ComputationError(f"TV increased from {lo_tv:.3e} at t={lo} to {hi_tv:.3e} at t={hi}")
        if hi_tv <= eps:
            break
        lo, lo_probs, lo_tv = hi, hi_probs, hi_tv
        step *= 2.0
        if hi > 1e5:
            raise ComputationError(f"could not bracket TV <= {eps}: TV({hi}) = {hi_tv:.3e}")
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        mid_probs = _evolve_probs(lo_probs, mid - lo, p, tol)
        mid_tv = tv(mid_probs)
        if not (hi_tv - 1e-12 <= mid_tv <= lo_tv + 1e-12):
            raise ComputationError(f"non-monotone TV in bracket [{lo}, {hi}]: {lo_tv}, {mid_tv}, {hi_tv}")
        if mid_tv <= eps:
            hi, hi_tv = mid, mid_tv
        else:
            lo, lo_probs, lo_tv = mid, mid_probs, mid_tv
    return hi


def write_distribution(path, d: DistributionVector) -> None:
    """Binary dump: ``n`` (u32 LE), format version (u32 LE), then ``2^n`` float64 LE."""
    with Path(path).open("wb") as fh:
        fh.write(struct.pack("<II", d.n, _FORMAT_VERSION))
        fh.write(d.probs.astype("<f8").tobytes())


def read_distribution(path) -> DistributionVector:
    raw = Path(path).read_bytes()
    n, version = struct.unpack("<II", raw[:8])
    if version != _FORMAT_VERSION:
        raise InvalidParameterError(f"unsupported distribution format version {version}")
    probs = np.frombuffer(raw[8:], dtype="<f8")
    if probs.size != 1 << n:
        raise InvalidParameterError(f"file holds {probs.size} values, expected {1 << n}")
    return DistributionVector(probs.astype(np.float64), n)
