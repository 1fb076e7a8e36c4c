"""Continuous-time Glauber dynamics driven by an explicit update sequence.

Two encodings of the same heat-bath chain are provided. The voter encoding
refreshes the updated spin obliviously with probability theta and otherwise
copies a uniformly chosen neighbour; one uniform ``u`` drives both the
choice and the refreshed value (``+1`` iff ``u <= theta/2``). The heat-bath
encoding sets the spin to ``+1`` iff ``u`` falls below the conditional
plus-probability. Both consume the same ``UpdateSequence``.

The ``*_batch`` functions evolve many independent replicas in lock step and
are the workhorse for Monte Carlo estimates; they are equal in law to
``evolve_voter``/``evolve_heat_bath`` applied to independent sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from glauber1d.errors import InvalidParameterError
from glauber1d.model import ModelParams, as_spins

__all__ = [
    "UpdateEvent",
    "UpdateSequence",
    "evolve_batch",
    "evolve_heat_bath",
    "evolve_voter",
    "heat_bath_plus_probability",
    "sample_update_sequence",
    "voter_plus_probability",
]


@dataclass(frozen=True)
class UpdateEvent:
    time: float
    site: int
    neighbor: int
    u: float


@dataclass(frozen=True, eq=False)
class UpdateSequence:
    """Immutable, time-ordered update events on ``(0, horizon]``."""

    n: int
    horizon: float
    times: np.ndarray
    sites: np.ndarray
    neighbors: np.ndarray
    u: np.ndarray

    def __post_init__(self) -> None:
        for name in ("times", "sites", "neighbors", "u"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (len(self.times) == len(self.sites) == len(self.neighbors) == len(self.u)):
            raise InvalidParameterError("event arrays must have equal length")
        if len(self.times):
            if np.any(np.diff(self.times) <= 0):
                raise InvalidParameterError("event times must be strictly increasing")
            if self.times[0] <= 0 or self.times[-1] > self.horizon:
                raise InvalidParameterError("event times must lie in (0, horizon]")
            d = (self.neighbors - self.sites) % self.n
            if np.any((d != 1) & (d != self.n - 1)):
                raise InvalidParameterError("each neighbor must be adjacent to its site")
            if np.any((self.u < 0) | (self.u >= 1)):
                raise InvalidParameterError("uniforms must lie in [0, 1)")

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self) -> Iterator[UpdateEvent]:
        for k in range(len(self)):
            yield self[k]

    def __getitem__(self, k: int) -> UpdateEvent:
        return UpdateEvent(float(self.times[k]), int(self.sites[k]), int(self.neighbors[k]), float(self.u[k]))

    @property
    def events(self) -> list[UpdateEvent]:
        return list(self)

    def window(self, s1: float, s2: float) -> slice:
        """Index slice of the events with time in ``(s1, s2]``."""
        lo = int(np.searchsorted(self.times, s1, side="right"))
        hi = int(np.searchsorted(self.times, s2, side="right"))
        return slice(lo, hi)


def sample_update_sequence(p: ModelParams, horizon: float, rng: np.random.Generator) -> UpdateSequence:
    """Rate-n Poisson clock on ``(0, horizon]`` with uniform sites, fair neighbour coins."""
    if not (horizon > 0 and math.isfinite(horizon)):
        raise InvalidParameterError(f"horizon must be positive and finite, got {horizon!r}")
    n = p.n
    count = int(rng.poisson(n * horizon))
    while True:
        times = np.sort(horizon * (1.0 - rng.random(count)))
        if count < 2 or np.all(np.diff(times) > 0):
            break
    sites = rng.integers(0, n, size=count)
    step = 2 * rng.integers(0, 2, size=count) - 1
    neighbors = (sites + step) % n
    u = rng.random(count)
    return UpdateSequence(n=n, horizon=float(horizon), times=times, sites=sites, neighbors=neighbors, u=u)


def heat_bath_plus_probability(neighbor_sum: int, p: ModelParams) -> float:
    """Conditional probability of ``+1`` given the sum of the two neighbour spins."""
    if neighbor_sum not in (-2, 0, 2):
        raise InvalidParameterError(f"neighbor sum must be -2, 0 or 2, got {neighbor_sum!r}")
    # e^{bs} / (e^{bs} + e^{-bs}) written without overflow
    return 0.5 * (1.0 + math.tanh(p.beta * neighbor_sum))


def voter_plus_probability(left: int, right: int, p: ModelParams) -> float:
    """One-update plus-probability of the voter encoding, averaged over the neighbour coin."""
    plus_neighbors = (left == 1) + (right == 1)
    return p.theta / 2.0 + (1.0 - p.theta) * plus_neighbors / 2.0


def _check(x0, seq: UpdateSequence, p: ModelParams) -> np.ndarray:
    if seq.n != p.n:
        raise InvalidParameterError(f"sequence built for n={seq.n}, params have n={p.n}")
    return as_spins(x0, p.n).copy()


def evolve_voter(x0, seq: UpdateSequence, p: ModelParams, start: float = 0.0, stop: float | None = None) -> np.ndarray:
    """Apply the events with time in ``(start, stop]`` using the voter encoding."""
    x = _check(x0, seq, p)
    stop = seq.horizon if stop is None else stop
    theta, half = p.theta, p.theta / 2.0
    w = seq.window(start, stop)
    for j, s, u in zip(seq.sites[w].tolist(), seq.neighbors[w].tolist(), seq.u[w].tolist()):
        if u <= theta:
            x[j] = 1 if u <= half else -1
        else:
            x[j] = x[s]
    return x


def evolve_heat_bath(
    x0, seq: UpdateSequence, p: ModelParams, start: float = 0.0, stop: float | None = None
) -> np.ndarray:
    """Apply the events with time in ``(start, stop]`` using the heat-bath rule."""
    x = _check(x0, seq, p)
    n = p.n
    stop = seq.horizon if stop is None else stop
    plus = {s: heat_bath_plus_probability(s, p) for s in (-2, 0, 2)}
    w = seq.window(start, stop)
    for j, u in zip(seq.sites[w].tolist(), seq.u[w].tolist()):
        x[j] = 1 if u < plus[int(x[j - 1]) + int(x[(j + 1) % n])] else -1
    return x


def evolve_batch(
    x0: np.ndarray,
    t: float,
    p: ModelParams,
    rng: np.random.Generator,
    replicas: int | None = None,
    rule: str = "voter",
) -> np.ndarray:
    """Evolve independent replicas for time ``t`` in lock step.

    ``x0`` is either one configuration (broadcast to ``replicas`` rows) or an
    ``(R, n)`` array of starting configurations. Each replica draws its own
    Poisson(n t) event count; given the count, events are i.i.d., so the k-th
    lock-step draw plays the role of the k-th event of every replica that has
    at least k events.
    """
    if t < 0:
        raise InvalidParameterError(f"time must be non-negative, got {t}")
    if rule not in ("voter", "heat_bath"):
        raise InvalidParameterError(f"unknown update rule {rule!r}")
    x0 = np.asarray(x0)
    if x0.ndim == 1:
        if replicas is None:
            raise InvalidParameterError("replicas is required for a single starting configuration")
        x = np.tile(as_spins(x0, p.n), (int(replicas), 1))
    else:
        if x0.shape[1] != p.n:
            raise InvalidParameterError(f"starting array has width {x0.shape[1]}, expected {p.n}")
        x = x0.astype(np.int8, copy=True)
    r, n = x.shape
    if r == 0 or t == 0:
        return x
    counts = rng.poisson(n * t, size=r)
    rows = np.arange(r)
    theta, half = p.theta, p.theta / 2.0
    hb = np.array([heat_bath_plus_probability(s, p) for s in (-2, 0, 2)])
    for k in range(int(counts.max())):
        live = rows[counts > k] if k >= counts.min() else rows
        m = live.size
        j = rng.integers(0, n, size=m)
        u = rng.random(m)
        if rule == "voter":
            step = 2 * rng.integers(0, 2, size=m) - 1
            copied = x[live, (j + step) % n]
            new = np.where(u <= theta, np.where(u <= half, 1, -1), copied)
        else:
            s = x[live, j - 1].astype(np.int64) + x[live, (j + 1) % n]
            new = np.where(u < hb[(s + 2) // 2], 1, -1)
        x[live, j] = new
    return x
