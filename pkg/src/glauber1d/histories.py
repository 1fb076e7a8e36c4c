"""Backward update supports: coalescing killed random walks on the cycle.

Read backwards in time, the voter encoding turns each site's history into a
walk that dies when it meets an oblivious refresh (``u <= theta``) and
otherwise jumps to the copied neighbour. Walkers sitting on the same site
react to the same events, so they coalesce.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from glauber1d.dynamics import UpdateSequence
from glauber1d.errors import InvalidParameterError
from glauber1d.model import ModelParams

__all__ = [
    "BackwardBatch",
    "ClusterDecomposition",
    "HistoryTrajectory",
    "backward_support",
    "backward_walkers_batch",
    "cluster_decomposition",
    "cycle_distance",
    "max_displacement",
    "reconstruct_spins",
    "surviving_origins",
    "survival_probability",
    "write_trajectories_csv",
]


def cycle_distance(a, b, n: int):
    if isinstance(a, int) and isinstance(b, int):
        d = (a - b) % n
        return min(d, n - d)
    d = np.abs(np.asarray(a) - np.asarray(b)) % n
    return np.minimum(d, n - d)


@dataclass(frozen=True)
class HistoryTrajectory:
    """Backward history of one site.

    ``segments`` holds ``(t_start, t_end, site)`` triples in reverse
    chronological order, contiguous from ``t_end = s2`` down to the kill time
    (or ``s1`` for a survivor). ``kill_spin`` is the refreshed value produced
    by the killing event.
    """

    origin: int
    n: int
    segments: tuple[tuple[float, float, int], ...]
    kill_time: float | None = None
    kill_spin: int | None = None

    @property
    def survived(self) -> bool:
        return self.kill_time is None

    @property
    def final_site(self) -> int:
        return self.segments[-1][2]

    @property
    def jumps(self) -> int:
        return len(self.segments) - 1


def survival_probability(p: ModelParams, dt: float) -> float:
    if dt < 0:
        raise InvalidParameterError(f"dt must be non-negative, got {dt}")
    return math.exp(-p.theta * dt)


def backward_support(
    sites: Iterable[int], s1: float, s2: float, seq: UpdateSequence, p: ModelParams
) -> tuple[frozenset[int], list[HistoryTrajectory]]:
    """Support at time ``s1`` of the spins of ``sites`` at time ``s2``.

    One reverse sweep over the events in ``(s1, s2]``. Returns the surviving
    positions and one trajectory per queried site (killed ones included).
    """
    if not 0 <= s1 <= s2 <= seq.horizon:
        raise InvalidParameterError(f"need 0 <= s1 <= s2 <= horizon, got s1={s1}, s2={s2}, horizon={seq.horizon}")
    if seq.n != p.n:
        raise InvalidParameterError(f"sequence built for n={seq.n}, params have n={p.n}")
    origins = sorted(set(int(v) for v in sites))
    if any(not 0 <= v < p.n for v in origins):
        raise InvalidParameterError("sites must lie in [0, n)")

    segments: dict[int, list[tuple[float, float, int]]] = {v: [] for v in origins}
    top = {v: float(s2) for v in origins}
    killed: dict[int, tuple[float, int]] = {}
    occupancy: dict[int, list[int]] = {v: [v] for v in origins}
    theta, half = p.theta, p.theta / 2.0

    w = seq.window(s1, s2)
    times, js, ss, us = (seq.times[w].tolist(), seq.sites[w].tolist(), seq.neighbors[w].tolist(), seq.u[w].tolist())
    for k in range(len(times) - 1, -1, -1):
        if not occupancy:
            break
        group = occupancy.pop(js[k], None)
        if group is None:
            continue
        t, j = times[k], js[k]
        for v in group:
            segments[v].append((t, top[v], j))
            top[v] = t
        if us[k] <= theta:
            spin = 1 if us[k] <= half else -1
            for v in group:
                killed[v] = (t, spin)
        else:
            occupancy.setdefault(ss[k], []).extend(group)

    for site, group in occupancy.items():
        for v in group:
            segments[v].append((float(s1), top[v], site))

    trajectories = []
    for v in origins:
        kt, ks = killed.get(v, (None, None))
        trajectories.append(HistoryTrajectory(v, p.n, tuple(segments[v]), kt, ks))
    return frozenset(occupancy), trajectories


def reconstruct_spins(trajectories: list[HistoryTrajectory], x_at_s1) -> dict[int, int]:
    """Spins at ``s2`` implied by the histories and the configuration at ``s1``."""
    x = np.asarray(x_at_s1)
    return {h.origin: (int(x[h.final_site]) if h.survived else int(h.kill_spin)) for h in trajectories}


def max_displacement(trajectories: list[HistoryTrajectory]) -> int:
    """Largest cycle distance from its origin reached by any history while alive."""
    if not trajectories:
        raise InvalidParameterError("need at least one trajectory")
    return max(cycle_distance(int(site), int(h.origin), h.n) for h in trajectories for _, _, site in h.segments)


def surviving_origins(trajectories: list[HistoryTrajectory]) -> frozenset[int]:
    return frozenset(h.origin for h in trajectories if h.survived)


@dataclass
class BackwardBatch:
    """Outcome of many independent backward sweeps for a fixed set of origins.

    ``positions[r, a]`` is the site at the bottom of the window, -1 if killed.
    """

    origins: np.ndarray
    positions: np.ndarray
    alive: np.ndarray
    jumps: np.ndarray
    max_displacement: np.ndarray
    met: np.ndarray = field(repr=False)


def backward_walkers_batch(
    origins, horizon: float, p: ModelParams, rng: np.random.Generator, replicas: int
) -> BackwardBatch:
    """Run ``replicas`` independent backward sweeps of length ``horizon``.

    Only updates at occupied sites move walkers, so the sweep is thinned:
    candidate events arrive at rate ``m`` (one per walker slot) and a
    candidate for slot ``a`` acts only if ``a`` is alive and is the
    lowest-index walker on its site. Each occupied site then sees updates at
    rate one, as in the full sequence. Given its count, a replica's
    candidates are i.i.d., so replicas advance in lock step. ``met[r, a, b]``
    records whether walkers ``a`` and ``b`` ever occupied the same site while
    alive.
    """
    if horizon < 0:
        raise InvalidParameterError(f"horizon must be non-negative, got {horizon}")
    origins = np.asarray(sorted(set(int(v) for v in origins)), dtype=np.int64)
    if origins.size == 0 or origins.min() < 0 or origins.max() >= p.n:
        raise InvalidParameterError("origins must be a non-empty set of sites in [0, n)")
    n, m, r = p.n, len(origins), int(replicas)
    pos = np.tile(origins, (r, 1))
    alive = np.ones((r, m), dtype=bool)
    jumps = np.zeros((r, m), dtype=np.int64)
    disp = np.zeros((r, m), dtype=np.int64)
    met = np.zeros((r, m, m), dtype=bool)
    counts = rng.poisson(m * horizon, size=r) if horizon > 0 else np.zeros(r, dtype=np.int64)
    rows = np.arange(r)
    lower = np.tril(np.ones((m, m), dtype=bool), k=-1)
    for k in range(int(counts.max(initial=0))):
        live = rows[counts > k]
        slot = rng.integers(0, m, size=live.size)
        step = 2 * rng.integers(0, 2, size=live.size) - 1
        u = rng.random(live.size)
        cur, a = pos[live], alive[live]
        j = cur[np.arange(live.size), slot]
        hit = a & (cur == j[:, None])
        # the slot must be the lowest alive index on its site
        shadowed = (hit & lower[slot]).any(axis=1)
        hit &= (a[np.arange(live.size), slot] & ~shadowed)[:, None]
        kill = hit & (u <= p.theta)[:, None]
        move = hit & ~kill
        new_pos = np.where(move, ((j + step) % n)[:, None], cur)
        a = a & ~kill
        alive[live] = a
        pos[live] = new_pos
        jumps[live] += move
        disp[live] = np.maximum(disp[live], np.where(a, cycle_distance(new_pos, origins, n), 0))
        if m > 1:
            same = (new_pos[:, :, None] == new_pos[:, None, :]) & a[:, :, None] & a[:, None, :]
            met[live] |= same
    positions = np.where(alive, pos, -1)
    eye = np.eye(m, dtype=bool)
    met &= ~eye
    return BackwardBatch(origins, positions, alive, jumps, disp, met)


@dataclass(frozen=True)
class ClusterDecomposition:
    """Intervals covering a support, as ``(start, end)`` inclusive pairs (end < start wraps)."""

    n: int
    intervals: tuple[tuple[int, int], ...]
    lengths: tuple[int, ...]
    supports: tuple[frozenset[int], ...]
    event_A: bool
    event_B: bool | None


def _intervals(sites: list[int], n: int, d_sep: int) -> list[tuple[int, int]]:
    if not sites:
        return []
    k = len(sites)
    gaps = [(sites[(i + 1) % k] - sites[i]) % n or n for i in range(k)]
    breaks = [i for i in range(k) if gaps[i] >= d_sep]
    if not breaks:
        # one chain around the cycle; open it at its widest gap
        breaks = [int(np.argmax(gaps))]
    out = []
    for b_prev, b in zip(breaks, breaks[1:] + breaks[:1]):
        start = sites[(b_prev + 1) % k]
        out.append((start, sites[b]))
    # canonical order: by start site
    return sorted(out)


def cluster_decomposition(
    support_sites: Iterable[int],
    p: ModelParams,
    d_sep: int | None = None,
    d_max: int | None = None,
    trajectories: list[HistoryTrajectory] | None = None,
    spread: float | None = None,
) -> ClusterDecomposition:
    """Greedy interval cover of ``support_sites`` with gap threshold ``d_sep``.

    Sites closer than ``d_sep`` (measured as index difference around the
    cycle) share an interval. ``event_A`` holds when every interval spans at
    most ``d_max`` sites and distinct intervals are at distance ``>= d_sep``.

    Given the trajectories of a backward sweep from every site, the supports
    ``V_i`` are the surviving bottom positions of the histories started in
    ``W_i``, and ``event_B`` holds when no history strayed further than
    ``spread`` (default ``log^2 n / 10``).
    """
    n = p.n
    log_n = math.log(n)
    d_sep = round(log_n**2) if d_sep is None else int(d_sep)
    d_max = round(log_n**3) if d_max is None else int(d_max)
    if d_sep < 1 or d_max < 1:
        raise InvalidParameterError("d_sep and d_max must be >= 1")
    sites = sorted(set(int(s) % n for s in support_sites))
    intervals = _intervals(sites, n, d_sep)
    lengths = tuple((e - s) % n + 1 for s, e in intervals)
    ok = all(length <= d_max for length in lengths)
    if len(intervals) > 1:
        ends = sorted(intervals)
        for (s_a, e_a), (s_b, _) in zip(ends, ends[1:] + ends[:1]):
            if (s_b - e_a) % n < d_sep:
                ok = False
    supports: tuple[frozenset[int], ...] = ()
    event_B = None
    if trajectories is not None:
        spread = log_n**2 / 10 if spread is None else spread
        by_origin = {h.origin: h for h in trajectories}
        sup = []
        for s, e in intervals:
            members = [(s + i) % n for i in range((e - s) % n + 1)]
            sup.append(frozenset(by_origin[v].final_site for v in members if v in by_origin and by_origin[v].survived))
        supports = tuple(sup)
        event_B = max_displacement(trajectories) <= spread
    return ClusterDecomposition(n, tuple(intervals), lengths, supports, ok, event_B)


def write_trajectories_csv(path, replicas: Iterable[tuple[int, list[HistoryTrajectory]]]) -> None:
    """Dump trajectories as rows ``replica, origin, t_start, t_end, site, killed_flag``."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replica", "origin", "t_start", "t_end", "site", "killed_flag"])
        for rep, trajs in replicas:
            for h in trajs:
                for t0, t1, site in h.segments:
                    w.writerow([rep, h.origin, repr(t0), repr(t1), site, int(not h.survived)])
