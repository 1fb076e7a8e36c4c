"""Test statistics, Monte Carlo estimators and statistic-based TV lower bounds.

A statistic's law under the dynamics and under the Gibbs measure can only be
closer in total variation than the full laws, so the empirical TV between
statistic samples estimates a lower bound on the mixing distance.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from glauber1d.dynamics import evolve_batch
from glauber1d.errors import InvalidParameterError
from glauber1d.histories import backward_walkers_batch
from glauber1d.model import InitialConditionKind, ModelParams, as_spins, make_initial, sample_gibbs
from glauber1d.oracle import DEFAULT_N_MAX, annealed_distribution, tv_to_stationary
from glauber1d.parallel import DEFAULT_BATCH, run_batches
from glauber1d.semigroup import conditional_magnetization

__all__ = [
    "MixingCurve",
    "Statistic",
    "StatisticSamples",
    "autocorrelation_statistic",
    "chebyshev_threshold_bound",
    "covariance_decay_check",
    "empirical_tv",
    "empirical_tv_lower_bound",
    "hamiltonian_statistic",
    "independent_walk_product",
    "magnetization_statistic",
    "mc_statistic_samples",
    "mixing_curve",
    "two_state_chain_mean",
    "two_walker_claim",
    "write_curve",
]


class Statistic(enum.Enum):
    AUTOCORRELATION = "autocorrelation"
    HAMILTONIAN = "hamiltonian"
    MAGNETIZATION = "magnetization"


@dataclass
class StatisticSamples:
    values: np.ndarray
    source: str
    replica_count: int

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or len(self.values) != self.replica_count:
            raise InvalidParameterError("replica_count must equal the number of values")

    def mean(self) -> tuple[float, float]:
        """Sample mean and its standard error."""
        v = self.values
        se = v.std(ddof=1) / math.sqrt(len(v)) if len(v) > 1 else math.inf
        return float(v.mean()), float(se)


def _spins2d(x, n: int | None = None) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim == 1:
        return as_spins(x, n)[None, :]
    if n is not None and x.shape[1] != n:
        raise InvalidParameterError(f"configurations have width {x.shape[1]}, expected {n}")
    return x


def autocorrelation_statistic(x, x0, t: float, p: ModelParams):
    """``sum_i x(i) E_{x0}[X_t(i)]``; accepts one configuration or an ``(R, n)`` array."""
    weights = conditional_magnetization(x0, t, p)
    out = _spins2d(x, p.n).astype(np.float64) @ weights
    return float(out[0]) if np.ndim(x) == 1 else out


def hamiltonian_statistic(x):
    """``sum_i x(4i) x(4i+1)`` over the ``n/4`` designated pairs."""
    x = np.asarray(x)
    n = x.shape[-1]
    if n % 4:
        raise InvalidParameterError(f"Hamiltonian statistic needs n divisible by 4, got {n}")
    out = np.sum(x[..., 0::4].astype(np.int64) * x[..., 1::4], axis=-1)
    return int(out) if x.ndim == 1 else out


def magnetization_statistic(x):
    x = np.asarray(x)
    out = np.sum(x.astype(np.int64), axis=-1)
    return int(out) if x.ndim == 1 else out


def _evaluate(kind: Statistic, x: np.ndarray, x0, t: float, p: ModelParams) -> np.ndarray:
    if kind is Statistic.AUTOCORRELATION:
        return autocorrelation_statistic(x, x0, t, p)
    if kind is Statistic.HAMILTONIAN:
        return hamiltonian_statistic(x).astype(np.float64)
    return magnetization_statistic(x).astype(np.float64)


def _start(x0, p: ModelParams, size: int, rng: np.random.Generator) -> np.ndarray:
    if x0 is InitialConditionKind.UNIFORM_RANDOM:
        return (2 * rng.integers(0, 2, size=(size, p.n)) - 1).astype(np.int8)
    return np.tile(as_spins(x0, p.n), (size, 1))


def mc_statistic_samples(
    kind: Statistic | str,
    x0,
    t: float,
    p: ModelParams,
    replicas: int,
    rng: np.random.Generator,
    source: str = "dynamics",
    batch_size: int = DEFAULT_BATCH,
    workers: int | None = None,
) -> StatisticSamples:
    """Evaluate a statistic on independent replicas.

    ``source="dynamics"`` runs the voter encoding from ``x0`` (a configuration,
    or ``InitialConditionKind.UNIFORM_RANDOM`` for a fresh uniform start per
    replica) up to time ``t``; ``source="stationary"`` uses exact Gibbs
    samples. The autocorrelation statistic is always weighted by
    ``E_{x0}[X_t]`` and so needs a deterministic ``x0``.
    """
    kind = Statistic(kind)
    if replicas < 1:
        raise InvalidParameterError("replicas must be >= 1")
    if source not in ("dynamics", "stationary"):
        raise InvalidParameterError(f"unknown source {source!r}")
    if kind is Statistic.AUTOCORRELATION and x0 is InitialConditionKind.UNIFORM_RANDOM:
        raise InvalidParameterError("autocorrelation needs a deterministic initial condition")
    if kind is Statistic.HAMILTONIAN:
        p.require_multiple_of_four("Hamiltonian statistic")

    def one(size: int, g: np.random.Generator) -> np.ndarray:
        if source == "stationary":
            x = sample_gibbs(p, g, size=size)
        else:
            x = evolve_batch(_start(x0, p, size, g), t, p, g)
        return _evaluate(kind, x, x0, t, p)

    values = np.concatenate(run_batches(one, replicas, rng, batch_size, workers))
    label = "stationary" if source == "stationary" else f"dynamics(t={t})"
    return StatisticSamples(values, label, len(values))


def _shared_bins(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pooled = np.concatenate([a, b])
    edges = np.histogram_bin_edges(pooled, bins="auto")
    ia = np.clip(np.searchsorted(edges, a, side="right") - 1, 0, len(edges) - 2)
    ib = np.clip(np.searchsorted(edges, b, side="right") - 1, 0, len(edges) - 2)
    k = len(edges) - 1
    return np.bincount(ia, minlength=k), np.bincount(ib, minlength=k)


def _tv_counts(ca, cb, na, nb):
    return 0.5 * np.abs(ca / na - cb / nb).sum(axis=-1)


def empirical_tv(a, b) -> float:
    """Plug-in TV between the binned empirical laws (upward biased by sampling noise)."""
    a, b = _values(a), _values(b)
    ca, cb = _shared_bins(a, b)
    return float(_tv_counts(ca, cb, len(a), len(b)))


def _values(s) -> np.ndarray:
    v = s.values if isinstance(s, StatisticSamples) else np.asarray(s, dtype=np.float64)
    if v.size == 0:
        raise InvalidParameterError("need non-empty samples")
    return v


def empirical_tv_lower_bound(a, b, resamples: int = 200, rng: np.random.Generator | None = None) -> tuple[float, float]:
    """Noise-corrected TV between two samples of a scalar statistic, with a bootstrap std error.

    Both samples are binned on one grid chosen from the pooled values
    (numpy's ``"auto"`` rule: the larger of Freedman-Diaconis and Sturges).
    Let ``nu`` be the mean plug-in TV of pairs of samples drawn from the
    pooled histogram, i.e. the value pure sampling noise produces when the
    two laws coincide. The estimate is ``(raw - nu) / (1 - nu)`` clipped to
    ``[0, 1]``: zero at the noise floor, one for disjoint samples, and never
    above ``raw``.
    The standard error is the spread of the plug-in TV over ``resamples``
    bootstrap redraws of the two histograms, floored at ``1 / min(len(a),
    len(b))``.
    """
    if resamples < 2:
        raise InvalidParameterError("need at least two resamples")
    a, b = _values(a), _values(b)
    rng = np.random.default_rng(0) if rng is None else rng
    na, nb = len(a), len(b)
    ca, cb = _shared_bins(a, b)
    raw = float(_tv_counts(ca, cb, na, nb))
    boot = _tv_counts(
        rng.multinomial(na, ca / na, size=resamples), rng.multinomial(nb, cb / nb, size=resamples), na, nb
    )
    pooled = (ca + cb) / (na + nb)
    null = _tv_counts(rng.multinomial(na, pooled, size=resamples), rng.multinomial(nb, pooled, size=resamples), na, nb)
    nu = float(null.mean())
    est = min(1.0, max(0.0, (raw - nu) / (1.0 - nu))) if nu < 1.0 else 0.0
    # the bootstrap is blind to mass in empty cells; 1/N is the plug-in's resolution
    return est, max(float(boot.std(ddof=1)), 1.0 / min(na, nb))


def chebyshev_threshold_bound(a, b, threshold: float) -> tuple[float, float]:
    """``P_a(R >= threshold) - P_b(R >= threshold)`` and its binomial std error.

    The threshold-set test: any event's probability gap lower-bounds TV.
    """
    a, b = _values(a), _values(b)
    pa, pb = float(np.mean(a >= threshold)), float(np.mean(b >= threshold))
    se = math.sqrt(pa * (1 - pa) / len(a) + pb * (1 - pb) / len(b))
    return pa - pb, se


@dataclass
class MixingCurve:
    times: np.ndarray
    tv_lower_bounds: np.ndarray
    std_errors: np.ndarray
    exact_tv: np.ndarray | None = None
    per_statistic: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        k = len(self.times)
        if len(self.tv_lower_bounds) != k or len(self.std_errors) != k:
            raise InvalidParameterError("curve columns must have equal length")
        if self.exact_tv is not None and len(self.exact_tv) != k:
            raise InvalidParameterError("exact TV column has the wrong length")

    def first_below(self, level: float) -> float:
        """First grid time whose lower bound is below ``level`` (inf if none)."""
        hits = np.nonzero(self.tv_lower_bounds < level)[0]
        return float(self.times[hits[0]]) if hits.size else math.inf


def _curve_statistics(kind: InitialConditionKind, p: ModelParams) -> list[Statistic]:
    out = []
    if kind.deterministic:
        out.append(Statistic.AUTOCORRELATION)
    if p.n % 4 == 0:
        out.append(Statistic.HAMILTONIAN)
    out.append(Statistic.MAGNETIZATION)
    return out


def mixing_curve(
    kind: InitialConditionKind | str,
    p: ModelParams,
    times,
    replicas: int,
    rng: np.random.Generator,
    n_max: int = DEFAULT_N_MAX,
    exact: bool | None = None,
    resamples: int = 200,
    batch_size: int = DEFAULT_BATCH,
    workers: int | None = None,
) -> MixingCurve:
    """Best statistic-based TV lower bound on a time grid, plus the exact TV for small ``n``.

    Replicas are evolved incrementally through the increasing grid. The
    statistics tried are autocorrelation (deterministic starts), the
    Hamiltonian (``n`` divisible by 4) and the magnetisation.
    """
    kind = InitialConditionKind(kind) if isinstance(kind, str) else kind
    times = np.asarray(times, dtype=np.float64)
    if times.ndim != 1 or times.size == 0 or times[0] < 0 or np.any(np.diff(times) <= 0):
        raise InvalidParameterError("times must be a non-empty, non-negative, strictly increasing list")
    x0 = make_initial(kind, p.n) if kind.deterministic else InitialConditionKind.UNIFORM_RANDOM
    statistics = _curve_statistics(kind, p)
    stream_dyn, stream_stat, stream_boot = rng.spawn(3)

    def dyn_batch(size: int, g: np.random.Generator) -> np.ndarray:
        x = _start(x0, p, size, g)
        out = np.empty((len(times), len(statistics), size))
        now = 0.0
        for i, t in enumerate(times):
            x = evolve_batch(x, t - now, p, g)
            now = t
            for j, s in enumerate(statistics):
                out[i, j] = _evaluate(s, x, x0, t, p)
        return out

    def stat_batch(size: int, g: np.random.Generator) -> np.ndarray:
        y = sample_gibbs(p, g, size=size)
        out = np.empty((len(times), len(statistics), size))
        for i, t in enumerate(times):
            for j, s in enumerate(statistics):
                out[i, j] = _evaluate(s, y, x0, t, p)
        return out

    dyn = np.concatenate(run_batches(dyn_batch, replicas, stream_dyn, batch_size, workers), axis=2)
    sta = np.concatenate(run_batches(stat_batch, replicas, stream_stat, batch_size, workers), axis=2)

    per = {s.value: (np.zeros(len(times)), np.zeros(len(times))) for s in statistics}
    best = np.zeros(len(times))
    best_se = np.zeros(len(times))
    for i in range(len(times)):
        for j, s in enumerate(statistics):
            lb, se = empirical_tv_lower_bound(dyn[i, j], sta[i, j], resamples, stream_boot)
            per[s.value][0][i], per[s.value][1][i] = lb, se
            if j == 0 or lb > best[i]:
                best[i], best_se[i] = lb, se

    use_exact = p.n <= n_max if exact is None else exact
    exact_tv = None
    if use_exact:
        start = make_initial(kind, p.n) if kind.deterministic else annealed_distribution(p.n, n_max)
        exact_tv = tv_to_stationary(start, times, p, n_max=n_max)
    return MixingCurve(times, best, best_se, exact_tv, per)


def write_curve(curve: MixingCurve, path, metadata: dict) -> tuple[Path, Path]:
    """Write ``t, tv_lower, stderr[, exact_tv]`` as CSV and ``metadata`` as a JSON sidecar."""
    path = Path(path)
    header = ["t", "tv_lower", "stderr"] + (["exact_tv"] if curve.exact_tv is not None else [])
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, t in enumerate(curve.times):
            row = [repr(float(t)), repr(float(curve.tv_lower_bounds[i])), repr(float(curve.std_errors[i]))]
            if curve.exact_tv is not None:
                row.append(repr(float(curve.exact_tv[i])))
            w.writerow(row)
    sidecar = path.with_suffix(path.suffix + ".json")
    sidecar.write_text(json.dumps(metadata, indent=2, sort_keys=True, default=str) + "\n")
    return path, sidecar


def covariance_decay_check(
    p: ModelParams,
    t: float,
    separation,
    replicas: int,
    rng: np.random.Generator,
    x0=None,
    return_stderr: bool = False,
    batch_size: int = DEFAULT_BATCH,
):
    """Empirical ``Cov(X_t(0), X_t(d))``; ``x0=None`` samples from the Gibbs measure.

    ``separation`` may be an int or a sequence; a sequence is estimated from
    the same replicas and returns arrays.
    """
    seps = np.atleast_1d(np.asarray(separation, dtype=np.int64))
    if np.any(seps < 1) or np.any(seps >= p.n):
        raise InvalidParameterError("separation must lie in [1, n-1]")
    start = None if x0 is None else as_spins(x0, p.n)

    def one(size: int, g: np.random.Generator) -> np.ndarray:
        if start is None:
            x = sample_gibbs(p, g, size=size)
        else:
            x = evolve_batch(start, t, p, g, replicas=size)
        return x[:, np.concatenate([[0], seps])].astype(np.float64)

    cols = np.concatenate(run_batches(one, replicas, rng, batch_size))
    centred = cols - cols.mean(axis=0)
    prods = centred[:, :1] * centred[:, 1:]
    r = len(cols)
    cov = prods.sum(axis=0) / (r - 1)
    se = prods.std(axis=0, ddof=1) / math.sqrt(r)
    if np.ndim(separation) == 0:
        cov, se = float(cov[0]), float(se[0])
    return (cov, se) if return_stderr else cov


def two_walker_claim(
    kind: InitialConditionKind | str, t: float, p: ModelParams, replicas: int, rng: np.random.Generator, site: int = 0
) -> tuple[float, float, float]:
    """Estimate ``E_{x0}[X_t(i) X_t(i+1) 1_K]`` from backward histories of ``i, i+1``.

    ``K`` is the event that both histories survive to time 0 without merging;
    on ``K`` the product equals ``x0`` read at the two bottom positions.
    Returns the mean, its std error, and the frequency of ``K``.
    """
    kind = InitialConditionKind(kind) if isinstance(kind, str) else kind
    x0 = make_initial(kind, p.n)
    i = int(site) % p.n
    vals, hits = [], []

    def one(size: int, g: np.random.Generator):
        b = backward_walkers_batch([i, (i + 1) % p.n], t, p, g, size)
        k = b.alive.all(axis=1) & (b.positions[:, 0] != b.positions[:, 1])
        pos = np.where(k[:, None], b.positions, 0)
        return np.where(k, x0[pos[:, 0]].astype(np.int64) * x0[pos[:, 1]], 0), k

    for v, k in run_batches(one, replicas, rng):
        vals.append(v)
        hits.append(k)
    v = np.concatenate(vals).astype(np.float64)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v))), float(np.concatenate(hits).mean())


def two_state_chain_mean(kind: InitialConditionKind | str, t: float, p: ModelParams) -> float:
    """``E[W(t)]`` for two independent rate-(1-theta) walks started at ``0`` and ``1``.

    ``W = x0(Z1) x0(Z2)`` starts at -1 and flips at rate ``2(1-theta)`` for the
    alternating start, ``(1-theta)`` for the bi-alternating one.
    """
    kind = InitialConditionKind(kind) if isinstance(kind, str) else kind
    rate = {InitialConditionKind.ALT: 2.0, InitialConditionKind.BLT: 1.0}.get(kind)
    if rate is None:
        raise InvalidParameterError("two-state chain defined for alt and blt starts only")
    return -math.exp(-2.0 * rate * (1.0 - p.theta) * t)


def independent_walk_product(
    kind: InitialConditionKind | str, t: float, p: ModelParams, replicas: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Monte Carlo ``E[x0(Z1(t)) x0(Z2(t))]`` for independent, unkilled walks from ``0`` and ``1``."""
    kind = InitialConditionKind(kind) if isinstance(kind, str) else kind
    x0 = make_initial(kind, p.n)
    rate = (1.0 - p.theta) * t
    z = []
    for start in (0, 1):
        jumps = rng.poisson(rate, size=replicas)
        right = rng.binomial(jumps, 0.5)
        z.append((start + 2 * right - jumps) % p.n)
    w = x0[z[0]].astype(np.float64) * x0[z[1]]
    return float(w.mean()), float(w.std(ddof=1) / math.sqrt(replicas))


def curve_metadata(curve: MixingCurve, **config) -> dict:
    meta = dict(config)
    meta["columns"] = ["t", "tv_lower", "stderr"] + (["exact_tv"] if curve.exact_tv is not None else [])
    return meta
