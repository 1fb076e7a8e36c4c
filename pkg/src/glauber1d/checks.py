"""Desk-scale invariant suite behind ``glauber1d verify``.

Each check returns ``(passed, detail)``. Monte Carlo checks use 3-sigma
bands and a fixed seed so a run is reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from glauber1d import dynamics, histories, model, oracle, semigroup, stats
from glauber1d.model import InitialConditionKind as K
from glauber1d.model import ModelParams

BETA_GRID = np.linspace(0.0, 1.5, 20)


@dataclass(frozen=True)
class Check:
    module: str
    name: str
    fn: Callable[[np.random.Generator], tuple[bool, str]]


def _within(est: float, se: float, target: float, k: float = 3.0) -> bool:
    return abs(est - target) <= k * se


def check_theta_monotone(rng):
    th = [model.theta_of_beta(b) for b in BETA_GRID]
    ok = all(0 < v <= 1 for v in th) and all(a > b for a, b in zip(th, th[1:]))
    return ok, f"theta in ({th[-1]:.3g}, {th[0]:.3g}]"


def check_weight_symmetry(rng):
    p = ModelParams(10, 0.37)
    x = model.make_initial(K.UNIFORM_RANDOM, 10, rng)
    w = model.gibbs_log_weight(x, p)
    ok = all(math.isclose(model.gibbs_log_weight(np.roll(x, k), p), w) for k in range(10))
    ok &= math.isclose(model.gibbs_log_weight(-x, p), w)
    return ok, "rotation and global flip"


def check_partition_enumeration(rng):
    worst = 0.0
    for n in (4, 6, 8, 10, 12):
        for b in (0.0, 0.2, 0.5, 1.0):
            p = ModelParams(n, b)
            s = oracle.spin_table(n).astype(np.int64)
            logw = b * np.sum(s * np.roll(s, -1, axis=1), axis=1)
            worst = max(worst, abs(model.partition_function(p) - np.log(np.exp(logw).sum())))
    return worst < 1e-9, f"max |log Z error| = {worst:.2e}"


def check_pair_correlation_bound(rng):
    ok = all(model.pair_correlation(ModelParams(12, b), 1) >= math.tanh(b) - 1e-15 for b in BETA_GRID)
    return ok, "E[Y0 Y1] >= tanh(beta)"


def check_sampler_fit(rng):
    from scipy.stats import chisquare

    p = ModelParams(6, 0.4)
    y = model.sample_gibbs(p, rng, size=200_000)
    idx = ((y > 0).astype(np.int64) << np.arange(6)).sum(axis=1)
    obs = np.bincount(idx, minlength=64)
    pv = chisquare(obs, oracle.stationary_vector(p).probs * len(idx)).pvalue
    return pv > 0.01, f"chi-square p = {pv:.3f}"


def check_encoding_equivalence(rng):
    worst = 0.0
    for b in BETA_GRID:
        p = ModelParams(4, b)
        for left in (-1, 1):
            for right in (-1, 1):
                v = dynamics.voter_plus_probability(left, right, p)
                worst = max(worst, abs(v - dynamics.heat_bath_plus_probability(left + right, p)))
    return worst < 1e-12, f"max gap {worst:.2e}"


def check_determinism(rng):
    p = ModelParams(10, 0.3)
    seq = dynamics.sample_update_sequence(p, 3.0, rng)
    x0 = model.make_initial(K.ALT, 10)
    ok = np.array_equal(dynamics.evolve_voter(x0, seq, p), dynamics.evolve_voter(x0, seq, p))
    ok &= np.array_equal(dynamics.evolve_heat_bath(x0, seq, p), dynamics.evolve_heat_bath(x0, seq, p))
    return bool(ok), "repeat evolution is bit-identical"


def check_infinite_temperature(rng):
    p = ModelParams(8, 0.0)
    x = dynamics.evolve_batch(model.make_initial(K.PLUS, 8), 20.0, p, rng, replicas=20_000)
    m = x.mean(axis=0)
    se = 1.0 / math.sqrt(len(x))
    return bool(np.all(np.abs(m) <= 3 * se)), f"max |site mean| = {np.abs(m).max():.4f}"


def check_stationarity_preserved(rng):
    from scipy.stats import chi2_contingency

    p = ModelParams(16, 0.4)
    start = model.sample_gibbs(p, rng, size=20_000)
    moved = stats.hamiltonian_statistic(dynamics.evolve_batch(start, 1.0, p, rng))
    fresh = stats.hamiltonian_statistic(model.sample_gibbs(p, rng, size=20_000))

    vals = np.union1d(moved, fresh)
    table = np.array([[np.sum(moved == v) for v in vals], [np.sum(fresh == v) for v in vals]])
    table = table[:, table.sum(axis=0) > 0]
    pv = chi2_contingency(table).pvalue
    return pv > 0.01, f"two-sample chi-square p = {pv:.3f}"


def check_support_consistency(rng):
    p = ModelParams(10, 0.3)
    for _ in range(300):
        seq = dynamics.sample_update_sequence(p, 2.0, rng)
        x0 = model.make_initial(K.UNIFORM_RANDOM, 10, rng)
        s1 = float(rng.uniform(0, 2.0))
        _, trajs = histories.backward_support(range(10), s1, 2.0, seq, p)
        rebuilt = histories.reconstruct_spins(trajs, dynamics.evolve_voter(x0, seq, p, stop=s1))
        final = dynamics.evolve_voter(x0, seq, p)
        if any(final[v] != s for v, s in rebuilt.items()):
            return False, "forward and backward disagree"
    return True, "300 random instances"


def check_coalescence_monotone(rng):
    p = ModelParams(16, 0.1)
    for _ in range(100):
        seq = dynamics.sample_update_sequence(p, 3.0, rng)
        sizes = [len(histories.backward_support(range(16), s, 3.0, seq, p)[0]) for s in np.linspace(3.0, 0.0, 13)]
        if any(a < b for a, b in zip(sizes, sizes[1:])):
            return False, f"support grew: {sizes}"
    return True, "|F(A, s, t)| non-increasing as s decreases"


def check_survival(rng):
    p = ModelParams(8, 0.3)
    b = histories.backward_walkers_batch([0], 1.5, p, rng, 100_000)
    est = b.alive.mean()
    se = math.sqrt(est * (1 - est) / 100_000)
    target = histories.survival_probability(p, 1.5)
    return _within(est, se, target), f"{est:.4f} vs {target:.4f}"


def check_distinct_survival(rng):
    p = ModelParams(16, 0.3)
    b = histories.backward_walkers_batch([0, 1], 1.0, p, rng, 100_000)
    ev = b.alive.all(axis=1) & ~b.met[:, 0, 1]
    est = ev.mean()
    se = math.sqrt(max(est * (1 - est), 1e-12) / 100_000)
    bound = math.exp(-2 * p.theta)
    return est <= bound + 3 * se, f"{est:.4f} <= {bound:.4f}"


def check_semigroup_property(rng):
    x = rng.standard_normal(24)
    a = semigroup.semigroup_apply(semigroup.semigroup_apply(x, 0.7), 1.1)
    b = semigroup.semigroup_apply(x, 1.8)
    return bool(np.allclose(a, b, atol=1e-9, rtol=0)), f"max gap {np.abs(a - b).max():.2e}"


def check_mass_and_contraction(rng):
    x = rng.standard_normal(30)
    ts = np.linspace(0, 5, 11)
    ys = [semigroup.semigroup_apply(x, t) for t in ts]
    mass = all(abs(y.mean() - x.mean()) < 1e-12 for y in ys)
    norms = [np.linalg.norm(y) for y in ys]
    contr = all(a >= b - 1e-12 for a, b in zip(norms, norms[1:]))
    return mass and contr, "mean preserved, L2 norm non-increasing"


def check_spectral_lower_bound(rng):
    for _ in range(50):
        x = rng.standard_normal(32)
        t = float(rng.uniform(0, 3))
        if np.sum(semigroup.semigroup_apply(x, t) ** 2) < math.exp(-4 * t) * np.sum(x**2) * (1 - 1e-12):
            return False, "||P_t x||^2 < e^{-4t}||x||^2"
    return True, "50 random vectors"


def check_magnetization_vs_mc(rng):
    p = ModelParams(12, 0.3)
    x0 = model.make_initial(K.BLT, 12)
    x = dynamics.evolve_batch(x0, 1.0, p, rng, replicas=100_000)
    m = x.mean(axis=0)
    se = x.std(axis=0, ddof=1) / math.sqrt(len(x))
    target = semigroup.conditional_magnetization(x0, 1.0, p)
    return bool(np.all(np.abs(m - target) <= 3 * se)), f"max z = {np.max(np.abs(m - target) / se):.2f}"


def check_row_stochastic(rng):
    p = ModelParams(10, 0.3)
    v = rng.random(1 << 10)
    v /= v.sum()
    return abs(oracle.uniformized_step(v, p).sum() - 1) < 1e-12, "one step preserves mass"


def check_tv_monotone(rng):
    p = ModelParams(10, 0.25)
    tv = oracle.tv_to_stationary(model.make_initial(K.ALT, 10), np.linspace(0, 4, 17), p)
    return bool(np.all(np.diff(tv) <= 1e-12)), f"TV {tv[0]:.3f} -> {tv[-1]:.3g}"


def check_oracle_marginals(rng):
    p = ModelParams(10, 0.2)
    worst = 0.0
    for kind in (K.ALT, K.PLUS):
        x0 = model.make_initial(kind, 10)
        for t in (0.5, 1.5):
            d = oracle.evolve_distribution(x0, t, p)
            m = 2 * oracle.site_marginals(d) - 1
            worst = max(worst, np.abs(m - semigroup.conditional_magnetization(x0, t, p)).max())
    return worst < 1e-8, f"max gap {worst:.2e}"


def check_alt_symmetry(rng):
    n = 10
    p = ModelParams(n, 0.3)
    d = oracle.evolve_distribution(model.make_initial(K.ALT, n), 0.8, p).probs
    s = oracle.spin_table(n)
    w = 1 << np.arange(n)
    rot2 = ((np.roll(s, 2, axis=1) > 0) * w).sum(axis=1)
    flip1 = ((np.roll(-s, 1, axis=1) > 0) * w).sum(axis=1)
    gap = max(np.abs(d[rot2] - d).max(), np.abs(d[flip1] - d).max())
    return gap < 1e-10, f"max gap {gap:.2e}"


def check_autocorrelation_mean(rng):
    p = ModelParams(64, 0.2)
    x0 = model.make_initial(K.ALT, 64)
    s = stats.mc_statistic_samples("autocorrelation", x0, 1.0, p, 100_000, rng)
    est, se = s.mean()
    target = semigroup.autocorrelation_l2_prediction(x0, 1.0, p)
    return _within(est, se, target), f"{est:.3f} +/- {se:.3f} vs {target:.3f}"


def check_hamiltonian_ordering(rng):
    p = ModelParams(64, 0.3)
    stat = stats.mc_statistic_samples("hamiltonian", None, 0.0, p, 50_000, rng, source="stationary").mean()
    ok = True
    for kind in (K.ALT, K.BLT):
        dyn = stats.mc_statistic_samples("hamiltonian", model.make_initial(kind, 64), 1.0, p, 50_000, rng).mean()
        ok &= dyn[0] <= stat[0] + 3 * math.hypot(dyn[1], stat[1])
    return ok, "dynamic mean <= stationary mean"


def check_two_walker_sign(rng):
    p = ModelParams(16, 0.3)
    ok = True
    for kind in (K.ALT, K.BLT):
        mean, se, _ = stats.two_walker_claim(kind, 1.0, p, 100_000, rng)
        ok &= mean <= 3 * se
    return ok, "E[X(i)X(i+1) 1_K] <= 0"


def check_lower_bound_validity(rng):
    p = ModelParams(12, 0.2)
    times = np.linspace(0, 3, 7)
    for kind in (K.ALT, K.PLUS):
        c = stats.mixing_curve(kind, p, times, 20_000, rng)
        for lb, se in c.per_statistic.values():
            if np.any(lb > c.exact_tv + 3 * se):
                return False, f"{kind.value}: bound exceeds exact TV"
    return True, "all statistic bounds below exact TV"


CHECKS: list[Check] = [
    Check("model", "theta_monotone", check_theta_monotone),
    Check("model", "weight_symmetry", check_weight_symmetry),
    Check("model", "partition_enumeration", check_partition_enumeration),
    Check("model", "pair_correlation_bound", check_pair_correlation_bound),
    Check("model", "sampler_goodness_of_fit", check_sampler_fit),
    Check("dynamics", "encoding_equivalence", check_encoding_equivalence),
    Check("dynamics", "determinism", check_determinism),
    Check("dynamics", "infinite_temperature", check_infinite_temperature),
    Check("dynamics", "stationarity_preserved", check_stationarity_preserved),
    Check("histories", "support_consistency", check_support_consistency),
    Check("histories", "coalescence_monotone", check_coalescence_monotone),
    Check("histories", "survival_law", check_survival),
    Check("histories", "distinct_walker_survival", check_distinct_survival),
    Check("semigroup", "semigroup_property", check_semigroup_property),
    Check("semigroup", "mass_and_contraction", check_mass_and_contraction),
    Check("semigroup", "spectral_lower_bound", check_spectral_lower_bound),
    Check("semigroup", "magnetization_vs_mc", check_magnetization_vs_mc),
    Check("oracle", "row_stochastic", check_row_stochastic),
    Check("oracle", "tv_monotone", check_tv_monotone),
    Check("oracle", "marginals_match_killed_walk", check_oracle_marginals),
    Check("oracle", "alt_symmetry", check_alt_symmetry),
    Check("stats", "autocorrelation_mean_identity", check_autocorrelation_mean),
    Check("stats", "hamiltonian_ordering", check_hamiltonian_ordering),
    Check("stats", "two_walker_sign", check_two_walker_sign),
    Check("stats", "lower_bound_validity", check_lower_bound_validity),
]


def run_checks(filter_name: str | None = None, seed: int = 0, report=print) -> bool:
    """Run the suite (optionally restricted by module or check name); True iff all pass."""
    selected = [c for c in CHECKS if filter_name in (None, c.module, c.name)]
    if not selected:
        report(f"no checks match {filter_name!r}")
        return False
    root = np.random.SeedSequence(seed)
    all_ok = True
    for check, ss in zip(selected, root.spawn(len(selected))):
        try:
            ok, detail = check.fn(np.random.default_rng(ss))
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= bool(ok)
        report(f"{'PASS' if ok else 'FAIL'}  {check.module}.{check.name}  {detail}")
    return all_ok
