"""Command-line driver.

Exit codes: 0 success, 1 invariant failure, 2 invalid configuration,
3 capacity error. The default worker count comes from ``GLAUBER1D_THREADS``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import subprocess
import sys
from dataclasses import asdict, dataclass
from importlib import metadata
from pathlib import Path

import numpy as np

from glauber1d import checks, histories
from glauber1d.dynamics import UpdateSequence, sample_update_sequence
from glauber1d.errors import CapacityError, InvalidParameterError
from glauber1d.model import InitialConditionKind, ModelParams, make_initial
from glauber1d.oracle import DEFAULT_N_MAX, annealed_distribution, exact_mixing_time
from glauber1d.parallel import default_workers
from glauber1d.semigroup import predicted_mixing_constant
from glauber1d.stats import mixing_curve, write_curve

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_CAPACITY = 0, 1, 2, 3
INIT_CHOICES = ("alt", "blt", "plus", "annealed")


def version_string() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


@dataclass(frozen=True)
class MixingCurveConfig:
    n: int
    beta: float
    init: str
    t_max: float
    t_steps: int
    replicas: int
    seed: int
    out: str
    exact: bool | None
    n_max: int
    workers: int

    def validate(self) -> ModelParams:
        p = ModelParams(self.n, self.beta)
        kind = InitialConditionKind(self.init)
        if kind is InitialConditionKind.BLT:
            p.require_multiple_of_four("bi-alternating start")
        if not (self.t_max > 0 and math.isfinite(self.t_max)):
            raise InvalidParameterError("--t-max must be positive")
        if self.t_steps < 2:
            raise InvalidParameterError("--t-steps must be >= 2")
        if self.replicas < 2:
            raise InvalidParameterError("--replicas must be >= 2")
        if self.exact and self.n > self.n_max:
            raise CapacityError(
                f"exact TV needs n <= {self.n_max}, got n={self.n}; rerun without --exact to drop the exact_tv column"
            )
        return p


@dataclass(frozen=True)
class SweepConfig:
    n: int
    beta_grid: tuple[float, ...]
    eps: float
    seed: int
    out: str
    exact: bool | None
    n_max: int

    def validate(self) -> list[ModelParams]:
        if not self.beta_grid:
            raise InvalidParameterError("beta grid is empty")
        if not 0 < self.eps < 1:
            raise InvalidParameterError("--eps must lie in (0, 1)")
        params = [ModelParams(self.n, b) for b in self.beta_grid]
        params[0].require_multiple_of_four("sweep over the bi-alternating start")
        if self.exact and self.n > self.n_max:
            raise CapacityError(f"exact mixing times need n <= {self.n_max}, got n={self.n}; rerun without --exact")
        return params


@dataclass(frozen=True)
class SupportConfig:
    n: int
    beta: float
    horizon: float
    replicas: int
    seed: int
    out: str
    d_sep: int
    d_max: int
    max_dump: int

    def validate(self) -> ModelParams:
        p = ModelParams(self.n, self.beta)
        if not (self.horizon >= 0 and math.isfinite(self.horizon)):
            raise InvalidParameterError("--horizon must be non-negative")
        if self.replicas < 1:
            raise InvalidParameterError("--replicas must be >= 1")
        if self.d_sep < 1 or self.d_max < 1:
            raise InvalidParameterError("--d-sep and --d-max must be >= 1")
        return p


def parse_grid(text: str) -> tuple[float, ...]:
    try:
        start, stop, steps = text.split(":")
        k = int(steps)
        if k < 1:
            raise ValueError
        return tuple(float(b) for b in np.linspace(float(start), float(stop), k))
    except ValueError as exc:
        raise InvalidParameterError(f"beta grid must look like START:STOP:STEPS, got {text!r}") from exc


def _check_out(path: str) -> Path:
    out = Path(path)
    if not out.parent.exists():
        raise InvalidParameterError(f"output directory {out.parent} does not exist")
    return out


def cmd_verify(args) -> int:
    ok = checks.run_checks(args.filter, seed=args.seed)
    print("all checks passed" if ok else "invariant failure")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_mixing_curve(args) -> int:
    cfg = MixingCurveConfig(
        n=args.n,
        beta=args.beta,
        init=args.init,
        t_max=args.t_max,
        t_steps=args.t_steps,
        replicas=args.replicas,
        seed=args.seed,
        out=args.out,
        exact=args.exact,
        n_max=args.n_max,
        workers=args.workers,
    )
    p = cfg.validate()
    out = _check_out(cfg.out)
    times = np.linspace(0.0, cfg.t_max, cfg.t_steps)
    rng = np.random.default_rng(cfg.seed)
    curve = mixing_curve(cfg.init, p, times, cfg.replicas, rng, n_max=cfg.n_max, exact=cfg.exact, workers=cfg.workers)
    meta = {"command": "mixing-curve", "config": asdict(cfg), "theta": p.theta, "version": version_string()}
    csv_path, json_path = write_curve(curve, out, meta)
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = SweepConfig(
        n=args.n,
        beta_grid=parse_grid(args.beta_grid),
        eps=args.eps,
        seed=args.seed,
        out=args.out,
        exact=args.exact,
        n_max=args.n_max,
    )
    params = cfg.validate()
    out = _check_out(cfg.out)
    use_exact = cfg.n <= cfg.n_max if cfg.exact is None else cfg.exact
    rows = []
    for p in params:
        for init in INIT_CHOICES:
            kind = InitialConditionKind(init)
            row = {
                "beta": repr(p.beta),
                "theta": repr(p.theta),
                "init": init,
                "predicted_constant": repr(float(predicted_mixing_constant(kind, p))),
            }
            if use_exact:
                start = make_initial(kind, p.n) if kind.deterministic else annealed_distribution(p.n, cfg.n_max)
                tmix = exact_mixing_time(start, cfg.eps, p, n_max=cfg.n_max)
                row["exact_tmix"] = repr(tmix)
                row["exact_tmix_over_log_n"] = repr(tmix / math.log(p.n))
            rows.append(row)
    with out.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    meta = {"command": "sweep", "config": asdict(cfg), "version": version_string()}
    Path(str(out) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_support(args) -> int:
    log_n = math.log(args.n) if args.n > 0 else 0.0
    cfg = SupportConfig(
        n=args.n,
        beta=args.beta,
        horizon=args.horizon,
        replicas=args.replicas,
        seed=args.seed,
        out=args.out,
        d_sep=args.d_sep if args.d_sep is not None else max(1, round(log_n**2)),
        d_max=args.d_max if args.d_max is not None else max(1, round(log_n**3)),
        max_dump=args.max_dump,
    )
    p = cfg.validate()
    out = _check_out(cfg.out)
    rng = np.random.default_rng(cfg.seed)
    empty = UpdateSequence(p.n, 0.0, np.empty(0), np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64), np.empty(0))
    survived = []
    displacement = []
    event_a = 0
    dumped = []
    for r in range(cfg.replicas):
        seq = sample_update_sequence(p, cfg.horizon, rng) if cfg.horizon > 0 else empty
        support, trajs = histories.backward_support(range(p.n), 0.0, cfg.horizon, seq, p)
        survived.append(sum(h.survived for h in trajs) / p.n)
        displacement.append(histories.max_displacement(trajs))
        dec = histories.cluster_decomposition(histories.surviving_origins(trajs), p, cfg.d_sep, cfg.d_max)
        event_a += dec.event_A
        if r < cfg.max_dump:
            dumped.append((r, trajs))
    histories.write_trajectories_csv(out, dumped)
    # coalesced walkers share a fate, so the error bar is per replica
    frac = float(np.mean(survived))
    frac_se = float(np.std(survived, ddof=1) / math.sqrt(cfg.replicas)) if cfg.replicas > 1 else None
    summary = {
        "command": "support",
        "config": asdict(cfg),
        "theta": p.theta,
        "survival_fraction": frac,
        "survival_stderr": frac_se,
        "predicted_survival": histories.survival_probability(p, cfg.horizon),
        "mean_max_displacement": float(np.mean(displacement)),
        "max_max_displacement": int(np.max(displacement)),
        "event_A_rate": event_a / cfg.replicas,
        "replicas_dumped": len(dumped),
        "version": version_string(),
    }
    Path(str(out) + ".json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps({k: summary[k] for k in ("survival_fraction", "predicted_survival", "event_A_rate")}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="glauber1d", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the invariant suite")
    v.add_argument("--filter", default=None, help="module or check name")
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    m = sub.add_parser("mixing-curve", help="statistic-based TV lower bounds (and exact TV for small n)")
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--beta", type=float, required=True)
    m.add_argument("--init", choices=INIT_CHOICES, required=True)
    m.add_argument("--t-max", type=float, required=True)
    m.add_argument("--t-steps", type=int, required=True)
    m.add_argument("--replicas", type=int, default=100_000)
    m.add_argument("--seed", type=int, required=True)
    m.add_argument("--out", required=True)
    m.add_argument("--exact", action=argparse.BooleanOptionalAction, default=None)
    m.add_argument("--n-max", type=int, default=DEFAULT_N_MAX)
    m.add_argument("--workers", type=int, default=default_workers())
    m.set_defaults(func=cmd_mixing_curve)

    s = sub.add_parser("sweep", help="predicted constants (and exact t_mix) over a beta grid")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--beta-grid", required=True, metavar="START:STOP:STEPS")
    s.add_argument("--eps", type=float, default=0.25)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--exact", action=argparse.BooleanOptionalAction, default=None)
    s.add_argument("--n-max", type=int, default=DEFAULT_N_MAX)
    s.set_defaults(func=cmd_sweep)

    u = sub.add_parser("support", help="backward histories and cluster diagnostics")
    u.add_argument("--n", type=int, required=True)
    u.add_argument("--beta", type=float, required=True)
    u.add_argument("--horizon", type=float, required=True)
    u.add_argument("--replicas", type=int, default=1000)
    u.add_argument("--seed", type=int, required=True)
    u.add_argument("--out", required=True)
    u.add_argument("--d-sep", type=int, default=None)
    u.add_argument("--d-max", type=int, default=None)
    u.add_argument("--max-dump", type=int, default=100, help="replicas written to the trajectory CSV")
    u.set_defaults(func=cmd_support)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except InvalidParameterError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
