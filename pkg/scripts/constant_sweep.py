"""Predicted mixing constants against beta for each start, with exact small-n times.

Writes one CSV row per (beta, start): the predicted coefficient of log n and,
for n within the exact oracle's reach, t_mix(eps) / log n.

    python scripts/constant_sweep.py --n 12 --betas 0:1.2:25 --out sweep.csv
"""

import argparse
import csv
import math

import numpy as np

from glauber1d.model import InitialConditionKind, ModelParams, make_initial
from glauber1d.oracle import DEFAULT_N_MAX, annealed_distribution, exact_mixing_time
from glauber1d.semigroup import predicted_mixing_constant

STARTS = [InitialConditionKind(k) for k in ("alt", "blt", "plus", "annealed")]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--betas", default="0:1.2:25", help="START:STOP:STEPS")
    ap.add_argument("--eps", type=float, default=0.25)
    ap.add_argument("--out", default="constant_sweep.csv")
    args = ap.parse_args()

    start, stop, steps = args.betas.split(":")
    exact = args.n <= DEFAULT_N_MAX
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["beta", "theta", "init", "predicted_constant"] + (["exact_tmix_over_log_n"] if exact else []))
        for beta in np.linspace(float(start), float(stop), int(steps)):
            p = ModelParams(args.n, float(beta))
            for kind in STARTS:
                row = [f"{p.beta:.6g}", f"{p.theta:.6g}", kind.value, f"{predicted_mixing_constant(kind, p):.6g}"]
                if exact:
                    x0 = make_initial(kind, p.n) if kind.deterministic else annealed_distribution(p.n)
                    row.append(f"{exact_mixing_time(x0, args.eps, p) / math.log(p.n):.6g}")
                w.writerow(row)
            print(f"beta={p.beta:.3f} done")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
