"""Exact TV-to-stationarity profiles on small cycles, time rescaled by log n.

Shows the profiles sharpening as n grows, and how the ordering of the starts
matches the predicted constants.

    python scripts/exact_profiles.py --beta 0.15 --sizes 8 10 12
"""

import argparse
import math

import numpy as np

from glauber1d.model import InitialConditionKind, ModelParams, make_initial
from glauber1d.oracle import annealed_distribution, tv_to_stationary


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--beta", type=float, default=0.15)
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 12])
    ap.add_argument("--points", type=int, default=9)
    ap.add_argument("--scale-max", type=float, default=2.0, help="largest t / log n")
    args = ap.parse_args()

    scales = np.linspace(0.0, args.scale_max, args.points)
    print("t/log n  " + "  ".join(f"{s:6.3f}" for s in scales))
    for n in args.sizes:
        p = ModelParams(n, args.beta)
        for kind in ("alt", "blt", "plus", "annealed"):
            k = InitialConditionKind(kind)
            if k is InitialConditionKind.BLT and n % 4:
                continue
            x0 = make_initial(k, n) if k.deterministic else annealed_distribution(n)
            tv = tv_to_stationary(x0, scales * math.log(n), p)
            print(f"n={n:<3}{kind:>8} " + "  ".join(f"{v:6.3f}" for v in tv))


if __name__ == "__main__":
    main()
