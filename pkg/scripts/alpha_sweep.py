#!/usr/bin/env python3
"""Sweep the delay-split fraction alpha and report how the optimum moves.

Alpha decides how much of each service's delay budget is reserved for the
server queue versus the reply link on remote routes.  Extreme settings
strangle one side or the other; this prints the profit, hit ratio, and mean
delay over a grid so the flat region is visible:

    python3 scripts/alpha_sweep.py --seed 3 --points 11
    python3 scripts/alpha_sweep.py --out alpha.dat   # gnuplot-ready
"""

import argparse

import numpy as np

from mecbend import gbd
from mecbend.formulation import hit_ratio, mean_delay_s
from mecbend.scenario import desk_config, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bs", type=int, default=3)
    ap.add_argument("--services", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--delay-ms", type=float, default=400.0)
    ap.add_argument("--points", type=int, default=9)
    ap.add_argument("--out", default=None, help="optional .dat path")
    args = ap.parse_args()

    rows = []
    print(f"{'alpha':>6} {'profit $/s':>12} {'hit':>6} {'delay ms':>9} "
          f"{'iters':>5}")
    for a in np.linspace(0.1, 0.9, args.points):
        inst = generate(desk_config(
            num_bs=args.bs, num_services=args.services, seed=args.seed,
            target_delay_ms=args.delay_ms, alpha=float(a)))
        res = gbd.solve(inst)
        row = (float(a), res.value, hit_ratio(inst, res.solution),
               mean_delay_s(inst, res.solution) * 1e3, len(res.iterations))
        rows.append(row)
        print(f"{row[0]:>6.2f} {row[1]:>12.6f} {row[2]:>6.3f} "
              f"{row[3]:>9.1f} {row[4]:>5}")

    best = max(rows, key=lambda r: r[1])
    print(f"\nbest alpha {best[0]:.2f} at {best[1]:.6f} $/s")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("# alpha profit hit_ratio mean_delay_ms iterations\n")
            for row in rows:
                fh.write(" ".join(f"{v:.6g}" for v in row) + "\n")
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
