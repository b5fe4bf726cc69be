#!/usr/bin/env python3
"""Solve one generated instance and print the bound trajectory.

Handy for eyeballing how fast the gap closes and which iterations needed
feasibility cuts, e.g.:

    python3 scripts/convergence_demo.py --bs 3 --services 4 --seed 7
    python3 scripts/convergence_demo.py --delay-ms 150 --epsilon 1e-8
"""

import argparse

from mecbend import gbd
from mecbend.formulation import hit_ratio, mean_delay_s
from mecbend.scenario import desk_config, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bs", type=int, default=3)
    ap.add_argument("--services", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--epsilon", type=float, default=None)
    ap.add_argument("--delay-ms", type=float, default=400.0)
    args = ap.parse_args()

    inst = generate(desk_config(
        num_bs=args.bs, num_services=args.services, seed=args.seed,
        alpha=args.alpha, epsilon=args.epsilon,
        target_delay_ms=args.delay_ms))
    res = gbd.solve(inst)

    print(f"{'iter':>4} {'lower':>12} {'upper':>12} {'gap':>10} "
          f"{'inner':>10} cut")
    for it in res.iterations:
        print(f"{it.iteration:>4} {it.lower:>12.6f} {it.upper:>12.6f} "
              f"{it.gap:>10.2e} {it.inner_status:>10} {it.cut_kind}")

    kinds = [c.kind for c in res.cuts]
    print(f"\nstatus {res.status} after {len(res.iterations)} iterations "
          f"({kinds.count('optimality')} optimality, "
          f"{kinds.count('feasibility')} feasibility cuts)")
    print(f"profit {res.value:.6f} $/s   "
          f"hit ratio {hit_ratio(inst, res.solution):.3f}   "
          f"mean delay {mean_delay_s(inst, res.solution) * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
