#!/usr/bin/env python3
"""Cross-check the planner's analytic delays against the event simulator.

Solves a small instance, replays it through the discrete-event model, and
prints one line per queue with the analytic mean, the simulated mean, and
its standard error.  Server rows also show the utilization the plan
implies.  Disagreement beyond ~3 standard errors on a lightly loaded queue
would point at a modeling bug:

    python3 scripts/sim_check.py --seed 4 --arrivals 200000
"""

import argparse

import numpy as np

from mecbend import gbd
from mecbend.queuesim import simulate
from mecbend.scenario import desk_config, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bs", type=int, default=3)
    ap.add_argument("--services", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--arrivals", type=int, default=100_000)
    ap.add_argument("--sim-seed", type=int, default=1)
    args = ap.parse_args()

    inst = generate(desk_config(num_bs=args.bs, num_services=args.services,
                                seed=args.seed))
    res = gbd.solve(inst)
    print(f"solved: {res.status}, profit {res.value:.6f} $/s")
    rep = simulate(inst, res.solution, args.arrivals, seed=args.sim_seed)

    occ = np.einsum("es,sen->ns", inst.demand_rate, res.solution.route_frac)
    print(f"\n{'queue':<24} {'rho':>5} {'analytic':>10} {'simulated':>10} "
          f"{'stderr':>8} {'n':>7}")
    for stat in rep.servers:
        n = int(stat.queue.split("n=")[1].split(",")[0])
        s = int(stat.queue.split("s=")[1])
        mu = res.solution.cpu_rate[n, s] / inst.work_cycles[s]
        rho = occ[n, s] / mu if mu > 0 else float("inf")
        flag = "" if abs(stat.simulated_ms - stat.analytic_ms) \
            <= max(0.05 * stat.analytic_ms, 3 * stat.stderr_ms) else "  <-- off"
        print(f"{stat.queue:<24} {rho:>5.2f} {stat.analytic_ms:>10.2f} "
              f"{stat.simulated_ms:>10.2f} {stat.stderr_ms:>8.2f} "
              f"{stat.samples:>7}{flag}")
    for stat in (*rep.links, *rep.flows):
        print(f"{stat.queue:<24} {'':>5} {stat.analytic_ms:>10.2f} "
              f"{stat.simulated_ms:>10.2f} {stat.stderr_ms:>8.2f} "
              f"{stat.samples:>7}")

    slack = [inst.dmax_s[int(st.queue.split('s=')[1].split(',')[0])] * 1e3
             - st.simulated_ms for st in rep.flows]
    if slack:
        print(f"\nworst end-to-end slack {min(slack):.1f} ms "
              f"(negative would breach a delay target)")


if __name__ == "__main__":
    main()
