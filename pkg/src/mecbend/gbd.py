"""Outer decomposition loop.

Alternates between the inner operating problem at a fixed binary point and
the cut-envelope master, tightening a lower bound (best point found) and an
upper bound (master optimum) until they meet.

The starting point keeps every route closed: it is feasible for any instance
(the cloud stores everything and nothing is admitted), so the first pass
always lands an optimality cut and the master is well posed from then on.

Convergence stalls badly if cuts come only from the binary iterates: many
route patterns sit within 1e-5 of each other and each cut shaves one of
them off.  The inner optimum is concave in the route indicators (an LP value
with affine right-hand side), so a cut generated at a fractional interior
point is valid everywhere and supports the surface where it is smooth.  Each
iteration therefore also prices a drifting core point, halfway between the
previous core and the latest master proposal.  On small instances this cuts
iteration counts from hundreds to a handful.

Every quantity that feeds the decision path is deterministic; wall-clock
timings are recorded for reporting but never branch on.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from mecbend.cutfactory import (Cut, make_feasibility_cut, make_optimality_cut)
from mecbend.formulation import Solution, build_G, storage_cost
from mecbend.master import blocked_routes, solve_master
from mecbend.model import Instance, validate
from mecbend.subproblems import OPTIMAL, solve_feasibility, solve_inner

CONVERGED = "converged"
ITERATION_LIMIT = "iteration_limit"

# A point may legitimately repeat once or twice while the bounds close the
# last sliver of gap; more than this means the cuts are not separating.
MAX_POINT_VISITS = 3


class GbdCycleError(RuntimeError):
    """The master re-proposed one (placement, routes) point too many times."""

    def __init__(self, visits: int):
        super().__init__(
            f"master proposed the same binary point {visits} times; "
            "cuts are not separating")
        self.visits = visits


@dataclass(frozen=True)
class GbdIteration:
    iteration: int
    lower: float
    upper: float
    inner_status: str
    cut_kind: str
    wall_ms: float

    @property
    def gap(self) -> float:
        return self.upper - self.lower


@dataclass
class GbdResult:
    status: str
    value: float              # best proven profit rate, $/s
    upper: float               # master bound at exit
    solution: Solution
    iterations: list[GbdIteration]
    cuts: list[Cut]
    epsilon: float

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    @property
    def gap(self) -> float:
        return self.upper - self.value

    def trace_rows(self) -> list[dict]:
        return [{"iter": it.iteration, "lb": it.lower, "ub": it.upper,
                 "gap": it.gap, "inner_status": it.inner_status,
                 "cut_kind": it.cut_kind, "wall_ms": it.wall_ms}
                for it in self.iterations]


def solve(instance: Instance,
          allowed_routes: Optional[np.ndarray] = None,
          master_node_limit: Optional[int] = None) -> GbdResult:
    """Run the decomposition to the instance's epsilon or iteration budget.

    allowed_routes: optional (S, E, N) boolean mask; False entries are held
    closed throughout (used by the no-cooperation policy).

    master_node_limit: per-iteration branch and bound budget.  A truncated
    master still reports a valid upper bound, so the bound sequence stays
    honest, but the gap can only certify convergence once a master finishes
    within budget; large instances typically stop at the iteration limit
    with the best profit found.
    """
    problems = validate(instance)
    if problems:
        raise ValueError("invalid instance: " + "; ".join(problems))
    params = instance.params
    cs = build_G(instance)
    E, N, S = instance.num_bs, instance.num_servers, instance.num_services

    forbidden = None
    if allowed_routes is not None:
        allowed = np.asarray(allowed_routes, dtype=bool)
        if allowed.shape != (S, E, N):
            raise ValueError(
                f"allowed_routes must have shape {(S, E, N)}, "
                f"got {allowed.shape}")
        forbidden = {(s, e, n)
                     for s in range(S) for e in range(E) for n in range(N)
                     if instance.link_mask[e, n] and not allowed[s, e, n]}

    placement = np.zeros((N, S), dtype=np.int8)
    placement[instance.cloud, :] = 1
    route_open = np.zeros((S, E, N), dtype=np.int8)

    openable = np.zeros((S, E, N))
    for s in range(S):
        openable[s] = instance.link_mask
    for s, e, n in blocked_routes(instance):
        openable[s, e, n] = 0.0
    if forbidden:
        for s, e, n in forbidden:
            openable[s, e, n] = 0.0
    core = 0.5 * openable

    lower, upper = -np.inf, np.inf
    epsilon = params.epsilon
    incumbent: Optional[Solution] = None
    cuts: list[Cut] = []
    iterations: list[GbdIteration] = []
    inner_cache: dict[bytes, object] = {}
    cut_seen: set[bytes] = set()
    visits: dict[bytes, int] = {}
    status = ITERATION_LIMIT
    node_limit = 200_000 if master_node_limit is None else master_node_limit
    any_truncated = False

    for it in range(1, params.max_iterations + 1):
        t0 = time.perf_counter()

        point_key = placement.tobytes() + route_open.tobytes()
        visits[point_key] = visits.get(point_key, 0) + 1
        if visits[point_key] > MAX_POINT_VISITS:
            if any_truncated:
                # a budget-cut master may legitimately re-propose a point;
                # once it has done so this often there is nothing new to learn
                break
            raise GbdCycleError(visits[point_key])

        zkey = route_open.tobytes()
        inner = inner_cache.get(zkey)
        if inner is None:
            inner = solve_inner(instance, route_open, cs)
            inner_cache[zkey] = inner

        if inner.status == OPTIMAL:
            cut = make_optimality_cut(instance, cs, route_open, inner)
            value = inner.value - storage_cost(instance, placement)
            if value > lower:
                lower = value
                incumbent = Solution(placement=placement.copy(),
                                     route_open=route_open.copy(),
                                     route_frac=inner.route_frac.copy(),
                                     cpu_rate=inner.cpu_rate.copy())
            if epsilon is None:
                epsilon = 1e-4 * max(1.0, abs(value))
        else:
            if it == 1:
                raise RuntimeError(
                    "the all-closed starting point must be feasible; "
                    "the inner solver disagrees")
            probe = solve_feasibility(instance, route_open, cs)
            cut = make_feasibility_cut(instance, cs, route_open, probe)
        if zkey not in cut_seen:
            cuts.append(cut)
            cut_seen.add(zkey)

        ckey = core.tobytes()
        if ckey not in cut_seen:
            core_inner = inner_cache.get(ckey)
            if core_inner is None:
                core_inner = solve_inner(instance, core, cs)
                inner_cache[ckey] = core_inner
            if core_inner.status == OPTIMAL:
                core_cut = make_optimality_cut(instance, cs, core, core_inner)
            else:
                core_cut = make_feasibility_cut(
                    instance, cs, core,
                    solve_feasibility(instance, core, cs))
            cuts.append(core_cut)
            cut_seen.add(ckey)

        if upper - lower <= epsilon:
            status = CONVERGED
            iterations.append(GbdIteration(
                it, lower, upper, inner.status, cut.kind,
                (time.perf_counter() - t0) * 1e3))
            break

        seed = (incumbent.placement, incumbent.route_open) \
            if incumbent is not None else (placement, route_open)
        master = solve_master(instance, cuts, warm_start=seed,
                              forbidden_routes=forbidden,
                              node_limit=node_limit)
        if not master.exact:
            any_truncated = True
        upper = min(upper, master.value)
        placement, route_open = master.placement, master.route_open
        core = 0.5 * (core + route_open)

        iterations.append(GbdIteration(
            it, lower, upper, inner.status, cut.kind,
            (time.perf_counter() - t0) * 1e3))
        if upper - lower <= epsilon:
            status = CONVERGED
            break

    if incumbent is None:
        raise RuntimeError("no feasible point was ever evaluated")
    return GbdResult(status=status, value=lower, upper=upper,
                     solution=incumbent, iterations=iterations,
                     cuts=cuts, epsilon=epsilon)
