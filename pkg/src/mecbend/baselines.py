"""Reference policies the decomposition is benchmarked against.

Three deliberately simple competitors:

* ``nc`` (no cooperation): every base station may serve only its own users,
  no backhaul and no cloud offload.  Realized as the decomposition itself
  with all non-local routes masked off, so its result is optimal within
  that restricted policy class rather than an artifact of a weaker solver.
* ``ao`` (alternating optimization): alternate between the routing/CPU LP at
  a fixed discrete decision and an exact discrete step at the fixed LP
  point (keep the placements the flows actually use, open every route the
  current flows could serve without violating a constraint).  Starts from
  the cloud-only pattern unless given another seed.
* ``rr`` (relax and round): solve the joint LP relaxation of everything,
  round at one half, repair storage overruns by evicting the least
  committed placements, then price the repaired pattern with the LP.

Each returns a :class:`BaselineReport` whose solution passes the same
feasibility checkers as the decomposition's output.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from mecbend import gbd
from mecbend.formulation import (ConstraintSystem, Solution, build_G,
                                 operating_profit_coeffs, profit,
                                 storage_cost)
from mecbend.model import Instance
from mecbend.subproblems import GHZ, OPTIMAL, linprog_max, solve_inner


@dataclass(frozen=True)
class BaselineReport:
    name: str
    solution: Solution
    profit: float
    wall_ms: float


def _supportable_routes(cs: ConstraintSystem, v: np.ndarray) -> np.ndarray:
    """Which routes could be open at the fixed LP point v.

    A route qualifies when every row carrying its indicator still holds with
    the indicator at one.  Routes whose propagation alone exceeds the delay
    target fail their scaled link row (it degenerates to -z >= 0), so they
    are rejected here without a separate reachability check.
    """
    rowvals = cs.A @ v + cs.b0 + np.where(cs.row_route >= 0, cs.zcoef, 0.0)
    ok = np.ones(cs.n_y, dtype=bool)
    bad = cs.row_route[(cs.row_route >= 0) & (rowvals < 0.0)]
    ok[np.unique(bad)] = False
    return ok


def _viable_routes(cs: ConstraintSystem) -> np.ndarray:
    """Routes that pass the bandwidth and propagation screen with no flow.

    Only indicator rows free of CPU terms are tested (the LP can always buy
    standby CPU later, but link capacity and propagation are fixed), so this
    is the right screen for seeding a pattern before any LP has run.
    """
    has_u = (cs.A[:, cs.n_y:] != 0).sum(axis=1) > 0
    check = (cs.row_route >= 0) & ~np.asarray(has_u).reshape(-1)
    rowvals = cs.b0 + cs.zcoef
    ok = np.ones(cs.n_y, dtype=bool)
    bad = cs.row_route[check & (rowvals < 0.0)]
    ok[np.unique(bad)] = False
    return ok


def _dense_routes(cs: ConstraintSystem, zflat: np.ndarray) -> np.ndarray:
    out = np.zeros((cs.num_services, cs.num_bs, cs.num_servers), dtype=np.int8)
    out[cs.routes[:, 0], cs.routes[:, 1], cs.routes[:, 2]] = zflat.astype(np.int8)
    return out


def solve_nc(instance: Instance,
             master_node_limit: Optional[int] = None) -> BaselineReport:
    """Optimal no-cooperation policy: serve locally or not at all."""
    t0 = time.perf_counter()
    E, N, S = instance.num_bs, instance.num_servers, instance.num_services
    allowed = np.zeros((S, E, N), dtype=bool)
    allowed[:, np.arange(E), np.arange(E)] = True
    res = gbd.solve(instance, allowed_routes=allowed,
                    master_node_limit=master_node_limit)
    sol = res.solution
    return BaselineReport(name="nc", solution=sol,
                          profit=profit(instance, sol).total,
                          wall_ms=(time.perf_counter() - t0) * 1e3)


def solve_ao(instance: Instance,
             initial: Optional[tuple[np.ndarray, np.ndarray]] = None,
             rounds: int = 50) -> BaselineReport:
    """Alternate the LP at fixed binaries with an exact binary step at the
    fixed LP point; keep the most profitable snapshot seen."""
    t0 = time.perf_counter()
    cs = build_G(instance)
    E, N, S = instance.num_bs, instance.num_servers, instance.num_services
    cloud = instance.cloud
    route_n = cs.routes[:, 2]

    if initial is None:
        placement = np.zeros((N, S), dtype=np.int8)
        placement[cloud, :] = 1
        zflat = _viable_routes(cs) & (route_n == cloud)
    else:
        placement = np.asarray(initial[0], dtype=np.int8).copy()
        placement[cloud, :] = 1
        zflat = cs.route_values(np.asarray(initial[1])) > 0.5

    best: Optional[Solution] = None
    best_profit = -np.inf
    seen: set[bytes] = set()

    for _ in range(rounds):
        key = placement.tobytes() + zflat.tobytes()
        if key in seen:
            break
        seen.add(key)

        inner = solve_inner(instance, _dense_routes(cs, zflat), cs)
        if inner.status != OPTIMAL:
            if best is None:
                # an over-ambitious seed pattern; restart from nothing open
                zflat = np.zeros(cs.n_y, dtype=bool)
                continue
            break  # keep the best snapshot instead of a worse repair
        v = cs.pack(inner.route_frac, inner.cpu_rate)

        used = v[:cs.n_y] > 1e-9
        new_placement = np.zeros((N, S), dtype=np.int8)
        new_placement[cloud, :] = 1
        served = cs.routes[used]
        new_placement[served[:, 2], served[:, 0]] = 1
        placed = new_placement[cs.routes[:, 2], cs.routes[:, 0]].astype(bool)
        new_zflat = used | (_supportable_routes(cs, v) & placed)

        snapshot = inner.value - storage_cost(instance, new_placement)
        if snapshot > best_profit:
            best_profit = snapshot
            best = Solution(placement=new_placement,
                            route_open=_dense_routes(cs, new_zflat),
                            route_frac=inner.route_frac.copy(),
                            cpu_rate=inner.cpu_rate.copy())
        if (new_placement == placement).all() and (new_zflat == zflat).all():
            break
        placement, zflat = new_placement, new_zflat

    if best is None:
        raise RuntimeError("alternation produced no feasible point; "
                           "the all-cloud start should never fail")
    return BaselineReport(name="ao", solution=best, profit=best_profit,
                          wall_ms=(time.perf_counter() - t0) * 1e3)


def _joint_relaxation(instance: Instance, cs: ConstraintSystem):
    """One LP over placement, route indicators, flows, and CPU, all in [0,1]
    boxes where binary; returns the fractional (x, z) blocks."""
    E, N, S = instance.num_bs, instance.num_servers, instance.num_services
    cloud = instance.cloud
    nx = E * S
    nz = cs.n_y
    nv = cs.n_y + cs.n_u
    off_v = nx + nz

    ai: list[int] = []
    aj: list[int] = []
    av: list[float] = []
    bb: list[float] = []

    coo = cs.A.tocoo()
    ai.extend(coo.row.tolist())
    aj.extend((coo.col + off_v).tolist())
    av.extend(coo.data.tolist())
    has_z = np.nonzero(cs.row_route >= 0)[0]
    ai.extend(has_z.tolist())
    aj.extend((nx + cs.row_route[has_z]).tolist())
    av.extend(cs.zcoef[has_z].tolist())
    bb.extend(cs.b0.tolist())

    def new_row(entries, const):
        i = len(bb)
        for j, val in entries:
            if val != 0.0:
                ai.append(i)
                aj.append(j)
                av.append(val)
        bb.append(const)

    for e in range(E):
        new_row([(e * S + s, -float(instance.size_bytes[s])) for s in range(S)],
                float(instance.storage_cap[e]))
    for k, (s, e, n) in enumerate(cs.routes.tolist()):
        if n != cloud:
            new_row([(n * S + s, 1.0), (nx + k, -1.0)], 0.0)

    ncols = off_v + nv
    A = sp.csr_array(sp.coo_array((av, (ai, aj)), shape=(len(bb), ncols)))
    b = np.asarray(bb)

    c = np.zeros(ncols)
    c[off_v:] = operating_profit_coeffs(instance, cs)
    hold = instance.storage_price[:E, None] * instance.size_bytes[None, :]
    c[:nx] = -hold.reshape(-1)

    lower = np.zeros(ncols)
    upper = np.ones(ncols)
    upper[off_v + cs.n_y:] = np.inf
    scale = np.ones(ncols)
    scale[off_v + cs.n_y:] = GHZ

    res = linprog_max(c, A, b, lower, upper, instance.params.lp_tolerance,
                      col_scale=scale)
    if res.status != OPTIMAL:
        raise RuntimeError("joint relaxation infeasible; the closed point "
                           "should always satisfy it")
    return res.x[:nx], res.x[nx:nx + nz]


def solve_relax_round(instance: Instance) -> BaselineReport:
    """Round the joint LP relaxation at one half and repair, falling back to
    the all-cloud pattern if the rounded point prices out as infeasible."""
    t0 = time.perf_counter()
    cs = build_G(instance)
    E, N, S = instance.num_bs, instance.num_servers, instance.num_services
    cloud = instance.cloud
    xfrac, zfrac = _joint_relaxation(instance, cs)

    xint = xfrac >= 0.5
    zflat = zfrac >= 0.5
    placed = np.ones(cs.n_y, dtype=bool)
    bs_route = cs.routes[:, 2] != cloud
    placed[bs_route] = xint[cs.routes[bs_route, 2] * S + cs.routes[bs_route, 0]]
    zflat &= placed

    for e in range(E):
        placed_s = [s for s in range(S) if xint[e * S + s]]
        placed_s.sort(key=lambda s: xfrac[e * S + s])
        while placed_s and (sum(instance.size_bytes[s] for s in placed_s)
                            > instance.storage_cap[e]):
            drop = placed_s.pop(0)
            xint[e * S + drop] = False
            zflat[(cs.routes[:, 2] == e) & (cs.routes[:, 0] == drop)] = False

    placement = np.zeros((N, S), dtype=np.int8)
    placement[cloud, :] = 1
    placement[:E, :] = xint.reshape(E, S)

    inner = solve_inner(instance, _dense_routes(cs, zflat), cs)
    if inner.status != OPTIMAL:
        # rounded standby burdens can overload a queue; retreat to the cloud
        placement = np.zeros((N, S), dtype=np.int8)
        placement[cloud, :] = 1
        zflat = _viable_routes(cs) & (cs.routes[:, 2] == cloud)
        inner = solve_inner(instance, _dense_routes(cs, zflat), cs)
        if inner.status != OPTIMAL:
            # even the cloud cannot host these targets; serve nothing
            zflat = np.zeros(cs.n_y, dtype=bool)
            inner = solve_inner(instance, _dense_routes(cs, zflat), cs)

    sol = Solution(placement=placement, route_open=_dense_routes(cs, zflat),
                   route_frac=inner.route_frac.copy(),
                   cpu_rate=inner.cpu_rate.copy())
    return BaselineReport(name="rr", solution=sol,
                          profit=inner.value - storage_cost(instance, placement),
                          wall_ms=(time.perf_counter() - t0) * 1e3)


BASELINES = {
    "nc": solve_nc,
    "ao": solve_ao,
    "rr": solve_relax_round,
}
