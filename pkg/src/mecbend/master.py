"""Relaxed master problem: pick placement and open routes against the cuts.

maximize    UB
subject to  UB <= constant_k + coeff_x_k @ x + coeff_z_k @ z   (optimality cuts)
            0  <= constant_k + coeff_z_k @ z                   (feasibility cuts)
            sum_s size_s * x[e, s] <= storage_e                (per BS)
            z[s, e, n] <= x[n, s]                              (per route, n a BS)
            x, z binary; cloud placement fixed to 1

Solved with an in-package best-bound branch and bound on top of the shared LP
wrapper: the cut pool changes every outer iteration and stays small, so node
LPs are cheap, and owning the search keeps node order, branching, and
tie-breaking fully deterministic (bit-identical reruns are a requirement,
and generic MILP solvers do not promise that across thread counts).

Routes whose propagation delay alone exhausts the network share of the delay
target can never be open in any feasible point; their variables are fixed to
zero up front.  The all-closed point satisfies every valid cut (closing all
routes is always serveable), so the master is never infeasible and always
returns an incumbent.

When the node budget runs out the search stops and returns the incumbent
together with the best bound still on the heap.  Best-bound pop order makes
that bound the largest over all unexplored subtrees, so the reported value is
a true upper bound on the master optimum; ``exact`` records whether the
search finished.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from mecbend.cutfactory import FEASIBILITY, OPTIMALITY, Cut
from mecbend.model import Instance
from mecbend.subproblems import INFEASIBLE, OPTIMAL, linprog_max

INT_TOL = 1e-6
PRUNE_EPS = 1e-9


@dataclass(frozen=True)
class MasterResult:
    placement: np.ndarray   # (N, S) int8, cloud row all ones
    route_open: np.ndarray  # (S, E, N) int8
    value: float            # upper bound on the master optimum
    nodes: int              # LPs solved during the search
    exact: bool = True      # False when the node budget truncated the search


def _route_list(instance: Instance) -> list[tuple[int, int, int]]:
    return [(s, e, n) for s in range(instance.num_services)
            for e in range(instance.num_bs)
            for n in range(instance.num_servers) if instance.link_mask[e, n]]


def blocked_routes(instance: Instance) -> set[tuple[int, int, int]]:
    """Routes no feasible point can open: propagation already exceeds the
    network share of the delay target."""
    out = set()
    alpha = instance.params.alpha
    for s, e, n in _route_list(instance):
        if n != e and alpha * instance.dmax_s[s] - instance.link_prop[e, n] <= 0.0:
            out.add((s, e, n))
    return out


def solve_master(instance: Instance, cuts: Sequence[Cut],
                 warm_start: Optional[tuple[np.ndarray, np.ndarray]] = None,
                 node_limit: int = 200_000,
                 forbidden_routes: Optional[set] = None) -> MasterResult:
    """Maximize the cut envelope over binary (placement, route_open).

    forbidden_routes: extra (s, e, n) triples fixed closed on top of the
    propagation-blocked ones (restricted-policy runs use this).
    """
    if not any(cut.kind == OPTIMALITY for cut in cuts):
        raise ValueError("master needs at least one optimality cut to be bounded")

    E, N, S = instance.num_bs, instance.num_servers, instance.num_services
    cloud = instance.cloud
    routes = _route_list(instance)
    blocked = blocked_routes(instance)
    if forbidden_routes:
        blocked |= set(forbidden_routes) & set(routes)
    nx = E * S
    nz = len(routes)
    ub_j = nx + nz
    nv = nx + nz + 1

    def xj(n, s):
        return n * S + s

    zj = {r: nx + k for k, r in enumerate(routes)}
    route_arr = np.asarray(routes, dtype=np.intp).reshape(nz, 3)
    route_s, route_e, route_n = route_arr[:, 0], route_arr[:, 1], route_arr[:, 2]
    blocked_z = np.zeros(nz, dtype=bool)
    for r in blocked:
        blocked_z[zj[r] - nx] = True
    nc_idx = np.where(route_n != cloud)[0]
    link_x = route_n[nc_idx] * S + route_s[nc_idx]  # x column each non-cloud route links to

    # ---- rows, assembled once per call (the cut pool is the only change) ----
    ai: list[int] = []
    aj: list[int] = []
    av: list[float] = []
    bb: list[float] = []

    def new_row(entries, const):
        i = len(bb)
        for j, val in entries:
            if val != 0.0:
                ai.append(i)
                aj.append(j)
                av.append(val)
        bb.append(const)

    for e in range(E):
        new_row([(xj(e, s), -float(instance.size_bytes[s])) for s in range(S)],
                float(instance.storage_cap[e]))
    for r in routes:
        s, e, n = r
        if n != cloud:
            new_row([(xj(n, s), 1.0), (zj[r], -1.0)], 0.0)
    for cut in cuts:
        const = cut.constant
        entries = []
        for (n, s), w in cut.coeff_x.items():
            if n == cloud:
                const += w  # cloud placement is fixed at one
            else:
                entries.append((xj(n, s), w))
        for r, w in cut.coeff_z.items():
            if r in zj:
                entries.append((zj[r], w))
        if cut.kind == OPTIMALITY:
            entries.append((ub_j, -1.0))
        new_row(entries, const)

    A = sp.csr_array(sp.coo_array((av, (ai, aj)), shape=(len(bb), nv)))
    b = np.asarray(bb)
    c = np.zeros(nv)
    c[ub_j] = 1.0
    lp_tol = instance.params.lp_tolerance

    # ---- incumbent candidates -----------------------------------------------
    # Candidate screening runs on flat 0/1 vectors with the cuts packed into
    # dense matrices, so one offer costs a couple of mat-vecs instead of a
    # Python loop over routes and cut dictionaries.

    def cut_mats(group):
        c0 = np.zeros(len(group))
        cx = np.zeros((len(group), nx))
        cz = np.zeros((len(group), nz))
        for i, cut in enumerate(group):
            c0[i] = cut.constant
            for (n, s), w in cut.coeff_x.items():
                if n == cloud:
                    c0[i] += w
                else:
                    cx[i, xj(n, s)] = w
            for r, w in cut.coeff_z.items():
                if r in zj:
                    cz[i, zj[r] - nx] = w
        return c0, cx, cz

    opt0, optx, optz = cut_mats([cut for cut in cuts if cut.kind == OPTIMALITY])
    fe0, fex, fez = cut_mats([cut for cut in cuts if cut.kind == FEASIBILITY])
    size = instance.size_bytes.astype(float)
    cap_slack = instance.storage_cap * (1 + 1e-9) + 1e-6

    root_lower = np.zeros(nv)
    root_upper = np.ones(nv)
    root_lower[ub_j] = -np.inf
    root_upper[ub_j] = np.inf
    zub = root_upper[nx:nx + nz]
    zub[blocked_z] = 0.0

    # Dominance fixings.  A route whose coefficient is zero in every cut can
    # be closed for free (no cut value moves, linking and storage only relax),
    # so some optimum has it closed.  A placement slot whose every unfixed
    # route is gone keeps only its storage cost, which is never negative, so
    # some optimum leaves it empty.  Restricting the search this way changes
    # neither the optimal value nor its validity as an upper bound.
    idle_z = (np.abs(optz).sum(axis=0) + np.abs(fez).sum(axis=0)) == 0.0
    zub[idle_z] = 0.0
    open_x = np.zeros(nx, dtype=bool)
    live = zub > 0.0
    open_x[link_x[live[nc_idx]]] = True
    root_upper[:nx][~open_x] = 0.0

    def candidate_value(xflat: np.ndarray, zflat: np.ndarray):
        """min optimality-cut RHS if the point is master-feasible, else None.

        Tolerances here are strictly looser than the node LP's, so a point
        the LP accepts at exact binary values is never rejected.
        """
        if np.any(xflat.reshape(E, S) @ size > cap_slack):
            return None
        if np.any(zflat[blocked_z] > 0.5):
            return None
        if np.any(zflat[nc_idx] > xflat[link_x] + 0.5):
            return None
        if fe0.size and np.min(fe0 + fex @ xflat + fez @ zflat) < -1e-7:
            return None
        return float(np.min(opt0 + optx @ xflat + optz @ zflat))

    def to_dense(xflat: np.ndarray, zflat: np.ndarray):
        placement = np.zeros((N, S), dtype=np.int8)
        placement[cloud, :] = 1
        placement[:E, :] = np.rint(xflat).astype(np.int8).reshape(E, S)
        route_open = np.zeros((S, E, N), dtype=np.int8)
        route_open[route_s, route_e, route_n] = np.rint(zflat).astype(np.int8)
        return placement, route_open

    incumbent_value = -np.inf
    incumbent_point = None
    offered: dict[bytes, Optional[float]] = {}

    def offer(xflat, zflat):
        nonlocal incumbent_value, incumbent_point
        xb = np.rint(np.asarray(xflat, dtype=float))
        zb = np.rint(np.asarray(zflat, dtype=float))
        key = xb.astype(np.int8).tobytes() + zb.astype(np.int8).tobytes()
        if key in offered:
            return offered[key]
        val = candidate_value(xb, zb)
        offered[key] = val
        if val is not None and val > incumbent_value:
            incumbent_value = val
            incumbent_point = to_dense(xb, zb)
        return val

    offer(np.zeros(nx), np.zeros(nz))
    if warm_start is not None:
        wx = np.asarray(warm_start[0], dtype=float)[:E, :].reshape(-1)
        wz = np.asarray(warm_start[1], dtype=float)[route_s, route_e, route_n]
        offer(wx, wz)

    root = linprog_max(c, A, b, root_lower, root_upper, lp_tol)
    if root.status != OPTIMAL:
        raise RuntimeError("master root relaxation is infeasible; cut pool broken")
    nodes = 1

    # rounding pass over the root point, with a storage repair loop that
    # evicts the least-committed placements first
    rx = root.x[:nx].copy()
    rz = root.x[nx:nx + nz].copy()
    xint = (rx >= 0.5).astype(float)
    zint = (rz >= 0.5).astype(float)
    zint[blocked_z] = 0.0
    zint[nc_idx[xint[link_x] < 0.5]] = 0.0
    for e in range(E):
        placed = [s for s in range(S) if xint[xj(e, s)] > 0.5]
        placed.sort(key=lambda s: rx[xj(e, s)])
        while placed and (sum(instance.size_bytes[s] for s in placed)
                          > instance.storage_cap[e]):
            drop = placed.pop(0)
            xint[xj(e, drop)] = 0.0
            zint[(route_n == e) & (route_s == drop)] = 0.0
    offer(xint, zint)

    # ---- best-bound search ----------------------------------------------------

    heap: list = []
    tick = itertools.count()
    heapq.heappush(heap, (-root.value, next(tick), root_lower, root_upper, root))

    while heap:
        neg_bound, _, lower, upper, solved = heapq.heappop(heap)
        if -neg_bound <= incumbent_value + PRUNE_EPS:
            continue
        if solved is None:
            if nodes >= node_limit:
                # budget spent; the bound just popped dominates the heap
                return MasterResult(placement=incumbent_point[0],
                                    route_open=incumbent_point[1],
                                    value=float(max(incumbent_value, -neg_bound)),
                                    nodes=nodes, exact=False)
            res = linprog_max(c, A, b, lower, upper, lp_tol)
            nodes += 1
            if res.status == INFEASIBLE:
                continue
            if res.value <= incumbent_value + PRUNE_EPS:
                continue
        else:
            res = solved

        frac = res.x[:nx + nz]
        dist = np.minimum(frac, 1.0 - frac)
        j = int(np.argmax(dist))  # most fractional; ties go to lowest index
        if dist[j] <= INT_TOL:
            val = offer(np.round(frac[:nx]), np.round(frac[nx:]))
            if val is not None or dist[j] == 0.0:
                # candidate recorded, or the point was exactly binary and
                # genuinely infeasible: either way the subtree is resolved
                continue
            # near-integral LP point whose rounding breaks a constraint:
            # branch the offending variable to separate the two cases

        down_upper = upper.copy()
        down_upper[j] = 0.0
        heapq.heappush(heap, (-res.value, next(tick), lower, down_upper, None))
        up_lower = lower.copy()
        up_lower[j] = 1.0
        heapq.heappush(heap, (-res.value, next(tick), up_lower, upper, None))

    if incumbent_point is None:
        raise RuntimeError("master search finished without any incumbent")
    return MasterResult(placement=incumbent_point[0],
                        route_open=incumbent_point[1],
                        value=float(incumbent_value), nodes=nodes)
