"""Solution objects, profit/delay evaluation, and the affine constraint system.

The optimization model in one screen
------------------------------------
Decisions, with E base stations, N = E + 1 servers (cloud last), S services:

* ``placement[n, s]``  in {0, 1}: replica of service s stored at server n.
  The cloud stores everything (placement[cloud, :] == 1 always).
* ``route_open[s, e, n]`` in {0, 1}: BS e may forward s-requests to server n.
  Requires a physical link (``l[e, n] == 1``; self and BS->cloud always exist)
  and a replica at n.
* ``route_frac[s, e, n]`` in [0, 1]: fraction of the s-demand at e actually
  served at n.  Unrouted fractions are rejected (no revenue, no cost).
* ``cpu_rate[n, s]`` >= 0: cycles/s leased at n for service s.

Each (n, s) pair is an M/M/1 queue with service rate cpu_rate/work_cycles and
arrival rate node_load; each directed backhaul link is an M/M/1 queue carrying
reply traffic.  A served request must meet its end-to-end delay target:

    queueing at server + propagation + link congestion <= target.

The product of indicator and queueing terms makes that constraint nonconvex,
so the solver works with an equivalent affine system: the target is split by
``alpha`` into a network share and a compute share, and each share is cleared
with the route indicator multiplied through the (then linear) slack terms.
``build_G`` materializes that system once per instance; for fixed open routes
only the constant vector changes, which is what the decomposition exploits.

Both the original and the affine systems have checkers here; accepted
solutions must pass the two of them, which pins down the reformulation step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from mecbend.model import MS, Instance

# ---------------------------------------------------------------------------
# solution container
# ---------------------------------------------------------------------------


@dataclass
class Solution:
    """One joint decision; arrays follow the shapes documented above."""

    placement: np.ndarray   # (N, S) int8
    route_open: np.ndarray  # (S, E, N) int8
    route_frac: np.ndarray  # (S, E, N) float64
    cpu_rate: np.ndarray    # (N, S) float64, cycles/s

    def copy(self) -> "Solution":
        return Solution(self.placement.copy(), self.route_open.copy(),
                        self.route_frac.copy(), self.cpu_rate.copy())


def empty_solution(instance: Instance) -> Solution:
    """Cloud-only placement, nothing routed, no CPU leased."""
    E, N, S = instance.num_bs, instance.num_servers, instance.num_services
    placement = np.zeros((N, S), dtype=np.int8)
    placement[instance.cloud, :] = 1
    return Solution(
        placement=placement,
        route_open=np.zeros((S, E, N), dtype=np.int8),
        route_frac=np.zeros((S, E, N)),
        cpu_rate=np.zeros((N, S)),
    )


# ---------------------------------------------------------------------------
# derived loads, delays, profit
# ---------------------------------------------------------------------------


def node_load(instance: Instance, route_frac: np.ndarray) -> np.ndarray:
    """Admitted arrival rate per (server, service), requests/s."""
    return np.einsum("es,sen->ns", instance.demand_rate, route_frac)


def link_load(instance: Instance, route_frac: np.ndarray) -> np.ndarray:
    """Reply traffic per directed link (e, n), bits/s; zero on the diagonal.

    Only the serving-node-to-user direction carries payload (requests are
    small enough to ignore), so one route contributes beta_s * lambda_es * y.
    """
    load = np.einsum("s,es,sen->en", instance.output_bits,
                     instance.demand_rate, route_frac)
    idx = np.arange(instance.num_bs)
    load[idx, idx] = 0.0
    return load


def service_delay(instance: Instance, solution: Solution) -> np.ndarray:
    """Mean M/M/1 sojourn time per (server, service), seconds.

    inf where the queue is unstable or has no capacity assigned.
    """
    occ = node_load(instance, solution.route_frac)
    mu = solution.cpu_rate / instance.work_cycles[None, :]
    slack = mu - occ
    out = np.full(occ.shape, np.inf)
    pos = slack > 0
    out[pos] = 1.0 / slack[pos]
    return out


def congestion_delay(instance: Instance, solution: Solution) -> np.ndarray:
    """Mean link queueing delay per route (s, e, n), seconds.

    Zero for local serving (the diagonal has infinite bandwidth and carries
    no backhaul load); inf on overloaded or missing links.
    """
    slack = instance.link_bw - link_load(instance, solution.route_frac)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = instance.output_bits[:, None, None] / slack[None, :, :]
    d[:, slack <= 0] = np.inf
    return d


def total_delay(instance: Instance, solution: Solution) -> np.ndarray:
    """End-to-end mean delay per route (s, e, n), seconds."""
    dsrv = service_delay(instance, solution)       # (N, S)
    dcng = congestion_delay(instance, solution)    # (S, E, N)
    return dsrv.T[:, None, :] + instance.link_prop[None, :, :] + dcng


def hit_ratio(instance: Instance, solution: Solution) -> float:
    """Edge-served admitted rate over total offered rate.

    Cloud-served requests do not count as hits; a cloud-only policy scores 0.
    """
    E = instance.num_bs
    served = np.einsum("es,sen->", instance.demand_rate,
                       solution.route_frac[:, :, :E])
    total = float(instance.demand_rate.sum())
    return float(served / total) if total > 0 else 0.0


def mean_delay_s(instance: Instance, solution: Solution) -> float:
    """Admission-weighted mean end-to-end delay over served flows, seconds.

    Zero when nothing is served.
    """
    rate = instance.demand_rate.T[:, :, None] * solution.route_frac
    served = float(rate.sum())
    if served <= 0:
        return 0.0
    delay = total_delay(instance, solution)
    return float(np.sum(rate * np.where(rate > 0, delay, 0.0)) / served)


@dataclass(frozen=True)
class ProfitBreakdown:
    """All terms in dollars/second of steady-state operation."""

    revenue: float
    storage_cost: float
    cpu_cost: float
    transfer_cost: float

    @property
    def total(self) -> float:
        return self.revenue - self.storage_cost - self.cpu_cost - self.transfer_cost


def storage_cost(instance: Instance, placement: np.ndarray) -> float:
    """Replica holding cost, dollars/s, for a (N, S) placement."""
    rate = instance.storage_price[:, None] * instance.size_bytes[None, :]
    return float(np.sum(rate * placement))


def profit(instance: Instance, solution: Solution) -> ProfitBreakdown:
    occ = node_load(instance, solution.route_frac)
    lload = link_load(instance, solution.route_frac)
    return ProfitBreakdown(
        revenue=float(np.sum(instance.revenue * occ)),
        storage_cost=storage_cost(instance, solution.placement),
        cpu_cost=float(np.sum(instance.cpu_price[:, None] * solution.cpu_rate)),
        transfer_cost=float(np.sum(lload * instance.transfer_price)),
    )


# ---------------------------------------------------------------------------
# feasibility checkers
# ---------------------------------------------------------------------------


def _binary_violations(instance: Instance, solution: Solution, tol: float) -> list[str]:
    out: list[str] = []
    E, N, S = instance.num_bs, instance.num_servers, instance.num_services
    x = np.asarray(solution.placement, dtype=float)
    z = np.asarray(solution.route_open, dtype=float)
    y = solution.route_frac
    u = solution.cpu_rate

    if x.shape != (N, S) or z.shape != (S, E, N) or y.shape != (S, E, N) or u.shape != (N, S):
        out.append("solution arrays have wrong shapes")
        return out
    if np.any(np.minimum(np.abs(x), np.abs(1 - x)) > tol):
        out.append("placement must be binary")
    if np.any(np.minimum(np.abs(z), np.abs(1 - z)) > tol):
        out.append("route_open must be binary")
    for s in range(S):
        if x[instance.cloud, s] < 1 - tol:
            out.append(f"placement[cloud][{s}] must be 1 (cloud stores everything)")
    if np.any(y < -tol) or np.any(y > 1 + tol):
        out.append("route_frac must lie in [0, 1]")
    if np.any(u < -tol):
        out.append("cpu_rate must be >= 0")

    # route_open needs a link and a replica; route_frac needs an open route
    mask = instance.link_mask.astype(float)  # (E, N)
    bad = z > mask[None, :, :] + tol
    for s, e, n in zip(*np.nonzero(bad)):
        out.append(f"route_open[s={s},e={e},n={n}] requires link {e}->{n}")
    bad = z > x.T[:, None, :] + tol
    for s, e, n in zip(*np.nonzero(bad)):
        out.append(f"route_open[s={s},e={e},n={n}] requires placement[{n}][{s}]")
    bad = y > z + tol
    for s, e, n in zip(*np.nonzero(bad)):
        out.append(f"route_frac[s={s},e={e},n={n}] exceeds route_open")

    # storage capacity at base stations
    used = instance.size_bytes[None, :] * x[:E, :]
    for e in range(E):
        cap = instance.storage_cap[e]
        if used[e].sum() > cap * (1 + tol):
            out.append(f"storage[e={e}] violated by {used[e].sum() - cap:.6g} bytes")
    return out


def _shared_capacity_violations(instance: Instance, solution: Solution,
                                tol: float) -> list[str]:
    out: list[str] = []
    E = instance.num_bs
    y = solution.route_frac
    u = solution.cpu_rate

    adm = y.sum(axis=2)  # (S, E)
    for s, e in zip(*np.nonzero(adm > 1 + tol)):
        out.append(f"admission[s={s},e={e}] violated by {adm[s, e] - 1:.3g}")

    acc = np.einsum("s,es,sen->e", instance.output_bits, instance.demand_rate, y)
    for e in range(E):
        cap = instance.access_cap[e]
        if acc[e] > cap + tol * max(1.0, cap):
            out.append(f"access_bw[e={e}] violated by {acc[e] - cap:.6g} bits/s")

    cpu = u[:E, :].sum(axis=1)
    for e in range(E):
        cap = instance.cpu_cap[e]
        if cpu[e] > cap + tol * max(1.0, cap):
            out.append(f"cpu_cap[e={e}] violated by {cpu[e] - cap:.6g} cycles/s")
    return out


def check_original(instance: Instance, solution: Solution,
                   tol: float = 1e-6) -> list[str]:
    """Violations of the native model, with its nonlinear delay constraint.

    Empty list == feasible.  The delay constraint applies to every route that
    carries traffic (route_frac > tol): its M/M/1 server wait plus propagation
    plus link congestion must stay within the service's target.
    """
    out = _binary_violations(instance, solution, tol)
    if out and out[0] == "solution arrays have wrong shapes":
        return out
    out += _shared_capacity_violations(instance, solution, tol)

    occ = node_load(instance, solution.route_frac)
    mu = solution.cpu_rate / instance.work_cycles[None, :]
    for n, s in zip(*np.nonzero(occ > mu + tol * np.maximum(1.0, occ))):
        out.append(f"node_stab[s={s},n={n}] violated by {occ[n, s] - mu[n, s]:.3g} rps")

    lload = link_load(instance, solution.route_frac)
    for e, n in zip(*np.nonzero(instance.link_mask)):
        if n == e:
            continue
        cap = instance.link_bw[e, n]
        if lload[e, n] > cap + tol * max(1.0, cap):
            out.append(f"link_stab[e={e},n={n}] violated by {lload[e, n] - cap:.6g} bits/s")

    delay = total_delay(instance, solution)
    dmax = instance.dmax_s
    for s, e, n in zip(*np.nonzero(solution.route_frac > tol)):
        if delay[s, e, n] > dmax[s] + tol:
            gap = delay[s, e, n] - dmax[s]
            out.append(f"delay[s={s},e={e},n={n}] exceeds target by {gap:.3g} s")
    return out


def check_reformulated(instance: Instance, solution: Solution,
                       tol: float = 1e-6) -> list[str]:
    """Violations of the affine system ``build_G`` plus the binary-side rows.

    A point satisfying this system also satisfies the native model (the split
    constraints imply the delay target wherever traffic flows), and every
    native-feasible point admits a split satisfying it; the pair of checkers
    is how that equivalence stays tested.
    """
    out = _binary_violations(instance, solution, tol)
    if out and out[0] == "solution arrays have wrong shapes":
        return out
    cs = build_G(instance)
    v = cs.pack(solution.route_frac, solution.cpu_rate)
    resid = cs.A @ v + cs.constants(solution.route_open)
    scale = np.maximum(1.0, np.abs(cs.b0))
    for i in np.nonzero(resid < -tol * scale)[0]:
        fam, s, e, n = cs.rows[i]
        where = ",".join(f"{k}={v_}" for k, v_ in (("s", s), ("e", e), ("n", n)) if v_ >= 0)
        out.append(f"{fam}[{where}] violated by {-resid[i]:.3g}")
    return out


# ---------------------------------------------------------------------------
# affine constraint system over (route_frac, cpu_rate)
# ---------------------------------------------------------------------------

ROW_FAMILIES = (
    "admission",          # per (s, e):  1 - sum_n y_sen >= 0
    "access_bw",          # per e:       B_e - sum_{s,n} beta_s lam_es y_sen >= 0
    "cpu_cap",            # per BS e:    M_e - sum_s u_es >= 0
    "node_stab",          # per (s, n):  u_ns / nu_s - sum_e lam_es y_sen >= 0
    "link_stab",          # per link:    Bl_en - sum_s beta_s lam_es y_sen >= 0
    "delay_local",        # per (s, e):  Dmax_s (u_es/nu_s - load_es) - z_see >= 0
    "delay_remote_srv",   # per route:   (1-a) Dmax_s (u_ns/nu_s - load_ns) - z_sen >= 0
    "delay_remote_link",  # per route:   [a Dmax_s - prop_en]+ (Bl_en - loadl_en)/beta_s - z_sen >= 0
    "route_link",         # per route:   z_sen - y_sen >= 0
)


@dataclass(frozen=True)
class ConstraintSystem:
    """G(v; z) = A v + b0 + zterm >= 0 with v = (route_frac vars, cpu vars).

    The row set is a function of the instance alone: one row per family
    element above, in that family order, each family iterating its indices
    lexicographically.  Rows carrying an open-route indicator record its
    coefficient in ``zcoef`` and the flat route in ``row_route`` (-1 where
    absent), so specializing to fixed routes only rebuilds the constants.
    """

    A: sp.csr_array
    b0: np.ndarray
    zcoef: np.ndarray
    row_route: np.ndarray
    rows: tuple[tuple[str, int, int, int], ...]
    routes: np.ndarray            # (n_y, 3) int, lex-sorted (s, e, n)
    route_index: dict
    num_bs: int
    num_servers: int
    num_services: int

    @property
    def n_y(self) -> int:
        return len(self.routes)

    @property
    def n_u(self) -> int:
        return self.num_servers * self.num_services

    @property
    def n_rows(self) -> int:
        return len(self.b0)

    def u_index(self, n: int, s: int) -> int:
        return self.n_y + n * self.num_services + s

    def pack(self, route_frac: np.ndarray, cpu_rate: np.ndarray) -> np.ndarray:
        """Flatten (route_frac, cpu_rate) into the LP variable vector."""
        v = np.empty(self.n_y + self.n_u)
        v[:self.n_y] = route_frac[self.routes[:, 0], self.routes[:, 1], self.routes[:, 2]]
        v[self.n_y:] = cpu_rate.reshape(-1)
        return v

    def unpack(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Inverse of pack: dense (S, E, N) route fractions and (N, S) rates."""
        y = np.zeros((self.num_services, self.num_bs, self.num_servers))
        y[self.routes[:, 0], self.routes[:, 1], self.routes[:, 2]] = v[:self.n_y]
        u = v[self.n_y:].reshape(self.num_servers, self.num_services).copy()
        return y, u

    def route_values(self, route_open: np.ndarray) -> np.ndarray:
        """Indicator value per flat route from a dense (S, E, N) array."""
        return np.asarray(route_open, dtype=float)[
            self.routes[:, 0], self.routes[:, 1], self.routes[:, 2]]

    def constants(self, route_open: np.ndarray) -> np.ndarray:
        """Constant vector b for fixed open routes: b0 + zcoef * z[row_route]."""
        b = self.b0.copy()
        has_z = self.row_route >= 0
        zvals = self.route_values(route_open)
        b[has_z] += self.zcoef[has_z] * zvals[self.row_route[has_z]]
        return b


def build_G(instance: Instance) -> ConstraintSystem:
    """Assemble the affine system once; see :data:`ROW_FAMILIES` for rows."""
    E, N, S = instance.num_bs, instance.num_servers, instance.num_services
    mask = instance.link_mask
    lam = instance.demand_rate
    beta = instance.output_bits
    work = instance.work_cycles
    dmax = instance.dmax_s
    alpha = instance.params.alpha

    routes = np.array([(s, e, n) for s in range(S) for e in range(E)
                       for n in range(N) if mask[e, n]], dtype=np.int64)
    route_index = {tuple(r): j for j, r in enumerate(routes.tolist())}
    n_y = len(routes)
    n_u = N * S

    def yj(s, e, n):
        return route_index[(s, e, n)]

    def uj(n, s):
        return n_y + n * S + s

    ai: list[int] = []
    aj: list[int] = []
    av: list[float] = []
    b0: list[float] = []
    zc: list[float] = []
    rr: list[int] = []
    rows: list[tuple[str, int, int, int]] = []

    def put(i, j, val):
        if val != 0.0:
            ai.append(i)
            aj.append(j)
            av.append(val)

    def new_row(fam, s, e, n, const, zcoef=0.0, route=-1):
        rows.append((fam, s, e, n))
        b0.append(const)
        zc.append(zcoef)
        rr.append(route)
        return len(rows) - 1

    for s in range(S):
        for e in range(E):
            i = new_row("admission", s, e, -1, 1.0)
            for n in range(N):
                if mask[e, n]:
                    put(i, yj(s, e, n), -1.0)

    for e in range(E):
        i = new_row("access_bw", -1, e, -1, float(instance.access_cap[e]))
        for s in range(S):
            for n in range(N):
                if mask[e, n]:
                    put(i, yj(s, e, n), -beta[s] * lam[e, s])

    for e in range(E):
        i = new_row("cpu_cap", -1, e, -1, float(instance.cpu_cap[e]))
        for s in range(S):
            put(i, uj(e, s), -1.0)

    for s in range(S):
        for n in range(N):
            i = new_row("node_stab", s, -1, n, 0.0)
            put(i, uj(n, s), 1.0 / work[s])
            for e in range(E):
                if mask[e, n]:
                    put(i, yj(s, e, n), -lam[e, s])

    for e in range(E):
        for n in range(N):
            if n == e or not mask[e, n]:
                continue
            i = new_row("link_stab", -1, e, n, float(instance.link_bw[e, n]))
            for s in range(S):
                put(i, yj(s, e, n), -beta[s] * lam[e, s])

    for s in range(S):
        for e in range(E):
            i = new_row("delay_local", s, e, e, 0.0, zcoef=-1.0, route=yj(s, e, e))
            put(i, uj(e, s), dmax[s] / work[s])
            for ep in range(E):
                if mask[ep, e]:
                    put(i, yj(s, ep, e), -dmax[s] * lam[ep, s])

    for s in range(S):
        for e in range(E):
            for n in range(N):
                if n == e or not mask[e, n]:
                    continue
                i = new_row("delay_remote_srv", s, e, n, 0.0, zcoef=-1.0,
                            route=yj(s, e, n))
                put(i, uj(n, s), (1 - alpha) * dmax[s] / work[s])
                for ep in range(E):
                    if mask[ep, n]:
                        put(i, yj(s, ep, n), -(1 - alpha) * dmax[s] * lam[ep, s])

    # The network share of the target clears the link queue iff
    # beta_s / (Bl - loadl) <= a Dmax - prop whenever the route is open.
    # Scaling by [a Dmax - prop]+ / beta_s keeps the row affine with the
    # indicator coefficient at exactly -1.
    for s in range(S):
        for e in range(E):
            for n in range(N):
                if n == e or not mask[e, n]:
                    continue
                k = max(alpha * dmax[s] - instance.link_prop[e, n], 0.0) / beta[s]
                i = new_row("delay_remote_link", s, e, n,
                            k * float(instance.link_bw[e, n]),
                            zcoef=-1.0, route=yj(s, e, n))
                for sp_ in range(S):
                    put(i, yj(sp_, e, n), -k * beta[sp_] * lam[e, sp_])

    for s in range(S):
        for e in range(E):
            for n in range(N):
                if mask[e, n]:
                    i = new_row("route_link", s, e, n, 0.0, zcoef=1.0,
                                route=yj(s, e, n))
                    put(i, yj(s, e, n), -1.0)

    A = sp.csr_array(
        sp.coo_array((av, (ai, aj)), shape=(len(rows), n_y + n_u)))
    return ConstraintSystem(
        A=A,
        b0=np.asarray(b0),
        zcoef=np.asarray(zc),
        row_route=np.asarray(rr, dtype=np.int64),
        rows=tuple(rows),
        routes=routes,
        route_index=route_index,
        num_bs=E,
        num_servers=N,
        num_services=S,
    )


def operating_profit_coeffs(instance: Instance, cs: ConstraintSystem) -> np.ndarray:
    """Objective over (route_frac, cpu_rate): revenue minus CPU and transfer.

    Storage cost depends only on placement and is settled outside the LP.
    """
    c = np.zeros(cs.n_y + cs.n_u)
    s, e, n = cs.routes[:, 0], cs.routes[:, 1], cs.routes[:, 2]
    c[:cs.n_y] = instance.demand_rate[e, s] * (
        instance.revenue[n, s]
        - instance.output_bits[s] * instance.transfer_price[e, n])
    c[cs.n_y:] = -np.repeat(instance.cpu_price, cs.num_services)
    return c


# ---------------------------------------------------------------------------
# solution JSON
# ---------------------------------------------------------------------------


def solution_report(instance: Instance, solution: Solution,
                    value_tol: float = 1e-9) -> dict:
    """JSON-ready description: dense binaries, sparse continuous, economics."""
    breakdown = profit(instance, solution)
    delay = total_delay(instance, solution)
    flows = []
    for s, e, n in zip(*np.nonzero(solution.route_frac > value_tol)):
        d = delay[s, e, n]
        flows.append({
            "s": int(s), "e": int(e), "n": int(n),
            "rate_rps": float(instance.demand_rate[e, s] * solution.route_frac[s, e, n]),
            "delay_ms": float(d / MS) if np.isfinite(d) else None,
        })
    return {
        "shape": {
            "num_bs": instance.num_bs,
            "num_servers": instance.num_servers,
            "num_services": instance.num_services,
        },
        "placement": solution.placement.astype(int).tolist(),
        "route_open": solution.route_open.astype(int).tolist(),
        "route_frac": [
            {"s": int(s), "e": int(e), "n": int(n),
             "value": float(solution.route_frac[s, e, n])}
            for s, e, n in zip(*np.nonzero(solution.route_frac > value_tol))
        ],
        "cpu_rate": [
            {"n": int(n), "s": int(s), "value": float(solution.cpu_rate[n, s])}
            for n, s in zip(*np.nonzero(solution.cpu_rate > value_tol))
        ],
        "profit": {
            "revenue_per_s": breakdown.revenue,
            "storage_cost_per_s": breakdown.storage_cost,
            "cpu_cost_per_s": breakdown.cpu_cost,
            "transfer_cost_per_s": breakdown.transfer_cost,
            "total_per_s": breakdown.total,
        },
        "flows": flows,
    }


def solution_from_report(instance: Instance, doc: dict) -> Solution:
    """Rebuild a Solution from the dict produced by solution_report."""
    sol = empty_solution(instance)
    sol.placement[:] = np.asarray(doc["placement"], dtype=np.int8)
    sol.route_open[:] = np.asarray(doc["route_open"], dtype=np.int8)
    for ent in doc["route_frac"]:
        sol.route_frac[ent["s"], ent["e"], ent["n"]] = ent["value"]
    for ent in doc["cpu_rate"]:
        sol.cpu_rate[ent["n"], ent["s"]] = ent["value"]
    return sol


def save_solution(instance: Instance, solution: Solution, path) -> None:
    with open(path, "w") as fh:
        json.dump(solution_report(instance, solution), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_solution(path) -> Solution:
    """Rebuild the decision arrays from a saved report."""
    with open(path) as fh:
        doc = json.load(fh)
    E = doc["shape"]["num_bs"]
    N = doc["shape"]["num_servers"]
    S = doc["shape"]["num_services"]
    sol = Solution(
        placement=np.asarray(doc["placement"], dtype=np.int8),
        route_open=np.asarray(doc["route_open"], dtype=np.int8),
        route_frac=np.zeros((S, E, N)),
        cpu_rate=np.zeros((N, S)),
    )
    for item in doc["route_frac"]:
        sol.route_frac[item["s"], item["e"], item["n"]] = item["value"]
    for item in doc["cpu_rate"]:
        sol.cpu_rate[item["n"], item["s"]] = item["value"]
    return sol
