"""Discrete-event check of the analytic delay model.

Feeds a solved placement/routing/CPU decision with synthetic Poisson traffic
and measures what the queues actually do: exponential service at rate
u_ns / nu_s in a dedicated single-server queue per (server, service), and an
exponential transmission stage with mean beta_s / bandwidth on the reply link
for remote serving, FIFO across the services sharing that link.

The analytic model prices a link at beta_s / (B - load) per service, which is
exact for a link whose jobs all share one size but only an approximation when
services with different beta mix in one FIFO queue.  Link rows carry a
``mixed_beta`` flag so callers can widen tolerances there instead of reading
disagreement as a bug.

Queues are simulated exactly (Lindley recursion per FIFO stage) rather than
approximated; statistics use batch means after a warm-up cut, so standard
errors are honest even with autocorrelated sojourns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from mecbend.formulation import (Solution, congestion_delay, link_load,
                                 node_load, service_delay, total_delay)
from mecbend.model import MS, Instance

WARMUP_FRACTION = 0.1
BATCHES = 20


@dataclass(frozen=True)
class QueueStat:
    """One measured queue or flow; delays in milliseconds."""

    queue: str
    analytic_ms: float
    simulated_ms: float
    stderr_ms: float
    samples: int
    mixed_beta: bool = False


@dataclass(frozen=True)
class SimReport:
    servers: tuple[QueueStat, ...]
    links: tuple[QueueStat, ...]
    flows: tuple[QueueStat, ...]
    horizon_arrivals: int
    warmup_arrivals: int
    arrival_rate: tuple[tuple[str, float, float], ...]  # flow id, target, measured

    def rows(self) -> list[dict]:
        """CSV-ready rows: queue, analytic_ms, simulated_ms, stderr_ms, samples."""
        out = []
        for stat in (*self.servers, *self.links, *self.flows):
            out.append({
                "queue": stat.queue,
                "analytic_ms": stat.analytic_ms,
                "simulated_ms": stat.simulated_ms,
                "stderr_ms": stat.stderr_ms,
                "samples": stat.samples,
            })
        return out


def _batch_stats(values: np.ndarray) -> tuple[float, float]:
    """Mean and batch-means standard error of an ordered sample."""
    n = len(values)
    if n == 0:
        return float("nan"), float("nan")
    if n < 2:
        return float(values.mean()), float("nan")
    nb = min(BATCHES, n)
    batches = np.array_split(values, nb)
    means = np.array([b.mean() for b in batches])
    return float(values.mean()), float(means.std(ddof=1) / np.sqrt(nb))


def _lindley(arrive: np.ndarray, service: np.ndarray) -> np.ndarray:
    """FIFO single-server departure times for arrivals already in order."""
    depart = np.empty(len(arrive))
    free = 0.0
    for i in range(len(arrive)):
        start = arrive[i] if arrive[i] > free else free
        free = start + service[i]
        depart[i] = free
    return depart


def simulate(instance: Instance, solution: Solution, horizon_arrivals: int,
             seed: int) -> SimReport:
    """Measure every queue the solution uses against its analytic mean.

    Requests arrive as one merged Poisson stream, are attributed to (bs,
    service) by demand shares, and routed to a server with the solution's
    route fractions (or dropped).  Flows with zero admitted rate are omitted.
    Raises ValueError when any served queue is unstable, naming it.
    """
    rng = np.random.default_rng(seed)
    E, N, S = instance.num_bs, instance.num_servers, instance.num_services
    y = solution.route_frac
    lam = instance.demand_rate  # (E, S)

    flows = [(s, e, n) for s in range(S) for e in range(E) for n in range(N)
             if lam[e, s] * y[s, e, n] > 0.0]
    if not flows:
        return SimReport(servers=(), links=(), flows=(),
                         horizon_arrivals=horizon_arrivals,
                         warmup_arrivals=0, arrival_rate=())

    dsrv = service_delay(instance, solution)
    dcng = congestion_delay(instance, solution)
    dtot = total_delay(instance, solution)
    unstable = [f"server n={n},s={s}" for s, e, n in flows
                if not np.isfinite(dsrv[n, s])]
    unstable += [f"link e={e},n={n}" for s, e, n in flows
                 if n != e and not np.isfinite(dcng[s, e, n])]
    if unstable:
        raise ValueError("unstable queues, refusing to simulate: "
                         + "; ".join(sorted(set(unstable))))

    total_rate = float(lam.sum())
    n_arrivals = int(horizon_arrivals)
    times = np.cumsum(rng.exponential(1.0 / total_rate, size=n_arrivals))

    pairs = [(e, s) for e in range(E) for s in range(S) if lam[e, s] > 0.0]
    pair_p = np.array([lam[e, s] for e, s in pairs]) / total_rate
    which = rng.choice(len(pairs), size=n_arrivals, p=pair_p)

    # destination per arrival: cumulative route fractions per (e, s), with
    # any remainder meaning the request is rejected
    cum = np.zeros((len(pairs), N))
    for k, (e, s) in enumerate(pairs):
        cum[k] = np.cumsum(y[s, e, :])
    dest = np.empty(n_arrivals, dtype=np.int64)
    u = rng.random(n_arrivals)
    for k in range(len(pairs)):
        m = which == k
        dest[m] = np.searchsorted(cum[k], u[m], side="left")
    served = dest < N

    warmup = int(WARMUP_FRACTION * n_arrivals)
    keep = np.arange(n_arrivals) >= warmup

    svc_mean = np.where(solution.cpu_rate > 0,
                        instance.work_cycles[None, :]
                        / np.maximum(solution.cpu_rate, 1e-300), np.inf)

    pair_e = np.array([e for e, _ in pairs])
    pair_s = np.array([s for _, s in pairs])
    arr_e = pair_e[which]
    arr_s = pair_s[which]

    # stage one: dedicated (server, service) queues in arrival order
    sojourn_srv = np.full(n_arrivals, np.nan)
    depart_srv = np.full(n_arrivals, np.nan)
    server_stats: list[QueueStat] = []
    for n in range(N):
        for s in range(S):
            m = served & (dest == n) & (arr_s == s)
            cnt = int(m.sum())
            if cnt == 0:
                continue
            draw = rng.exponential(svc_mean[n, s], size=cnt)
            depart = _lindley(times[m], draw)
            sojourn_srv[m] = depart - times[m]
            depart_srv[m] = depart
            sample = sojourn_srv[m & keep]
            mean, se = _batch_stats(sample)
            server_stats.append(QueueStat(
                queue=f"server:n={n},s={s}",
                analytic_ms=float(dsrv[n, s] / MS),
                simulated_ms=mean / MS, stderr_ms=se / MS,
                samples=len(sample)))

    # stage two: shared reply links, FIFO over whatever leaves the servers
    sojourn_lnk = np.zeros(n_arrivals)
    link_stats: list[QueueStat] = []
    lload = link_load(instance, y)
    for e in range(E):
        for n in range(N):
            if n == e:
                continue
            m = served & (dest == n) & (arr_e == e)
            cnt = int(m.sum())
            if cnt == 0:
                continue
            idx = np.nonzero(m)[0]
            order = idx[np.argsort(depart_srv[idx], kind="stable")]
            mean_size = instance.output_bits[arr_s[order]] / instance.link_bw[e, n]
            draw = rng.exponential(mean_size)
            depart = _lindley(depart_srv[order], draw)
            sojourn_lnk[order] = depart - depart_srv[order]
            sample = sojourn_lnk[m & keep]
            active = lam[e, :] * y[:, e, n] > 0.0
            mixed = len(np.unique(instance.output_bits[active])) > 1
            wsum = float((instance.demand_rate[e] * y[:, e, n]).sum())
            mean_beta = (float((instance.output_bits * instance.demand_rate[e]
                                * y[:, e, n]).sum()) / wsum)
            analytic = mean_beta / (instance.link_bw[e, n] - lload[e, n])
            mean, se = _batch_stats(sample)
            link_stats.append(QueueStat(
                queue=f"link:e={e},n={n}",
                analytic_ms=analytic / MS,
                simulated_ms=mean / MS, stderr_ms=se / MS,
                samples=len(sample), mixed_beta=mixed))

    # per-flow end-to-end, and the splitting check on admitted rates
    flow_stats: list[QueueStat] = []
    rate_rows: list[tuple[str, float, float]] = []
    horizon = float(times[-1])
    prop = instance.link_prop
    for s, e, n in flows:
        m = served & (dest == n) & (arr_e == e) & (arr_s == s)
        sample = (sojourn_srv + prop[e, n] + sojourn_lnk)[m & keep]
        mean, se = _batch_stats(sample)
        fid = f"flow:s={s},e={e},n={n}"
        flow_stats.append(QueueStat(
            queue=fid, analytic_ms=float(dtot[s, e, n] / MS),
            simulated_ms=mean / MS, stderr_ms=se / MS, samples=len(sample)))
        rate_rows.append((fid, float(lam[e, s] * y[s, e, n]),
                          float(m.sum() / horizon)))

    return SimReport(servers=tuple(server_stats), links=tuple(link_stats),
                     flows=tuple(flow_stats),
                     horizon_arrivals=n_arrivals, warmup_arrivals=warmup,
                     arrival_rate=tuple(rate_rows))
