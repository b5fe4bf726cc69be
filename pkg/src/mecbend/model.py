"""Problem data and the canonical unit system.

Everything the solver consumes lives in an :class:`Instance`: network topology
(base stations, directed links, a remote cloud), the service catalog, Poisson
demand rates, the price book, and solver parameters.

Unit policy
-----------
Instance files and the dataclass fields below carry operator-friendly units,
flagged by field-name suffixes (``storage_gb``, ``bandwidth_mbps``,
``price_per_gb_month``, ...).  All computation happens in one canonical system:

* storage in bytes, traffic in bits and bits/second,
* compute in cycles and cycles/second,
* time in seconds, demand in requests/second,
* money in dollars; prices as dollars/second of holding, dollars/bit of
  transfer, dollars/request of revenue.

Conversion happens once, at construction, with exact decimal factors
(GB = 1e9 bytes, Mb = 1e6 bits, GHz = 1e9 cycles/s, month = 730 hours).
Because the external-unit values stay the authoritative stored data, a
load -> save -> load round trip is value-identical.

Server indexing: base stations are ``0 .. num_bs-1`` and the cloud is index
``num_bs``; arrays over "servers" have length ``num_bs + 1``.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

GB_BYTES = 1e9
MB_BITS = 1e6
MBPS = 1e6
GHZ = 1e9
MCYCLES = 1e6
MS = 1e-3
HOUR_S = 3600.0
MONTH_S = 730 * 3600.0


@dataclass(frozen=True)
class Link:
    """One directed link from a base station to another server.

    ``server`` may be another BS or the cloud index.  Self-links are implicit
    (always present, infinite bandwidth, zero delay, zero transfer price) and
    must not appear in the list.
    """

    bs: int
    server: int
    bandwidth_mbps: float
    prop_delay_ms: float
    price_per_mbps_hour: float = 0.0


@dataclass(frozen=True)
class Topology:
    """Base stations with their capacities, plus the directed link set."""

    num_bs: int
    storage_gb: tuple[float, ...]
    cpu_ghz: tuple[float, ...]
    access_bw_mbps: tuple[float, ...]
    links: tuple[Link, ...]

    @property
    def num_servers(self) -> int:
        return self.num_bs + 1

    @property
    def cloud(self) -> int:
        return self.num_bs


@dataclass(frozen=True)
class ServiceCatalog:
    """Per-service attributes, parallel arrays indexed by service id."""

    storage_gb: tuple[float, ...]       # replica size
    output_mb: tuple[float, ...]        # data returned per request, megabits
    work_mcycles: tuple[float, ...]     # mean CPU work per request
    target_delay_ms: tuple[float, ...]  # end-to-end delay target

    def __len__(self) -> int:
        return len(self.storage_gb)


@dataclass(frozen=True)
class Demand:
    """Poisson arrival rates, requests/second, shape (num_bs, num_services)."""

    rate_rps: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class PriceBook:
    """Leasing prices per server plus serving revenue.

    ``transfer`` prices live on the links themselves (see :class:`Link`).
    ``revenue_per_request`` is dollars earned per served request, indexed
    (server, service).
    """

    storage_per_gb_month: tuple[float, ...]
    cpu_per_ghz_hour: tuple[float, ...]
    revenue_per_request: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class SolverParams:
    """Knobs shared by the decomposition loop and the LP subsolver.

    alpha splits each service's delay target: a fraction ``alpha`` is budgeted
    to propagation plus link congestion, the rest to server queueing.  epsilon
    is the absolute convergence tolerance in dollars/second; None picks a
    default relative to the first lower bound.
    """

    alpha: float = 0.5
    epsilon: Optional[float] = None
    max_iterations: int = 500
    lp_tolerance: float = 1e-8
    seed: int = 0


@dataclass(frozen=True)
class Instance:
    """Immutable problem instance; canonical-unit views are cached properties."""

    topology: Topology
    services: ServiceCatalog
    demand: Demand
    prices: PriceBook
    params: SolverParams = field(default_factory=SolverParams)

    # -- index shorthands ---------------------------------------------------

    @property
    def num_bs(self) -> int:
        return self.topology.num_bs

    @property
    def num_servers(self) -> int:
        return self.topology.num_servers

    @property
    def num_services(self) -> int:
        return len(self.services)

    @property
    def cloud(self) -> int:
        return self.topology.cloud

    # -- canonical-unit views (computed once) -------------------------------

    @cached_property
    def storage_cap(self) -> np.ndarray:
        """Per-BS storage capacity, bytes, shape (num_bs,)."""
        return np.asarray(self.topology.storage_gb, dtype=float) * GB_BYTES

    @cached_property
    def cpu_cap(self) -> np.ndarray:
        """Per-BS compute capacity, cycles/s, shape (num_bs,)."""
        return np.asarray(self.topology.cpu_ghz, dtype=float) * GHZ

    @cached_property
    def access_cap(self) -> np.ndarray:
        """Per-BS wireless downlink capacity, bits/s, shape (num_bs,)."""
        return np.asarray(self.topology.access_bw_mbps, dtype=float) * MBPS

    @cached_property
    def link_mask(self) -> np.ndarray:
        """Bool (num_bs, num_servers): which directed routes exist.

        Self-links are always present; BS->cloud links are required by
        validate, so a valid instance has mask[e, cloud] True for every e.
        """
        mask = np.zeros((self.num_bs, self.num_servers), dtype=bool)
        mask[np.arange(self.num_bs), np.arange(self.num_bs)] = True
        for ln in self.topology.links:
            mask[ln.bs, ln.server] = True
        return mask

    @cached_property
    def link_bw(self) -> np.ndarray:
        """Link bandwidth, bits/s, shape (num_bs, num_servers); inf on self."""
        bw = np.zeros((self.num_bs, self.num_servers))
        bw[np.arange(self.num_bs), np.arange(self.num_bs)] = np.inf
        for ln in self.topology.links:
            bw[ln.bs, ln.server] = ln.bandwidth_mbps * MBPS
        return bw

    @cached_property
    def link_prop(self) -> np.ndarray:
        """Propagation delay, seconds, shape (num_bs, num_servers); 0 on self."""
        prop = np.zeros((self.num_bs, self.num_servers))
        for ln in self.topology.links:
            prop[ln.bs, ln.server] = ln.prop_delay_ms * MS
        return prop

    @cached_property
    def transfer_price(self) -> np.ndarray:
        """Transfer price, dollars/bit, shape (num_bs, num_servers); 0 on self."""
        price = np.zeros((self.num_bs, self.num_servers))
        for ln in self.topology.links:
            price[ln.bs, ln.server] = ln.price_per_mbps_hour / (MBPS * HOUR_S)
        return price

    @cached_property
    def size_bytes(self) -> np.ndarray:
        """Replica size per service, bytes."""
        return np.asarray(self.services.storage_gb, dtype=float) * GB_BYTES

    @cached_property
    def output_bits(self) -> np.ndarray:
        """Per-request output size, bits."""
        return np.asarray(self.services.output_mb, dtype=float) * MB_BITS

    @cached_property
    def work_cycles(self) -> np.ndarray:
        """Mean work per request, cycles."""
        return np.asarray(self.services.work_mcycles, dtype=float) * MCYCLES

    @cached_property
    def dmax_s(self) -> np.ndarray:
        """Delay target per service, seconds."""
        return np.asarray(self.services.target_delay_ms, dtype=float) * MS

    @cached_property
    def demand_rate(self) -> np.ndarray:
        """Arrival rate, requests/s, shape (num_bs, num_services)."""
        return np.asarray(self.demand.rate_rps, dtype=float)

    @cached_property
    def storage_price(self) -> np.ndarray:
        """Storage price, dollars per byte per second, shape (num_servers,)."""
        raw = np.asarray(self.prices.storage_per_gb_month, dtype=float)
        return raw / (GB_BYTES * MONTH_S)

    @cached_property
    def cpu_price(self) -> np.ndarray:
        """Compute price, dollars per (cycle/s) per second, shape (num_servers,)."""
        raw = np.asarray(self.prices.cpu_per_ghz_hour, dtype=float)
        return raw / (GHZ * HOUR_S)

    @cached_property
    def revenue(self) -> np.ndarray:
        """Revenue per served request, dollars, shape (num_servers, num_services)."""
        return np.asarray(self.prices.revenue_per_request, dtype=float)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def validate(instance: Instance) -> list[str]:
    """Check every structural invariant; return human-readable violations.

    An empty list means the instance is well-formed.  Violations are data,
    not exceptions: generators and loaders funnel everything through here so
    a malformed file produces a complete report instead of the first crash.
    """
    out: list[str] = []
    topo = instance.topology
    E = topo.num_bs
    N = topo.num_servers
    S = instance.num_services

    if E < 1:
        out.append("num_bs must be >= 1")
        return out
    if S < 1:
        out.append("service catalog must not be empty")
        return out

    for name, seq in (("storage_gb", topo.storage_gb),
                      ("cpu_ghz", topo.cpu_ghz),
                      ("access_bw_mbps", topo.access_bw_mbps)):
        if len(seq) != E:
            out.append(f"topology.{name} must have length {E}")
            continue
        for e, v in enumerate(seq):
            if not v > 0:
                out.append(f"topology.{name}[{e}] must be > 0")

    svc = instance.services
    for name, seq in (("storage_gb", svc.storage_gb),
                      ("output_mb", svc.output_mb),
                      ("work_mcycles", svc.work_mcycles),
                      ("target_delay_ms", svc.target_delay_ms)):
        if len(seq) != S:
            out.append(f"services.{name} must have length {S}")
            continue
        for s, v in enumerate(seq):
            if not v > 0:
                out.append(f"services.{name}[{s}] must be > 0")

    seen: set[tuple[int, int]] = set()
    cloud_linked = [False] * E
    for i, ln in enumerate(topo.links):
        if not (0 <= ln.bs < E):
            out.append(f"links[{i}].bs out of range")
            continue
        if not (0 <= ln.server < N):
            out.append(f"links[{i}].server out of range")
            continue
        if ln.server == ln.bs:
            out.append(f"links[{i}] is a self-link (self-links are implicit)")
            continue
        if (ln.bs, ln.server) in seen:
            out.append(f"links[{i}] duplicates directed pair {ln.bs}->{ln.server}")
        seen.add((ln.bs, ln.server))
        if not ln.bandwidth_mbps > 0:
            out.append(f"links[{i}].bandwidth_mbps must be > 0")
        if ln.prop_delay_ms < 0:
            out.append(f"links[{i}].prop_delay_ms must be >= 0")
        if ln.price_per_mbps_hour < 0:
            out.append(f"links[{i}].price_per_mbps_hour must be >= 0")
        if ln.server == topo.cloud:
            cloud_linked[ln.bs] = True
    for e in range(E):
        if not cloud_linked[e]:
            out.append(f"link {e}->cloud required")

    rates = instance.demand.rate_rps
    if len(rates) != E or any(len(row) != S for row in rates):
        out.append(f"demand.rate_rps must have shape ({E}, {S})")
    else:
        for e, row in enumerate(rates):
            for s, v in enumerate(row):
                if v < 0:
                    out.append(f"demand.rate_rps[{e}][{s}] must be >= 0")

    pb = instance.prices
    for name, seq in (("storage_per_gb_month", pb.storage_per_gb_month),
                      ("cpu_per_ghz_hour", pb.cpu_per_ghz_hour)):
        if len(seq) != N:
            out.append(f"prices.{name} must have length {N}")
            continue
        for n, v in enumerate(seq):
            if v < 0:
                out.append(f"prices.{name}[{n}] must be >= 0")
    rev = pb.revenue_per_request
    if len(rev) != N or any(len(row) != S for row in rev):
        out.append(f"prices.revenue_per_request must have shape ({N}, {S})")
    else:
        for n, row in enumerate(rev):
            for s, v in enumerate(row):
                if v < 0:
                    out.append(f"prices.revenue_per_request[{n}][{s}] must be >= 0")

    par = instance.params
    if not (0.0 <= par.alpha <= 1.0):
        out.append("params.alpha must be in [0, 1]")
    if par.epsilon is not None and par.epsilon < 0:
        out.append("params.epsilon must be >= 0")
    if not par.lp_tolerance > 0:
        out.append("params.lp_tolerance must be > 0")
    if par.max_iterations < 1:
        out.append("params.max_iterations must be >= 1")

    return out


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------


def to_json_dict(instance: Instance) -> dict:
    topo = instance.topology
    return {
        "topology": {
            "num_bs": topo.num_bs,
            "storage_gb": list(topo.storage_gb),
            "cpu_ghz": list(topo.cpu_ghz),
            "access_bw_mbps": list(topo.access_bw_mbps),
            "links": [dataclasses.asdict(ln) for ln in topo.links],
        },
        "services": {
            "storage_gb": list(instance.services.storage_gb),
            "output_mb": list(instance.services.output_mb),
            "work_mcycles": list(instance.services.work_mcycles),
            "target_delay_ms": list(instance.services.target_delay_ms),
        },
        "demand": {"rate_rps": [list(r) for r in instance.demand.rate_rps]},
        "prices": {
            "storage_per_gb_month": list(instance.prices.storage_per_gb_month),
            "cpu_per_ghz_hour": list(instance.prices.cpu_per_ghz_hour),
            "revenue_per_request": [list(r) for r in instance.prices.revenue_per_request],
        },
        "params": dataclasses.asdict(instance.params),
    }


def from_json_dict(doc: dict) -> Instance:
    t = doc["topology"]
    topo = Topology(
        num_bs=int(t["num_bs"]),
        storage_gb=tuple(t["storage_gb"]),
        cpu_ghz=tuple(t["cpu_ghz"]),
        access_bw_mbps=tuple(t["access_bw_mbps"]),
        links=tuple(Link(**ln) for ln in t["links"]),
    )
    sv = doc["services"]
    services = ServiceCatalog(
        storage_gb=tuple(sv["storage_gb"]),
        output_mb=tuple(sv["output_mb"]),
        work_mcycles=tuple(sv["work_mcycles"]),
        target_delay_ms=tuple(sv["target_delay_ms"]),
    )
    demand = Demand(rate_rps=tuple(tuple(r) for r in doc["demand"]["rate_rps"]))
    p = doc["prices"]
    prices = PriceBook(
        storage_per_gb_month=tuple(p["storage_per_gb_month"]),
        cpu_per_ghz_hour=tuple(p["cpu_per_ghz_hour"]),
        revenue_per_request=tuple(tuple(r) for r in p["revenue_per_request"]),
    )
    params = SolverParams(**doc.get("params", {}))
    return Instance(topology=topo, services=services, demand=demand,
                    prices=prices, params=params)


def dumps_instance(instance: Instance) -> str:
    """Deterministic JSON text for an instance (stable key order)."""
    return json.dumps(to_json_dict(instance), indent=2, sort_keys=True)


def save_instance(instance: Instance, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_instance(instance))
        fh.write("\n")


def load_instance(path) -> Instance:
    with open(path) as fh:
        return from_json_dict(json.load(fh))
