"""Seeded instance generators.

Three families: full-size networks matching the evaluation setup in the
source material, shrunken desk-scale variants of the same recipe, and the
multiple-knapsack special case used to pin the solver against a dynamic
program.

Randomness discipline: every entity (BS position, service, per-BS demand,
per-BS price multiplier) draws from its own SeedSequence substream keyed by
(purpose, index).  Growing a sweep from E to E+1 base stations therefore
extends the network without redrawing anything the smaller network already
fixed; profit comparisons across E compare nested instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from mecbend.model import (
    Demand,
    Instance,
    Link,
    PriceBook,
    ServiceCatalog,
    SolverParams,
    Topology,
)

# substream purposes
_POSITION, _SERVICE, _DEMAND, _OMEGA = 0, 1, 2, 3


@dataclass(frozen=True)
class Category:
    name: str
    storage_gb: tuple[float, float]
    work_mcycles: tuple[float, float]
    output_mb: tuple[float, float]


# Attribute ranges for the four service families; degenerate ranges are
# fixed values.
CATEGORIES = (
    Category("face_recognition", (2.0, 10.0), (0.375, 3.0), (1.0, 8.0)),
    Category("gzip", (0.02, 0.02), (0.04, 0.32), (1.0, 6.0)),
    Category("augmented_reality", (2.0, 20.0), (0.375, 3.0), (1.0, 6.0)),
    Category("video_streaming", (1.0, 10.0), (0.0001, 0.0001), (1.0, 25.0)),
)


@dataclass(frozen=True)
class GeneratorConfig:
    num_bs: int = 10
    num_services: int = 3000
    region_side_m: float = 500.0
    link_radius_m: float = 150.0
    storage_gb: float = 100.0
    cpu_ghz: float = 20.0
    access_bw_mbps: float = 100.0
    # Inter-BS and BS-cloud backhaul bandwidths are not pinned by the source
    # setup; defaults keep them comfortably above the access links so that
    # routing decisions stay interesting.
    interbs_bw_mbps: float = 1000.0
    cloud_bw_mbps: float = 500.0
    interbs_prop_ms: float = 0.0005
    cloud_prop_ms: float = 50.0
    target_delay_ms: float = 400.0
    demand_rps: float = 10.0
    zipf_exponent: float = 0.8
    storage_price_gb_month: float = 0.2
    cpu_price_ghz_hour: float = 0.4
    interbs_price_mbps_hour: float = 0.2
    cloud_price_mbps_hour: float = 0.5
    omega_range: tuple[float, float] = (4.0, 7.0)
    revenue_per_mb_hour: float = 3.0
    category_mix: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)
    alpha: float = 0.5
    epsilon: Optional[float] = None
    max_iterations: int = 500
    seed: int = 0


def paper_config(**overrides) -> GeneratorConfig:
    return GeneratorConfig(**overrides)


def desk_config(**overrides) -> GeneratorConfig:
    """Small enough to solve and simulate interactively; the link radius
    exceeds the region diagonal, so every BS pair is connected."""
    base = dict(num_bs=3, num_services=4, link_radius_m=1500.0)
    base.update(overrides)
    return GeneratorConfig(**base)


def _stream(config: GeneratorConfig, purpose: int, index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(config.seed, spawn_key=(purpose, index)))


def _draw_services(config: GeneratorConfig):
    mix = np.asarray(config.category_mix, dtype=float)
    if mix.min() < 0 or mix.sum() <= 0:
        raise ValueError("category_mix must be nonnegative with positive sum")
    mix = mix / mix.sum()
    cat_idx = np.empty(config.num_services, dtype=np.int64)
    sigma = np.empty(config.num_services)
    work = np.empty(config.num_services)
    beta = np.empty(config.num_services)
    for j in range(config.num_services):
        rng = _stream(config, _SERVICE, j)
        c = int(rng.choice(len(CATEGORIES), p=mix))
        cat = CATEGORIES[c]
        cat_idx[j] = c
        sigma[j] = rng.uniform(*cat.storage_gb)
        work[j] = rng.uniform(*cat.work_mcycles)
        beta[j] = rng.uniform(*cat.output_mb)
    return cat_idx, sigma, work, beta, mix


def _draw_demand(config: GeneratorConfig, cat_idx: np.ndarray,
                 mix: np.ndarray) -> np.ndarray:
    """Per-BS rates: the BS total splits across the categories that actually
    drew services (shares renormalized over the present ones), then within a
    category by Zipf weight of a per-BS random rank."""
    E, S = config.num_bs, config.num_services
    members = {c: np.flatnonzero(cat_idx == c) for c in range(len(CATEGORIES))}
    present = [c for c in range(len(CATEGORIES)) if len(members[c])]
    share_norm = sum(mix[c] for c in present)
    rate = np.zeros((E, S))
    for b in range(E):
        rng = _stream(config, _DEMAND, b)
        for c in present:
            idx = members[c]
            ranks = rng.permutation(len(idx)) + 1
            weights = ranks.astype(float) ** (-config.zipf_exponent)
            share = mix[c] / share_norm
            rate[b, idx] = config.demand_rps * share * weights / weights.sum()
    return rate


def generate(config: GeneratorConfig) -> Instance:
    E, S = config.num_bs, config.num_services
    if E < 1 or S < 1:
        raise ValueError("need at least one BS and one service")

    positions = np.array([
        _stream(config, _POSITION, b).uniform(0.0, config.region_side_m, 2)
        for b in range(E)])
    cat_idx, sigma, work, beta, mix = _draw_services(config)
    rate = _draw_demand(config, cat_idx, mix)
    omega = np.array([
        float(_stream(config, _OMEGA, b).uniform(*config.omega_range))
        for b in range(E)])

    links = []
    for e in range(E):
        for n in range(E):
            if n == e:
                continue
            if math.dist(positions[e], positions[n]) < config.link_radius_m:
                links.append(Link(
                    bs=e, server=n,
                    bandwidth_mbps=config.interbs_bw_mbps,
                    prop_delay_ms=config.interbs_prop_ms,
                    price_per_mbps_hour=config.interbs_price_mbps_hour))
        links.append(Link(
            bs=e, server=E,
            bandwidth_mbps=config.cloud_bw_mbps,
            prop_delay_ms=config.cloud_prop_ms,
            price_per_mbps_hour=config.cloud_price_mbps_hour))

    topology = Topology(
        num_bs=E,
        storage_gb=(config.storage_gb,) * E,
        cpu_ghz=(config.cpu_ghz,) * E,
        access_bw_mbps=(config.access_bw_mbps,) * E,
        links=tuple(links),
    )
    services = ServiceCatalog(
        storage_gb=tuple(sigma),
        output_mb=tuple(beta),
        work_mcycles=tuple(work),
        target_delay_ms=(config.target_delay_ms,) * S,
    )
    demand = Demand(rate_rps=tuple(tuple(row) for row in rate))
    # revenue per request: an hourly rate proportional to the output size,
    # identical at every server
    w_row = tuple(config.revenue_per_mb_hour * b / 3600.0 for b in beta)
    prices = PriceBook(
        storage_per_gb_month=tuple(config.storage_price_gb_month * o
                                   for o in omega)
        + (config.storage_price_gb_month,),
        cpu_per_ghz_hour=tuple(config.cpu_price_ghz_hour * o for o in omega)
        + (config.cpu_price_ghz_hour,),
        revenue_per_request=tuple(w_row for _ in range(E + 1)),
    )
    params = SolverParams(alpha=config.alpha, epsilon=config.epsilon,
                          max_iterations=config.max_iterations,
                          seed=config.seed)
    return Instance(topology=topology, services=services, demand=demand,
                    prices=prices, params=params)


# ---------------------------------------------------------------------------
# knapsack special case
# ---------------------------------------------------------------------------

def make_sp_instance(values: Sequence[float], weights: Sequence[float],
                     capacities: Sequence[float],
                     slack_factor: float = 1e6) -> Instance:
    """Instance whose optimum is the multiple-knapsack optimum.

    Item i becomes a service with storage weight w_i and demand v_i rqt/s at
    BS 0; knapsack j becomes BS j with storage capacity c_j.  Prices are
    zero, revenue is one dollar per request, the cloud sits behind more
    propagation delay than the target allows (so it can never serve), and
    every other capacity is slack_factor times the binding scale.  Packing
    item i anywhere yields exactly v_i; the optimum is the packed value.
    """
    values = [float(v) for v in values]
    weights = [float(w) for w in weights]
    capacities = [float(c) for c in capacities]
    n, m = len(values), len(capacities)
    if not (0 < m < n):
        raise ValueError("need 0 < knapsacks < items")
    if len(weights) != n:
        raise ValueError("values and weights must pair up")

    dmax_ms = 400.0
    total_rate = sum(values)
    total_bits = sum(v for v in values)  # 1 Mb output per request
    big_bw = slack_factor * max(1.0, total_bits)          # Mbps
    big_cpu = slack_factor * max(1.0, total_rate) * 1e-3  # GHz at 1 Mcyc/rqt
    # a zero-capacity knapsack still has to pass instance validation; no
    # integer-weight item fits in a thimble
    storage = tuple(c if c > 0 else 1e-9 for c in capacities)

    links = []
    for e in range(m):
        for nn in range(m):
            if nn != e:
                links.append(Link(bs=e, server=nn, bandwidth_mbps=big_bw,
                                  prop_delay_ms=0.0))
        links.append(Link(bs=e, server=m, bandwidth_mbps=big_bw,
                          prop_delay_ms=2.0 * dmax_ms))

    topology = Topology(
        num_bs=m,
        storage_gb=storage,
        cpu_ghz=(big_cpu,) * m,
        access_bw_mbps=(big_bw,) * m,
        links=tuple(links),
    )
    services = ServiceCatalog(
        storage_gb=tuple(weights),
        output_mb=(1.0,) * n,
        work_mcycles=(1.0,) * n,
        target_delay_ms=(dmax_ms,) * n,
    )
    demand_rows = [tuple(values)] + [(0.0,) * n] * (m - 1)
    demand = Demand(rate_rps=tuple(demand_rows))
    prices = PriceBook(
        storage_per_gb_month=(0.0,) * (m + 1),
        cpu_per_ghz_hour=(0.0,) * (m + 1),
        revenue_per_request=tuple((1.0,) * n for _ in range(m + 1)),
    )
    return Instance(topology=topology, services=services, demand=demand,
                    prices=prices, params=SolverParams(alpha=0.5))
