"""Shared fixtures: small hand-built instances used across the suite."""

import pytest

from mecbend.model import (
    Demand,
    Instance,
    Link,
    PriceBook,
    ServiceCatalog,
    SolverParams,
    Topology,
)


def tiny_instance(alpha: float = 0.5, seed: int = 0) -> Instance:
    """Two BSs, two services, full link set.  Chosen so that edge placement
    is profitable for service 0 at BS 0 but the numbers stay readable."""
    topo = Topology(
        num_bs=2,
        storage_gb=(50.0, 50.0),
        cpu_ghz=(20.0, 20.0),
        access_bw_mbps=(100.0, 100.0),
        links=(
            Link(bs=0, server=1, bandwidth_mbps=1000.0, prop_delay_ms=0.0005,
                 price_per_mbps_hour=0.2),
            Link(bs=1, server=0, bandwidth_mbps=1000.0, prop_delay_ms=0.0005,
                 price_per_mbps_hour=0.2),
            Link(bs=0, server=2, bandwidth_mbps=500.0, prop_delay_ms=50.0,
                 price_per_mbps_hour=0.5),
            Link(bs=1, server=2, bandwidth_mbps=500.0, prop_delay_ms=50.0,
                 price_per_mbps_hour=0.5),
        ),
    )
    services = ServiceCatalog(
        storage_gb=(5.0, 0.02),
        output_mb=(4.0, 2.0),
        work_mcycles=(1.5, 0.16),
        target_delay_ms=(400.0, 400.0),
    )
    demand = Demand(rate_rps=((6.0, 4.0), (3.0, 5.0)))
    prices = PriceBook(
        storage_per_gb_month=(1.0, 1.0, 0.2),
        cpu_per_ghz_hour=(2.0, 2.0, 0.4),
        revenue_per_request=(
            (12.0 / 3600.0, 6.0 / 3600.0),
            (12.0 / 3600.0, 6.0 / 3600.0),
            (12.0 / 3600.0, 6.0 / 3600.0),
        ),
    )
    return Instance(topology=topo, services=services, demand=demand,
                    prices=prices, params=SolverParams(alpha=alpha, seed=seed))


@pytest.fixture
def tiny():
    return tiny_instance()
