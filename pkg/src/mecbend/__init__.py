"""Profit-driven service placement and request routing for edge networks.

Solver stack: an exact decomposition (binary placement/routing master plus a
convex routing/sizing subproblem) with heuristic baselines, a seeded scenario
generator, and an event-driven queueing simulator for validating the analytic
delay model.
"""

from mecbend.model import (
    Demand,
    Instance,
    Link,
    PriceBook,
    ServiceCatalog,
    SolverParams,
    Topology,
    load_instance,
    save_instance,
    validate,
)

__all__ = [
    "Demand",
    "Instance",
    "Link",
    "PriceBook",
    "ServiceCatalog",
    "SolverParams",
    "Topology",
    "load_instance",
    "save_instance",
    "validate",
]

__version__ = "0.1.0"
