"""Benders cuts from subproblem duals.

Every constraint row that carries an open-route indicator is affine in it, so
the Lagrangian of the inner LP collapses to a constant plus one slope per
route: slope[route] = sum over that route's rows of dual * indicator
coefficient.  An optimality cut then says, for every candidate placement X
and open-route pattern Z,

    value(X, Z) <= constant + sum coeff_x * x + sum coeff_z * z

with coeff_x the exact storage-cost column (so the X part cancels identically
against the objective).  A feasibility cut is the probe's certificate: its
duals lam (lam >= 0, sum lam == 1) weight the rows into a single valid
inequality  constant + sum coeff_z * z >= 0  that the generating pattern
violates by exactly gamma.

Constants are anchored: after assembling the textbook evaluated-Lagrangian
form, the constant is corrected by one scalar so the cut passes through the
generating point exactly (optimality: equals the inner value; feasibility:
equals -gamma).  The correction absorbs complementary-slackness residue from
the LP; it must be tiny, and a large value means the duals are unusable, so
it asserts rather than warns.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from mecbend.formulation import ConstraintSystem
from mecbend.model import Instance
from mecbend.subproblems import FeasibilityResult, InnerResult

OPTIMALITY = "optimality"
FEASIBILITY = "feasibility"

# Anchor corrections beyond this are no longer LP roundoff but a sign that
# the dual vector is inconsistent with the reported objective.
ANCHOR_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Cut:
    """One master-problem inequality; see module docstring for semantics."""

    kind: str
    constant: float
    coeff_x: dict
    coeff_z: dict
    provenance: dict = field(default_factory=dict)

    def value_at(self, placement: np.ndarray, route_open: np.ndarray) -> float:
        """Right-hand side at a candidate point (feasibility: row value)."""
        total = self.constant
        for (n, s), w in self.coeff_x.items():
            total += w * placement[n, s]
        for (s, e, n), w in self.coeff_z.items():
            total += w * route_open[s, e, n]
        return total


def _route_slopes(cs: ConstraintSystem, duals: np.ndarray) -> np.ndarray:
    """slope per flat route: sum of dual * indicator coefficient."""
    slopes = np.zeros(cs.n_y)
    has_z = cs.row_route >= 0
    np.add.at(slopes, cs.row_route[has_z], duals[has_z] * cs.zcoef[has_z])
    return slopes


def _pattern_tag(route_open: np.ndarray) -> str:
    return hashlib.sha1(np.asarray(route_open, dtype=np.int8).tobytes()).hexdigest()[:12]


def make_optimality_cut(instance: Instance, cs: ConstraintSystem,
                        route_open: np.ndarray, inner: InnerResult) -> Cut:
    if inner.status != "optimal" or inner.row_duals is None:
        raise ValueError("optimality cut needs a solved inner LP with duals")
    mu = inner.row_duals
    slopes = _route_slopes(cs, mu)
    zhat = cs.route_values(route_open)

    # evaluated-Lagrangian constant: inner value plus dual-weighted z-free
    # row parts of every indicator-carrying row at the inner optimum
    vhat = cs.pack(inner.route_frac, inner.cpu_rate)
    rowpart = cs.A @ vhat + cs.b0
    has_z = cs.row_route >= 0
    textbook = inner.value + float(np.sum(mu[has_z] * rowpart[has_z]))

    anchored = inner.value - float(slopes @ zhat)
    correction = anchored - textbook
    scale = max(1.0, abs(inner.value))
    assert abs(correction) <= ANCHOR_TOLERANCE * scale, (
        f"optimality cut anchor correction {correction:.3e} exceeds tolerance; "
        "inner duals violate complementary slackness")

    coeff_x = {(n, s): -float(instance.size_bytes[s] * instance.storage_price[n])
               for n in range(instance.num_servers)
               for s in range(instance.num_services)}
    coeff_z = {tuple(cs.routes[j]): float(slopes[j])
               for j in range(cs.n_y) if slopes[j] != 0.0}
    return Cut(
        kind=OPTIMALITY,
        constant=anchored,
        coeff_x=coeff_x,
        coeff_z=coeff_z,
        provenance={"pattern": _pattern_tag(route_open),
                    "route_open": np.asarray(route_open, dtype=float).copy(),
                    "inner_value": inner.value,
                    "anchor_correction": correction},
    )


def make_feasibility_cut(instance: Instance, cs: ConstraintSystem,
                         route_open: np.ndarray,
                         probe: FeasibilityResult) -> Cut:
    lam = probe.row_duals
    slopes = _route_slopes(cs, lam)
    zhat = cs.route_values(route_open)

    vbar = cs.pack(probe.route_frac, probe.cpu_rate)
    rowpart = cs.A @ vbar + cs.b0
    textbook = float(lam @ rowpart)

    anchored = -probe.gamma - float(slopes @ zhat)
    correction = anchored - textbook
    assert abs(correction) <= ANCHOR_TOLERANCE, (
        f"feasibility cut anchor correction {correction:.3e} exceeds tolerance")

    coeff_z = {tuple(cs.routes[j]): float(slopes[j])
               for j in range(cs.n_y) if slopes[j] != 0.0}
    return Cut(
        kind=FEASIBILITY,
        constant=anchored,
        coeff_x={},
        coeff_z=coeff_z,
        provenance={"pattern": _pattern_tag(route_open),
                    "route_open": np.asarray(route_open, dtype=float).copy(),
                    "gamma": probe.gamma},
    )
