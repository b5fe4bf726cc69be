"""Continuous subproblems for fixed placement and open routes.

With the binaries frozen, what remains over (route_frac, cpu_rate) is a plain
LP: maximize operating profit (revenue minus CPU and transfer cost) subject to
the affine system from :func:`mecbend.formulation.build_G` specialized to the
given open routes.  Two entry points:

* :func:`solve_inner` solves that LP and returns value, point, and row duals.
* :func:`solve_feasibility` minimizes the uniform relaxation ``gamma`` needed
  to satisfy every row (``G + gamma >= 0``).  Its optimum is <= 1 in magnitude
  by construction and > 0 exactly when the open-route pattern is unserveable;
  the duals of this probe weight the rows in a feasibility certificate.

Dual conventions (used verbatim by the cut extraction): for the maximization
over rows ``A v + b >= 0`` the returned multipliers are nonnegative, and for
an optimal pair

    value == mu @ b + sum_j max(reduced_j, 0) * upper_j

with reduced = c + A^T mu, summed over variables with finite upper bounds.
Variables without an upper bound must price out (reduced <= ~0); the solver
result is rejected otherwise rather than silently trusted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from mecbend.formulation import ConstraintSystem, build_G, operating_profit_coeffs
from mecbend.model import GHZ, Instance

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"

# Multiple of lp_tolerance above which the feasibility probe's optimum is
# treated as a genuine infeasibility rather than solver noise.
INFEASIBILITY_MARGIN = 10.0


@dataclass(frozen=True)
class LpResult:
    """Outcome of one bounded LP, in the caller's (unscaled) variable space."""

    status: str
    value: float
    x: Optional[np.ndarray]
    row_duals: Optional[np.ndarray]


def _highs_options(lp_tol: float) -> dict:
    tight = max(0.1 * lp_tol, 1e-10)
    return {
        "presolve": True,
        "primal_feasibility_tolerance": tight,
        "dual_feasibility_tolerance": tight,
    }


def row_equilibration(A: sp.csr_array) -> np.ndarray:
    """1 / max(1, max |row entry|): brings every row to unit magnitude."""
    row_max = np.abs(A).max(axis=1).toarray().ravel()
    return 1.0 / np.maximum(1.0, row_max)


def linprog_max(c: np.ndarray, A: sp.csr_array, b: np.ndarray,
                lower: np.ndarray, upper: np.ndarray, lp_tol: float,
                col_scale: Optional[np.ndarray] = None) -> LpResult:
    """Maximize c @ v subject to A v + b >= 0 and lower <= v <= upper.

    ``col_scale`` rescales variables inside the solver only (the CPU columns
    carry dollars-per-cycle objective entries around 1e-13, far below any
    sensible dual tolerance; solving in GHz units keeps reduced costs sane).
    Rows are always equilibrated to unit magnitude on top of that, since the
    raw coefficient range (requests vs bits vs cycles) spans ~1e18 and trips
    the solver's small-value cutoff.  Results and duals are mapped back to
    the caller's units.
    """
    if col_scale is not None:
        A = sp.csr_array(A.multiply(col_scale[None, :]))
        c = c * col_scale
        lower = lower / col_scale
        upper = upper / col_scale
    row_scale = row_equilibration(A)
    A = sp.csr_array(A.multiply(row_scale[:, None]))
    b = b * row_scale
    bounds = np.column_stack([lower, upper])
    res = linprog(-c, A_ub=-A, b_ub=b, bounds=bounds,
                  method="highs", options=_highs_options(lp_tol))
    if res.status in (2, 4):
        # presolve sometimes misjudges boundary-thin systems at tight
        # tolerances (status 2) or leaves the solver in a state scipy cannot
        # map back (status 4, seen on infeasible branch-fixed nodes); only a
        # full solve is allowed to declare infeasibility
        opts = _highs_options(lp_tol)
        opts["presolve"] = False
        res = linprog(-c, A_ub=-A, b_ub=b, bounds=bounds,
                      method="highs", options=opts)
        if res.status == 2:
            return LpResult(status=INFEASIBLE, value=np.nan, x=None,
                            row_duals=None)
    if res.status != 0:
        raise RuntimeError(f"LP solve failed (status {res.status}): {res.message}")
    x = np.asarray(res.x)
    if col_scale is not None:
        x = x * col_scale
    duals = -np.asarray(res.ineqlin.marginals) * row_scale
    return LpResult(status=OPTIMAL, value=-float(res.fun), x=x, row_duals=duals)


def dual_objective(c: np.ndarray, A: sp.csr_array, b: np.ndarray,
                   upper: np.ndarray, mu: np.ndarray) -> tuple[float, float]:
    """Self-contained dual bound for linprog_max and the worst unbounded-
    variable pricing violation (must be ~0 for the bound to be meaningful)."""
    reduced = c + A.T @ mu
    finite = np.isfinite(upper)
    bound = float(mu @ b + np.sum(np.maximum(reduced[finite], 0.0) * upper[finite]))
    worst = float(np.max(np.maximum(reduced[~finite], 0.0), initial=0.0))
    return bound, worst


# ---------------------------------------------------------------------------
# inner LP
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InnerResult:
    """Operating-profit LP outcome for one open-route pattern.

    value excludes storage cost (placement-only, settled by the caller).
    dual_gap is |primal - dual| of the solved LP, a direct certificate that
    the returned multipliers support the reported value.
    """

    status: str
    value: float
    route_frac: Optional[np.ndarray]
    cpu_rate: Optional[np.ndarray]
    row_duals: Optional[np.ndarray]
    dual_gap: float


def _bounds_for(cs: ConstraintSystem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    nv = cs.n_y + cs.n_u
    lower = np.zeros(nv)
    upper = np.full(nv, np.inf)
    upper[:cs.n_y] = 1.0
    scale = np.ones(nv)
    scale[cs.n_y:] = GHZ
    return lower, upper, scale


def solve_inner(instance: Instance, route_open: np.ndarray,
                cs: Optional[ConstraintSystem] = None) -> InnerResult:
    if cs is None:
        cs = build_G(instance)
    c = operating_profit_coeffs(instance, cs)
    b = cs.constants(route_open)
    lower, upper, scale = _bounds_for(cs)
    lp_tol = instance.params.lp_tolerance
    res = linprog_max(c, cs.A, b, lower, upper, lp_tol, col_scale=scale)
    if res.status == INFEASIBLE:
        return InnerResult(status=INFEASIBLE, value=np.nan, route_frac=None,
                           cpu_rate=None, row_duals=None, dual_gap=np.nan)
    bound, worst = dual_objective(c, cs.A, b, upper, res.row_duals)
    cscale = max(1.0, float(np.max(np.abs(c))))
    if worst > 1e3 * lp_tol * cscale:
        raise RuntimeError(
            f"unbounded-variable pricing violation {worst:.3e} in inner LP")
    y, u = cs.unpack(res.x)
    return InnerResult(status=OPTIMAL, value=res.value, route_frac=y,
                       cpu_rate=u, row_duals=res.row_duals,
                       dual_gap=abs(res.value - bound))


# ---------------------------------------------------------------------------
# feasibility probe
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeasibilityResult:
    """min gamma with G + gamma >= 0; duals sum to one and weight a
    nonnegative row combination that certifies infeasibility when gamma > 0."""

    gamma: float
    route_frac: np.ndarray
    cpu_rate: np.ndarray
    row_duals: np.ndarray

    def infeasible(self, lp_tol: float) -> bool:
        return self.gamma > INFEASIBILITY_MARGIN * lp_tol


def solve_feasibility(instance: Instance, route_open: np.ndarray,
                      cs: Optional[ConstraintSystem] = None) -> FeasibilityResult:
    if cs is None:
        cs = build_G(instance)
    m = cs.n_rows
    nv = cs.n_y + cs.n_u
    b = cs.constants(route_open)
    lower, upper, scale = _bounds_for(cs)

    ones = sp.csr_array(np.ones((m, 1)))
    A = sp.csr_array(sp.hstack([cs.A, ones]))
    c = np.zeros(nv + 1)
    c[-1] = -1.0  # maximize -gamma
    lower = np.concatenate([lower, [-np.inf]])
    upper = np.concatenate([upper, [np.inf]])
    scale = np.concatenate([scale, [1.0]])

    lp_tol = instance.params.lp_tolerance
    res = linprog_max(c, A, b, lower, upper, lp_tol, col_scale=scale)
    if res.status != OPTIMAL:
        raise RuntimeError(f"feasibility probe did not solve: {res.status}")
    lam = res.row_duals
    tot = float(lam.sum())
    if abs(tot - 1.0) > 1e-6:
        raise RuntimeError(f"feasibility duals sum to {tot:.9f}, expected 1")
    y, u = cs.unpack(res.x[:-1])
    return FeasibilityResult(gamma=-res.value, route_frac=y, cpu_rate=u,
                             row_duals=lam)
