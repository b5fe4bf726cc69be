"""Decomposition loop: convergence to enumerated optima and trace hygiene."""

import dataclasses

import numpy as np
import pytest

from mecbend.formulation import (
    check_original,
    check_reformulated,
    empty_solution,
    profit,
    storage_cost,
)
from mecbend.gbd import CONVERGED, ITERATION_LIMIT, solve
from tests.conftest import tiny_instance
from tests.oracles import enumerate_best
from tests.test_cutfactory import two_service_instance
from tests.test_subproblems import single_service_instance, standby_overflow_instance


def with_params(inst, **kw):
    return dataclasses.replace(inst, params=dataclasses.replace(inst.params, **kw))


def test_converges_to_enumerated_optimum():
    inst = with_params(two_service_instance(), epsilon=1e-8)
    want, _ = enumerate_best(inst)
    res = solve(inst)
    assert res.status == CONVERGED
    assert res.value == pytest.approx(want, abs=1e-7)
    assert res.gap <= res.epsilon + 1e-12
    assert check_reformulated(inst, res.solution) == []
    assert check_original(inst, res.solution) == []
    assert profit(inst, res.solution).total == pytest.approx(res.value, abs=1e-8)


def test_feasibility_cuts_steer_past_overload():
    # both services want the one BS; the delay-floor CPU only fits one
    inst = with_params(standby_overflow_instance(), epsilon=1e-8)
    want, _ = enumerate_best(inst)
    res = solve(inst)
    assert res.status == CONVERGED
    assert res.value == pytest.approx(want, abs=1e-7)
    both_local = int(res.solution.route_open[0, 0, 0]) + \
        int(res.solution.route_open[1, 0, 0])
    assert both_local <= 1
    assert check_reformulated(inst, res.solution) == []


def test_unprofitable_service_closes_everything():
    inst = with_params(single_service_instance(w=0.0), epsilon=1e-8)
    res = solve(inst)
    assert res.status == CONVERGED
    assert res.solution.route_open.sum() == 0
    want = -storage_cost(inst, empty_solution(inst).placement)
    assert res.value == pytest.approx(want, abs=1e-9)


def test_trace_invariants_and_determinism():
    inst = tiny_instance()
    r1 = solve(inst)
    r2 = solve(inst)
    assert r1.status == CONVERGED
    rows = r1.trace_rows()
    lbs = [r["lb"] for r in rows]
    ubs = [r["ub"] for r in rows]
    assert all(b >= a - 1e-12 for a, b in zip(lbs, lbs[1:]))
    assert all(b <= a + 1e-12 for a, b in zip(ubs, ubs[1:]))
    assert all(r["lb"] <= r["ub"] + 1e-6 for r in rows)
    assert rows[-1]["gap"] <= r1.epsilon + 1e-12
    assert [r["iter"] for r in rows] == list(range(1, len(rows) + 1))

    def strip(trace):
        return [{k: v for k, v in row.items() if k != "wall_ms"}
                for row in trace]

    assert strip(r1.trace_rows()) == strip(r2.trace_rows())
    assert r1.value == r2.value
    np.testing.assert_array_equal(r1.solution.placement, r2.solution.placement)
    np.testing.assert_array_equal(r1.solution.route_open, r2.solution.route_open)
    np.testing.assert_array_equal(r1.solution.route_frac, r2.solution.route_frac)


def test_local_only_route_mask():
    inst = with_params(tiny_instance(), epsilon=1e-8)
    S, E, N = inst.num_services, inst.num_bs, inst.num_servers
    allowed = np.zeros((S, E, N), dtype=bool)
    for e in range(E):
        allowed[:, e, e] = True
    res = solve(inst, allowed_routes=allowed)
    assert res.status == CONVERGED
    off_diagonal = res.solution.route_open.copy()
    for e in range(E):
        off_diagonal[:, e, e] = 0
    assert off_diagonal.sum() == 0
    full = solve(inst)
    assert res.value <= full.value + 1e-6


def test_iteration_limit_status():
    inst = with_params(two_service_instance(), epsilon=1e-8, max_iterations=1)
    res = solve(inst)
    assert res.status == ITERATION_LIMIT
    assert res.solution is not None
    assert np.isfinite(res.value)
    assert np.isfinite(res.upper)
    assert res.value <= res.upper + 1e-9


def test_epsilon_default_scales_with_first_bound():
    inst = tiny_instance()
    assert inst.params.epsilon is None
    res = solve(inst)
    # the all-closed starting value is pennies per month, far under a dollar
    assert res.epsilon == pytest.approx(1e-4)


def test_allowed_routes_shape_checked():
    inst = tiny_instance()
    with pytest.raises(ValueError):
        solve(inst, allowed_routes=np.ones((1, 1, 1), dtype=bool))
