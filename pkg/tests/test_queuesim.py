"""Simulation oracle: textbook queues, agreement with the analytic model."""

import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mecbend import gbd
from mecbend.formulation import Solution, empty_solution, node_load
from mecbend.queuesim import _batch_stats, simulate
from mecbend.scenario import desk_config, generate
from tests.test_baselines import starved_neighbor_instance
from tests.test_subproblems import single_service_instance


def mm1_solution(inst, service_rate):
    """Serve everything locally on one queue with the given service rate."""
    E, N, S = inst.num_bs, inst.num_servers, inst.num_services
    placement = np.ones((N, S), dtype=np.int8)
    y = np.zeros((S, E, N))
    y[0, 0, 0] = 1.0
    z = np.zeros((S, E, N), dtype=np.int8)
    z[0, 0, 0] = 1
    u = np.zeros((N, S))
    u[0, 0] = service_rate * inst.work_cycles[0]
    return Solution(placement, z, y, u)


def test_textbook_mm1_sojourn():
    inst = single_service_instance(rate=1.0)
    rep = simulate(inst, mm1_solution(inst, 2.0), 100_000, seed=5)
    assert len(rep.servers) == 1
    srv = rep.servers[0]
    assert srv.analytic_ms == pytest.approx(1000.0)
    assert abs(srv.simulated_ms - 1000.0) <= 3 * srv.stderr_ms
    assert srv.samples == 90_000  # 10% warm-up removed
    assert rep.links == ()


def solved_desk(seed):
    inst = generate(desk_config(seed=seed, epsilon=1e-6))
    res = gbd.solve(inst)
    assert res.converged
    return inst, res.solution


def test_desk_server_delays_match_analytics():
    inst, sol = solved_desk(3)
    rep = simulate(inst, sol, 100_000, seed=9)
    rho = node_load(inst, sol.route_frac) * inst.work_cycles[None, :]
    rho = np.divide(rho, sol.cpu_rate, out=np.zeros_like(rho),
                    where=sol.cpu_rate > 0)
    checked = 0
    for stat in rep.servers:
        n = int(stat.queue.split("n=")[1].split(",")[0])
        s = int(stat.queue.split("s=")[1])
        if rho[n, s] > 0.9 or stat.samples < 1000:
            continue
        tol = max(0.05 * stat.analytic_ms, 3 * stat.stderr_ms)
        assert abs(stat.simulated_ms - stat.analytic_ms) <= tol, stat
        checked += 1
    assert checked >= 4


def test_desk_end_to_end_meets_target():
    inst, sol = solved_desk(4)
    rep = simulate(inst, sol, 80_000, seed=11)
    for stat in rep.flows:
        s = int(stat.queue.split("s=")[1].split(",")[0])
        limit = inst.dmax_s[s] * 1e3 + 3 * stat.stderr_ms
        assert stat.simulated_ms <= limit, stat


def test_remote_link_queue_agreement():
    inst = starved_neighbor_instance()
    res = gbd.solve(inst)
    assert res.solution.route_frac[0, 0, 1] > 0.5  # actually remote
    rep = simulate(inst, res.solution, 100_000, seed=2)
    assert len(rep.links) == 1
    lnk = rep.links[0]
    assert not lnk.mixed_beta
    tol = max(0.05 * lnk.analytic_ms, 3 * lnk.stderr_ms)
    assert abs(lnk.simulated_ms - lnk.analytic_ms) <= tol, lnk


def test_poisson_splitting_rates():
    inst, sol = solved_desk(3)
    rep = simulate(inst, sol, 100_000, seed=21)
    # the mean horizon follows from total offered rate and arrival count
    total_rate = float(inst.demand_rate.sum())
    horizon = rep.horizon_arrivals / total_rate
    for fid, target, measured in rep.arrival_rate:
        se = np.sqrt(max(measured * horizon, 1.0)) / horizon
        assert abs(measured - target) <= 4 * se, (fid, target, measured)


def test_unstable_queue_refused():
    inst = single_service_instance(rate=1.0)
    with pytest.raises(ValueError, match="unstable"):
        simulate(inst, mm1_solution(inst, 1.0), 1000, seed=0)


def test_nothing_served_short_circuits():
    inst = single_service_instance()
    rep = simulate(inst, empty_solution(inst), 1000, seed=0)
    assert rep.flows == () and rep.servers == () and rep.links == ()


def test_same_seed_same_report():
    inst = single_service_instance(rate=1.0)
    sol = mm1_solution(inst, 2.0)
    a = simulate(inst, sol, 20_000, seed=7)
    b = simulate(inst, sol, 20_000, seed=7)
    c = simulate(inst, sol, 20_000, seed=8)
    assert a == b
    assert a.servers[0].simulated_ms != c.servers[0].simulated_ms


@given(st.lists(st.floats(0.0, 1e3), min_size=1, max_size=200))
def test_batch_stats_mean_matches_numpy(values):
    arr = np.asarray(values)
    mean, se = _batch_stats(arr)
    assert mean == pytest.approx(float(arr.mean()), rel=1e-12, abs=1e-12)
    if len(values) >= 2:
        assert np.isfinite(se) and se >= 0.0
