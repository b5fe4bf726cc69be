"""Generator determinism, distribution shape, and the knapsack special case."""

import dataclasses

import numpy as np
import pytest

from mecbend.gbd import solve
from mecbend.model import dumps_instance, validate
from mecbend.scenario import (
    desk_config,
    generate,
    make_sp_instance,
    paper_config,
)
from tests.oracles import mkp_dp


def test_generated_instances_validate():
    for seed in range(3):
        assert validate(generate(desk_config(seed=seed))) == []


def test_paper_scale_shape_and_demand_total():
    inst = generate(paper_config(num_services=40, seed=1))
    assert inst.num_bs == 10
    assert inst.num_services == 40
    assert inst.num_servers == 11
    assert validate(inst) == []
    # each BS hands out its full 10 rqt/s across the present categories
    np.testing.assert_allclose(inst.demand_rate.sum(axis=1), 10.0)


def test_zipf_split_two_services_one_category():
    cfg = desk_config(num_bs=2, num_services=2,
                      category_mix=(1.0, 0.0, 0.0, 0.0), seed=5)
    inst = generate(cfg)
    weights = np.array([1.0, 2.0 ** -0.8])
    want = np.sort(10.0 * weights / weights.sum())
    for e in range(2):
        np.testing.assert_allclose(np.sort(inst.demand_rate[e]), want,
                                   rtol=1e-12)


def test_seed_determinism_and_sensitivity():
    a = dumps_instance(generate(desk_config(seed=7)))
    b = dumps_instance(generate(desk_config(seed=7)))
    c = dumps_instance(generate(desk_config(seed=8)))
    assert a == b
    assert a != c


def test_topologies_nest_across_bs_count():
    small = generate(desk_config(num_bs=2, num_services=6, seed=11))
    big = generate(desk_config(num_bs=4, num_services=6, seed=11))
    assert small.services == big.services
    np.testing.assert_array_equal(small.demand_rate, big.demand_rate[:2])
    assert small.prices.storage_per_gb_month[:2] == \
        big.prices.storage_per_gb_month[:2]
    assert small.prices.cpu_per_ghz_hour[:2] == big.prices.cpu_per_ghz_hour[:2]
    small_pairs = {(l.bs, l.server) for l in small.topology.links
                   if l.server < 2}
    big_pairs = {(l.bs, l.server) for l in big.topology.links
                 if l.bs < 2 and l.server < 2}
    assert small_pairs == big_pairs


def test_link_radius_controls_edges():
    sparse = generate(desk_config(num_bs=3, num_services=3,
                                  link_radius_m=1e-3, seed=0))
    assert all(link.server == 3 for link in sparse.topology.links)
    dense = generate(desk_config(num_bs=3, num_services=3, seed=0))
    pairs = {(link.bs, link.server) for link in dense.topology.links}
    for e in range(3):
        for n in range(3):
            if e != n:
                assert (e, n) in pairs


def test_category_attributes_within_ranges():
    inst = generate(paper_config(num_services=60, seed=3))
    sigma = np.array(inst.services.storage_gb)
    beta = np.array(inst.services.output_mb)
    work = np.array(inst.services.work_mcycles)
    assert sigma.min() >= 0.02 and sigma.max() <= 20.0
    assert beta.min() >= 1.0 and beta.max() <= 25.0
    assert work.min() >= 0.0001 and work.max() <= 3.0
    np.testing.assert_allclose(
        inst.revenue, np.tile(3.0 * beta / 3600.0, (inst.num_servers, 1)))


def test_omega_scales_bs_prices_only():
    inst = generate(desk_config(seed=2))
    cloud_storage = inst.prices.storage_per_gb_month[-1]
    cloud_cpu = inst.prices.cpu_per_ghz_hour[-1]
    assert cloud_storage == 0.2
    assert cloud_cpu == 0.4
    for e in range(inst.num_bs):
        ratio_storage = inst.prices.storage_per_gb_month[e] / cloud_storage
        ratio_cpu = inst.prices.cpu_per_ghz_hour[e] / cloud_cpu
        assert 4.0 <= ratio_storage <= 7.0
        assert ratio_storage == pytest.approx(ratio_cpu, rel=1e-12)


# -- knapsack special case ------------------------------------------------------


def gbd_value(inst, eps=1e-8):
    inst = dataclasses.replace(
        inst, params=dataclasses.replace(inst.params, epsilon=eps))
    res = solve(inst)
    assert res.converged
    return res.value


def test_sp_instance_matches_dp_example():
    # best pack is items 1+2: weight 9 of 10, value 11
    values, weights, caps = [6.0, 5.0, 4.0], [5.0, 4.0, 3.0], [10.0]
    assert mkp_dp(values, weights, caps) == 11.0
    assert gbd_value(make_sp_instance(values, weights, caps)) == \
        pytest.approx(11.0, abs=1e-6)


def test_sp_zero_capacity_packs_nothing():
    inst = make_sp_instance([6.0, 5.0], [5.0, 4.0], [0.0])
    assert gbd_value(inst) == pytest.approx(0.0, abs=1e-9)


def test_sp_two_identical_knapsacks():
    values, weights, caps = [9.0, 7.0, 5.0], [4.0, 4.0, 4.0], [4.0, 4.0]
    assert mkp_dp(values, weights, caps) == 16.0
    assert gbd_value(make_sp_instance(values, weights, caps)) == \
        pytest.approx(16.0, abs=1e-6)


def test_sp_slack_capacity_insensitive():
    a = gbd_value(make_sp_instance([6.0, 5.0, 4.0], [5.0, 4.0, 3.0], [10.0],
                                   slack_factor=1e6))
    b = gbd_value(make_sp_instance([6.0, 5.0, 4.0], [5.0, 4.0, 3.0], [10.0],
                                   slack_factor=1e7))
    assert a == pytest.approx(b, abs=1e-9)


def test_sp_requires_more_items_than_knapsacks():
    with pytest.raises(ValueError):
        make_sp_instance([5.0], [3.0], [4.0])
