import dataclasses
import math

import numpy as np
import pytest

from aerialmec.deployment import Deployment
from aerialmec.linkmodel import (ContractViolation, build_link_tables,
                                 cost_ledger, gu_uav_distance, mean_uplink_gain,
                                 platform_energies, u2h_rate, uav_hap_distance,
                                 uplink_rate)
from aerialmec.scenario import generate_scenario


def test_gu_uav_distance():
    assert gu_uav_distance((0, 0), (0, 0), 100.0) == 100.0
    assert gu_uav_distance((300, 400), (0, 0), 0.0) == 500.0
    # hand arithmetic: sqrt(300^2 + 400^2 + 100^2) = sqrt(260000)
    assert gu_uav_distance((300, 400), (0, 0), 100.0) == pytest.approx(
        509.9019513592785, rel=1e-12)


def test_uav_hap_distance():
    hap = (500, 500, 20000)
    assert uav_hap_distance((500, 500), 100.0, hap) == 19900.0
    assert uav_hap_distance((500, 500), 20000.0, hap) == 0.0
    assert uav_hap_distance((0, 0), 100.0, hap) == pytest.approx(
        19912.55885113714, rel=1e-12)


def test_mean_uplink_gain():
    assert mean_uplink_gain([1, 0], [1.0, 50.0], 1e-5) == pytest.approx(1e-5)
    assert mean_uplink_gain([0, 1], [1.0, 100.0], 1e-5) == pytest.approx(1e-9)
    with pytest.raises(ContractViolation):
        mean_uplink_gain([1, 1], [1.0, 100.0], 1e-5)
    with pytest.raises(ContractViolation):
        mean_uplink_gain([0, 0], [1.0, 100.0], 1e-5)


def test_uplink_rate_reference_point(table1_scenario):
    radio = table1_scenario.radio
    assert uplink_rate(0.0, radio) == 0.0
    # independent calculator: SNR = 0.5e-9 / (10^-20.4 * 5e6) ~= 2.512e4
    assert uplink_rate(1e-9, radio) == pytest.approx(73082705.25542615, rel=1e-9)


def test_uplink_rate_bandwidth_sublinearity(table1_scenario):
    radio = table1_scenario.radio
    doubled = dataclasses.replace(radio, uplink_bandwidth=2 * radio.uplink_bandwidth)
    rate = uplink_rate(1e-9, radio)
    assert uplink_rate(1e-9, doubled) < 2 * rate


def test_u2h_rate_reference_point(table1_scenario):
    radio = table1_scenario.radio
    # independent calculator: SNR ~= 575 at 19.9 km
    assert u2h_rate(19900.0, radio, 2.0) == pytest.approx(45853060.640647694,
                                                          rel=1e-9)
    assert u2h_rate(1e9, radio, 2.0) < 1e3     # vanishing with distance
    assert u2h_rate(19900.0, radio, 4.0) > u2h_rate(19900.0, radio, 2.0)


def test_gain_inverse_square_scaling():
    base = mean_uplink_gain([1], [200.0], 1e-5)
    scaled = mean_uplink_gain([1], [200.0 * 3], 1e-5)
    assert scaled == pytest.approx(base / 9, rel=1e-12)


def _single_task_setup(bits=6e7, forwarded=False):
    s = generate_scenario(1, 1, 0)
    tasks = (dataclasses.replace(s.tasks[0], data_bits=bits),)
    s = dataclasses.replace(s, tasks=tasks)
    user = s.users[0].position
    dep = Deployment(positions=np.array([[user[0], user[1]]]),
                     delta=np.array([[1]], dtype=np.int8),
                     clusters=((0,),), weighted_cost=0.0, iterations=1,
                     cost_trace=(0.0,))
    return s, dep


def test_cost_ledger_uav_compute_hand_arithmetic():
    s, dep = _single_task_setup()
    led = cost_ledger(0, dep, 0, 1e9, s)
    assert led.t_comp_uav == pytest.approx(18.0, rel=1e-12)   # 300*6e7/1e9
    assert led.e_comp_uav == pytest.approx(18.0, rel=1e-12)   # 1e-27*300*6e7*1e18
    assert led.t_comp_hap == 0.0 and led.e_comp_hap == 0.0 and led.e_fwd == 0.0
    assert led.t_total == pytest.approx(led.t_up + 18.0, rel=1e-12)


def test_cost_ledger_forwarded_task():
    s, dep = _single_task_setup(forwarded=True)
    led = cost_ledger(0, dep, 1, 1e9, s)
    assert led.t_comp_uav == 0.0 and led.e_comp_uav == 0.0
    assert led.t_fwd > 0 and led.e_fwd == pytest.approx(2.0 * led.t_fwd)
    assert led.e_comp_hap == pytest.approx(1e-28 * 1e18 * 300 * 6e7, rel=1e-12)
    assert led.t_total == pytest.approx(led.t_up + led.t_fwd + led.t_comp_hap)


def test_cost_ledger_frequency_limits():
    s, dep = _single_task_setup()
    slow = cost_ledger(0, dep, 0, 1e6, s)
    fast = cost_ledger(0, dep, 0, 1e15, s)
    assert fast.t_comp_uav < slow.t_comp_uav
    assert fast.e_comp_uav > slow.e_comp_uav
    assert fast.t_comp_uav == pytest.approx(0.0, abs=1e-4)


def test_cost_ledger_gain_override_identity():
    s, dep = _single_task_setup()
    base = cost_ledger(0, dep, 0, 1e9, s)
    tables = build_link_tables(s, dep)
    override = cost_ledger(0, dep, 0, 1e9, s,
                           gain_override=float(tables.mean_gain[0]))
    assert base == override


def test_cost_ledger_contract_checks():
    s, dep = _single_task_setup()
    with pytest.raises(ContractViolation):
        cost_ledger(0, dep, [1, 1], 1e9, s)     # row longer than UAV count
    with pytest.raises(ContractViolation):
        cost_ledger(0, dep, 0, 0.0, s)


def test_platform_energies_routing_split(small_scenario, small_deployment):
    M = small_scenario.num_users
    f = np.full(M, 1e9)
    lam = np.zeros(M)
    e_uav, e_hap = platform_energies(small_deployment, lam, f, small_scenario)
    assert e_hap == 0.0
    led_sum = sum(cost_ledger(m, small_deployment, 0, 1e9, small_scenario).e_comp_uav
                  for m in range(M))
    assert e_uav.sum() == pytest.approx(led_sum, rel=1e-12)

    lam = np.ones(M)
    e_uav, e_hap = platform_energies(small_deployment, lam, f, small_scenario)
    fwd = [cost_ledger(m, small_deployment, 1, 1e9, small_scenario)
           for m in range(M)]
    assert e_uav.sum() == pytest.approx(sum(l.e_fwd for l in fwd), rel=1e-12)
    assert e_hap == pytest.approx(sum(l.e_comp_hap for l in fwd), rel=1e-12)


def test_platform_energies_empty_plan(small_scenario, small_deployment):
    s = dataclasses.replace(small_scenario, users=(), tasks=(), uncertainty=())
    dep = Deployment(positions=small_deployment.positions,
                     delta=np.zeros((0, 2), dtype=np.int8),
                     clusters=((), ()), weighted_cost=0.0, iterations=1,
                     cost_trace=(0.0,))
    e_uav, e_hap = platform_energies(dep, np.zeros(0), np.zeros(0), s)
    assert e_uav.tolist() == [0.0, 0.0] and e_hap == 0.0


def test_total_delay_monotone_in_frequency(small_scenario, small_deployment):
    lows = [cost_ledger(m, small_deployment, m % 2, 5e8, small_scenario).t_total
            for m in range(small_scenario.num_users)]
    highs = [cost_ledger(m, small_deployment, m % 2, 2e9, small_scenario).t_total
             for m in range(small_scenario.num_users)]
    assert all(h < l for h, l in zip(highs, lows))
