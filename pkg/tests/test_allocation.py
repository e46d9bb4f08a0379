import dataclasses
import math

import numpy as np
import pytest

from aerialmec import drcc
from aerialmec.allocation import (reduced_plan, solve_allocation,
                                  verify_allocation_optimality)
from aerialmec.deployment import wkd_deploy
from aerialmec.linkmodel import ContractViolation, build_link_tables, \
    platform_energies
from aerialmec.scenario import generate_scenario


def test_single_task_allocation():
    s = generate_scenario(1, 1, 0)
    dep = wkd_deploy(s)
    alloc = solve_allocation(np.array([0]), dep, s)
    assert alloc.feasible
    f_min = drcc.min_feasible_frequency(0, 0, dep, s)
    assert alloc.f[0] == pytest.approx(f_min, rel=1e-12)
    expected = s.uavs[0].switch_cap * 300 * s.tasks[0].data_bits * f_min ** 2
    assert alloc.objective == pytest.approx(expected, rel=1e-12)


def test_uav_cpu_overload_flagged():
    s = generate_scenario(12, 1, 3)
    dep = wkd_deploy(s)
    alloc = solve_allocation(np.zeros(12, dtype=int), dep, s)
    assert not alloc.feasible
    assert alloc.slacks["uav_cpu"][0] < 0
    assert "uav_cpu[0]" in alloc.violations


def test_hap_slot_overload_flagged():
    s = generate_scenario(12, 2, 4)
    dep = wkd_deploy(s)
    alloc = solve_allocation(np.ones(12, dtype=int), dep, s)
    assert not alloc.feasible
    assert alloc.slacks["hap_slots"] == -2.0
    assert "hap_slots" in alloc.violations


def test_slack_accounting_matches_independent_recompute(small_scenario,
                                                        small_deployment):
    lam = np.array([1, 0, 1, 0, 0, 1, 0, 0], dtype=int)
    alloc = solve_allocation(lam, small_deployment, small_scenario)
    e_uav, e_hap = platform_energies(small_deployment, lam, alloc.f,
                                     small_scenario)
    caps = np.array([u.energy_cap for u in small_scenario.uavs])
    assert np.array_equal(alloc.slacks["uav_energy"], caps - e_uav)
    assert alloc.slacks["hap_energy"] == small_scenario.hap.energy_cap - e_hap
    tables = build_link_tables(small_scenario, small_deployment)
    cpu = np.zeros(2)
    np.add.at(cpu, tables.conn, (1 - lam) * alloc.f)
    assert np.array_equal(alloc.slacks["uav_cpu"],
                          np.array([u.cpu_cap for u in small_scenario.uavs]) - cpu)


def test_objective_monotone_in_deadline(small_scenario, small_deployment):
    lam = np.zeros(8, dtype=int)
    base = solve_allocation(lam, small_deployment, small_scenario).objective
    tasks = tuple(dataclasses.replace(t, deadline=t.deadline + 5)
                  for t in small_scenario.tasks)
    relaxed_s = dataclasses.replace(small_scenario, tasks=tasks)
    relaxed = solve_allocation(lam, small_deployment, relaxed_s).objective
    assert relaxed <= base


def test_infeasible_task_gets_floor_frequency():
    s = generate_scenario(2, 1, 6)
    tasks = list(s.tasks)
    tasks[0] = dataclasses.replace(tasks[0], deadline=0.5)   # below uplink delay
    s = dataclasses.replace(s, tasks=tuple(tasks))
    dep = wkd_deploy(s)
    alloc = solve_allocation(np.zeros(2, dtype=int), dep, s)
    assert not alloc.feasible
    assert alloc.infeasible_tasks == (0,)
    assert "drcc[0]" in alloc.violations
    floor = 300 * s.tasks[0].data_bits / 0.5
    assert alloc.f[0] == pytest.approx(floor, rel=1e-12)


def test_reduced_plan_contract():
    delta = np.array([[1, 0], [0, 1]], dtype=np.int8)
    with pytest.raises(ContractViolation):
        reduced_plan(np.array([[0, 1], [0, 1]]), delta)   # forwards unconnected
    with pytest.raises(ContractViolation):
        reduced_plan(np.array([0, 2]), delta)
    assert reduced_plan(np.array([[1, 0], [0, 0]]), delta).tolist() == [1, 0]


def test_optimality_verifier_single_task():
    s = generate_scenario(1, 1, 2)
    dep = wkd_deploy(s)
    report = verify_allocation_optimality(np.array([0]), dep, s)
    assert report["agrees"]
    assert report["analytic_feasible"] and report["grid_feasible_found"]


def test_optimality_verifier_mixed_routing():
    s = generate_scenario(3, 1, 8)
    dep = wkd_deploy(s)
    report = verify_allocation_optimality(np.array([1, 0, 1]), dep, s, grid=7)
    assert report["agrees"]
    assert report["grid_objective"] >= report["analytic_objective"] - 1e-9


def test_optimality_verifier_infeasible_agreement():
    s = generate_scenario(2, 1, 9)
    tasks = tuple(dataclasses.replace(t, deadline=0.4) for t in s.tasks)
    s = dataclasses.replace(s, tasks=tasks)
    dep = wkd_deploy(s)
    report = verify_allocation_optimality(np.array([0, 0]), dep, s)
    assert report["agrees"]
    assert not report["analytic_feasible"]
    assert not report["grid_feasible_found"]


def test_optimality_verifier_size_guard(table1_scenario, table1_deployment):
    with pytest.raises(ValueError):
        verify_allocation_optimality(np.zeros(30, dtype=int), table1_deployment,
                                     table1_scenario)
