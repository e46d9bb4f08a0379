"""Per-task CPU-frequency allocation for a fixed routing (subproblem P3).

Every energy term grows with frequency and every capacity constraint
loosens as frequencies shrink, so the minimal robust-feasible frequency
per task is globally optimal. The solver is therefore analytic; a grid
brute-force verifier backs it on small instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import drcc, linkmodel
from .linkmodel import ContractViolation, build_link_tables
from .scenario import Scenario


@dataclass(frozen=True)
class Allocation:
    f: np.ndarray                      # Hz per task (floor value if robustly infeasible)
    feasible: bool
    objective: float                   # total platform energy, joules
    slacks: dict                       # capacity minus load, per constraint
    infeasible_tasks: tuple[int, ...]  # tasks with no finite robust frequency
    violations: tuple[str, ...]


def reduced_plan(lam, delta) -> np.ndarray:
    arr = np.asarray(lam)
    if arr.ndim == 2:
        if np.any(arr > np.asarray(delta)):
            raise ContractViolation("forwarding set on a non-connected pair")
        arr = arr.sum(axis=1)
    if not np.all((arr == 0) | (arr == 1)):
        raise ContractViolation("lam must be binary")
    return arr.astype(np.int8)


def solve_allocation(lam, deployment, scenario: Scenario) -> Allocation:
    """Optimal frequencies f = f_min per task, plus full constraint audit.

    Infeasibility is a structured verdict, never an exception: robustly
    undeadline-able tasks get the deadline-ignoring floor frequency
    c·L/T so the energy ledger stays finite, and the violated constraints
    are named in `violations`.
    """
    lam_vec = reduced_plan(lam, deployment.delta)
    tables = build_link_tables(scenario, deployment)
    profile = drcc.risk_profile(scenario, tables.mean_gain)
    kappa = drcc.batch_kappa(tables, scenario.radio)

    margins = drcc.batch_margins(lam_vec, tables, profile, kappa)
    robust_ok = margins > 0
    f = np.where(robust_ok, tables.cycles_total / np.where(robust_ok, margins, 1.0),
                 tables.cycles_total / tables.deadline)
    infeasible_tasks = tuple(int(m) for m in np.flatnonzero(~robust_ok))

    e_uav, e_hap = linkmodel.platform_energies(deployment, lam_vec, f, scenario)
    uav_cpu_load = np.zeros(scenario.num_uavs)
    np.add.at(uav_cpu_load, tables.conn, (1 - lam_vec) * f)
    hap_cpu_load = float(np.sum(lam_vec * f))
    slot_load = int(lam_vec.sum())

    uav_cpu_cap = np.array([u.cpu_cap for u in scenario.uavs])
    uav_energy_cap = np.array([u.energy_cap for u in scenario.uavs])
    slacks = {
        "uav_cpu": uav_cpu_cap - uav_cpu_load,
        "hap_cpu": scenario.hap.cpu_cap - hap_cpu_load,
        "uav_energy": uav_energy_cap - e_uav,
        "hap_energy": scenario.hap.energy_cap - e_hap,
        "hap_slots": float(scenario.hap.task_slots - slot_load),
    }

    violations = [f"drcc[{m}]" for m in infeasible_tasks]
    violations += [f"uav_cpu[{n}]" for n in np.flatnonzero(slacks["uav_cpu"] < 0)]
    if slacks["hap_cpu"] < 0:
        violations.append("hap_cpu")
    violations += [f"uav_energy[{n}]" for n in np.flatnonzero(slacks["uav_energy"] < 0)]
    if slacks["hap_energy"] < 0:
        violations.append("hap_energy")
    if slacks["hap_slots"] < 0:
        violations.append("hap_slots")

    return Allocation(f=f, feasible=not violations,
                      objective=float(e_uav.sum() + e_hap),
                      slacks=slacks, infeasible_tasks=infeasible_tasks,
                      violations=tuple(violations))


def verify_allocation_optimality(lam, deployment, scenario: Scenario,
                                 grid: int = 9) -> dict:
    """Brute-force check that the analytic P3 solution is optimal.

    Scans a per-task frequency grid around the analytic solution (factors
    below and above 1, the analytic point included), keeps the feasible
    grid points, and compares the best grid objective with the analytic
    one. Only meant for small instances.
    """
    M = scenario.num_users
    if M > 4:
        raise ValueError("verifier is exponential in M; use M <= 4")
    lam_vec = reduced_plan(lam, deployment.delta)
    analytic = solve_allocation(lam_vec, deployment, scenario)

    tables = build_link_tables(scenario, deployment)
    profile = drcc.risk_profile(scenario, tables.mean_gain)
    kappa = drcc.batch_kappa(tables, scenario.radio)
    margins = drcc.batch_margins(lam_vec, tables, profile, kappa)

    factors = np.unique(np.concatenate([np.linspace(0.6, 1.6, grid), [1.0]]))
    axes = [analytic.f[m] * factors for m in range(M)]
    uav_cpu_cap = np.array([u.cpu_cap for u in scenario.uavs])
    uav_energy_cap = np.array([u.energy_cap for u in scenario.uavs])

    best = math.inf
    found = False
    scale = np.maximum(1.0, tables.cycles_total)
    for point in itertools.product(*axes):
        f = np.array(point)
        if np.any(tables.cycles_total - f * margins > 1e-9 * scale):
            continue
        e_uav, e_hap = linkmodel.platform_energies(deployment, lam_vec, f, scenario)
        cpu = np.zeros(scenario.num_uavs)
        np.add.at(cpu, tables.conn, (1 - lam_vec) * f)
        if np.any(cpu > uav_cpu_cap) or np.sum(lam_vec * f) > scenario.hap.cpu_cap:
            continue
        if np.any(e_uav > uav_energy_cap) or e_hap > scenario.hap.energy_cap:
            continue
        if lam_vec.sum() > scenario.hap.task_slots:
            continue
        found = True
        best = min(best, float(e_uav.sum() + e_hap))

    tol = 1e-9 * max(1.0, abs(analytic.objective))
    if analytic.feasible:
        agrees = found and abs(best - analytic.objective) <= tol
    else:
        agrees = not found
    return {
        "analytic_objective": analytic.objective,
        "analytic_feasible": analytic.feasible,
        "grid_objective": best if found else None,
        "grid_feasible_found": found,
        "grid_points_per_task": len(factors),
        "agrees": agrees,
    }
