"""End-to-end solve: deploy UAVs, then alternate offloading and frequency
subproblems until the best fitness stops improving, and assemble a report.

The outer loop re-runs the offloading solver with fresh per-round seeds and
keeps the best-ever plan; each round's plan is re-audited by the analytic
frequency allocation, and the final report always reflects a fresh
allocation of the winning plan.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import allocation as alloc_mod
from . import drcc, offload_search
from .deployment import Deployment, WkdConfig, wkd_deploy
from .linkmodel import build_link_tables
from .offload_search import BwoaParams, FitnessContext, SaSchedule
from .scenario import Scenario, scenario_bytes, validate_scenario

METHODS = ("bwoa", "greedy", "sa", "exhaustive")
REPORT_SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """The input scenario fails validation."""


@dataclass(frozen=True)
class SolveParams:
    seed: int | None = None       # master seed; default: scenario.rng_seed
    outer_max: int = 5
    outer_tol: float = 1e-6
    penalty: float = 1e5
    wkd: WkdConfig = field(default_factory=WkdConfig)
    bwoa: BwoaParams = field(default_factory=BwoaParams)
    sa: SaSchedule = field(default_factory=SaSchedule)


@dataclass
class SolveReport:
    method: str
    seed: int
    scenario_digest: str
    deployment: Deployment
    lam: np.ndarray
    f: np.ndarray
    objective: float
    fitness: float
    feasible: bool
    served: int
    shed_tasks: tuple[int, ...]
    infeasible_tasks: tuple[int, ...]
    slacks: dict
    trace: tuple[dict, ...]
    wall_time: float

    def to_document(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "method": self.method,
            "seed": int(self.seed),
            "scenario_digest": self.scenario_digest,
            "deployment": self.deployment.to_document(),
            "lam": self.lam.astype(int).tolist(),
            "f": [float(x) for x in self.f],
            "objective": float(self.objective),
            "fitness": float(self.fitness),
            "feasible": bool(self.feasible),
            "served": int(self.served),
            "shed_tasks": list(self.shed_tasks),
            "infeasible_tasks": list(self.infeasible_tasks),
            "slacks": {k: (v.tolist() if isinstance(v, np.ndarray) else float(v))
                       for k, v in self.slacks.items()},
            "trace": list(self.trace),
            "wall_time": float(self.wall_time),
        }

    @classmethod
    def from_document(cls, doc: dict) -> "SolveReport":
        slacks = {k: (np.array(v, dtype=float) if isinstance(v, list) else float(v))
                  for k, v in doc["slacks"].items()}
        return cls(method=doc["method"], seed=int(doc["seed"]),
                   scenario_digest=doc["scenario_digest"],
                   deployment=Deployment.from_document(doc["deployment"]),
                   lam=np.array(doc["lam"], dtype=np.int8),
                   f=np.array(doc["f"], dtype=float),
                   objective=float(doc["objective"]),
                   fitness=float(doc["fitness"]),
                   feasible=bool(doc["feasible"]),
                   served=int(doc["served"]),
                   shed_tasks=tuple(doc["shed_tasks"]),
                   infeasible_tasks=tuple(doc["infeasible_tasks"]),
                   slacks=slacks,
                   trace=tuple(doc["trace"]),
                   wall_time=float(doc["wall_time"]))


def scenario_digest(scenario: Scenario) -> str:
    return hashlib.sha256(scenario_bytes(scenario)).hexdigest()


def derive_seed(master: int, *parts: int) -> int:
    entropy = [int(master) & 0xFFFFFFFFFFFFFFFF] + [int(p) for p in parts]
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0])


def _run_method(method: str, deployment, scenario, params: SolveParams,
                ctx: FitnessContext, round_seed: int):
    if method == "bwoa":
        bw = replace(params.bwoa, seed=round_seed, penalty=params.penalty)
        lam, history = offload_search.bwoa_solve(deployment, scenario, bw,
                                                 context=ctx)
        return lam, float(history[-1])
    if method == "greedy":
        lam = offload_search.greedy_solve(deployment, scenario,
                                          penalty=params.penalty, context=ctx)
    elif method == "sa":
        sa = replace(params.sa, seed=round_seed)
        lam = offload_search.sa_solve(deployment, scenario, sa,
                                      penalty=params.penalty, context=ctx)
    elif method == "exhaustive":
        lam = offload_search.exhaustive_solve(deployment, scenario,
                                              penalty=params.penalty, context=ctx)
    else:
        raise ValueError(f"unknown method '{method}'")
    return lam, float(ctx.values_reduced(lam.astype(float)))


def solve(scenario: Scenario, method: str = "bwoa",
          params: SolveParams | None = None) -> SolveReport:
    """Full pipeline for one scenario; deterministic given (inputs, seed)."""
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    params = params or SolveParams()
    if params.bwoa.encoding != "reduced":
        raise ValueError("the pipeline requires the reduced plan encoding")
    problems = validate_scenario(scenario)
    if problems:
        raise ScenarioError("; ".join(problems))

    started = time.perf_counter()
    master = params.seed if params.seed is not None else scenario.rng_seed
    deployment = wkd_deploy(scenario,
                            config=replace(params.wkd,
                                           seed=derive_seed(master, 0)))
    ctx = FitnessContext(scenario, deployment, params.penalty)

    best_lam = None
    best_fitness = np.inf
    trace: list[dict] = []
    prev_fitness = np.inf
    for outer in range(1, params.outer_max + 1):
        lam, fitness = _run_method(method, deployment, scenario, params, ctx,
                                   derive_seed(master, 1, outer))
        if fitness < best_fitness:
            best_fitness = fitness
            best_lam = lam
        audit = alloc_mod.solve_allocation(best_lam, deployment, scenario)
        trace.append({"round": outer, "best_fitness": float(best_fitness),
                      "objective": float(audit.objective)})
        if outer >= 2 and abs(prev_fitness - best_fitness) < params.outer_tol:
            break
        prev_fitness = best_fitness

    final = alloc_mod.solve_allocation(best_lam, deployment, scenario)
    served_mask, shed = shedding_plan(best_lam, deployment, scenario)
    report = SolveReport(method=method, seed=int(master),
                         scenario_digest=scenario_digest(scenario),
                         deployment=deployment,
                         lam=np.asarray(best_lam, dtype=np.int8),
                         f=final.f, objective=final.objective,
                         fitness=float(best_fitness),
                         feasible=final.feasible,
                         served=int(served_mask.sum()), shed_tasks=shed,
                         infeasible_tasks=final.infeasible_tasks,
                         slacks=final.slacks, trace=tuple(trace),
                         wall_time=time.perf_counter() - started)
    return report


def shedding_plan(lam, deployment, scenario: Scenario):
    """Which tasks count as served, dropping the costliest on overload.

    Tasks with no finite robust frequency are unserved outright. While any
    aggregate constraint is violated by the remaining tasks at their
    minimal frequencies, the task with the largest minimal frequency among
    those loading the first violated constraint is shed.
    """
    lam_vec = alloc_mod.reduced_plan(lam, deployment.delta)
    tables = build_link_tables(scenario, deployment)
    profile = drcc.risk_profile(scenario, tables.mean_gain)
    kappa = drcc.batch_kappa(tables, scenario.radio)
    margins = drcc.batch_margins(lam_vec, tables, profile, kappa)

    served = margins > 0
    fmin = np.where(served, tables.cycles_total / np.where(served, margins, 1.0),
                    np.inf)
    conn = tables.conn
    uav_cpu_cap = np.array([u.cpu_cap for u in scenario.uavs])
    uav_energy_cap = np.array([u.energy_cap for u in scenario.uavs])
    relay = tables.relay_energy
    e_cu = tables.eps_uav * tables.cycles_total * fmin * fmin
    e_ch = scenario.hap.switch_cap * tables.cycles_total * fmin * fmin

    shed: list[int] = []
    while True:
        active = served.astype(float)
        on_uav = active * (1 - lam_vec)
        on_hap = active * lam_vec
        cpu_n = np.zeros(scenario.num_uavs)
        np.add.at(cpu_n, conn, on_uav * fmin)
        energy_n = np.zeros(scenario.num_uavs)
        np.add.at(energy_n, conn, np.where(served,
                                           lam_vec * relay + (1 - lam_vec) * e_cu,
                                           0.0))
        hap_cpu = float(np.sum(on_hap * fmin))
        hap_energy = float(np.sum(np.where(served & (lam_vec == 1), e_ch, 0.0)))
        slot_count = int(np.sum(served & (lam_vec == 1)))

        candidates = None
        for n in range(scenario.num_uavs):
            if cpu_n[n] > uav_cpu_cap[n]:
                candidates = served & (lam_vec == 0) & (conn == n)
                break
        if candidates is None and hap_cpu > scenario.hap.cpu_cap:
            candidates = served & (lam_vec == 1)
        if candidates is None:
            for n in range(scenario.num_uavs):
                if energy_n[n] > uav_energy_cap[n]:
                    candidates = served & (conn == n)
                    break
        if candidates is None and hap_energy > scenario.hap.energy_cap:
            candidates = served & (lam_vec == 1)
        if candidates is None and slot_count > scenario.hap.task_slots:
            candidates = served & (lam_vec == 1)
        if candidates is None:
            break

        idx = np.flatnonzero(candidates)
        victim = int(idx[int(np.argmax(fmin[idx]))])
        served[victim] = False
        shed.append(victim)
    return served, tuple(shed)


def served_count(report: SolveReport, scenario: Scenario) -> int:
    """Recompute the served-task count from the report's plan."""
    mask, _ = shedding_plan(report.lam, report.deployment, scenario)
    return int(mask.sum())
