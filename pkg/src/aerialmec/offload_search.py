"""Binary offloading search: penalized fitness, whale-style search, baselines.

The decision is which tasks each UAV relays to the HAP. Fitness is the
platform energy objective plus squared penalties for every violated
constraint, so the search space needs no feasibility filter. The default
`reduced` encoding uses one bit per task (its connected UAV is unique);
`full-matrix` keeps the literal per-(task, UAV) bit grid, in which case the
flow-conservation penalty h1 becomes active.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import drcc
from .linkmodel import build_link_tables
from .scenario import Scenario

ENCODINGS = ("reduced", "full-matrix")


@dataclass(frozen=True)
class BwoaParams:
    agents: int = 30
    iters: int = 200
    penalty: float = 1e5
    seed: int = 0
    encoding: str = "reduced"

    def __post_init__(self):
        if self.agents < 2:
            raise ValueError("agents must be >= 2")
        if self.penalty <= 0:
            raise ValueError("penalty must be > 0")
        if self.encoding not in ENCODINGS:
            raise ValueError(f"encoding must be one of {ENCODINGS}")


@dataclass(frozen=True)
class SaSchedule:
    iters: int = 400
    cooling: float = 0.95
    t0: float | None = None    # default: initial fitness spread
    seed: int = 0


@dataclass(frozen=True)
class PenaltyBreakdown:
    """Constraint residuals h1..h7 and their squared-penalty contributions."""

    penalty: float
    h1: np.ndarray   # (M, N) forwarding without connection
    h2: np.ndarray   # (N,) UAV energy over cap
    h3: float        # HAP energy over cap
    h4: np.ndarray   # (N,) UAV CPU over cap
    h5: float        # HAP CPU over cap
    h6: float        # HAP slots over cap
    h7: np.ndarray   # (M,) robust-latency residual

    def contribution(self, name: str):
        h = getattr(self, name)
        h = np.asarray(h, dtype=float)
        return self.penalty * (h > 0) * h * h

    def total_penalty(self) -> float:
        return float(sum(np.sum(self.contribution(n))
                         for n in ("h1", "h2", "h3", "h4", "h5", "h6", "h7")))


class FitnessContext:
    """Precomputed per-deployment arrays for vectorized fitness evaluation."""

    def __init__(self, scenario: Scenario, deployment, penalty: float = 1e5):
        self.scenario = scenario
        self.deployment = deployment
        self.penalty = float(penalty)
        t = build_link_tables(scenario, deployment)
        self.tables = t
        profile = drcc.risk_profile(scenario, t.mean_gain)
        self.profile = profile
        self.kappa = drcc.batch_kappa(t, scenario.radio)
        # margin with no forwarding; subtract lam * fwd_time to get D
        self.base_margin = (t.deadline + self.kappa * profile.mu - t.tx_time
                            - profile.rho * self.kappa * profile.sigma)
        self.cycles = t.cycles_total
        self.deadline = t.deadline
        self.f_floor = t.cycles_total / t.deadline
        self.fwd_time = t.fwd_time
        self.relay_energy = t.relay_energy
        self.eps_uav = t.eps_uav
        self.eps_hap = scenario.hap.switch_cap
        M, N = scenario.num_users, scenario.num_uavs
        self.num_users, self.num_uavs = M, N
        self.onehot = np.zeros((M, N))
        self.onehot[np.arange(M), t.conn] = 1.0
        self.uav_cpu_cap = np.array([u.cpu_cap for u in scenario.uavs])
        self.uav_energy_cap = np.array([u.energy_cap for u in scenario.uavs])
        self.hap_cpu_cap = scenario.hap.cpu_cap
        self.hap_energy_cap = scenario.hap.energy_cap
        self.slots = scenario.hap.task_slots
        # full-matrix extras (literal per-(m, n) algebra)
        self.delta = np.asarray(deployment.delta, dtype=float)
        self.fwd_time_full = t.data_bits[:, None] / t.rate_u2h[None, :]
        self.relay_energy_full = np.array(
            [u.tx_power_to_hap for u in scenario.uavs])[None, :] * self.fwd_time_full
        self.eps_per_uav = np.array([u.switch_cap for u in scenario.uavs])

    # -- frequency policy -----------------------------------------------

    def frequencies(self, margins: np.ndarray):
        """f = c·L/D where the margin is positive, deadline floor otherwise."""
        ok = margins > 0
        f = np.where(ok, self.cycles / np.where(ok, margins, 1.0), self.f_floor)
        return f, ok

    def latency_residual(self, f, margins, ok) -> np.ndarray:
        # factored form D·(f_min − f): exactly 0.0 at the analytic boundary
        fmin = self.cycles / np.where(ok, margins, 1.0)
        return np.where(ok, margins * (fmin - f), self.cycles - f * margins)

    # -- reduced encoding -----------------------------------------------

    def values_reduced(self, lam: np.ndarray, f_override=None) -> np.ndarray:
        """Fitness of a batch of reduced plans, shape (..., M) -> (...)."""
        lam = np.asarray(lam, dtype=float)
        margins = self.base_margin - lam * self.fwd_time
        if f_override is None:
            f, ok = self.frequencies(margins)
        else:
            f = np.broadcast_to(np.asarray(f_override, dtype=float), lam.shape)
            ok = margins > 0
        h7 = self.latency_residual(f, margins, ok)

        e_cu = self.eps_uav * self.cycles * f * f
        e_ch = self.eps_hap * self.cycles * f * f
        per_uav_energy = lam * self.relay_energy + (1.0 - lam) * e_cu
        e_n = per_uav_energy @ self.onehot
        e_h = np.sum(lam * e_ch, axis=-1)
        objective = e_n.sum(axis=-1) + e_h

        h2 = e_n - self.uav_energy_cap
        h3 = e_h - self.hap_energy_cap
        h4 = ((1.0 - lam) * f) @ self.onehot - self.uav_cpu_cap
        h5 = np.sum(lam * f, axis=-1) - self.hap_cpu_cap
        h6 = lam.sum(axis=-1) - self.slots

        pen = (_sq(h2).sum(axis=-1) + _sq(h3) + _sq(h4).sum(axis=-1)
               + _sq(h5) + _sq(h6) + _sq(h7).sum(axis=-1))
        return objective + self.penalty * pen

    def breakdown_reduced(self, lam: np.ndarray, f_override=None):
        lam = np.asarray(lam, dtype=float)
        margins = self.base_margin - lam * self.fwd_time
        if f_override is None:
            f, ok = self.frequencies(margins)
        else:
            f = np.asarray(f_override, dtype=float)
            ok = margins > 0
        h7 = self.latency_residual(f, margins, ok)
        e_cu = self.eps_uav * self.cycles * f * f
        e_ch = self.eps_hap * self.cycles * f * f
        e_n = (lam * self.relay_energy + (1.0 - lam) * e_cu) @ self.onehot
        e_h = float(np.sum(lam * e_ch))
        objective = float(e_n.sum() + e_h)
        br = PenaltyBreakdown(
            penalty=self.penalty,
            h1=np.zeros((self.num_users, self.num_uavs)),
            h2=e_n - self.uav_energy_cap,
            h3=e_h - self.hap_energy_cap,
            h4=((1.0 - lam) * f) @ self.onehot - self.uav_cpu_cap,
            h5=float(np.sum(lam * f) - self.hap_cpu_cap),
            h6=float(lam.sum() - self.slots),
            h7=h7)
        return objective, f, br

    # -- full-matrix encoding -------------------------------------------

    def values_full(self, lam: np.ndarray) -> np.ndarray:
        """Fitness of a batch of (task, UAV) bit grids, shape (..., M, N)."""
        lam = np.asarray(lam, dtype=float)
        t_fwd = np.sum(lam * self.fwd_time_full, axis=-1)
        margins = self.base_margin - t_fwd
        f, ok = self.frequencies(margins)
        h7 = self.latency_residual(f, margins, ok)

        reside = self.delta - lam                      # literal (δ − λ) algebra
        e_cu_per = reside * self.eps_per_uav * (self.cycles * f * f)[..., None]
        e_n = np.sum(lam * self.relay_energy_full + e_cu_per, axis=-2)
        lam_sum = lam.sum(axis=-1)
        e_h = np.sum(lam_sum * self.eps_hap * self.cycles * f * f, axis=-1)
        objective = e_n.sum(axis=-1) + e_h

        h1 = lam - self.delta
        h2 = e_n - self.uav_energy_cap
        h3 = e_h - self.hap_energy_cap
        h4 = np.sum(reside * f[..., None], axis=-2) - self.uav_cpu_cap
        h5 = np.sum(lam_sum * f, axis=-1) - self.hap_cpu_cap
        h6 = lam.sum(axis=(-2, -1)) - self.slots
        pen = (_sq(h1).sum(axis=(-2, -1)) + _sq(h2).sum(axis=-1) + _sq(h3)
               + _sq(h4).sum(axis=-1) + _sq(h5) + _sq(h6) + _sq(h7).sum(axis=-1))
        return objective + self.penalty * pen

    def breakdown_full(self, lam: np.ndarray):
        lam = np.asarray(lam, dtype=float)
        t_fwd = np.sum(lam * self.fwd_time_full, axis=-1)
        margins = self.base_margin - t_fwd
        f, ok = self.frequencies(margins)
        h7 = self.latency_residual(f, margins, ok)
        reside = self.delta - lam
        e_cu_per = reside * self.eps_per_uav * (self.cycles * f * f)[:, None]
        e_n = np.sum(lam * self.relay_energy_full + e_cu_per, axis=0)
        lam_sum = lam.sum(axis=-1)
        e_h = float(np.sum(lam_sum * self.eps_hap * self.cycles * f * f))
        objective = float(e_n.sum() + e_h)
        br = PenaltyBreakdown(
            penalty=self.penalty,
            h1=lam - self.delta,
            h2=e_n - self.uav_energy_cap,
            h3=e_h - self.hap_energy_cap,
            h4=np.sum(reside * f[:, None], axis=0) - self.uav_cpu_cap,
            h5=float(np.sum(lam_sum * f) - self.hap_cpu_cap),
            h6=float(lam.sum() - self.slots),
            h7=h7)
        return objective, f, br


def _sq(h):
    h = np.asarray(h, dtype=float)
    return np.where(h > 0, h * h, 0.0)


def fitness(lam, deployment, scenario: Scenario, allocation_provider=None,
            penalty: float = 1e5, context: FitnessContext | None = None):
    """Penalized fitness of one plan: (value, PenaltyBreakdown).

    `allocation_provider`, when given, maps the plan to the frequency
    vector to audit; the default is the analytic minimal-frequency policy
    with the deadline floor for robustly infeasible tasks.
    """
    ctx = context or FitnessContext(scenario, deployment, penalty)
    lam = np.asarray(lam)
    if lam.ndim == 2:
        objective, _, br = ctx.breakdown_full(lam)
    else:
        f_override = allocation_provider(lam) if allocation_provider else None
        objective, _, br = ctx.breakdown_reduced(lam, f_override=f_override)
    return objective + br.total_penalty(), br


def transfer_probability(x):
    """Bit-flip probability 1/(1 + exp(−10(x − 0.5))) of the step size x."""
    return 1.0 / (1.0 + np.exp(-10.0 * (np.asarray(x, dtype=float) - 0.5)))


def bwoa_step(population: np.ndarray, best: np.ndarray, i2: int,
              params: BwoaParams, rng: np.random.Generator) -> np.ndarray:
    """One whale iteration over the flattened-bit population.

    Per agent: one branch draw (spiral vs. prey-dependent) and one random
    peer; per bit: fresh r1/r2 coefficient draws and an independent flip
    draw against the branch's transfer probability.
    """
    K, B = population.shape
    a = 2.0 - i2 * 2.0 / max(params.iters, 1)
    r1 = rng.random((K, B))
    r2 = rng.random((K, B))
    p_rand = rng.random(K)
    peer = rng.integers(0, K, K)
    p_flip = rng.random((K, B))

    A = 2.0 * a * r1 - a
    C = 2.0 * r2
    d_spiral = np.abs(best[None, :] - population)
    d_encircle = np.abs(C * best[None, :] - population)
    d_search = np.abs(C * population[peer] - population)

    tau_spiral = transfer_probability(A * d_spiral)
    tau_encircle = transfer_probability(A * d_encircle)
    tau_search = transfer_probability(A * d_search)

    spiral = (p_rand >= 0.5)[:, None]
    explore = np.abs(A) >= 1.0
    tau = np.where(spiral, tau_spiral, np.where(explore, tau_search, tau_encircle))
    flip = p_flip < tau
    return np.where(flip, 1.0 - population, population)


def bwoa_solve(deployment, scenario: Scenario, params: BwoaParams | None = None,
               context: FitnessContext | None = None):
    """Whale search for the forwarding plan; returns (plan, fitness trace).

    The trace holds the best-ever fitness after initialization and after
    each iteration; elitism makes it non-increasing. The initial population
    contains the all-zeros plan, the greedy plan, and random agents.
    """
    p = params or BwoaParams()
    ctx = context or FitnessContext(scenario, deployment, p.penalty)
    M, N = ctx.num_users, ctx.num_uavs
    bits = M if p.encoding == "reduced" else M * N
    rng = np.random.default_rng(p.seed)

    pop = np.zeros((p.agents, bits))
    greedy = greedy_solve(deployment, scenario, penalty=p.penalty, context=ctx)
    if p.encoding == "reduced":
        pop[1] = greedy
        evaluate = ctx.values_reduced
    else:
        pop[1] = (greedy[:, None] * ctx.delta).reshape(-1)
        evaluate = lambda x: ctx.values_full(x.reshape(-1, M, N))
    if p.agents > 2:
        pop[2:] = rng.integers(0, 2, (p.agents - 2, bits)).astype(float)

    values = evaluate(pop)
    best_idx = int(np.argmin(values))
    best = pop[best_idx].copy()
    best_value = float(values[best_idx])
    history = [best_value]

    for i2 in range(1, p.iters + 1):
        pop = bwoa_step(pop, best, i2, p, rng)
        values = evaluate(pop)
        idx = int(np.argmin(values))
        if values[idx] < best_value:
            best_value = float(values[idx])
            best = pop[idx].copy()
        history.append(best_value)

    if p.encoding == "reduced":
        plan = best.astype(np.int8)
    else:
        plan = best.reshape(M, N).astype(np.int8)
    return plan, np.array(history)


def exhaustive_solve(deployment, scenario: Scenario, penalty: float = 1e5,
                     context: FitnessContext | None = None,
                     chunk: int = 1 << 14) -> np.ndarray:
    """Global optimum of the penalized fitness by full enumeration.

    Reduced encoding only; guarded to M <= 20. Ties resolve to the
    lexicographically smallest plan (enumeration is in lexicographic
    order and only strict improvements are kept).
    """
    M = scenario.num_users
    if M > 20:
        raise ValueError("exhaustive search is limited to M <= 20")
    ctx = context or FitnessContext(scenario, deployment, penalty)
    shifts = M - 1 - np.arange(M)
    best_value = math.inf
    best_code = 0
    for start in range(0, 1 << M, chunk):
        codes = np.arange(start, min(start + chunk, 1 << M), dtype=np.int64)
        lam = ((codes[:, None] >> shifts[None, :]) & 1).astype(float)
        values = ctx.values_reduced(lam)
        idx = int(np.argmin(values))
        if values[idx] < best_value:
            best_value = float(values[idx])
            best_code = int(codes[idx])
    return (((best_code >> shifts) & 1)).astype(np.int8)


def greedy_solve(deployment, scenario: Scenario, penalty: float = 1e5,
                 context: FitnessContext | None = None) -> np.ndarray:
    """Marginal-fitness greedy pass, most CPU-hungry tasks first."""
    ctx = context or FitnessContext(scenario, deployment, penalty)
    f_at_uav = np.where(ctx.base_margin > 0,
                        ctx.cycles / np.where(ctx.base_margin > 0,
                                              ctx.base_margin, 1.0),
                        math.inf)
    order = np.argsort(-f_at_uav, kind="stable")
    lam = np.zeros(ctx.num_users)
    for m in order:
        lam[m] = 0.0
        keep = float(ctx.values_reduced(lam))
        lam[m] = 1.0
        forward = float(ctx.values_reduced(lam))
        lam[m] = 1.0 if forward < keep else 0.0
    return lam.astype(np.int8)


def sa_solve(deployment, scenario: Scenario, schedule: SaSchedule | None = None,
             penalty: float = 1e5,
             context: FitnessContext | None = None) -> np.ndarray:
    """Simulated annealing over single-bit flips with geometric cooling."""
    sched = schedule or SaSchedule()
    ctx = context or FitnessContext(scenario, deployment, penalty)
    M = ctx.num_users
    rng = np.random.default_rng(sched.seed)

    current = np.zeros(M)
    cur_value = float(ctx.values_reduced(current))
    if sched.t0 is not None:
        temp = float(sched.t0)
    else:
        probes = rng.integers(0, 2, (16, M)).astype(float)
        probe_vals = np.append(ctx.values_reduced(probes), cur_value)
        temp = max(float(probe_vals.max() - probe_vals.min()), 1e-9)

    best = current.copy()
    best_value = cur_value
    for _ in range(sched.iters):
        bit = int(rng.integers(M))
        candidate = current.copy()
        candidate[bit] = 1.0 - candidate[bit]
        value = float(ctx.values_reduced(candidate))
        delta = value - cur_value
        accept = delta <= 0 or (temp > 0
                                and rng.random() < math.exp(-delta / temp))
        if accept:
            current, cur_value = candidate, value
            if value < best_value:
                best, best_value = candidate.copy(), value
        temp *= sched.cooling
    return best.astype(np.int8)
