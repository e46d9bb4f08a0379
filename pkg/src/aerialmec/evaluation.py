"""Monte Carlo robustness certification and desk-scale experiment sweeps.

Certification samples channel-gain errors from a moment-matched family,
re-evaluates the exact (non-linearized) latency of every task at the
solved frequencies, and tallies per-task success rates against their
confidence targets. Sweeps re-solve seeded instances over a parameter
grid and aggregate medians/quartiles; results serialize to CSV whose
parse round-trips exactly.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import drcc, orchestrator
from .linkmodel import build_link_tables
from .orchestrator import SolveParams, SolveReport
from .scenario import GenConfig, Scenario, generate_scenario, with_sigma_zero

DIST_KINDS = ("gaussian", "uniform", "two-point")
SWEEP_PARAMS = ("tmax", "p_u", "p_h", "M", "N")


@dataclass(frozen=True)
class ErrorDistribution:
    """A moment-matched error law; `two_point_p` is the high-atom mass."""

    kind: str = "gaussian"
    two_point_p: float = 0.5

    def __post_init__(self):
        if self.kind not in DIST_KINDS:
            raise ValueError(f"kind must be one of {DIST_KINDS}")
        if not 0.0 < self.two_point_p < 1.0:
            raise ValueError("two_point_p must be in (0, 1)")


def sample_gain_errors(dist: ErrorDistribution, mu: float, sigma: float,
                       mean_gain: float, size: int,
                       rng: np.random.Generator):
    """Draw `size` errors with the given moments, keeping gains positive.

    Gaussian/uniform draws violating positivity are rejected and redrawn;
    two-point atoms are fixed, so offenders are clamped instead. Returns
    (samples, number of positivity interventions).
    """
    interventions = 0
    if dist.kind == "two-point":
        p = dist.two_point_p
        hi = mu + sigma * math.sqrt((1.0 - p) / p)
        lo = mu - sigma * math.sqrt(p / (1.0 - p))
        samples = np.where(rng.random(size) < p, hi, lo)
    else:
        if dist.kind == "gaussian":
            draw = lambda k: rng.normal(mu, sigma, k)
        else:
            half = math.sqrt(3.0) * sigma
            draw = lambda k: rng.uniform(mu - half, mu + half, k)
        samples = draw(size)
        for _ in range(1000):
            bad = np.flatnonzero(mean_gain + samples <= 0)
            if bad.size == 0:
                break
            interventions += bad.size
            samples[bad] = draw(bad.size)
    bad = mean_gain + samples <= 0
    if np.any(bad):
        interventions += int(bad.sum())
        samples = np.where(bad, -mean_gain * (1.0 - 1e-12), samples)
    return samples, interventions


@dataclass
class RobustnessReport:
    rates: np.ndarray        # (M,) empirical success rates
    samples: int
    alpha: np.ndarray        # (M,) confidence targets
    passed: np.ndarray       # (M,) rate >= alpha - 3 binomial sigmas
    served: np.ndarray       # (M,) task counted as served by the plan
    clamp_rate: float
    seed: int

    CSV_COLUMNS = ("task", "rate", "alpha", "served", "passed")

    def csv_rows(self):
        return [(m, float(self.rates[m]), float(self.alpha[m]),
                 int(self.served[m]), int(self.passed[m]))
                for m in range(len(self.rates))]

    def to_document(self) -> dict:
        return {
            "schema_version": 1,
            "samples": int(self.samples),
            "seed": int(self.seed),
            "clamp_rate": float(self.clamp_rate),
            "rates": [float(r) for r in self.rates],
            "alpha": [float(a) for a in self.alpha],
            "served": [int(s) for s in self.served],
            "passed": [int(p) for p in self.passed],
        }


def monte_carlo_robustness(report: SolveReport, scenario: Scenario,
                           dist: ErrorDistribution, samples: int,
                           seed: int) -> RobustnessReport:
    """Empirical per-task deadline-success rates under sampled gains.

    The exact latency is recomputed per sample (no Taylor form): the
    uplink delay from the sampled gain plus the solved plan's deterministic
    relay/compute legs.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    tables = build_link_tables(scenario, report.deployment)
    profile = drcc.risk_profile(scenario, tables.mean_gain)

    lam = report.lam.astype(float)
    t_rest = np.where(lam > 0,
                      tables.fwd_time + tables.cycles_total / report.f,
                      tables.cycles_total / report.f)
    radio = scenario.radio
    noise = radio.noise_psd * radio.uplink_bandwidth

    rng = np.random.default_rng(seed)
    M = scenario.num_users
    rates = np.zeros(M)
    interventions = 0
    for m in range(M):
        errs, clamped = sample_gain_errors(dist, float(profile.mu[m]),
                                           float(profile.sigma[m]),
                                           float(tables.mean_gain[m]),
                                           samples, rng)
        interventions += clamped
        gains = tables.mean_gain[m] + errs
        rate_up = radio.uplink_bandwidth * np.log2(
            1.0 + radio.gu_tx_power * gains / noise)
        t_total = tables.data_bits[m] / rate_up + t_rest[m]
        rates[m] = float(np.mean(t_total <= tables.deadline[m]))

    band = 3.0 * np.sqrt(profile.alpha * (1.0 - profile.alpha) / samples)
    served_mask, _ = orchestrator.shedding_plan(report.lam, report.deployment,
                                                scenario)
    return RobustnessReport(rates=rates, samples=samples, alpha=profile.alpha,
                            passed=rates >= profile.alpha - band,
                            served=served_mask,
                            clamp_rate=interventions / float(samples * M),
                            seed=int(seed))


# --- sweeps -----------------------------------------------------------------


@dataclass(frozen=True)
class SweepTemplate:
    """Generator settings that each sweep point varies."""

    num_users: int = 30
    num_uavs: int = 6
    config: GenConfig = field(default_factory=GenConfig)


def _scenario_at(template: SweepTemplate, param: str, value: float,
                 seed: int) -> Scenario:
    cfg = template.config
    users, uavs = template.num_users, template.num_uavs
    if param == "tmax":
        cfg = replace(cfg, deadline=float(value))
    elif param == "p_u":
        cfg = replace(cfg, gu_tx_power=float(value))
    elif param == "p_h":
        cfg = replace(cfg, uav_tx_power=float(value))
    elif param == "M":
        users = int(round(value))
    elif param == "N":
        uavs = int(round(value))
    else:
        raise ValueError(f"param must be one of {SWEEP_PARAMS}")
    return generate_scenario(users, uavs, seed, cfg)


def _mean_served_frequency(report: SolveReport) -> float:
    mask = np.zeros(len(report.f), dtype=bool)
    for m in range(len(report.f)):
        mask[m] = m not in report.shed_tasks and m not in report.infeasible_tasks
    if not mask.any():
        return float(np.mean(report.f))
    return float(np.mean(report.f[mask]))


@dataclass
class SweepResult:
    param: str
    grid: tuple[float, ...]
    rows: list[tuple]    # (param_value, seed, objective, served, mean_f, feasible)

    CSV_COLUMNS = ("param_value", "seed", "objective", "served", "mean_f",
                   "feasible")

    def csv_rows(self):
        return self.rows

    def summary(self) -> list[dict]:
        out = []
        for value in self.grid:
            sel = [r for r in self.rows if r[0] == value]
            objs = np.array([r[2] for r in sel])
            out.append({
                "param_value": value,
                "median_objective": float(np.median(objs)),
                "q1_objective": float(np.percentile(objs, 25)),
                "q3_objective": float(np.percentile(objs, 75)),
                "median_served": float(np.median([r[3] for r in sel])),
                "median_mean_f": float(np.median([r[4] for r in sel])),
                "feasibility_rate": float(np.mean([r[5] for r in sel])),
            })
        return out


def sweep(template: SweepTemplate, param: str, grid, seeds,
          method: str = "bwoa",
          solve_params: SolveParams | None = None) -> SweepResult:
    """Independent solves per (grid point, seed); rows in grid-major order."""
    grid = tuple(float(g) for g in grid)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    rows = []
    for value in grid:
        for seed in seeds:
            scenario = _scenario_at(template, param, value, seed)
            params = solve_params or SolveParams()
            report = orchestrator.solve(scenario, method,
                                        replace(params, seed=int(seed)))
            rows.append((value, int(seed), float(report.objective),
                         int(report.served), _mean_served_frequency(report),
                         int(report.feasible)))
    return SweepResult(param=param, grid=grid, rows=rows)


@dataclass
class CompareResult:
    rows: list[tuple]    # (method, seed, objective, fitness, feasible, wall_time)

    CSV_COLUMNS = ("method", "seed", "objective", "fitness", "feasible",
                   "wall_time")

    def csv_rows(self):
        return self.rows

    def summary(self) -> dict:
        methods = sorted({r[0] for r in self.rows})
        return {m: {"median_objective":
                    float(np.median([r[2] for r in self.rows if r[0] == m])),
                    "median_wall_time":
                    float(np.median([r[5] for r in self.rows if r[0] == m]))}
                for m in methods}


def compare_methods(scenario: Scenario, methods, seeds,
                    solve_params: SolveParams | None = None) -> CompareResult:
    """Objective and wall time per (method, seed) on one scenario."""
    if "exhaustive" in methods and scenario.num_users > 20:
        raise ValueError("exhaustive comparisons need M <= 20")
    rows = []
    for method in methods:
        for seed in seeds:
            params = replace(solve_params or SolveParams(), seed=int(seed))
            report = orchestrator.solve(scenario, method, params)
            rows.append((method, int(seed), float(report.objective),
                         float(report.fitness), int(report.feasible),
                         float(report.wall_time)))
    return CompareResult(rows=rows)


@dataclass
class RobustIdealResult:
    rows: list[tuple]    # (seed, robust_objective, ideal_objective,
                         #  robust_mean_f, ideal_mean_f)

    CSV_COLUMNS = ("seed", "robust_objective", "ideal_objective",
                   "robust_mean_f", "ideal_mean_f")

    def csv_rows(self):
        return self.rows


def robust_vs_ideal(template: SweepTemplate, seeds, method: str = "bwoa",
                    solve_params: SolveParams | None = None) -> RobustIdealResult:
    """Paired solves with the configured error moments vs. exact CSI (σ=0)."""
    rows = []
    for seed in seeds:
        scenario = generate_scenario(template.num_users, template.num_uavs,
                                     seed, template.config)
        params = replace(solve_params or SolveParams(), seed=int(seed))
        robust = orchestrator.solve(scenario, method, params)
        ideal = orchestrator.solve(with_sigma_zero(scenario), method, params)
        rows.append((int(seed), float(robust.objective), float(ideal.objective),
                     _mean_served_frequency(robust),
                     _mean_served_frequency(ideal)))
    return RobustIdealResult(rows=rows)


# --- CSV I/O ----------------------------------------------------------------


def csv_text(columns, rows) -> str:
    """Deterministic CSV with repr-exact floats (parse round-trips)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(columns, rows))


def read_csv_rows(path_or_text, columns=None):
    """Parse a CSV produced by `csv_text` back into typed tuples."""
    text = path_or_text
    if "\n" not in str(path_or_text):
        with open(path_or_text) as fh:
            text = fh.read()
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if columns is not None and tuple(header) != tuple(columns):
        raise ValueError(f"unexpected CSV columns {header}")
    out = []
    for row in reader:
        typed = []
        for cell in row:
            try:
                typed.append(int(cell))
            except ValueError:
                try:
                    typed.append(float(cell))
                except ValueError:
                    typed.append(cell)
        out.append(tuple(typed))
    return header, out
