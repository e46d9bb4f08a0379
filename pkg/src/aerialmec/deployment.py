"""UAV placement by task-weighted K-means and ground-user assignment.

The placement alternates nearest-UAV assignment (3-D distance, altitude
included) with weighted-centroid updates, where each user's weight blends
its task size, computational density, and urgency. Output is the UAV
position set plus the binary user-to-UAV connection matrix.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .scenario import Scenario, TaskSpec


@dataclass(frozen=True)
class WkdConfig:
    weight_data: float = 0.4     # blend coefficient on task size
    weight_cycles: float = 0.2   # blend coefficient on cycles/bit
    max_iters: int = 100
    tol: float = 1e-6            # meters, max centroid shift
    restarts: int = 3
    seed: int = 0
    normalize_weights: bool = True

    def __post_init__(self):
        if self.weight_data < 0 or self.weight_cycles < 0 \
                or self.weight_data + self.weight_cycles > 1:
            raise ValueError("blend coefficients must be >= 0 and sum to <= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class NormalizationStats:
    """Min/max of each weight term over a task population."""

    bits: tuple[float, float]
    cycles: tuple[float, float]
    urgency: tuple[float, float]   # of 1/deadline

    @classmethod
    def from_tasks(cls, tasks) -> "NormalizationStats":
        bits = [t.data_bits for t in tasks]
        cyc = [t.cycles_per_bit for t in tasks]
        urg = [1.0 / t.deadline for t in tasks]
        return cls(bits=(min(bits), max(bits)), cycles=(min(cyc), max(cyc)),
                   urgency=(min(urg), max(urg)))


def _minmax(value: float, lo: float, hi: float) -> float:
    # degenerate population: every task identical on this term
    if hi <= lo:
        return 1.0
    return (value - lo) / (hi - lo)


def task_weight(task: TaskSpec, norm: NormalizationStats,
                weight_data: float, weight_cycles: float,
                normalize: bool = True) -> float:
    """Importance weight ς₁·L + ς₂·c + (1−ς₁−ς₂)/T, min-max normalized per term."""
    rest = 1.0 - weight_data - weight_cycles
    if normalize:
        return (weight_data * _minmax(task.data_bits, *norm.bits)
                + weight_cycles * _minmax(task.cycles_per_bit, *norm.cycles)
                + rest * _minmax(1.0 / task.deadline, *norm.urgency))
    return (weight_data * task.data_bits + weight_cycles * task.cycles_per_bit
            + rest / task.deadline)


def task_weights(scenario: Scenario, config: WkdConfig) -> np.ndarray:
    norm = NormalizationStats.from_tasks(scenario.tasks)
    return np.array([task_weight(t, norm, config.weight_data,
                                 config.weight_cycles, config.normalize_weights)
                     for t in scenario.tasks])


@dataclass(frozen=True)
class Deployment:
    positions: np.ndarray        # (N, 2) UAV horizontal positions, meters
    delta: np.ndarray            # (M, N) binary connection matrix
    clusters: tuple[tuple[int, ...], ...]
    weighted_cost: float         # weighted sum of squared GU-to-UAV distances
    iterations: int
    cost_trace: tuple[float, ...]

    def to_document(self) -> dict:
        return {
            "schema_version": 1,
            "positions": [[float(x), float(y)] for x, y in self.positions],
            "delta": self.delta.astype(int).tolist(),
            "clusters": [list(c) for c in self.clusters],
            "weighted_cost": float(self.weighted_cost),
            "iterations": int(self.iterations),
            "cost_trace": [float(c) for c in self.cost_trace],
        }

    @classmethod
    def from_document(cls, doc: dict) -> "Deployment":
        return cls(positions=np.array(doc["positions"], dtype=float),
                   delta=np.array(doc["delta"], dtype=np.int8),
                   clusters=tuple(tuple(c) for c in doc["clusters"]),
                   weighted_cost=float(doc["weighted_cost"]),
                   iterations=int(doc["iterations"]),
                   cost_trace=tuple(doc.get("cost_trace", ())))


def _position_order(user_xy: np.ndarray) -> np.ndarray:
    # lexicographic by (x, y): index-permutation-invariant candidate ordering
    return np.lexsort((user_xy[:, 1], user_xy[:, 0]))


def farthest_point_init(user_xy: np.ndarray, k: int,
                        rng: np.random.Generator) -> np.ndarray:
    """Seed k centers: random first pick, then farthest-point selection.

    Candidates are ranked by position, not index, so a permutation of the
    input rows yields the same center set for the same seed.
    """
    order = _position_order(user_xy)
    centers = [user_xy[order[rng.integers(len(order))]]]
    for _ in range(1, k):
        d2 = np.min([np.sum((user_xy - c) ** 2, axis=1) for c in centers],
                    axis=0)
        centers.append(user_xy[order[int(np.argmax(d2[order]))]])
    return np.array(centers, dtype=float)


def _assign(user_xy, centers, altitudes):
    d2 = (np.sum((user_xy[:, None, :] - centers[None, :, :]) ** 2, axis=2)
          + altitudes[None, :] ** 2)
    return np.argmin(d2, axis=1), d2   # argmin ties resolve to lowest UAV index


def wkd_deploy(scenario: Scenario, n_uavs: int | None = None,
               config: WkdConfig | None = None) -> Deployment:
    """Place the scenario's UAVs and connect every user to its nearest one.

    Runs `restarts` independently seeded Lloyd iterations and keeps the one
    with the lowest weighted cost. The per-iteration cost trace of the
    winning restart is retained (it is non-increasing by construction).
    """
    cfg = config or WkdConfig()
    N = scenario.num_uavs if n_uavs is None else n_uavs
    if N != scenario.num_uavs:
        raise ValueError(f"scenario defines {scenario.num_uavs} UAVs, asked for {N}")
    M = scenario.num_users
    if N > M:
        warnings.warn(f"more UAVs ({N}) than users ({M}); some clusters stay empty-ish")

    user_xy = np.array([u.position for u in scenario.users], dtype=float)
    altitudes = np.array([u.altitude for u in scenario.uavs], dtype=float)
    weights = task_weights(scenario, cfg)
    order = _position_order(user_xy)
    b = scenario.bounds
    rng = np.random.default_rng(cfg.seed)

    best = None
    for _ in range(max(1, cfg.restarts)):
        centers = farthest_point_init(user_xy, N, rng)
        assign = None
        trace: list[float] = []
        iters = 0
        for _ in range(cfg.max_iters):
            iters += 1
            new_assign, d2 = _assign(user_xy, centers, altitudes)

            # empty-cluster repair: move the centroid onto the user with the
            # largest weighted distance from its current center
            moved: list[int] = []
            for n in range(N):
                if not np.any(new_assign == n):
                    cur = np.sqrt(d2[np.arange(M), new_assign])
                    scores = weights * cur
                    scores[moved] = -np.inf   # keep earlier repairs intact
                    m_star = order[int(np.argmax(scores[order]))]
                    centers[n] = user_xy[m_star]
                    new_assign[m_star] = n
                    moved.append(int(m_star))

            new_centers = centers.copy()
            for n in range(N):
                members = np.flatnonzero(new_assign == n)
                if members.size == 0:
                    continue
                w = weights[members]
                total = w.sum()
                if total > 0:
                    new_centers[n] = (w[:, None] * user_xy[members]).sum(0) / total
                else:
                    new_centers[n] = user_xy[members].mean(0)
            new_centers[:, 0] = np.clip(new_centers[:, 0], b.x_min, b.x_max)
            new_centers[:, 1] = np.clip(new_centers[:, 1], b.y_min, b.y_max)

            shift = float(np.max(np.linalg.norm(new_centers - centers, axis=1)))
            centers = new_centers
            d3sq = (np.sum((user_xy - centers[new_assign]) ** 2, axis=1)
                    + altitudes[new_assign] ** 2)
            trace.append(float(np.sum(weights * d3sq)))

            converged = (assign is not None and np.array_equal(assign, new_assign)) \
                or shift < cfg.tol
            assign = new_assign
            if converged:
                break

        cost = trace[-1]
        if best is None or cost < best[0]:
            best = (cost, centers, assign, iters, tuple(trace))

    cost, centers, assign, iters, trace = best
    delta = np.zeros((M, N), dtype=np.int8)
    delta[np.arange(M), assign] = 1
    clusters = tuple(tuple(int(m) for m in np.flatnonzero(assign == n))
                     for n in range(N))
    return Deployment(positions=centers, delta=delta, clusters=clusters,
                      weighted_cost=cost, iterations=iters, cost_trace=trace)
