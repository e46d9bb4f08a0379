import dataclasses
import itertools

import numpy as np
import pytest

from aerialmec.deployment import (NormalizationStats, WkdConfig,
                                  farthest_point_init, task_weight,
                                  task_weights, wkd_deploy)
from aerialmec.scenario import GroundUser, generate_scenario


def _uniform_task_scenario(m, n, seed):
    s = generate_scenario(m, n, seed)
    tasks = tuple(s.tasks[0] for _ in range(m))   # identical tasks
    return dataclasses.replace(s, tasks=tasks)


def test_task_weight_identical_population():
    s = _uniform_task_scenario(5, 2, 0)
    w = task_weights(s, WkdConfig())
    assert np.allclose(w, w[0]) and w[0] > 0


def test_task_weight_minmax_endpoints():
    s = generate_scenario(2, 1, 0)
    t0 = dataclasses.replace(s.tasks[0], data_bits=50e6)
    t1 = dataclasses.replace(s.tasks[1], data_bits=70e6)
    norm = NormalizationStats.from_tasks([t0, t1])
    assert task_weight(t0, norm, 1.0, 0.0) == pytest.approx(0.0)
    assert task_weight(t1, norm, 1.0, 0.0) == pytest.approx(1.0)


def test_task_weight_blend_sums_to_one():
    # every normalized term at its maximum: weight = 0.4 + 0.2 + 0.4
    s = generate_scenario(3, 1, 1)
    big = dataclasses.replace(s.tasks[0], data_bits=70e6, cycles_per_bit=400,
                              deadline=10.0)
    norm = NormalizationStats.from_tasks([big, s.tasks[1], s.tasks[2]])
    assert task_weight(big, norm, 0.4, 0.2) == pytest.approx(1.0)


def test_wkd_config_validation():
    with pytest.raises(ValueError):
        WkdConfig(weight_data=0.8, weight_cycles=0.4)
    with pytest.raises(ValueError):
        WkdConfig(max_iters=0)


def test_single_uav_fixed_point():
    s = generate_scenario(12, 1, 3)
    dep = wkd_deploy(s)
    weights = task_weights(s, WkdConfig())
    xy = np.array([u.position for u in s.users])
    centroid = (weights[:, None] * xy).sum(0) / weights.sum()
    assert np.allclose(dep.positions[0], centroid)
    assert dep.delta[:, 0].tolist() == [1] * 12


def test_two_separated_groups_match_bruteforce():
    s = generate_scenario(6, 2, 7)
    rng = np.random.default_rng(11)
    pts = np.concatenate([
        np.array([100.0, 100.0]) + rng.uniform(-5, 5, (3, 2)),
        np.array([900.0, 900.0]) + rng.uniform(-5, 5, (3, 2)),
    ])
    users = tuple(GroundUser(id=i, position=(float(x), float(y)))
                  for i, (x, y) in enumerate(pts))
    tasks = tuple(s.tasks[0] for _ in range(6))
    s = dataclasses.replace(s, users=users, tasks=tasks)

    dep = wkd_deploy(s, config=WkdConfig(seed=1, restarts=4))

    # oracle: enumerate every assignment, place centroids optimally
    alt = s.uavs[0].altitude
    best_cost, best_centers = np.inf, None
    for bits in itertools.product([0, 1], repeat=6):
        groups = [np.flatnonzero(np.array(bits) == g) for g in (0, 1)]
        if any(len(g) == 0 for g in groups):
            continue
        centers = np.array([pts[g].mean(0) for g in groups])
        cost = sum(((pts[g] - centers[k]) ** 2).sum() + len(g) * alt ** 2
                   for k, g in enumerate(groups))
        if cost < best_cost:
            best_cost, best_centers = cost, centers
    assert dep.weighted_cost == pytest.approx(best_cost, rel=1e-9)
    got = sorted(map(tuple, np.round(dep.positions, 6)))
    want = sorted(map(tuple, np.round(best_centers, 6)))
    assert got == want


def _reference_unweighted_kmeans(s, seed):
    xy = np.array([u.position for u in s.users])
    alt = np.array([u.altitude for u in s.uavs])
    b = s.bounds
    centers = farthest_point_init(xy, s.num_uavs, np.random.default_rng(seed))
    assign = None
    for _ in range(100):
        d2 = (np.sum((xy[:, None] - centers[None]) ** 2, axis=2) + alt[None] ** 2)
        new_assign = np.argmin(d2, axis=1)
        new_centers = centers.copy()
        for n in range(s.num_uavs):
            members = np.flatnonzero(new_assign == n)
            if members.size:
                new_centers[n] = xy[members].mean(0)
        new_centers[:, 0] = np.clip(new_centers[:, 0], b.x_min, b.x_max)
        new_centers[:, 1] = np.clip(new_centers[:, 1], b.y_min, b.y_max)
        shift = float(np.max(np.linalg.norm(new_centers - centers, axis=1)))
        centers = new_centers
        done = (assign is not None and np.array_equal(assign, new_assign)) \
            or shift < 1e-6
        assign = new_assign
        if done:
            break
    return centers, assign


def test_uniform_weights_equal_unweighted_kmeans():
    s = _uniform_task_scenario(24, 4, 9)
    dep = wkd_deploy(s, config=WkdConfig(seed=5, restarts=1))
    centers, assign = _reference_unweighted_kmeans(s, seed=5)
    assert np.allclose(dep.positions, centers)
    assert np.array_equal(np.argmax(dep.delta, axis=1), assign)


def test_invariants_over_seeds():
    for seed in range(10):
        s = generate_scenario(30, 6, seed)
        dep = wkd_deploy(s, config=WkdConfig(seed=seed))
        assert (dep.delta.sum(axis=1) == 1).all()
        assert dep.iterations < WkdConfig().max_iters
        diffs = np.diff(dep.cost_trace)
        assert (diffs <= 1e-9 * max(1.0, dep.cost_trace[0])).all()
        b = s.bounds
        assert (dep.positions[:, 0] >= b.x_min).all()
        assert (dep.positions[:, 0] <= b.x_max).all()
        assert (dep.positions[:, 1] >= b.y_min).all()
        assert (dep.positions[:, 1] <= b.y_max).all()


def test_index_permutation_leaves_centroids():
    s = generate_scenario(20, 4, 2)
    perm = np.random.default_rng(8).permutation(20)
    users = tuple(GroundUser(id=i, position=s.users[p].position)
                  for i, p in enumerate(perm))
    s2 = dataclasses.replace(s, users=users,
                             tasks=tuple(s.tasks[p] for p in perm),
                             uncertainty=tuple(s.uncertainty[p] for p in perm))
    d1 = wkd_deploy(s, config=WkdConfig(seed=4))
    d2 = wkd_deploy(s2, config=WkdConfig(seed=4))
    got = sorted(map(tuple, np.round(d1.positions, 9)))
    want = sorted(map(tuple, np.round(d2.positions, 9)))
    assert got == want


def test_duplicate_positions_trigger_repair():
    s = generate_scenario(4, 2, 1)
    users = tuple(GroundUser(id=i, position=(500.0, 500.0)) for i in range(4))
    s = dataclasses.replace(s, users=users)
    dep = wkd_deploy(s, config=WkdConfig(seed=0, restarts=1))
    assert (dep.delta.sum(axis=1) == 1).all()
    assert all(len(c) > 0 for c in dep.clusters)


def test_more_uavs_than_users_warns():
    s = generate_scenario(2, 3, 0)
    with pytest.warns(UserWarning, match="more UAVs"):
        wkd_deploy(s, config=WkdConfig(seed=0, restarts=1))
