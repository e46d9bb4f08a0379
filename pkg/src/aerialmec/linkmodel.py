"""Geometry, channel-rate, delay, and energy formulas.

Everything here is a pure function of its inputs, in double precision and
linear SI units. The per-task routing convention: a task connected to UAV n
is either computed on that UAV, or relayed by it to the HAP and computed
there; exactly one of the two compute legs is active.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import RadioParams, Scenario


class ContractViolation(ValueError):
    """An input breaks a documented precondition (e.g. bad connection row)."""


def gu_uav_distance(user_xy, uav_xy, altitude: float) -> float:
    """3-D distance between a ground user and a hovering UAV."""
    dx = user_xy[0] - uav_xy[0]
    dy = user_xy[1] - uav_xy[1]
    return math.sqrt(dx * dx + dy * dy + altitude * altitude)


def uav_hap_distance(uav_xy, altitude: float, hap_position) -> float:
    dx = uav_xy[0] - hap_position[0]
    dy = uav_xy[1] - hap_position[1]
    dz = altitude - hap_position[2]
    return math.sqrt(dx * dx + dy * dy + dz * dz)


def connected_uav(delta_row) -> int:
    """Index of the single active connection in a row of the δ matrix."""
    idx = np.flatnonzero(np.asarray(delta_row))
    if idx.size != 1:
        raise ContractViolation(
            f"connection row must have exactly one active entry, got {idx.size}")
    return int(idx[0])


def mean_uplink_gain(delta_row, distances, ref_gain: float) -> float:
    """Expected uplink power gain ref_gain / d² for the connected UAV."""
    n = connected_uav(delta_row)
    d = float(np.asarray(distances)[n])
    return ref_gain / (d * d)


def uplink_rate(gain: float, radio: RadioParams) -> float:
    """Shannon uplink rate at the given channel power gain, bit/s."""
    if gain < 0:
        raise ContractViolation("gain must be >= 0")
    noise = radio.noise_psd * radio.uplink_bandwidth
    return radio.uplink_bandwidth * math.log2(1.0 + radio.gu_tx_power * gain / noise)


def free_space_loss(distance: float, radio: RadioParams) -> float:
    x = radio.light_speed / (4.0 * math.pi * distance * radio.carrier)
    return x * x


def u2h_rate(distance: float, radio: RadioParams, tx_power: float) -> float:
    """UAV-to-HAP rate with free-space loss and line loss, bit/s."""
    if distance <= 0:
        raise ContractViolation("distance must be > 0")
    noise = radio.boltzmann * radio.noise_temp * radio.u2h_bandwidth
    snr = tx_power * radio.u2h_antenna_gain * free_space_loss(distance, radio) \
        * radio.line_loss / noise
    return radio.u2h_bandwidth * math.log2(1.0 + snr)


@dataclass(frozen=True)
class CostLedger:
    """Delay/energy breakdown of one task under a fixed routing, SI units."""

    t_up: float          # uplink transmission delay
    t_fwd: float         # UAV-to-HAP relay delay (0 unless forwarded)
    t_comp_uav: float    # on-UAV compute delay (0 if forwarded)
    t_comp_hap: float    # on-HAP compute delay (0 unless forwarded)
    t_total: float
    e_fwd: float         # UAV transmit energy for relaying
    e_comp_uav: float
    e_comp_hap: float


def _forwarded_flag(m: int, delta, lam_m) -> bool:
    """Interpret lam_m as either a scalar flag or a full per-UAV row."""
    lam_arr = np.atleast_1d(np.asarray(lam_m))
    if lam_arr.size == 1:
        return bool(lam_arr[0])
    if lam_arr.size != np.asarray(delta).shape[1]:
        raise ContractViolation("lam row length must match UAV count")
    if np.any(lam_arr > np.asarray(delta)[m]):
        raise ContractViolation(f"task {m}: forwarding without a connection")
    return bool(lam_arr.sum())


def cost_ledger(m: int, deployment, lam_m, f_m: float, scenario: Scenario,
                gain_override: float | None = None) -> CostLedger:
    """Full delay/energy ledger for task m at frequency f_m.

    `gain_override` substitutes a sampled uplink gain for the mean one
    (Monte Carlo use); the delay/energy structure is otherwise identical.
    """
    if f_m <= 0:
        raise ContractViolation("f_m must be > 0")
    task = scenario.tasks[m]
    n = connected_uav(deployment.delta[m])
    forwarded = _forwarded_flag(m, deployment.delta, lam_m)

    uav = scenario.uavs[n]
    d_gu = gu_uav_distance(scenario.users[m].position, deployment.positions[n],
                           uav.altitude)
    gain = gain_override
    if gain is None:
        gain = scenario.radio.ref_gain / (d_gu * d_gu)
    rate_up = uplink_rate(gain, scenario.radio)
    t_up = task.data_bits / rate_up if rate_up > 0 else math.inf

    cycles = task.cycles_per_bit * task.data_bits
    if forwarded:
        d_uh = uav_hap_distance(deployment.positions[n], uav.altitude,
                                scenario.hap.position)
        rate_fwd = u2h_rate(d_uh, scenario.radio, uav.tx_power_to_hap)
        t_fwd = task.data_bits / rate_fwd
        t_ch = cycles / f_m
        return CostLedger(t_up=t_up, t_fwd=t_fwd, t_comp_uav=0.0, t_comp_hap=t_ch,
                          t_total=t_up + t_fwd + t_ch,
                          e_fwd=uav.tx_power_to_hap * t_fwd,
                          e_comp_uav=0.0,
                          e_comp_hap=scenario.hap.switch_cap * f_m * f_m * cycles)
    t_cu = cycles / f_m
    return CostLedger(t_up=t_up, t_fwd=0.0, t_comp_uav=t_cu, t_comp_hap=0.0,
                      t_total=t_up + t_cu,
                      e_fwd=0.0,
                      e_comp_uav=uav.switch_cap * cycles * f_m * f_m,
                      e_comp_hap=0.0)


def platform_energies(deployment, lam, f, scenario: Scenario):
    """Total transmit+compute energy per UAV and for the HAP.

    `lam` is the reduced per-task forwarding vector; `f` the per-task CPU
    frequency. Returns (per-UAV array, HAP total).
    """
    tables = build_link_tables(scenario, deployment)
    lam = np.asarray(lam, dtype=float)
    f = np.asarray(f, dtype=float)
    e_cu = tables.eps_uav * tables.cycles_total * f * f
    e_ch = scenario.hap.switch_cap * tables.cycles_total * f * f
    per_task_uav = lam * tables.relay_energy + (1.0 - lam) * e_cu
    e_uav = np.zeros(scenario.num_uavs)
    np.add.at(e_uav, tables.conn, per_task_uav)
    return e_uav, float(np.sum(lam * e_ch))


@dataclass(frozen=True)
class LinkTables:
    """Per-deployment precomputed link quantities (arrays indexed by task)."""

    conn: np.ndarray           # (M,) connected UAV index
    dist_gu: np.ndarray        # (M,) meters
    mean_gain: np.ndarray      # (M,) linear
    rate_up: np.ndarray        # (M,) bit/s at the mean gain
    tx_time: np.ndarray        # (M,) s, data_bits / rate_up
    dist_uh: np.ndarray        # (N,) meters
    rate_u2h: np.ndarray       # (N,) bit/s
    fwd_time: np.ndarray       # (M,) s via the connected UAV
    relay_energy: np.ndarray   # (M,) J, tx power * fwd_time
    data_bits: np.ndarray      # (M,)
    cycles_total: np.ndarray   # (M,) cycles_per_bit * data_bits
    deadline: np.ndarray       # (M,) s
    eps_uav: np.ndarray        # (M,) switch capacitance at the connected UAV


def build_link_tables(scenario: Scenario, deployment) -> LinkTables:
    M, N = scenario.num_users, scenario.num_uavs
    conn = np.array([connected_uav(deployment.delta[m]) for m in range(M)],
                    dtype=np.intp)
    user_xy = np.array([u.position for u in scenario.users],
                       dtype=float).reshape(-1, 2)
    uav_xy = np.asarray(deployment.positions, dtype=float)
    alt = np.array([u.altitude for u in scenario.uavs])

    diff = user_xy - uav_xy[conn]
    dist_gu = np.sqrt(np.sum(diff * diff, axis=1) + alt[conn] ** 2)
    mean_gain = scenario.radio.ref_gain / (dist_gu * dist_gu)

    radio = scenario.radio
    noise_up = radio.noise_psd * radio.uplink_bandwidth
    rate_up = radio.uplink_bandwidth * np.log2(
        1.0 + radio.gu_tx_power * mean_gain / noise_up)

    hx, hy, hz = scenario.hap.position
    dist_uh = np.sqrt((uav_xy[:, 0] - hx) ** 2 + (uav_xy[:, 1] - hy) ** 2
                      + (alt - hz) ** 2)
    tx_power = np.array([u.tx_power_to_hap for u in scenario.uavs])
    noise_uh = radio.boltzmann * radio.noise_temp * radio.u2h_bandwidth
    fsl = (radio.light_speed / (4.0 * math.pi * dist_uh * radio.carrier)) ** 2
    rate_u2h = radio.u2h_bandwidth * np.log2(
        1.0 + tx_power * radio.u2h_antenna_gain * fsl * radio.line_loss / noise_uh)

    bits = np.array([t.data_bits for t in scenario.tasks])
    cyc = np.array([t.cycles_per_bit for t in scenario.tasks])
    fwd_time = bits / rate_u2h[conn]
    return LinkTables(conn=conn, dist_gu=dist_gu, mean_gain=mean_gain,
                      rate_up=rate_up, tx_time=bits / rate_up,
                      dist_uh=dist_uh, rate_u2h=rate_u2h, fwd_time=fwd_time,
                      relay_energy=tx_power[conn] * fwd_time,
                      data_bits=bits, cycles_total=cyc * bits,
                      deadline=np.array([t.deadline for t in scenario.tasks]),
                      eps_uav=np.array([scenario.uavs[n].switch_cap
                                        for n in conn]))
