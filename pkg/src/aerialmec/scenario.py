"""Problem instances for the two-layer aerial edge-computing network.

A Scenario bundles everything a solve needs: ground users and their tasks,
UAV and HAP platform capabilities, radio parameters, and the channel-error
moment description. Records are immutable and stored in linear SI units
only; decibel-specified inputs are converted once at ingestion.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


class ScenarioFormatError(ValueError):
    """Raised when a scenario document is malformed; names the offending field."""


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def dbm_per_hz_to_w_per_hz(value_dbm: float) -> float:
    return 10.0 ** ((value_dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class AreaBounds:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max


@dataclass(frozen=True)
class GroundUser:
    id: int
    position: tuple[float, float]  # meters


@dataclass(frozen=True)
class TaskSpec:
    data_bits: float        # task size in bits
    cycles_per_bit: float   # CPU cycles to process one bit
    deadline: float         # maximum tolerable delay, seconds
    confidence: float       # required completion probability, in (0, 1)


@dataclass(frozen=True)
class UavSpec:
    id: int
    altitude: float          # meters
    cpu_cap: float           # Hz
    energy_cap: float        # joules
    switch_cap: float        # effective switched capacitance
    tx_power_to_hap: float   # watts


@dataclass(frozen=True)
class HapSpec:
    position: tuple[float, float, float]  # meters
    cpu_cap: float
    energy_cap: float
    switch_cap: float
    task_slots: int          # simultaneous tasks the platform accepts


@dataclass(frozen=True)
class RadioParams:
    """Link-budget constants, all linear/SI (never decibels)."""

    uplink_bandwidth: float      # Hz, per task
    gu_tx_power: float           # watts
    ref_gain: float              # power gain at 1 m, linear ratio
    noise_psd: float             # W/Hz
    u2h_bandwidth: float         # Hz
    u2h_antenna_gain: float      # linear ratio
    line_loss: float             # linear ratio
    boltzmann: float             # J/K
    noise_temp: float            # K
    carrier: float               # Hz
    light_speed: float           # m/s


@dataclass(frozen=True)
class UncertaintyMoments:
    """Per-user moments of the channel-gain estimation error.

    The standard deviation may be given as a fraction of the mean uplink
    gain (resolved once a deployment fixes that gain) or as an absolute
    value; the absolute value wins when both are set.
    """

    mean: float
    sigma_fraction: float | None = None
    sigma_abs: float | None = None

    def resolve_sigma(self, mean_gain: float) -> float:
        if self.sigma_abs is not None:
            return self.sigma_abs
        if self.sigma_fraction is not None:
            return self.sigma_fraction * mean_gain
        return 0.0


@dataclass(frozen=True)
class Scenario:
    bounds: AreaBounds
    users: tuple[GroundUser, ...]
    tasks: tuple[TaskSpec, ...]
    uavs: tuple[UavSpec, ...]
    hap: HapSpec
    radio: RadioParams
    uncertainty: tuple[UncertaintyMoments, ...]
    rng_seed: int

    @property
    def num_users(self) -> int:
        return len(self.users)

    @property
    def num_uavs(self) -> int:
        return len(self.uavs)


@dataclass(frozen=True)
class GenConfig:
    """Instance-generation defaults (the reference parameter set)."""

    area: tuple[float, float, float, float] = (0.0, 1000.0, 0.0, 1000.0)
    uav_altitude: float = 100.0
    hap_position: tuple[float, float, float] = (500.0, 500.0, 2.0e4)
    data_bits_range: tuple[float, float] = (50e6, 70e6)
    cycles_per_bit: float = 300.0
    deadline: float = 20.0
    confidence: float = 0.95
    uav_cpu_cap: float = 8e9
    uav_energy_cap: float = 200.0
    uav_switch_cap: float = 1e-27
    uav_tx_power: float = 2.0
    hap_cpu_cap: float = 4e11
    hap_energy_cap: float = 2e4
    hap_switch_cap: float = 1e-28
    hap_slots: int = 10
    uplink_bandwidth: float = 5e6
    gu_tx_power: float = 0.5
    ref_gain_db: float = -50.0
    noise_psd_dbm_per_hz: float = -174.0
    u2h_bandwidth: float = 5e6
    u2h_antenna_gain_db: float = 42.0
    line_loss_db: float = -23.0
    boltzmann: float = 1.38e-23
    noise_temp: float = 1000.0
    carrier: float = 2.4e9
    light_speed: float = 3e8
    error_mean: float = 0.0
    error_sigma_fraction: float = 0.1

    def radio_params(self) -> RadioParams:
        return RadioParams(
            uplink_bandwidth=self.uplink_bandwidth,
            gu_tx_power=self.gu_tx_power,
            ref_gain=db_to_linear(self.ref_gain_db),
            noise_psd=dbm_per_hz_to_w_per_hz(self.noise_psd_dbm_per_hz),
            u2h_bandwidth=self.u2h_bandwidth,
            u2h_antenna_gain=db_to_linear(self.u2h_antenna_gain_db),
            line_loss=db_to_linear(self.line_loss_db),
            boltzmann=self.boltzmann,
            noise_temp=self.noise_temp,
            carrier=self.carrier,
            light_speed=self.light_speed,
        )


def generate_scenario(num_users: int, num_uavs: int, seed: int,
                      config: GenConfig | None = None) -> Scenario:
    """Draw a seeded random instance with the reference defaults.

    User positions are uniform in the area; task sizes are uniform in the
    configured range. Identical arguments yield an identical record.
    """
    if num_users < 1 or num_uavs < 1:
        raise ValueError("num_users and num_uavs must be >= 1")
    cfg = config or GenConfig()
    x_min, x_max, y_min, y_max = cfg.area
    if x_min >= x_max or y_min >= y_max:
        raise ValueError("invalid area bounds: min must be < max")
    lo_bits, hi_bits = cfg.data_bits_range
    if lo_bits > hi_bits:
        raise ValueError("invalid data_bits_range: min > max")

    rng = np.random.default_rng(seed)
    xs = rng.uniform(x_min, x_max, num_users)
    ys = rng.uniform(y_min, y_max, num_users)
    bits = rng.uniform(lo_bits, hi_bits, num_users)

    users = tuple(GroundUser(id=m, position=(float(xs[m]), float(ys[m])))
                  for m in range(num_users))
    tasks = tuple(TaskSpec(data_bits=float(bits[m]),
                           cycles_per_bit=cfg.cycles_per_bit,
                           deadline=cfg.deadline,
                           confidence=cfg.confidence)
                  for m in range(num_users))
    uavs = tuple(UavSpec(id=n, altitude=cfg.uav_altitude,
                         cpu_cap=cfg.uav_cpu_cap,
                         energy_cap=cfg.uav_energy_cap,
                         switch_cap=cfg.uav_switch_cap,
                         tx_power_to_hap=cfg.uav_tx_power)
                 for n in range(num_uavs))
    hap = HapSpec(position=cfg.hap_position, cpu_cap=cfg.hap_cpu_cap,
                  energy_cap=cfg.hap_energy_cap, switch_cap=cfg.hap_switch_cap,
                  task_slots=cfg.hap_slots)
    uncertainty = tuple(UncertaintyMoments(mean=cfg.error_mean,
                                           sigma_fraction=cfg.error_sigma_fraction)
                        for _ in range(num_users))
    return Scenario(bounds=AreaBounds(x_min, x_max, y_min, y_max),
                    users=users, tasks=tasks, uavs=uavs, hap=hap,
                    radio=cfg.radio_params(), uncertainty=uncertainty,
                    rng_seed=int(seed))


def validate_scenario(s: Scenario) -> list[str]:
    """Return every invariant violation as a string; empty list means valid."""
    out: list[str] = []
    b = s.bounds
    if not (b.x_min < b.x_max):
        out.append("bounds: x_min must be < x_max")
    if not (b.y_min < b.y_max):
        out.append("bounds: y_min must be < y_max")
    if len(s.tasks) != len(s.users):
        out.append("tasks: count must equal users count")
    if len(s.uncertainty) != len(s.users):
        out.append("uncertainty: count must equal users count")
    for u in s.users:
        if not b.contains(*u.position):
            out.append(f"users[{u.id}]: position outside bounds")
    for m, t in enumerate(s.tasks):
        if t.data_bits <= 0:
            out.append(f"tasks[{m}]: data_bits must be > 0")
        if t.cycles_per_bit <= 0:
            out.append(f"tasks[{m}]: cycles_per_bit must be > 0")
        if t.deadline <= 0:
            out.append(f"tasks[{m}]: deadline must be > 0")
        if not (0.0 < t.confidence < 1.0):
            out.append(f"tasks[{m}]: confidence out of range (0, 1)")
    ids = [u.id for u in s.uavs]
    if len(set(ids)) != len(ids):
        out.append("uavs: ids must be distinct")
    for n, u in enumerate(s.uavs):
        for name in ("altitude", "cpu_cap", "energy_cap", "switch_cap",
                     "tx_power_to_hap"):
            if getattr(u, name) <= 0:
                out.append(f"uavs[{n}]: {name} must be > 0")
    if s.uavs and s.hap.position[2] <= max(u.altitude for u in s.uavs):
        out.append("hap: altitude must exceed every UAV altitude")
    for name in ("cpu_cap", "energy_cap", "switch_cap"):
        if getattr(s.hap, name) <= 0:
            out.append(f"hap: {name} must be > 0")
    if s.hap.task_slots < 0:
        out.append("hap: task_slots must be >= 0")
    for name in ("uplink_bandwidth", "gu_tx_power", "ref_gain", "noise_psd",
                 "u2h_bandwidth", "u2h_antenna_gain", "line_loss", "boltzmann",
                 "noise_temp", "carrier", "light_speed"):
        if getattr(s.radio, name) <= 0:
            out.append(f"radio: {name} must be > 0")
    for m, um in enumerate(s.uncertainty):
        if um.sigma_abs is not None and um.sigma_abs < 0:
            out.append(f"uncertainty[{m}]: sigma_abs must be >= 0")
        if um.sigma_fraction is not None and um.sigma_fraction < 0:
            out.append(f"uncertainty[{m}]: sigma_fraction must be >= 0")
    return out


# --- document serialization ------------------------------------------------

_REQUIRED_SECTIONS = ("bounds", "users", "tasks", "uavs", "hap", "radio",
                      "uncertainty", "seed")


def _take(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ScenarioFormatError(f"missing field '{key}' in {where}")
    return mapping[key]


def _warn_extras(mapping: dict, known: tuple[str, ...], where: str) -> None:
    for key in mapping:
        if key not in known:
            warnings.warn(f"ignoring unknown field '{key}' in {where}",
                          stacklevel=3)


def scenario_to_document(s: Scenario) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "bounds": {"x_min": s.bounds.x_min, "x_max": s.bounds.x_max,
                   "y_min": s.bounds.y_min, "y_max": s.bounds.y_max},
        "users": [{"id": u.id, "position": list(u.position)} for u in s.users],
        "tasks": [{"data_bits": t.data_bits, "cycles_per_bit": t.cycles_per_bit,
                   "deadline": t.deadline, "confidence": t.confidence}
                  for t in s.tasks],
        "uavs": [{"id": u.id, "altitude": u.altitude, "cpu_cap": u.cpu_cap,
                  "energy_cap": u.energy_cap, "switch_cap": u.switch_cap,
                  "tx_power_to_hap": u.tx_power_to_hap} for u in s.uavs],
        "hap": {"position": list(s.hap.position), "cpu_cap": s.hap.cpu_cap,
                "energy_cap": s.hap.energy_cap, "switch_cap": s.hap.switch_cap,
                "task_slots": s.hap.task_slots},
        "radio": {name: getattr(s.radio, name) for name in (
            "uplink_bandwidth", "gu_tx_power", "ref_gain", "noise_psd",
            "u2h_bandwidth", "u2h_antenna_gain", "line_loss", "boltzmann",
            "noise_temp", "carrier", "light_speed")},
        "uncertainty": [{"mean": u.mean, "sigma_fraction": u.sigma_fraction,
                         "sigma_abs": u.sigma_abs} for u in s.uncertainty],
        "seed": s.rng_seed,
    }


# dB-specified aliases accepted on load; converted once, never stored.
_DB_ALIASES = {
    "ref_gain_db": ("ref_gain", db_to_linear),
    "u2h_antenna_gain_db": ("u2h_antenna_gain", db_to_linear),
    "line_loss_db": ("line_loss", db_to_linear),
    "noise_psd_dbm_per_hz": ("noise_psd", dbm_per_hz_to_w_per_hz),
}


def _parse_radio(doc: dict) -> RadioParams:
    fields = dict(doc)
    for alias, (target, conv) in _DB_ALIASES.items():
        if alias in fields:
            fields[target] = conv(fields.pop(alias))
    names = ("uplink_bandwidth", "gu_tx_power", "ref_gain", "noise_psd",
             "u2h_bandwidth", "u2h_antenna_gain", "line_loss", "boltzmann",
             "noise_temp", "carrier", "light_speed")
    _warn_extras(fields, names, "radio")
    return RadioParams(**{n: float(_take(fields, n, "radio")) for n in names})


def document_to_scenario(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioFormatError("document root must be a mapping")
    _warn_extras(doc, _REQUIRED_SECTIONS + ("schema_version",), "document")
    for section in _REQUIRED_SECTIONS:
        _take(doc, section, "document")

    b = doc["bounds"]
    bounds = AreaBounds(*(float(_take(b, k, "bounds"))
                          for k in ("x_min", "x_max", "y_min", "y_max")))
    users = tuple(GroundUser(id=int(_take(u, "id", f"users[{i}]")),
                             position=tuple(float(c) for c in
                                            _take(u, "position", f"users[{i}]")))
                  for i, u in enumerate(doc["users"]))
    tasks = tuple(TaskSpec(data_bits=float(_take(t, "data_bits", f"tasks[{i}]")),
                           cycles_per_bit=float(_take(t, "cycles_per_bit", f"tasks[{i}]")),
                           deadline=float(_take(t, "deadline", f"tasks[{i}]")),
                           confidence=float(_take(t, "confidence", f"tasks[{i}]")))
                  for i, t in enumerate(doc["tasks"]))
    uavs = tuple(UavSpec(id=int(_take(u, "id", f"uavs[{i}]")),
                         altitude=float(_take(u, "altitude", f"uavs[{i}]")),
                         cpu_cap=float(_take(u, "cpu_cap", f"uavs[{i}]")),
                         energy_cap=float(_take(u, "energy_cap", f"uavs[{i}]")),
                         switch_cap=float(_take(u, "switch_cap", f"uavs[{i}]")),
                         tx_power_to_hap=float(_take(u, "tx_power_to_hap", f"uavs[{i}]")))
                 for i, u in enumerate(doc["uavs"]))
    h = doc["hap"]
    hap = HapSpec(position=tuple(float(c) for c in _take(h, "position", "hap")),
                  cpu_cap=float(_take(h, "cpu_cap", "hap")),
                  energy_cap=float(_take(h, "energy_cap", "hap")),
                  switch_cap=float(_take(h, "switch_cap", "hap")),
                  task_slots=int(_take(h, "task_slots", "hap")))
    radio = _parse_radio(doc["radio"])

    def _opt(value):
        return None if value is None else float(value)

    uncertainty = tuple(
        UncertaintyMoments(mean=float(_take(u, "mean", f"uncertainty[{i}]")),
                           sigma_fraction=_opt(u.get("sigma_fraction")),
                           sigma_abs=_opt(u.get("sigma_abs")))
        for i, u in enumerate(doc["uncertainty"]))
    return Scenario(bounds=bounds, users=users, tasks=tasks, uavs=uavs, hap=hap,
                    radio=radio, uncertainty=uncertainty,
                    rng_seed=int(doc["seed"]))


def scenario_bytes(s: Scenario) -> bytes:
    """Canonical serialized form; also the provenance-digest input."""
    return (json.dumps(scenario_to_document(s), indent=2) + "\n").encode()


def save_scenario(s: Scenario, path: str | Path) -> None:
    Path(path).write_bytes(scenario_bytes(s))


def load_scenario(path: str | Path) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"not a valid scenario document: {exc}") from exc
    return document_to_scenario(doc)


def with_sigma_zero(s: Scenario) -> Scenario:
    """Ideal-channel twin: every error moment zeroed (exact-CSI baseline)."""
    zeroed = tuple(replace(u, sigma_fraction=0.0, sigma_abs=None)
                   for u in s.uncertainty)
    return replace(s, uncertainty=zeroed)
