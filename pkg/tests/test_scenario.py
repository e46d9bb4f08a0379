import dataclasses
import json

import pytest

from aerialmec.scenario import (GenConfig, ScenarioFormatError, generate_scenario,
                                load_scenario, save_scenario, scenario_bytes,
                                scenario_to_document, validate_scenario,
                                with_sigma_zero)


def test_generate_reference_defaults(table1_scenario):
    s = table1_scenario
    assert s.num_users == 30 and s.num_uavs == 6
    assert (s.bounds.x_min, s.bounds.x_max) == (0.0, 1000.0)
    assert all(u.altitude == 100.0 for u in s.uavs)
    assert s.hap.position == (500.0, 500.0, 2.0e4)
    assert s.hap.task_slots == 10
    for t in s.tasks:
        assert 50e6 <= t.data_bits <= 70e6
        assert t.cycles_per_bit == 300.0
        assert t.deadline == 20.0
        assert t.confidence == 0.95


def test_generate_minimal_instance():
    s = generate_scenario(1, 1, 0)
    assert s.num_users == 1 and s.num_uavs == 1
    assert validate_scenario(s) == []


def test_generate_deterministic():
    a = generate_scenario(30, 6, 42)
    b = generate_scenario(30, 6, 42)
    assert a == b
    assert scenario_bytes(a) == scenario_bytes(b)


def test_generate_rejects_bad_config():
    with pytest.raises(ValueError):
        generate_scenario(5, 2, 0, GenConfig(data_bits_range=(7e7, 5e7)))
    with pytest.raises(ValueError):
        generate_scenario(5, 2, 0, GenConfig(area=(10.0, 0.0, 0.0, 1.0)))
    with pytest.raises(ValueError):
        generate_scenario(0, 2, 0)


def test_unit_discipline_linear_si(table1_scenario):
    r = table1_scenario.radio
    assert r.ref_gain == pytest.approx(1e-5)
    assert r.noise_psd == pytest.approx(10 ** (-20.4))
    assert r.line_loss == pytest.approx(10 ** (-2.3))
    assert r.u2h_antenna_gain == pytest.approx(10 ** 4.2)
    assert r.gu_tx_power == 0.5
    assert r.uplink_bandwidth == 5e6


def test_validate_clean_scenario(table1_scenario):
    assert validate_scenario(table1_scenario) == []


def test_validate_confidence_out_of_range(table1_scenario):
    bad_task = dataclasses.replace(table1_scenario.tasks[3], confidence=1.2)
    tasks = list(table1_scenario.tasks)
    tasks[3] = bad_task
    s = dataclasses.replace(table1_scenario, tasks=tuple(tasks))
    assert any("confidence" in v for v in validate_scenario(s))


def test_validate_user_outside_bounds(table1_scenario):
    bad_user = dataclasses.replace(table1_scenario.users[0], position=(-5.0, 10.0))
    users = list(table1_scenario.users)
    users[0] = bad_user
    s = dataclasses.replace(table1_scenario, users=tuple(users))
    assert any("outside bounds" in v for v in validate_scenario(s))


def test_save_load_round_trip(tmp_path, table1_scenario):
    path = tmp_path / "scenario.json"
    save_scenario(table1_scenario, path)
    loaded = load_scenario(path)
    assert loaded == table1_scenario
    save_scenario(loaded, tmp_path / "again.json")
    assert (tmp_path / "again.json").read_bytes() == path.read_bytes()


def test_load_missing_section_names_field(tmp_path, table1_scenario):
    doc = scenario_to_document(table1_scenario)
    del doc["hap"]
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ScenarioFormatError, match="hap"):
        load_scenario(path)


def test_load_unknown_field_warns_but_parses(tmp_path, table1_scenario):
    doc = scenario_to_document(table1_scenario)
    doc["operator_notes"] = "retrieved from archive"
    path = tmp_path / "extra.json"
    path.write_text(json.dumps(doc))
    with pytest.warns(UserWarning, match="operator_notes"):
        loaded = load_scenario(path)
    assert loaded == table1_scenario


def test_load_accepts_db_specified_radio(tmp_path, table1_scenario):
    doc = scenario_to_document(table1_scenario)
    radio = doc["radio"]
    del radio["ref_gain"], radio["noise_psd"]
    radio["ref_gain_db"] = -50.0
    radio["noise_psd_dbm_per_hz"] = -174.0
    path = tmp_path / "db.json"
    path.write_text(json.dumps(doc))
    loaded = load_scenario(path)
    assert loaded.radio.ref_gain == pytest.approx(1e-5)
    assert loaded.radio.noise_psd == pytest.approx(10 ** (-20.4))


def test_sigma_resolution_and_zeroing(table1_scenario):
    u = table1_scenario.uncertainty[0]
    assert u.resolve_sigma(2e-9) == pytest.approx(0.2e-9)
    ideal = with_sigma_zero(table1_scenario)
    assert all(m.resolve_sigma(1e-9) == 0.0 for m in ideal.uncertainty)
    override = dataclasses.replace(u, sigma_abs=3e-10)
    assert override.resolve_sigma(2e-9) == 3e-10
