"""End-to-end acceptance checks; each test carries its criterion number for the summary lines."""

import math
import time

import numpy as np
import pytest
from scipy.signal import freqz

from h2vtol.control.filters import butterworth2_coefficients
from h2vtol.energy import (BatteryPack, HydrogenCylinder, PowerPlantState, catalog_metrics, fuel_flow,
                           hydrogen_density, hydrogen_mass, load_catalog, powerplant_step)
from h2vtol.energy.powerplant import PowerBus
from h2vtol.mission.faults import fault_cases, run_campaign
from h2vtol.mission.runner import run_scenario
from h2vtol.mission.scenario import load_scenario, reference_scenario_path

from .reference_table import DESCRIBED_ROW_COUNT, PRINTED_ROWS

criterion = pytest.mark.criterion


def _scenario(name):
    return load_scenario(reference_scenario_path(name))


@pytest.fixture(scope="module")
def endurance_run():
    start = time.perf_counter()
    log = run_scenario(_scenario("endurance"))
    return log, time.perf_counter() - start


@pytest.fixture(scope="module")
def transition_run():
    return run_scenario(_scenario("transition"))


@criterion(1, "cylinder catalog reproduces every printed row")
def test_catalog_oracle_equivalence():
    start = time.perf_counter()
    entries = load_catalog()
    problems = []
    if len(entries) != DESCRIBED_ROW_COUNT:
        problems.append(f"{len(entries)} rows against {DESCRIBED_ROW_COUNT} described")
    for e, (maker, vol, bar, kg, wh, grams, wh_kg, wt) in zip(entries, PRINTED_ROWS):
        m = catalog_metrics(e)
        label = f"{maker} {vol:g} L"
        if abs(m.h2_mass - grams) > 0.01 * grams:
            problems.append(f"{label}: H2 {m.h2_mass:.2f} g against {grams}")
        if abs(m.energy - wh) > 0.01 * wh:
            problems.append(f"{label}: energy {m.energy:.0f} Wh against {wh}")
        if abs(m.specific_energy - wh_kg) > 0.015 * wh_kg:
            problems.append(f"{label}: {m.specific_energy:.0f} Wh/kg against {wh_kg}")
        if abs(m.weight_fraction - wt) > 0.05:
            problems.append(f"{label}: {m.weight_fraction:.2f} wt% against {wt}")
    elapsed = time.perf_counter() - start
    if elapsed >= 1.0:
        problems.append(f"took {elapsed:.2f} s")
    assert not problems, "; ".join(problems)


@criterion(2, "hydrogen density and stored mass spot values")
def test_density_spot_values():
    assert hydrogen_density(300.0) == pytest.approx(20.63, abs=0.01)
    assert hydrogen_mass(HydrogenCylinder(6.8, 300.0)) == pytest.approx(140.3, rel=0.01)


@criterion(3, "fuel flow spot values")
def test_fuel_flow_spot_values():
    assert fuel_flow(600.0, 0.53) <= 34.0 + 0.2
    assert fuel_flow(800.0, 0.53) == pytest.approx(45.3, abs=0.2)


@criterion(4, "reference endurance flight: 3 h 38 min, 20 +- 10 bar left")
def test_endurance_reproduction(endurance_run):
    log, wall = endurance_run
    s = log.summary
    assert s["terminated"] is None
    assert s["landed"]
    assert s["flight_time_s"] >= 3 * 3600 + 38 * 60
    assert s["final_pressure_bar"] == pytest.approx(20.0, abs=10.0)
    assert wall < 300.0


@criterion(5, "power split under a 2000 W pulse and recharge before landing")
def test_power_split(endurance_run):
    bus = PowerBus()
    state = PowerPlantState(HydrogenCylinder(6.8, 285.0))
    dt = 0.1
    for k in range(600):
        state, r = powerplant_step(state, 2000.0, dt)
        assert r.fc_power <= 1400.0 + 1e-9
        # the packs cover what the fuel cell does not
        assert r.battery_power == pytest.approx(2000.0 + r.diode_loss + r.charge_power - r.fc_power, abs=0.01)
        if k >= 300:
            assert r.fc_power <= bus.fuel_cell.max_continuous_power + 1e-9
            assert r.battery_power > 1000.0
    s = endurance_run[0].summary
    assert s["bus_voltage_before_landing"] <= 24.8
    assert s["soc_before_landing"] >= 0.95
    assert s["soc_end_of_cruise"] >= 0.95
    assert s["peak_fuel_cell_w"] <= 1400.0


@criterion(6, "Butterworth filters: -3 dB at cutoff, -40 dB a decade above")
@pytest.mark.parametrize("cutoff", [1.5, 0.5])
def test_filter_magnitude(cutoff):
    rate = 500.0
    b, a = butterworth2_coefficients(cutoff, rate)
    _, h = freqz(b, a, worN=[cutoff, 10 * cutoff], fs=rate)
    db = 20 * np.log10(np.abs(h))
    oracle = 20 * np.log10(1 / np.sqrt(1 + np.array([1.0, 10.0]) ** 4))
    assert db[0] == pytest.approx(-3.0, abs=0.1)
    assert db[0] == pytest.approx(oracle[0], abs=0.1)
    assert db[1] == pytest.approx(-40.0, abs=1.0)
    assert db[1] == pytest.approx(oracle[1], abs=1.0)


@criterion(7, "reversed tip propeller: stable within 5 s, roll bias 15-35 %")
def test_reverse_prop_rejection():
    samples = []

    def probe(t, ps, s, tel, u):
        samples.append((t, tel.attitude_error, tel.roll_bias))

    scenario = _scenario("reverse_prop")
    log = run_scenario(scenario, probe=probe)
    assert log.summary["terminated"] is None
    takeoff = next(t for name, t in log.summary["phases"] if name == "AngledTakeoff")
    t, err, bias = np.array(samples).T
    assert math.degrees(err[t >= takeoff + 5.0].max()) < 5.0
    settled = bias[t >= t[-1] - 10.0]
    assert 0.15 <= settled.mean() <= 0.35
    assert settled.max() - settled.min() < 0.02


@criterion(8, "hover-forward-hover mission: norm drift, command steps, altitude excursion")
def test_transition_mission(transition_run):
    s = transition_run.summary
    assert s["terminated"] is None and s["landed"]
    names = [name for name, _ in s["phases"]]
    assert names.count("TransitionToForward") == 1 and names.count("TransitionToHover") == 1
    assert s["quaternion_norm_drift"] < 1e-6
    assert s["max_command_step"] <= 0.10
    excursions = dict(s["transition_altitude_excursion_m"])
    assert set(excursions) == {"TransitionToForward", "TransitionToHover"}
    assert max(excursions.values()) < 5.0


@criterion(9, "single link, connector and node failures: no lost commands, mission maintained")
def test_redundancy_campaign():
    base = _scenario("faults")
    results = run_campaign(base, fault_cases(("link", "connector", "node")))
    wiring = [r for r in results if r.case.kind in ("link", "connector")]
    assert len(wiring) == 68
    assert all(r.lost_commands == 0 for r in wiring)
    failed = [r.case.label for r in results if not r.maintained]
    assert failed == []
    motors = [r for r in results if r.case.kind == "node" and r.case.label.startswith("kill:node")
              and int(r.case.label[len("kill:node"):]) <= 12]
    assert len(motors) == 12
    assert all(r.allocation_rank == 4 for r in motors)


@criterion(10, "fuel cell lost mid-cruise: at least 20 min on the packs")
def test_battery_reserve():
    scenario = _scenario("fuelcell_kill")
    kill = next(f.time for f in scenario.failures if f.spec == "kill:fuelcell")
    s = run_scenario(scenario).summary
    assert not s["fuel_cell_on"]
    end = s["terminated"]["time_s"] if s["terminated"] else s["end_time_s"]
    assert end - kill >= 20 * 60


@criterion(11, "same scenario and seed give a bit-identical summary")
def test_determinism(transition_run):
    again = run_scenario(_scenario("transition"))
    assert again.summary_json() == transition_run.summary_json()
    assert again.rows == transition_run.rows
