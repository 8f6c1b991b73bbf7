"""Scenario runner: plant, controller, command network and power plant stepped together.

Dynamics, control and the network run at the control rate; the power plant runs at
``energy_rate_hz`` on the mean motor power of the preceding window. With the hybrid
fidelity the long middle of a cruise is advanced quasi-statically: the vehicle holds
its settled cruise state and the power plant sees the motor power measured while
settling.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from ..airframe import VehicleConfig, load_vehicle_config
from ..bus import CommandNetwork
from ..control.controller import INDIController, Measurement
from ..energy import (BatteryPack, DepletionError, HydrogenCylinder, OverloadError, PowerPlantState,
                      fuel_flow, powerplant_step)
from ..plant import IntegrationFault, Plant, WindModel, resting_state, trim_level_flight
from ..plant.params import N_MOTORS
from ..plant.rotation import quat_to_matrix
from .phases import (CONTROLLED_PHASES, FlightPhase, PhaseInput, PhaseState, forward_references, ground_clearance,
                     phase_step)
from .scenario import Scenario

CSV_SCHEMA_VERSION = 1
COLUMNS = (("t", "x", "y", "z", "vx", "vy", "vz", "qw", "qx", "qy", "qz", "p", "q", "r", "phase")
           + tuple(f"motor{i}" for i in range(1, N_MOTORS + 1))
           + ("bus_voltage", "fc_power", "battery_power", "pressure_bar", "soc"))
ACTUATOR_NAMES = tuple(f"motor{i}" for i in range(1, N_MOTORS + 1)) + tuple(f"servo{i}" for i in range(1, 5))
LOSS_OF_CONTROL_ANGLE = math.pi / 2
LOSS_OF_CONTROL_S = 2.0
# failures the quasi-static cruise can absorb without flying the dynamics
ENERGY_FAILURES = ("kill:fuelcell", "kill:fc")


@dataclass
class MissionLog:
    rows: list = field(default_factory=list)  # tuples in COLUMNS order
    phases: list = field(default_factory=list)  # (phase name, entry time)
    summary: dict = field(default_factory=dict)

    @property
    def terminated(self) -> bool:
        return self.summary.get("terminated") is not None

    def column(self, name: str) -> np.ndarray:
        k = COLUMNS.index(name)
        return np.array([row[k] for row in self.rows])

    def summary_json(self) -> str:
        return json.dumps(self.summary, sort_keys=True, indent=2) + "\n"

    def write(self, out_dir: str | Path):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "timeseries.csv", "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(COLUMNS)
            for row in self.rows:
                w.writerow([v if isinstance(v, str) else f"{v:.9g}" for v in row])
        with open(out / "phases.csv", "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(("phase", "entry_time_s"))
            for name, t in self.phases:
                w.writerow((name, f"{t:.6f}"))
        (out / "summary.json").write_text(self.summary_json())


def endurance_estimate(cylinder: HydrogenCylinder, mean_power: float, efficiency: float) -> float:
    """Hours of flight from the usable hydrogen at a constant fuel-cell power."""
    if mean_power <= 0:
        raise ValueError("mean_power must be positive")
    return cylinder.usable_mass / fuel_flow(mean_power, efficiency)


class _Energy:
    """Power-plant bookkeeping at the energy rate."""

    def __init__(self, scenario: Scenario):
        c, p = scenario.cylinder, scenario.power
        cylinder = HydrogenCylinder(c.volume_l, c.pressure_bar, c.min_usable_bar, c.rated_bar)
        self.state = PowerPlantState(cylinder, packs=(BatteryPack(state_of_charge=p.initial_soc),) * 4)
        self.efficiency = p.efficiency or None
        self.extra = p.payload_w + p.overhead_w
        self.dt = 1.0 / p.energy_rate_hz
        self.initial_mass = cylinder.mass
        self.initial_pressure = cylinder.pressure
        self.fc_wh = self.battery_wh = self.charge_wh = self.load_wh = self.h2 = 0.0
        self.peak_fc = 0.0
        self.min_soc = self.state.state_of_charge
        self.report = None

    def step(self, motor_power: float):
        load = motor_power + self.extra
        self.state, r = powerplant_step(self.state, load, self.dt, efficiency=self.efficiency)
        h = self.dt / 3600.0
        self.fc_wh += r.fc_power * h
        self.battery_wh += r.battery_power * h
        self.charge_wh += r.charge_power * h
        self.load_wh += load * h
        self.h2 += r.h2_consumed
        self.peak_fc = max(self.peak_fc, r.fc_power)
        self.min_soc = min(self.min_soc, self.state.state_of_charge)
        self.report = r

    def log_values(self) -> tuple[float, float, float, float, float]:
        r = self.report
        s = self.state
        if r is None:
            return (s.bus_voltage, 0.0, 0.0, s.cylinder.pressure, s.state_of_charge)
        return (r.bus_voltage, r.fc_power, r.battery_power, s.cylinder.pressure, s.state_of_charge)


def _row(t, s, phase, u, energy) -> tuple:
    return ((t,) + tuple(s.position) + tuple(s.velocity) + tuple(s.attitude) + tuple(s.rate)
            + (phase.value,) + tuple(u[:N_MOTORS]) + energy.log_values())


def run_scenario(scenario: Scenario, vehicle: VehicleConfig | None = None,
                 probe: Callable | None = None) -> MissionLog:
    """Fly ``scenario`` and return the decimated log and the summary.

    ``probe(t, phase_state, state, telemetry, command)`` is called after every
    dynamic control step when given.
    """
    if vehicle is None:
        vehicle = load_vehicle_config(scenario.run.vehicle or None)
    vp, cp = vehicle.plant, vehicle.control
    plan = scenario.plan
    dt = 1.0 / cp.control_rate_hz
    n_steps = int(round(scenario.run.duration_s / dt))
    energy_every = max(1, int(round(cp.control_rate_hz / scenario.power.energy_rate_hz)))
    energy = _Energy(scenario)
    energy.dt = energy_every * dt
    log_every = max(1, int(round(cp.control_rate_hz / scenario.run.log_rate_hz)))
    cruise_log_every = max(energy_every, int(round(cp.control_rate_hz / scenario.run.cruise_log_rate_hz)))

    plant = Plant(vp)
    controller = INDIController(vp, cp)
    network = CommandNetwork(seed=scenario.run.seed)
    wind = WindModel(scenario.wind.mean, scenario.wind.intensity, scenario.wind.length_scale,
                     seed=scenario.run.seed)
    s = resting_state(vp, plan.heading)
    cruise_pitch = trim_level_flight(vp, plan.cruise_airspeed).alpha if plan.cruise_s > 0 else 0.0
    ps = PhaseState(cruise_pitch=cruise_pitch, timeline=[(FlightPhase.GROUND, 0.0)])
    specific = quat_to_matrix(s.attitude).T @ np.array([0.0, 0.0, -vp.gravity])
    failures = list(scenario.failures)
    log = MissionLog()

    u = np.zeros(len(ACTUATOR_NAMES))
    prev_u = None
    max_step = 0.0
    full_scale = controller._upper - controller._lower
    norm_drift = 0.0
    excursions = []  # per transition: [phase, entry altitude, worst deviation]
    unhealthy = np.zeros(len(ACTUATOR_NAMES), dtype=bool)
    power_sum = 0.0
    power_count = 0
    settle_power = [0.0, 0]
    quasi_static_s = 0.0
    lost_since = None
    terminated = None
    snapshots = {}
    k = 0

    def apply_failure(spec: str):
        network.inject(spec)
        if spec.startswith("reverse:"):
            for index in network.topology.reversed_motors:
                plant.direction[index] = -1.0
        if not network.topology.fuel_cell_alive:
            energy.state = replace(energy.state, fuel_cell_on=False)

    def run_energy(mean_power: float):
        nonlocal terminated
        try:
            energy.step(mean_power)
        except DepletionError as exc:
            terminated = ("depletion", str(exc))
        except OverloadError as exc:
            terminated = ("overload", str(exc))

    while k < n_steps and terminated is None:
        t = k * dt
        while failures and failures[0].time <= t + 1e-12:
            apply_failure(failures.pop(0).spec)

        # quasi-static middle of a long cruise
        if plan.fidelity == "hybrid" and ps.phase is FlightPhase.FORWARD:
            since = t - ps.entry_time
            end = min(ps.entry_time + plan.cruise_s - plan.cruise_settle_s, n_steps * dt)
            for f in failures:
                if f.spec not in ENERGY_FAILURES:
                    end = min(end, f.time)
                    break
            if since >= plan.cruise_settle_s and settle_power[1] > 0 and end - t > energy.dt:
                cruise_power = settle_power[0] / settle_power[1]
                # the settled vehicle moves along the track at the reference groundspeed
                air = s.velocity - wind.current
                v = forward_references(ps, PhaseInput(t, s, air, s.altitude), plan)["velocity"]
                t_start = t
                while k + energy_every <= n_steps and (k + energy_every) * dt <= end + 1e-9 and terminated is None:
                    while failures and failures[0].time <= k * dt + 1e-12:
                        apply_failure(failures.pop(0).spec)
                    run_energy(cruise_power)
                    k += energy_every
                    if k % cruise_log_every < energy_every:
                        s = replace(s, position=s.position + v * (k * dt - s.time), time=k * dt)
                        log.rows.append(_row(k * dt, s, ps.phase, u, energy))
                s = replace(s, position=s.position + v * (k * dt - s.time), time=k * dt)
                quasi_static_s += k * dt - t_start
                power_sum, power_count = 0.0, 0
                continue

        rel = s.velocity - wind.current
        air = s.velocity - wind.step(dt, math.sqrt(float(rel @ rel)))
        clearance = ground_clearance(s, vp) if ps.phase is FlightPhase.DROP_DOWN_LANDING else s.altitude
        phase_before = ps.phase
        ps, sp = phase_step(ps, PhaseInput(t, s, air, clearance), plan, vp)
        if ps.phase is not phase_before:
            if ps.phase in (FlightPhase.TRANSITION_TO_FORWARD, FlightPhase.TRANSITION_TO_HOVER):
                excursions.append([ps.phase.value, s.altitude, 0.0])
            if ps.phase is FlightPhase.TRANSITION_TO_HOVER:
                snapshots["end_of_cruise"] = energy.state
            if ps.phase is FlightPhase.DROP_DOWN_LANDING:
                snapshots["before_landing"] = energy.state
        if ps.phase is FlightPhase.SHUTDOWN:
            break
        if excursions and ps.phase.value == excursions[-1][0]:
            excursions[-1][2] = max(excursions[-1][2], abs(s.altitude - excursions[-1][1]))

        u, tel = controller.step(Measurement(s.position, s.velocity, s.attitude, s.rate, specific, air), sp)
        controlled = ps.phase in CONTROLLED_PHASES
        if controlled and prev_u is not None:
            max_step = max(max_step, float(np.max(np.abs(u - prev_u) / full_scale)))
        prev_u = u.copy() if controlled else None
        if controlled and tel.attitude_error > LOSS_OF_CONTROL_ANGLE:
            lost_since = t if lost_since is None else lost_since
            if t - lost_since > LOSS_OF_CONTROL_S:
                terminated = ("loss_of_control", f"attitude error above 90 deg for {LOSS_OF_CONTROL_S:.0f} s")
                break
        else:
            lost_since = None

        network.broadcast(u, t)
        health = network.health()
        unhealthy |= ~health
        controller.set_health(health)
        try:
            s, out = plant.step(s, network.actuator_outputs(t), wind.current, dt)
        except IntegrationFault as exc:
            terminated = ("integration_fault", str(exc))
            break
        specific = out.specific_force_body
        norm_drift = max(norm_drift, abs(math.sqrt(float(s.attitude @ s.attitude)) - 1.0))
        if probe is not None:
            probe(t, ps, s, tel, u)

        power_sum += out.motor_power
        power_count += 1
        if plan.fidelity == "hybrid" and ps.phase is FlightPhase.FORWARD:
            if t - ps.entry_time >= 0.5 * plan.cruise_settle_s:
                settle_power[0] += out.motor_power
                settle_power[1] += 1
        k += 1
        if k % energy_every == 0:
            run_energy(power_sum / power_count)
            power_sum, power_count = 0.0, 0
        if k % log_every == 0:
            log.rows.append(_row(k * dt, s, ps.phase, u, energy))

    end_time = k * dt
    log.phases = [(phase.value, t) for phase, t in ps.timeline]
    log.summary = _summary(scenario, ps, energy, network, controller, unhealthy, terminated, end_time,
                           max_step, norm_drift, excursions, quasi_static_s, snapshots)
    return log


def _summary(scenario, ps, energy, network, controller, unhealthy, terminated, end_time, max_step,
             norm_drift, excursions, quasi_static_s, snapshots) -> dict:
    times = dict((phase, t) for phase, t in reversed(ps.timeline))
    takeoff = times.get(FlightPhase.ANGLED_TAKEOFF)
    shutdown = next((t for phase, t in ps.timeline if phase is FlightPhase.SHUTDOWN), None)
    if takeoff is None:
        flight_time = 0.0
    else:
        flight_time = (shutdown if shutdown is not None else end_time) - takeoff
    st = energy.state
    landing = snapshots.get("before_landing")
    cruise_end = snapshots.get("end_of_cruise")
    g = controller._g
    return {
        "csv_schema": CSV_SCHEMA_VERSION,
        "scenario": scenario.run.name,
        "seed": scenario.run.seed,
        "end_time_s": end_time,
        "flight_time_s": flight_time,
        "landed": shutdown is not None,
        "terminated": None if terminated is None else {"reason": terminated[0], "message": terminated[1],
                                                       "time_s": end_time},
        "final_phase": ps.phase.value,
        "phases": [[phase.value, t] for phase, t in ps.timeline],
        "rejected_transitions": ps.rejected,
        "h2_consumed_g": energy.h2,
        "initial_pressure_bar": energy.initial_pressure,
        "final_pressure_bar": st.cylinder.pressure,
        "final_soc": st.state_of_charge,
        "min_soc": energy.min_soc,
        "soc_before_landing": None if landing is None else landing.state_of_charge,
        "bus_voltage_before_landing": None if landing is None else landing.bus_voltage,
        "soc_end_of_cruise": None if cruise_end is None else cruise_end.state_of_charge,
        "bus_voltage_end_of_cruise": None if cruise_end is None else cruise_end.bus_voltage,
        "fuel_cell_on": st.fuel_cell_on,
        "energy_wh": {"load": energy.load_wh, "fuel_cell": energy.fc_wh, "battery": energy.battery_wh,
                      "battery_charge": energy.charge_wh},
        "peak_fuel_cell_w": energy.peak_fc,
        "quasi_static_cruise_s": quasi_static_s,
        "lost_commands": network.lost_commands,
        "duplicate_frames": network.duplicates,
        "degraded_actuators": [name for name, bad in zip(ACTUATOR_NAMES, unhealthy) if bad],
        "degraded_axes": list(g.degraded_axes) if g is not None else [],
        "allocation_rank": int(np.linalg.matrix_rank(g.effective)) if g is not None else 0,
        "max_command_step": max_step,
        "quaternion_norm_drift": norm_drift,
        "transition_altitude_excursion_m": [[name, dev] for name, _, dev in excursions],
    }


__all__ = ["COLUMNS", "CSV_SCHEMA_VERSION", "ACTUATOR_NAMES", "MissionLog", "endurance_estimate", "run_scenario"]
