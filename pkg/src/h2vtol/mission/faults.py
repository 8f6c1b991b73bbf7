"""Fault campaigns: rerun a short base mission once per injected failure."""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from ..airframe import VehicleConfig, load_vehicle_config
from ..bus import BUSES, NODES
from .runner import run_scenario
from .scenario import Scenario, ScheduledFailure

FAULT_TIME_S = 5.0  # injected in the first hover, before both transitions
ALTITUDE_MARGIN_M = 3.0


@dataclass(frozen=True)
class FaultCase:
    kind: str  # "link", "connector", "node" or "dual"
    spec: tuple[str, ...]

    @property
    def label(self) -> str:
        return "+".join(self.spec)


@dataclass(frozen=True)
class FaultResult:
    case: FaultCase
    maintained: bool
    lost_commands: int
    degraded_actuators: tuple[str, ...]
    allocation_rank: int
    terminated: str | None
    final_altitude_m: float


def fault_cases(kinds=("link", "connector", "node")) -> list[FaultCase]:
    """Every single link cut, single connector cut and single node kill, in a fixed order.

    ``dual`` adds the cut of both buses' wires into one node.
    """
    cases = []
    if "link" in kinds:
        cases += [FaultCase("link", (f"cut:{b}:{n}",)) for b in BUSES for n in NODES]
    if "connector" in kinds:
        cases += [FaultCase("connector", (f"unplug:{b}:{n}",)) for b in BUSES for n in NODES]
    if "node" in kinds:
        cases += [FaultCase("node", (f"kill:{'fuelcell' if n == 'fc' else n}",)) for n in NODES]
    if "dual" in kinds:
        cases += [FaultCase("dual", (f"unplug:A:{n}", f"unplug:B:{n}")) for n in NODES[1:]]
    return cases


def _phase_names(summary: dict) -> list[str]:
    return [name for name, _ in summary["phases"]]


def run_fault_case(base: Scenario, case: FaultCase, reference_phases: list[str] | None = None,
                   vehicle: VehicleConfig | None = None) -> FaultResult:
    """Fly ``base`` with ``case`` injected; the mission is maintained when the run is not
    terminated, flies the same phase sequence as the fault-free run and ends near the hover altitude."""
    failures = base.failures + tuple(ScheduledFailure(FAULT_TIME_S, spec) for spec in case.spec)
    scenario = dataclasses.replace(base, failures=tuple(sorted(failures, key=lambda f: f.time)))
    log = run_scenario(scenario, vehicle)
    s = log.summary
    altitude = -log.rows[-1][3] if log.rows else 0.0
    maintained = (s["terminated"] is None
                  and (reference_phases is None or _phase_names(s) == reference_phases)
                  and (s["landed"] or abs(altitude - base.plan.hover_altitude_m) < ALTITUDE_MARGIN_M))
    return FaultResult(case, maintained, s["lost_commands"], tuple(s["degraded_actuators"]),
                       s["allocation_rank"], None if s["terminated"] is None else s["terminated"]["reason"],
                       altitude)


def _worker(args):
    return run_fault_case(*args)


def run_campaign(base: Scenario, cases: list[FaultCase], workers: int = 1,
                 vehicle: VehicleConfig | None = None) -> list[FaultResult]:
    """Run every case; results come back in ``cases`` order whatever the worker count."""
    vehicle = vehicle or load_vehicle_config(base.run.vehicle or None)
    reference = _phase_names(run_scenario(base, vehicle).summary)
    jobs = [(base, case, reference, vehicle) for case in cases]
    if workers <= 1:
        return [run_fault_case(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_worker, jobs))
