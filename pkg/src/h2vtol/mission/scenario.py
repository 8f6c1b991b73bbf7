"""Scenario files: wind, cylinder, power, mission plan and a failure schedule.

Grammar::

    [scenario]          name, seed, duration_s, log_rate_hz, cruise_log_rate_hz, vehicle
    [wind]              mean = n, e, d   intensity   length_scale
    [cylinder]          volume_l   pressure_bar   min_usable_bar   rated_bar
    [power]             initial_soc   payload_w   overhead_w   energy_rate_hz   efficiency
    [plan]              any MissionPlan field
    [failures]          one "<time_s> <spec>" per line, e.g. "100 kill:node7"

``#`` starts a comment. Every section is optional except that the file must not be empty.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..bus import BusTopology, inject_failure
from ..config import ConfigError, apply_entries, apply_values, parse_key_values, parse_sections
from .phases import MissionPlan


@dataclass(frozen=True)
class RunSettings:
    name: str = "scenario"
    seed: int = 0
    duration_s: float = 60.0
    log_rate_hz: float = 100.0
    cruise_log_rate_hz: float = 1.0  # used while the quasi-static cruise is running
    vehicle: str = ""  # vehicle file, empty for the shipped reference

    def __post_init__(self):
        if self.duration_s < 0:
            raise ValueError("duration_s must be >= 0")
        if self.log_rate_hz <= 0 or self.cruise_log_rate_hz <= 0:
            raise ValueError("log rates must be positive")


@dataclass(frozen=True)
class WindSettings:
    mean: tuple[float, float, float] = (0.0, 0.0, 0.0)  # m/s, north east down
    intensity: float = 0.0  # m/s
    length_scale: float = 50.0  # m

    def __post_init__(self):
        if len(self.mean) != 3 or not all(math.isfinite(v) for v in self.mean):
            raise ValueError("wind mean needs three finite components")
        if self.intensity < 0 or self.length_scale <= 0:
            raise ValueError("intensity must be >= 0 and length_scale > 0")


@dataclass(frozen=True)
class CylinderSettings:
    volume_l: float = 6.8
    pressure_bar: float = 285.0
    min_usable_bar: float = 5.0
    rated_bar: float = 300.0


@dataclass(frozen=True)
class PowerSettings:
    initial_soc: float = 1.0
    payload_w: float = 60.0
    overhead_w: float = 40.0  # avionics and fuel-cell auxiliaries
    energy_rate_hz: float = 10.0
    efficiency: float = 0.0  # fixed LHV efficiency, 0 uses the fuel-cell curve

    def __post_init__(self):
        if not 0.0 <= self.initial_soc <= 1.0:
            raise ValueError("initial_soc must lie in [0, 1]")
        if self.energy_rate_hz <= 0:
            raise ValueError("energy_rate_hz must be positive")
        if self.payload_w < 0 or self.overhead_w < 0:
            raise ValueError("payload_w and overhead_w must be >= 0")


@dataclass(frozen=True)
class ScheduledFailure:
    time: float
    spec: str


@dataclass(frozen=True)
class Scenario:
    run: RunSettings = field(default_factory=RunSettings)
    wind: WindSettings = field(default_factory=WindSettings)
    cylinder: CylinderSettings = field(default_factory=CylinderSettings)
    power: PowerSettings = field(default_factory=PowerSettings)
    plan: MissionPlan = field(default_factory=MissionPlan)
    failures: tuple[ScheduledFailure, ...] = ()


# file section name -> Scenario attribute
SECTIONS = {"scenario": "run", "wind": "wind", "cylinder": "cylinder", "power": "power", "plan": "plan"}


def _parse_failures(lines: list[tuple[int, str]]) -> tuple[ScheduledFailure, ...]:
    out = []
    for lineno, raw in lines:
        text = raw.strip()
        parts = text.split()
        col = len(raw) - len(raw.lstrip()) + 1
        if len(parts) != 2:
            raise ConfigError("expected '<time_s> <failure spec>'", lineno, col)
        try:
            t = float(parts[0])
        except ValueError:
            raise ConfigError(f"bad failure time {parts[0]!r}", lineno, col) from None
        if not math.isfinite(t) or t < 0:
            raise ConfigError("failure time must be finite and >= 0", lineno, col)
        try:
            inject_failure(BusTopology(), parts[1])
        except ConfigError as exc:
            raise ConfigError(str(exc), lineno, raw.index(parts[1]) + 1) from None
        out.append(ScheduledFailure(t, parts[1]))
    return tuple(sorted(out, key=lambda f: f.time))


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text; errors carry the line and column of the offending entry."""
    sections = parse_sections(text)
    if not any(s.lines for s in sections.values()) and len(sections) == 1:
        raise ConfigError("empty scenario", 1, 1)
    loose = sections.pop("").lines
    if loose:
        raise ConfigError("entry outside a section", loose[0][0], 1)
    scenario = Scenario()
    changes = {}
    for name, section in sections.items():
        if name == "failures":
            changes["failures"] = _parse_failures(section.lines)
            continue
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{name}]", section.header_line, 1)
        parsed = parse_key_values(section.lines)
        attr = SECTIONS[name]
        try:
            changes[attr] = apply_entries(getattr(scenario, attr), parsed)
        except ConfigError:
            raise
        except ValueError as exc:
            # point at the key the validation names, else at the section header
            named = [e for k, e in parsed.items() if k in str(exc)] or [None]
            line, col = (named[0].line, named[0].column) if named[0] else (section.header_line, 1)
            raise ConfigError(f"[{name}] {exc}", line, col) from None
    return dataclasses.replace(scenario, **changes)


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(Path(path).read_text())


def apply_scenario_overrides(scenario: Scenario, overrides: dict[str, dict[str, object]]) -> Scenario:
    """Apply ``{section: {key: value}}`` overrides for the scenario sections; other sections are ignored."""
    for section, values in overrides.items():
        if section not in SECTIONS:
            continue
        attr = SECTIONS[section]
        try:
            updated = apply_values(getattr(scenario, attr), values)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"override {section}: {exc}") from None
        scenario = dataclasses.replace(scenario, **{attr: updated})
    return scenario


def reference_scenario_path(name: str) -> Path:
    """Path of a shipped scenario: endurance, reverse_prop, transition, faults or fuelcell_kill."""
    path = Path(__file__).resolve().parent.parent / "data" / "scenarios" / f"{name}.scn"
    if not path.exists():
        raise FileNotFoundError(path)
    return path
