"""Vehicle files: plant and controller parameters in one ``[plant]`` / ``[control]`` file."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .config import ConfigError, apply_entries, apply_values, parse_key_values, parse_sections
from .control.controller import ControlParams
from .plant.params import VehicleParams, reference_vehicle_path

SECTIONS = ("plant", "control")


@dataclass(frozen=True)
class VehicleConfig:
    plant: VehicleParams = field(default_factory=VehicleParams)
    control: ControlParams = field(default_factory=ControlParams)


def parse_vehicle_config(text: str) -> VehicleConfig:
    sections = parse_sections(text)
    loose = sections.pop("").lines
    if loose:
        raise ConfigError("key outside a section", loose[0][0], 1)
    config = VehicleConfig()
    parts = {}
    for name, section in sections.items():
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{name}]", section.header_line, 1)
        parsed = parse_key_values(section.lines)
        try:
            parts[name] = apply_entries(getattr(config, name), parsed)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            named = [e for k, e in parsed.items() if k in str(exc)] or [None]
            line, col = (named[0].line, named[0].column) if named[0] else (section.header_line, 1)
            raise ConfigError(f"[{name}] {exc}", line, col) from None
    return VehicleConfig(**{**config.__dict__, **parts})


def load_vehicle_config(path: str | Path | None = None,
                        overrides: dict[str, dict[str, object]] | None = None) -> VehicleConfig:
    """Load a vehicle file (the shipped reference when ``path`` is None), then apply
    ``{section: {key: value}}`` overrides."""
    config = parse_vehicle_config(Path(path or reference_vehicle_path()).read_text())
    for section, values in (overrides or {}).items():
        if section not in SECTIONS:
            raise ConfigError(f"unknown override section {section!r}")
        try:
            updated = apply_values(getattr(config, section), values)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        config = VehicleConfig(**{**config.__dict__, section: updated})
    return config
