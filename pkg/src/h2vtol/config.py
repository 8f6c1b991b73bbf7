"""Flat ``key = value`` parameter files and dotted overrides."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


def parse_value(text: str):
    """Parse a scalar or comma-separated list of numbers; fall back to the raw string."""
    parts = [p.strip() for p in text.split(",")]
    try:
        values = [float(p) for p in parts]
    except ValueError:
        if len(parts) > 1:
            raise
        low = text.strip().lower()
        if low in ("true", "yes", "on"):
            return True
        if low in ("false", "no", "off"):
            return False
        return text.strip()
    return tuple(values) if len(values) > 1 else values[0]


@dataclass
class Section:
    header_line: int  # 0 for the lines before the first header
    lines: list[tuple[int, str]]


def parse_sections(text: str) -> dict[str, Section]:
    """Split a ``[section]`` file into sections of numbered lines.

    Comments and blank lines are dropped. Lines before the first header go to section ``""``.
    """
    out: dict[str, Section] = {"": Section(0, [])}
    current = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]") or len(stripped) < 3:
                raise ConfigError("malformed section header", lineno, raw.index("[") + 1)
            current = stripped[1:-1].strip()
            if current in out:
                raise ConfigError(f"duplicate section [{current}]", lineno, raw.index("[") + 1)
            out[current] = Section(lineno, [])
            continue
        out[current].lines.append((lineno, line))
    return out


class Entry(NamedTuple):
    value: object
    line: int
    column: int  # where the key starts


def parse_key_values(text: str | list[tuple[int, str]]) -> dict[str, Entry]:
    """Parse ``key = value`` lines into ``{key: Entry(value, line, column)}``.

    Accepts raw text or the numbered lines of one section from :func:`parse_sections`.
    """
    out = {}
    numbered = enumerate(text.splitlines(), start=1) if isinstance(text, str) else text
    for lineno, raw in numbered:
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno, len(raw) - len(raw.lstrip()) + 1)
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError("empty key", lineno, 1)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", lineno, raw.index(key) + 1)
        try:
            out[key] = Entry(parse_value(value), lineno, raw.index(key) + 1)
        except ValueError:
            raise ConfigError(f"bad value for {key!r}: {value.strip()!r}", lineno, line.index("=") + 2) from None
    return out


def coerce(field_type, value, key: str):
    """Convert a parsed value to the annotated type of a dataclass field."""
    kind = str(field_type)
    if kind.startswith("tuple"):
        if not isinstance(value, tuple):
            value = (value,)
        return tuple(float(v) for v in value)
    if kind == "int":
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise ValueError(f"{key} expects an integer")
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, float):
            raise ValueError(f"{key} expects a number")
        return value
    if kind == "str":
        return value if isinstance(value, str) else f"{value:g}" if isinstance(value, float) else str(value)
    if kind == "bool":
        if not isinstance(value, bool):
            raise ValueError(f"{key} expects true/false")
        return value
    return value


def apply_values(obj, values: dict[str, object], *, where: dict[str, tuple[int, int]] | None = None):
    """Return a copy of dataclass ``obj`` with ``values`` applied; unknown keys raise.

    ``where`` maps keys to their (line, column) for error messages.
    """
    fields = {f.name: f for f in dataclasses.fields(obj)}
    changes = {}
    for key, value in values.items():
        line, column = where.get(key, (None, None)) if where else (None, None)
        if key not in fields:
            raise ConfigError(f"unknown key {key!r}", line, column)
        try:
            changes[key] = coerce(fields[key].type, value, key)
        except ValueError as exc:
            raise ConfigError(str(exc), line, column) from None
    return dataclasses.replace(obj, **changes)


def apply_entries(obj, parsed: dict[str, Entry]):
    """:func:`apply_values` for the output of :func:`parse_key_values`."""
    return apply_values(obj, {k: e.value for k, e in parsed.items()},
                        where={k: (e.line, e.column) for k, e in parsed.items()})


def load_dataclass(cls, path: str | Path | None, extra: dict[str, object] | None = None):
    """Build ``cls`` from defaults, then a parameter file, then ``extra`` overrides."""
    obj = cls()
    if path is not None:
        obj = apply_entries(obj, parse_key_values(Path(path).read_text()))
    if extra:
        obj = apply_values(obj, extra)
    return obj


def split_overrides(pairs: list[str]) -> dict[str, dict[str, object]]:
    """Group ``section.key=value`` strings by section."""
    out: dict[str, dict[str, object]] = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or "." not in key:
            raise ConfigError(f"override {pair!r} must look like section.key=value")
        section, _, name = key.strip().partition(".")
        try:
            out.setdefault(section, {})[name] = parse_value(value)
        except ValueError:
            raise ConfigError(f"bad value in override {pair!r}") from None
    return out
