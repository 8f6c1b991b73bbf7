"""Pressure-cylinder catalog: file parsing and per-cylinder storage metrics.

Catalog files hold one cylinder per line::

    maker volume_L pressure_bar weight_kg [diameter_mm length_mm]

Makers containing spaces are quoted. ``#`` starts a comment.
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .hydrogen import LHV_WH_PER_G, hydrogen_density


class CatalogError(ValueError):
    def __init__(self, message: str, row: int | None = None):
        super().__init__(f"row {row}: {message}" if row is not None else message)
        self.row = row


@dataclass(frozen=True)
class CylinderCatalogEntry:
    maker: str
    volume: float  # L
    rated_pressure: float  # bar
    dry_weight: float  # kg
    diameter: float | None = None  # mm
    length: float | None = None  # mm

    def __post_init__(self):
        if self.volume <= 0:
            raise CatalogError(f"{self.maker}: volume must be positive")
        if self.dry_weight <= 0:
            raise CatalogError(f"{self.maker}: dry weight must be positive")


@dataclass(frozen=True)
class CatalogMetrics:
    h2_mass: float  # g
    energy: float  # Wh
    specific_energy: float  # Wh/kg
    weight_fraction: float  # percent


def catalog_metrics(entry: CylinderCatalogEntry) -> CatalogMetrics:
    h2 = hydrogen_density(entry.rated_pressure) * entry.volume
    energy = h2 * LHV_WH_PER_G
    return CatalogMetrics(
        h2_mass=h2,
        energy=energy,
        specific_energy=energy / entry.dry_weight,
        weight_fraction=100.0 * h2 / (entry.dry_weight * 1000.0),
    )


def parse_catalog(text: str) -> list[CylinderCatalogEntry]:
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            fields = shlex.split(line)
        except ValueError as exc:
            raise CatalogError(str(exc), lineno) from None
        if len(fields) not in (4, 6):
            raise CatalogError(f"expected 4 or 6 fields, got {len(fields)}", lineno)
        try:
            numbers = [float(f) for f in fields[1:]]
        except ValueError:
            raise CatalogError(f"non-numeric field in {line!r}", lineno) from None
        try:
            entries.append(CylinderCatalogEntry(fields[0], *numbers))
        except CatalogError as exc:
            raise CatalogError(str(exc), lineno) from None
    return entries


def load_catalog(path: str | Path | None = None) -> list[CylinderCatalogEntry]:
    """Load a catalog file; with no path, the shipped cylinder table."""
    if path is None:
        text = resources.files("h2vtol.data").joinpath("cylinders.txt").read_text()
    else:
        text = Path(path).read_text()
    return parse_catalog(text)
