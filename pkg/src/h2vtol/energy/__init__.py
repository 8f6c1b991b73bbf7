"""Hydrogen storage, fuel cell, hover batteries and the diode-OR power bus."""

from .battery import BatteryPack, battery_reserve_endurance, ocv, soc_at_voltage
from .catalog import CatalogError, CatalogMetrics, CylinderCatalogEntry, catalog_metrics, load_catalog, parse_catalog
from .fuelcell import FuelCell
from .hydrogen import (
    LHV_WH_PER_G,
    DomainError,
    HydrogenCylinder,
    fuel_flow,
    hydrogen_density,
    hydrogen_mass,
    pressure_from_density,
    pressure_from_mass,
)
from .powerplant import DepletionError, OverloadError, PowerBus, PowerError, PowerPlantState, StepReport, powerplant_step

__all__ = [
    "BatteryPack", "battery_reserve_endurance", "ocv", "soc_at_voltage",
    "CatalogError", "CatalogMetrics", "CylinderCatalogEntry", "catalog_metrics", "load_catalog", "parse_catalog",
    "FuelCell", "LHV_WH_PER_G", "DomainError", "HydrogenCylinder", "fuel_flow", "hydrogen_density",
    "hydrogen_mass", "pressure_from_density", "pressure_from_mass",
    "DepletionError", "OverloadError", "PowerBus", "PowerError", "PowerPlantState", "StepReport", "powerplant_step",
]
