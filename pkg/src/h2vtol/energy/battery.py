"""6S lithium-polymer hover battery packs."""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..util import interp1

# Open-circuit voltage against state of charge. The knee puts 95 % charge at
# 24.65 V so that a 24.8 V charge ceiling leaves the pack at least 95 % full.
OCV_SOC = (0.0, 0.2, 0.95, 1.0)
OCV_VOLTS = (19.8, 22.2, 24.65, 25.2)


@dataclass(frozen=True)
class BatteryPack:
    cell_count: int = 6
    capacity: float = 4.5  # Ah
    nominal_voltage: float = 22.2  # V
    mass: float = 0.64  # kg
    max_continuous_current: float = 90.0  # A
    max_burst_current: float = 180.0  # A
    internal_resistance: float = 0.02  # ohm
    state_of_charge: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.state_of_charge <= 1.0:
            raise ValueError(f"state_of_charge {self.state_of_charge} outside [0, 1]")

    @property
    def energy(self) -> float:
        """Rated energy, Wh."""
        return self.capacity * self.nominal_voltage

    @property
    def remaining_energy(self) -> float:
        return self.state_of_charge * self.energy

    def open_circuit_voltage(self) -> float:
        return ocv(self.state_of_charge)

    def terminal_voltage(self, current: float) -> float:
        """Terminal voltage at ``current`` A, positive for discharge."""
        return self.open_circuit_voltage() - current * self.internal_resistance

    def current_at(self, bus_voltage: float) -> float:
        """Current the pack pushes into a bus held at ``bus_voltage``."""
        i = (self.open_circuit_voltage() - bus_voltage) / self.internal_resistance
        if self.state_of_charge <= 0.0:
            i = min(i, 0.0)
        elif self.state_of_charge >= 1.0:
            i = max(i, 0.0)
        return i

    def drain(self, current: float, dt: float) -> BatteryPack:
        soc = self.state_of_charge - current * dt / 3600.0 / self.capacity
        return replace(self, state_of_charge=min(1.0, max(0.0, soc)))


def ocv(soc: float) -> float:
    return interp1(soc, OCV_SOC, OCV_VOLTS)


def soc_at_voltage(voltage: float) -> float:
    return interp1(voltage, OCV_VOLTS, OCV_SOC)


def battery_reserve_endurance(packs, cruise_power: float) -> float:
    """Minutes the packs alone can sustain ``cruise_power`` W."""
    if cruise_power <= 0:
        raise ValueError("cruise_power must be positive")
    return sum(p.remaining_energy for p in packs) / cruise_power * 60.0
