"""Air-cooled PEM fuel-cell system with its small auxiliary peak battery."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..util import interp1


@dataclass(frozen=True)
class FuelCell:
    max_continuous_power: float = 800.0  # W
    peak_power_with_aux: float = 1400.0  # W
    open_circuit_voltage: float = 25.0  # V, regulated no-load output
    min_voltage: float = 19.6  # V
    internal_resistance: float = 0.002  # ohm, droop below the power limit
    # (power W, LHV efficiency); flat beyond the end points
    efficiency_curve: tuple[tuple[float, float], ...] = ((600.0, 0.53), (700.0, 0.56), (800.0, 0.53))
    aux_battery_capacity: float = 1.8 * 22.2  # Wh
    aux_recharge_power: float = 50.0  # W
    # output voltage below which the aux battery starts to assist
    aux_assist_voltage: float = 21.0  # V

    def efficiency(self, power: float) -> float:
        pts = self.efficiency_curve
        return interp1(power, [p for p, _ in pts], [e for _, e in pts])

    def power_limit(self, voltage: float, aux_power: float = math.inf) -> float:
        """Maximum terminal power at output ``voltage``; ``aux_power`` (W) caps what the aux
        battery can add, for instance its remaining charge spread over one step."""
        if aux_power <= 0.0 or voltage >= self.aux_assist_voltage:
            return self.max_continuous_power
        span = self.aux_assist_voltage - self.min_voltage
        frac = min(1.0, (self.aux_assist_voltage - voltage) / span)
        assist = frac * (self.peak_power_with_aux - self.max_continuous_power)
        return self.max_continuous_power + min(assist, aux_power)

    def current(self, voltage: float, aux_power: float = math.inf) -> float:
        """Output current when the terminals sit at ``voltage``.

        Below the power limit the output is a stiff source with a small
        resistive droop; above it the cell follows a constant-power curve.
        """
        if voltage >= self.open_circuit_voltage:
            return 0.0
        regulated = (self.open_circuit_voltage - voltage) / self.internal_resistance
        limited = self.power_limit(voltage, aux_power) / max(voltage, 1e-3)
        return min(regulated, limited)
