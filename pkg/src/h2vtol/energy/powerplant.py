"""Diode-OR hybrid power bus: fuel cell, hover batteries and hydrogen cylinder.

The fuel cell feeds the motor bus through a diode per motor; the hover packs
sit directly on the bus. Bus voltage is found each step from the scalar
current balance, which is monotone in the bus voltage above the packs'
maximum-power point, so plain bisection is used there.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .battery import BatteryPack
from .fuelcell import FuelCell
from .hydrogen import LHV_WH_PER_G, HydrogenCylinder, hydrogen_density, pressure_from_density


class PowerError(RuntimeError):
    pass


class OverloadError(PowerError):
    """Load exceeds what the fuel cell and batteries can deliver together."""


class DepletionError(PowerError):
    """Hydrogen and batteries are both exhausted."""


@dataclass(frozen=True)
class PowerBus:
    fuel_cell: FuelCell = field(default_factory=FuelCell)
    diode_forward_drop: float = 0.2  # V
    bus_tolerance: float = 1e-6  # V

    @property
    def charge_ceiling(self) -> float:
        return self.fuel_cell.open_circuit_voltage - self.diode_forward_drop


@dataclass(frozen=True)
class PowerPlantState:
    cylinder: HydrogenCylinder
    packs: tuple[BatteryPack, ...] = field(default_factory=lambda: (BatteryPack(),) * 4)
    aux_energy: float = FuelCell().aux_battery_capacity  # Wh
    fuel_cell_on: bool = True
    bus_voltage: float = 24.8
    time: float = 0.0

    @property
    def state_of_charge(self) -> float:
        """Capacity-weighted mean state of charge of the hover packs."""
        cap = sum(p.capacity for p in self.packs)
        return sum(p.state_of_charge * p.capacity for p in self.packs) / cap

    @property
    def has_hydrogen(self) -> bool:
        return self.cylinder.pressure > self.cylinder.min_usable_pressure

    @property
    def battery_energy(self) -> float:
        return sum(p.remaining_energy for p in self.packs)


@dataclass(frozen=True)
class StepReport:
    fc_power: float  # W at the fuel-cell terminals
    battery_power: float  # W delivered by discharging packs
    charge_power: float  # W into charging packs
    h2_consumed: float  # g
    bus_voltage: float  # V
    diode_loss: float  # W
    stack_power: float  # W produced from hydrogen
    aux_power: float  # W drawn from the fuel-cell aux battery


def powerplant_step(state: PowerPlantState, load_power: float, dt: float,
                    bus: PowerBus = PowerBus(), efficiency: float | None = None,
                    ) -> tuple[PowerPlantState, StepReport]:
    """Advance the power plant by ``dt`` seconds under a constant ``load_power``.

    The report satisfies
    ``fc_power + battery_power == load_power + charge_power + diode_loss``.

    ``efficiency`` overrides the fuel-cell efficiency curve when given.
    """
    if load_power < 0:
        raise ValueError("load_power must be >= 0")
    if dt <= 0:
        raise ValueError("dt must be positive")
    fc = bus.fuel_cell
    vd = bus.diode_forward_drop
    fc_live = state.fuel_cell_on and state.has_hydrogen
    aux = state.aux_energy
    aux_available = aux * 3600.0 / dt  # W the aux battery can add over this step
    packs = state.packs
    ocvs = [p.open_circuit_voltage() for p in packs]
    res = [p.internal_resistance for p in packs]
    can_discharge = [p.state_of_charge > 0.0 for p in packs]
    can_charge = [p.state_of_charge < 1.0 for p in packs]

    def pack_currents(v):
        out = []
        for e, r, dis, chg in zip(ocvs, res, can_discharge, can_charge):
            i = (e - v) / r
            if i > 0.0 and not dis or i < 0.0 and not chg:
                i = 0.0
            out.append(i)
        return out

    def fc_current(v):
        return fc.current(v + vd, aux_available) if fc_live else 0.0

    def balance(v):
        return fc_current(v) + sum(pack_currents(v)) - load_power / v

    hi = max([bus.charge_ceiling if fc_live else 0.0] + ocvs)
    # half the open-circuit voltage is where the packs deliver their most power;
    # above it the supply current falls faster than the load current, so the balance is monotone
    lo = 0.5 * max(ocvs)
    f_hi = balance(hi)
    if f_hi > 0.0:
        # only possible with zero load and a full bank above the ceiling
        v = hi
    else:
        if balance(lo) < 0.0:
            if not fc_live and state.battery_energy <= 0.0:
                raise DepletionError(f"no hydrogen and empty batteries at t={state.time:.1f}s")
            raise OverloadError(f"load {load_power:.0f} W exceeds available supply")
        while hi - lo > bus.bus_tolerance:
            mid = 0.5 * (lo + hi)
            if balance(mid) > 0.0:
                lo = mid
            else:
                hi = mid
        v = 0.5 * (lo + hi)

    currents = pack_currents(v)
    for p, i in zip(packs, currents):
        if i > p.max_burst_current:
            raise OverloadError(f"pack current {i:.0f} A above burst rating")
    if not any(can_discharge) and not fc_live and load_power > 0.0:
        raise DepletionError(f"no hydrogen and empty batteries at t={state.time:.1f}s")

    i_fc = fc_current(v)
    fc_power = (v + vd) * i_fc
    diode_loss = vd * i_fc
    battery_power = 0.0 + sum(v * i for i in currents if i > 0.0)
    charge_power = 0.0 - sum(v * i for i in currents if i < 0.0)

    aux_power = max(0.0, fc_power - fc.max_continuous_power) if fc_live else 0.0
    aux_power = min(aux_power, aux_available)
    aux_recharge = 0.0
    if fc_live and aux < fc.aux_battery_capacity and aux_power == 0.0:
        headroom = fc.max_continuous_power - fc_power
        need = (fc.aux_battery_capacity - aux) * 3600.0 / dt
        aux_recharge = max(0.0, min(fc.aux_recharge_power, headroom, need))
    stack_power = fc_power - aux_power + aux_recharge

    h2 = 0.0
    cylinder = state.cylinder
    if stack_power > 0.0:
        eff = efficiency if efficiency is not None else fc.efficiency(stack_power)
        h2 = stack_power * dt / 3600.0 / (LHV_WH_PER_G * eff)
        density = hydrogen_density(cylinder.pressure) - h2 / cylinder.volume
        cylinder = replace(cylinder, pressure=pressure_from_density(density))

    new_state = replace(
        state,
        cylinder=cylinder,
        packs=tuple(p.drain(i, dt) for p, i in zip(packs, currents)),
        aux_energy=aux + (aux_recharge - aux_power) * dt / 3600.0,
        bus_voltage=v,
        time=state.time + dt,
    )
    report = StepReport(fc_power, battery_power, charge_power, h2, v, diode_loss,
                        stack_power, aux_power)
    return new_state, report
