"""Compressed hydrogen storage: density fit, stored mass and fuel flow."""

from __future__ import annotations

from dataclasses import dataclass

LHV_WH_PER_G = 33.3
MAX_FIT_PRESSURE_BAR = 500.0

# Room-temperature density fit, g/L against bar. The constant term gives a
# nonzero density at 0 bar; it is kept as-is because the fit reproduces the
# published cylinder table.
_DENSITY_COEFFS = (-0.00002757, 0.074969, 0.6187)


class DomainError(ValueError):
    """Argument outside the range where a model is defined."""


def hydrogen_density(pressure: float, temperature_c: float | None = None) -> float:
    """Hydrogen gas density in g/L at ``pressure`` bar.

    ``temperature_c`` is accepted for forward compatibility and ignored; the
    fit is only valid at room temperature.
    """
    if not 0.0 <= pressure <= MAX_FIT_PRESSURE_BAR:
        raise DomainError(f"pressure {pressure!r} bar outside [0, {MAX_FIT_PRESSURE_BAR}]")
    a, b, c = _DENSITY_COEFFS
    return (a * pressure + b) * pressure + c


def pressure_from_density(density: float, tol: float = 1e-9) -> float:
    """Invert :func:`hydrogen_density` by bisection on [0, 500] bar.

    The quadratic's second root lies far above the fitted range, so a bracketed
    search is used instead of the closed form.
    """
    lo, hi = 0.0, MAX_FIT_PRESSURE_BAR
    if density <= hydrogen_density(lo):
        return 0.0
    if density >= hydrogen_density(hi):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if hydrogen_density(mid) < density:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fuel_flow(mean_power: float, efficiency: float) -> float:
    """Hydrogen consumption in g/h for a fuel cell delivering ``mean_power`` W."""
    if mean_power < 0:
        raise DomainError("mean_power must be >= 0")
    if not 0.0 < efficiency < 1.0:
        raise DomainError(f"efficiency {efficiency!r} outside (0, 1)")
    return mean_power / (LHV_WH_PER_G * efficiency)


@dataclass(frozen=True)
class HydrogenCylinder:
    volume: float  # L
    pressure: float  # bar
    min_usable_pressure: float = 0.0  # bar
    rated_pressure: float = 300.0  # bar

    def __post_init__(self):
        if self.volume <= 0:
            raise DomainError("cylinder volume must be positive")
        if not 0.0 <= self.pressure <= self.rated_pressure:
            raise DomainError(
                f"pressure {self.pressure} bar outside [0, {self.rated_pressure}] rated range"
            )

    @property
    def mass(self) -> float:
        return hydrogen_mass(self)

    @property
    def usable_mass(self) -> float:
        floor = min(self.min_usable_pressure, self.pressure)
        return (hydrogen_density(self.pressure) - hydrogen_density(floor)) * self.volume

    def with_mass(self, grams: float) -> HydrogenCylinder:
        """Return the same cylinder holding ``grams`` of hydrogen."""
        p = pressure_from_density(max(grams, 0.0) / self.volume)
        return HydrogenCylinder(self.volume, min(p, self.rated_pressure),
                                self.min_usable_pressure, self.rated_pressure)


def hydrogen_mass(cylinder: HydrogenCylinder) -> float:
    """Stored hydrogen in grams."""
    return hydrogen_density(cylinder.pressure) * cylinder.volume


def pressure_from_mass(grams: float, volume: float) -> float:
    return pressure_from_density(grams / volume)
