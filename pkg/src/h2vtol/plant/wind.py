"""Mean wind plus first-order colored turbulence."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class WindModel:
    mean: tuple[float, float, float] = (0.0, 0.0, 0.0)  # m/s, world NED, air velocity
    intensity: float = 0.0  # m/s standard deviation per axis
    length_scale: float = 50.0  # m
    seed: int = 0
    _gust: np.ndarray = field(init=False, repr=False)
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self._rng = np.random.default_rng(self.seed)
        self._gust = np.zeros(3)
        self._mean = np.asarray(self.mean, dtype=float)

    def step(self, dt: float, airspeed: float | None = None) -> np.ndarray:
        """Advance the gust state by ``dt`` and return the current wind vector."""
        if self.intensity > 0.0:
            speed = max(airspeed if airspeed is not None else np.linalg.norm(self._mean), 1.0)
            a = math.exp(-dt * speed / self.length_scale)
            self._gust = a * self._gust + self.intensity * math.sqrt(1.0 - a * a) * self._rng.standard_normal(3)
        return self._mean + self._gust

    @property
    def current(self) -> np.ndarray:
        return self._mean + self._gust
