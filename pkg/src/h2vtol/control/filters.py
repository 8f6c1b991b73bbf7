"""Discrete second-order Butterworth low-pass filter (bilinear transform, prewarped)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class FilterConfigError(ValueError):
    pass


def butterworth2_coefficients(cutoff: float, rate: float) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(b, a)`` with ``a[0] == 1`` for a 2nd-order low-pass at ``cutoff`` Hz."""
    if not 0.0 < cutoff < 0.5 * rate:
        raise FilterConfigError(f"cutoff {cutoff} Hz must lie in (0, {0.5 * rate}) for rate {rate} Hz")
    ohm = math.tan(math.pi * cutoff / rate)
    c = 1.0 + math.sqrt(2.0) * ohm + ohm * ohm
    b0 = ohm * ohm / c
    b = np.array([b0, 2.0 * b0, b0])
    a = np.array([1.0, 2.0 * (ohm * ohm - 1.0) / c, (1.0 - math.sqrt(2.0) * ohm + ohm * ohm) / c])
    return b, a


def analytic_magnitude(freq, cutoff: float, rate: float):
    """Magnitude of the digital filter at ``freq`` Hz.

    Prewarping maps the analog prototype ``1/sqrt(1 + (w/wc)^4)`` onto the unit
    circle through ``tan(pi f / fs)``.
    """
    ratio = np.tan(np.pi * np.asarray(freq) / rate) / math.tan(math.pi * cutoff / rate)
    return 1.0 / np.sqrt(1.0 + ratio ** 4)


@dataclass
class FilterState:
    """Direct-form-II delay line; one column per channel."""
    d1: np.ndarray = field(default_factory=lambda: np.zeros(1))
    d2: np.ndarray = field(default_factory=lambda: np.zeros(1))
    initialized: bool = False


def butterworth2_step(state: FilterState, sample, cutoff: float, rate: float):
    """Filter one sample; returns ``(output, new_state)``. The first sample primes the delays."""
    b, a = butterworth2_coefficients(cutoff, rate)
    x = np.asarray(sample, dtype=float)
    if not state.initialized:
        d = x / (1.0 + a[1] + a[2])
        state = FilterState(d.copy(), d.copy(), True)
    d0 = x - a[1] * state.d1 - a[2] * state.d2
    y = b[0] * d0 + b[1] * state.d1 + b[2] * state.d2
    new = FilterState(d0, state.d1.copy(), True)
    return (float(y) if y.ndim == 0 else y), new


class LowPass2:
    """Multi-channel filter with fixed coefficients, for use inside a control loop."""

    def __init__(self, cutoff, rate: float, channels: int):
        cut = np.broadcast_to(np.asarray(cutoff, dtype=float), (channels,))
        coeffs = [butterworth2_coefficients(float(c), rate) for c in cut]
        self.b = np.array([c[0] for c in coeffs]).T
        self.a = np.array([c[1] for c in coeffs]).T
        self.d1 = np.zeros(channels)
        self.d2 = np.zeros(channels)
        self.primed = False

    def reset(self, value):
        d = np.asarray(value, dtype=float) / (1.0 + self.a[1] + self.a[2])
        self.d1 = d.copy()
        self.d2 = d.copy()
        self.primed = True

    def __call__(self, sample) -> np.ndarray:
        if not self.primed:
            self.reset(sample)
        d0 = sample - self.a[1] * self.d1 - self.a[2] * self.d2
        y = self.b[0] * d0 + self.b[1] * self.d1 + self.b[2] * self.d2
        self.d2 = self.d1
        self.d1 = d0
        return y
