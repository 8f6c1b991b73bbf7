"""Small numeric helpers shared across subpackages."""

from __future__ import annotations

from bisect import bisect_right


def interp1(x: float, xs, ys) -> float:
    """Piecewise-linear interpolation with flat extension, like ``np.interp``
    but without the array overhead for scalar calls in tight loops."""
    if x <= xs[0]:
        return float(ys[0])
    if x >= xs[-1]:
        return float(ys[-1])
    k = bisect_right(xs, x)
    x0, x1 = xs[k - 1], xs[k]
    y0, y1 = ys[k - 1], ys[k]
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


def smoothstep(x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    return x * x * (3.0 - 2.0 * x)


def clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x
