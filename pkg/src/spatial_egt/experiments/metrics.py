"""Scalar summaries of density fields: interfaces, fronts and patterns."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..grid import DensityField


class InterfaceError(ValueError):
    """Profile does not have exactly one transition; ``crossings`` lists the half-level crossings."""

    def __init__(self, crossings):
        self.crossings = list(crossings)
        super().__init__(f"expected one interface, found crossings at {self.crossings}")


def _crossings(x: np.ndarray, p: np.ndarray, level: float) -> np.ndarray:
    """Positions where ``p - level`` changes sign, by linear interpolation."""
    d = p - level
    out = list(x[d == 0.0])
    j = np.flatnonzero(d[:-1] * d[1:] < 0)
    out.extend(x[j] + (x[j + 1] - x[j]) * d[j] / (d[j] - d[j + 1]))
    return np.unique(np.asarray(out, dtype=float))


def interface_metrics(field: DensityField, window=None) -> tuple:
    """``(position, width)`` of the single transition of a 1-D two-strategy field.

    ``position`` is the linearly interpolated crossing of ``p = 1/2``; ``width``
    is the distance between the ``0.1`` and ``0.9`` crossings nearest to it, and
    never less than one grid cell.  ``window = (lo, hi)`` restricts the profile
    first (e.g. to isolate one of the two interfaces of a periodic island).
    """
    if field.grid.ndim != 1 or field.num_strategies != 2:
        raise ValueError("interface metrics need a 1-D two-strategy field")
    x = field.grid.axes()[0]
    p = field.p
    if window is not None:
        keep = (x >= window[0]) & (x <= window[1])
        x, p = x[keep], p[keep]
    half = _crossings(x, p, 0.5)
    if half.size != 1:
        raise InterfaceError(half)
    pos = float(half[0])
    lo = _crossings(x, p, 0.1)
    hi = _crossings(x, p, 0.9)
    if lo.size == 0 or hi.size == 0:
        raise InterfaceError(half)
    a = lo[np.argmin(np.abs(lo - pos))]
    b = hi[np.argmin(np.abs(hi - pos))]
    h = field.grid.spacing[0]
    return pos, float(max(abs(b - a), h))


@dataclass
class FrontFit:
    speed: float
    intercept: float
    residual: float


def front_speed(times, positions) -> FrontFit:
    """Least-squares speed of the interface over the second half of the run."""
    t = np.asarray(times, dtype=float)
    x = np.asarray(positions, dtype=float)
    keep = t >= t[0] + 0.5 * (t[-1] - t[0])
    if keep.sum() < 2:
        raise ValueError("need at least two samples in the second half of the run")
    A = np.stack([t[keep], np.ones(keep.sum())], axis=1)
    coef, *_ = np.linalg.lstsq(A, x[keep], rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - x[keep]) ** 2)))
    return FrontFit(float(coef[0]), float(coef[1]), resid)


def pattern_variance(field: DensityField) -> float:
    """Spatial variance of ``p`` over the evolving nodes."""
    return float(field.p[field.grid.active_mask()].var())


def persists(variances, threshold: float = 0.5) -> bool:
    """Spatial variance stays above ``threshold`` times its running peak after the peak."""
    v = np.asarray(variances, dtype=float)
    peak = int(np.argmax(v))
    return bool(np.all(v[peak:] >= threshold * v[peak]))


def dominant_mode(field: DensityField) -> tuple:
    """Nonnegative harmonic ``(|k1|, ...)`` carrying the most power in ``p - mean``."""
    p = field.p - field.p.mean()
    power = np.abs(np.fft.fftn(p)) ** 2
    power.flat[0] = 0.0
    idx = np.unravel_index(int(np.argmax(power)), power.shape)
    k = [int(i if i <= n // 2 else n - i) for i, n in zip(idx, power.shape)]
    return tuple(k)


def pattern_contrast(field: DensityField) -> float:
    p = field.p[field.grid.active_mask()]
    return float(p.max() - p.min())
