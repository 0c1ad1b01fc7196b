"""Bit error rate and point-spread-function metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..errors import DimensionError
from ..signals import Constellation


class ExtentTooSmallError(ValueError):
    """The PSF main lobe is clipped by the reconstruction grid."""


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    trials: int
    bits_total: int
    bit_errors: int

    def __post_init__(self):
        if self.bits_total <= 0:
            raise ValueError("bits_total must be positive")

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_total


def bit_errors(detected, truth, constellation: Constellation) -> Tuple[int, int]:
    """Return ``(bit_errors, bits_total)`` under the constellation's bit labels."""
    detected = np.asarray(detected)
    truth = np.asarray(truth)
    if detected.shape != truth.shape:
        raise DimensionError(f"shape mismatch: {detected.shape} vs {truth.shape}")
    labels = np.array(constellation.bits, dtype=np.int8)
    a = labels[constellation.indices(detected)]
    b = labels[constellation.indices(truth)]
    return int(np.count_nonzero(a != b)), int(a.size)


def ber(detected, truth, constellation: Constellation) -> float:
    errors, total = bit_errors(detected, truth, constellation)
    if total == 0:
        raise ValueError("no bits to compare")
    return errors / total


def snr_at_ber(points: Sequence[BerPoint], target: float = 1e-2) -> float:
    """SNR where the BER curve first drops to ``target``.

    Interpolates ``log10(BER)`` linearly in SNR between the bracketing
    points. Returns NaN when the curve never crosses the target. Points with
    zero errors are treated as lying one decade below the resolvable floor
    ``1 / bits``.
    """
    pts = sorted((p for p in points if math.isfinite(p.snr_db)), key=lambda p: p.snr_db)
    logt = math.log10(target)

    def lg(p):
        return math.log10(p.ber) if p.bit_errors else math.log10(0.1 / p.bits_total)

    for lo, hi in zip(pts, pts[1:]):
        a, b = lg(lo), lg(hi)
        if a >= logt >= b and a != b:
            return lo.snr_db + (a - logt) / (a - b) * (hi.snr_db - lo.snr_db)
    if pts and lg(pts[0]) == logt:
        return pts[0].snr_db
    return math.nan


@dataclass(frozen=True)
class PsfGrid:
    """``|f|`` over the reconstruction grid; axis 0 is x (range), axis 1 is y."""

    grid: np.ndarray
    x_axis: np.ndarray
    y_axis: np.ndarray
    mainlobe_3db: Tuple[float, float]
    label: str = ""

    @property
    def extent(self) -> Tuple[float, float]:
        return (float(self.x_axis[-1] - self.x_axis[0]), float(self.y_axis[-1] - self.y_axis[0]))

    @property
    def resolution(self) -> Tuple[float, float]:
        return (float(self.x_axis[1] - self.x_axis[0]), float(self.y_axis[1] - self.y_axis[0]))

    @property
    def peak_index(self) -> Tuple[int, int]:
        return tuple(int(i) for i in np.unravel_index(np.argmax(self.grid), self.grid.shape))


def half_power_width(cut: np.ndarray, axis: np.ndarray, peak: Optional[int] = None) -> float:
    """Width of the main lobe at ``1/sqrt(2)`` of the peak magnitude.

    The two crossings are located by linear interpolation between
    neighbouring samples on each side of the peak.
    """
    cut = np.asarray(cut, dtype=float)
    axis = np.asarray(axis, dtype=float)
    p = int(np.argmax(cut)) if peak is None else peak
    if p == 0 or p == cut.size - 1:
        raise ExtentTooSmallError("peak lies on the grid boundary")
    level = cut[p] / math.sqrt(2.0)
    lo = p
    while lo > 0 and cut[lo] >= level:
        lo -= 1
    hi = p
    while hi < cut.size - 1 and cut[hi] >= level:
        hi += 1
    if cut[lo] >= level or cut[hi] >= level:
        raise ExtentTooSmallError("half-power crossing lies outside the grid")
    x_lo = axis[lo] + (level - cut[lo]) / (cut[lo + 1] - cut[lo]) * (axis[lo + 1] - axis[lo])
    x_hi = axis[hi - 1] + (level - cut[hi - 1]) / (cut[hi] - cut[hi - 1]) * (axis[hi] - axis[hi - 1])
    return float(x_hi - x_lo)


def mainlobe_widths(grid: np.ndarray, x_axis, y_axis) -> Tuple[float, float]:
    """Range (x) and cross-range (y) 3 dB widths through the global peak."""
    i, j = np.unravel_index(np.argmax(grid), grid.shape)
    if i in (0, grid.shape[0] - 1) or j in (0, grid.shape[1] - 1):
        raise ExtentTooSmallError("peak lies on the grid boundary")
    return (half_power_width(grid[:, j], x_axis, i), half_power_width(grid[i, :], y_axis, j))
