"""Planar antenna arrays, scatterer scenes and path-delay matrices."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _accel
from .errors import DegenerateGeometryError

#: Antenna-scatterer pairs closer than this (meters) are rejected.
MIN_DISTANCE = 1e-6


@dataclass(frozen=True)
class Position2D:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite position ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class Wavelength:
    meters: float

    def __post_init__(self):
        if not self.meters > 0:
            raise ValueError(f"wavelength must be positive, got {self.meters}")

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.meters


def _coords(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=float).reshape(-1, 2)
    else:
        arr = np.array([[p.x, p.y] for p in points], dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite coordinates")
    return np.ascontiguousarray(arr)


@dataclass(frozen=True)
class ArrayGeometry:
    """Ordered antenna elements. ``spacing`` is 0 for a single element."""

    elements: tuple
    orientation_deg: float = 0.0
    spacing: float = 0.0

    def __post_init__(self):
        if len(self.elements) < 1:
            raise ValueError("an array needs at least one element")

    @property
    def count(self) -> int:
        return len(self.elements)

    def coords(self) -> np.ndarray:
        """(K, 2) array of element coordinates."""
        return _coords(self.elements)


@dataclass(frozen=True)
class SceneModel:
    scatterers: tuple
    reflectivity: np.ndarray = field(compare=False)

    def __post_init__(self):
        f = np.asarray(self.reflectivity, dtype=np.complex128).reshape(-1)
        if len(self.scatterers) < 1:
            raise ValueError("a scene needs at least one scatterer")
        if f.shape[0] != len(self.scatterers):
            raise ValueError(
                f"reflectivity has length {f.shape[0]} but there are "
                f"{len(self.scatterers)} scatterers")
        f.setflags(write=False)
        object.__setattr__(self, "reflectivity", f)

    @property
    def size(self) -> int:
        return len(self.scatterers)

    def coords(self) -> np.ndarray:
        return _coords(self.scatterers)

    def with_reflectivity(self, f) -> "SceneModel":
        return SceneModel(self.scatterers, np.asarray(f, dtype=np.complex128))


def make_ula(count: int, spacing: float, center: Position2D,
             orientation_deg: float) -> ArrayGeometry:
    """Uniform linear array centered on ``center``.

    Element ``k`` sits at ``center + (k - (count - 1) / 2) * spacing * u`` with
    ``u = (cos theta, sin theta)``.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if not spacing > 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    theta = math.radians(orientation_deg)
    u = (math.cos(theta), math.sin(theta))
    offsets = [(k - (count - 1) / 2.0) * spacing for k in range(count)]
    elements = tuple(Position2D(center.x + o * u[0], center.y + o * u[1])
                     for o in offsets)
    return ArrayGeometry(elements, orientation_deg=orientation_deg,
                         spacing=spacing if count > 1 else 0.0)


def path_delay_entry(antenna: Position2D, scatterer: Position2D,
                     wavelength: Wavelength) -> complex:
    d = math.hypot(antenna.x - scatterer.x, antenna.y - scatterer.y)
    if d < MIN_DISTANCE:
        raise DegenerateGeometryError(
            f"antenna at ({antenna.x}, {antenna.y}) coincides with scatterer "
            f"at ({scatterer.x}, {scatterer.y})")
    return complex(np.exp(-1j * wavelength.wavenumber * d) / (4.0 * math.pi * d))


def path_delay_coords(antennas: np.ndarray, scatterers: np.ndarray,
                      wavelength: Wavelength | float) -> np.ndarray:
    """Path-delay matrix from raw (K, 2) and (M, 2) coordinate arrays."""
    lam = wavelength.meters if isinstance(wavelength, Wavelength) else float(wavelength)
    a = np.ascontiguousarray(antennas, dtype=float)
    s = np.ascontiguousarray(scatterers, dtype=float)
    out, bad = _accel.path_delay(a, s, 2.0 * math.pi / lam, MIN_DISTANCE)
    if bad >= 0:
        k, m = divmod(bad, s.shape[0])
        raise DegenerateGeometryError(
            f"antenna {k} and scatterer {m} are closer than {MIN_DISTANCE} m",
            index=(k, m))
    return out


def build_path_delay_matrix(array: ArrayGeometry, scene: SceneModel | Sequence,
                            wavelength: Wavelength) -> np.ndarray:
    """(K, M) matrix with entry (k, m) = ``path_delay_entry(r_k, s_m, lambda)``."""
    pts = scene.coords() if isinstance(scene, SceneModel) else _coords(scene)
    return path_delay_coords(array.coords(), pts, wavelength)
