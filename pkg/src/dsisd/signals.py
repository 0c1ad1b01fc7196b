"""Constellations, pilot/data frames, noise and the noiseless forward model."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import DimensionError, PilotDeficiencyError


class ConstellationKind(enum.Enum):
    BPSK = "bpsk"
    QPSK = "qpsk"


@dataclass(frozen=True)
class Constellation:
    """Unit-energy symbol alphabet.

    ``points`` are ordered by angle in [0, 2 pi); ``bits[i]`` is the bit label
    of ``points[i]`` (sign bit for BPSK, Gray code for QPSK).
    """

    kind: ConstellationKind
    points: np.ndarray = field(compare=False, repr=False)
    bits: tuple = field(compare=False, repr=False)

    @classmethod
    def from_name(cls, name) -> "Constellation":
        kind = name if isinstance(name, ConstellationKind) else ConstellationKind(str(name).lower())
        if kind is ConstellationKind.BPSK:
            pts = np.array([1.0 + 0j, -1.0 + 0j])
            bits = ((0,), (1,))
        else:
            s = 1.0 / math.sqrt(2.0)
            pts = np.array([s + 1j * s, -s + 1j * s, -s - 1j * s, s - 1j * s])
            # Gray labels counter-clockwise from the first quadrant.
            bits = ((0, 0), (0, 1), (1, 1), (1, 0))
        pts.setflags(write=False)
        return cls(kind, pts, bits)

    @property
    def bits_per_symbol(self) -> int:
        return len(self.bits[0])

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x)
        return np.any(x[..., None] == self.points, axis=-1)

    def indices(self, x) -> np.ndarray:
        """Index of each (exact) constellation symbol in ``x``."""
        x = np.asarray(x, dtype=np.complex128)
        hit = x[..., None] == self.points
        if not np.all(hit.any(axis=-1)):
            raise ValueError("input contains non-constellation symbols")
        return np.argmax(hit, axis=-1)


BPSK = Constellation.from_name("bpsk")
QPSK = Constellation.from_name("qpsk")


@dataclass(frozen=True)
class SymbolFrame:
    """Transmitted block ``[pilots, data]`` (K_TX x T)."""

    pilots: np.ndarray = field(repr=False)
    data: np.ndarray = field(repr=False)
    constellation: Constellation

    def __post_init__(self):
        p = np.asarray(self.pilots, dtype=np.complex128)
        d = np.asarray(self.data, dtype=np.complex128)
        if p.ndim != 2:
            raise DimensionError("pilots must be a 2-D matrix")
        if d.ndim != 2 or d.shape[0] != p.shape[0]:
            raise DimensionError(
                f"data block {d.shape} does not match pilot rows {p.shape[0]}")
        check_pilots(p)
        if d.size and not np.all(self.constellation.contains(d)):
            raise ValueError("data block contains non-constellation symbols")
        object.__setattr__(self, "pilots", p)
        object.__setattr__(self, "data", d)

    @property
    def k_tx(self) -> int:
        return self.pilots.shape[0]

    @property
    def t1(self) -> int:
        return self.pilots.shape[1]

    @property
    def t(self) -> int:
        return self.pilots.shape[1] + self.data.shape[1]

    @property
    def x_t(self) -> np.ndarray:
        return np.hstack([self.pilots, self.data])


@dataclass(frozen=True)
class NoiseSpec:
    """Per-node receive SNR in dB (``math.inf`` means noiseless) and RNG seed."""

    snr_db: float
    seed: int = 0


def check_pilots(pilots: np.ndarray) -> None:
    k_tx, t1 = pilots.shape
    if t1 < k_tx:
        raise PilotDeficiencyError(
            f"need at least K_TX={k_tx} pilot symbols, got T1={t1}")
    if np.linalg.matrix_rank(pilots) < k_tx:
        raise PilotDeficiencyError("pilot block does not have full row rank")


def generate_pilots(k_tx: int, t1: int) -> np.ndarray:
    """Time-orthogonal unit-modulus pilots: first ``k_tx`` rows of a T1-point DFT."""
    if k_tx < 1 or t1 < 1:
        raise ValueError("k_tx and t1 must be positive")
    if t1 < k_tx:
        raise PilotDeficiencyError(
            f"need at least K_TX={k_tx} pilot symbols, got T1={t1}")
    k = np.arange(k_tx)[:, None]
    t = np.arange(t1)[None, :]
    return np.exp(-2j * np.pi * k * t / t1)


def generate_data(constellation: Constellation, k_tx: int, t_data: int,
                  seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(constellation.points), size=(k_tx, t_data))
    return constellation.points[idx].astype(np.complex128)


def make_frame(constellation: Constellation, k_tx: int, t: int, t1: int | None = None,
               seed: int = 0) -> SymbolFrame:
    """Pilots plus i.i.d. data; ``t1`` defaults to ``k_tx``."""
    t1 = k_tx if t1 is None else t1
    if t < t1:
        raise ValueError(f"frame length T={t} shorter than pilot length T1={t1}")
    return SymbolFrame(generate_pilots(k_tx, t1),
                       generate_data(constellation, k_tx, t - t1, seed),
                       constellation)


def forward_model(scene, p_tx: np.ndarray, p_rx_n: np.ndarray, frame) -> np.ndarray:
    """Noiseless receive block ``P_rx diag(f) P_tx^T X_T`` (plain transpose)."""
    f = scene.reflectivity if hasattr(scene, "reflectivity") else np.asarray(scene)
    x = frame.x_t if isinstance(frame, SymbolFrame) else np.asarray(frame)
    m = f.shape[0]
    if p_tx.ndim != 2 or p_tx.shape[1] != m:
        raise DimensionError(f"p_tx has shape {p_tx.shape}, expected (K_TX, {m})")
    if p_rx_n.ndim != 2 or p_rx_n.shape[1] != m:
        raise DimensionError(f"p_rx_n has shape {p_rx_n.shape}, expected (K_RX, {m})")
    if x.ndim != 2 or x.shape[0] != p_tx.shape[0]:
        raise DimensionError(
            f"frame has shape {x.shape}, expected ({p_tx.shape[0]}, T)")
    return (p_rx_n * f[None, :]) @ (p_tx.T @ x)


def noise_variance(signal: np.ndarray, snr_db: float) -> float:
    """sigma^2 = ||signal||_F^2 / (numel * 10^(snr/10))."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    power = float(np.vdot(signal, signal).real) / signal.size
    return power / 10.0 ** (snr_db / 10.0)


def add_noise(y: np.ndarray, signal: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    """Add circularly-symmetric complex Gaussian noise at the requested SNR."""
    if y.shape != signal.shape:
        raise DimensionError(f"y {y.shape} and signal {signal.shape} differ")
    var = noise_variance(signal, spec.snr_db)
    if var == 0.0:
        return np.array(y, dtype=np.complex128, copy=True)
    rng = np.random.default_rng(spec.seed)
    w = rng.standard_normal(y.shape + (2,))
    return y + math.sqrt(var / 2.0) * (w[..., 0] + 1j * w[..., 1])


def project_constellation(x, constellation: Constellation) -> np.ndarray:
    """Entrywise nearest constellation point; ties go to the smallest angle."""
    x = np.asarray(x, dtype=np.complex128)
    flat = np.ascontiguousarray(x.reshape(-1))
    idx = _accel.nearest_index(flat, np.ascontiguousarray(constellation.points))
    return constellation.points[idx].reshape(x.shape)
