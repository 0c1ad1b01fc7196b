"""Hot numeric kernels with an optional numba backend.

Each kernel has a pure-numpy implementation and a numba ``@njit`` twin with
identical semantics. The numba path is used when numba imports cleanly and
the environment variable ``DSISD_DISABLE_NUMBA`` is unset (or ``0``).
"""
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a soft dependency
    HAVE_NUMBA = False

_flag = os.environ.get("DSISD_DISABLE_NUMBA", "0").strip().lower()
USE_NUMBA = HAVE_NUMBA and _flag in ("", "0", "false", "no")


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def path_delay_numpy(antennas, scatterers, wavenumber, min_distance):
    """Spherical-wave kernel exp(-j k d) / (4 pi d) for every (antenna, scatterer).

    Returns ``(P, bad)`` where ``bad`` is the flat index of the first pair
    closer than ``min_distance`` (or -1).
    """
    diff = antennas[:, None, :] - scatterers[None, :, :]
    d = np.sqrt(diff[..., 0] ** 2 + diff[..., 1] ** 2)
    close = np.flatnonzero(d < min_distance)
    if close.size:
        return np.zeros(d.shape, dtype=np.complex128), int(close[0])
    return np.exp(-1j * wavenumber * d) / (4.0 * np.pi * d), -1


def khatri_rao_numpy(a, b):
    """Column-wise Khatri-Rao product: column m is kron(a[:, m], b[:, m])."""
    t, m = a.shape
    r = b.shape[0]
    return (a[:, None, :] * b[None, :, :]).reshape(t * r, m)


def nearest_index_numpy(x, points):
    """Index of the nearest point for every entry of flat ``x``.

    Ties resolve to the lowest index, so ``points`` must be pre-sorted in the
    desired tie-break order.
    """
    diff = x[:, None] - points[None, :]
    dist = diff.real * diff.real + diff.imag * diff.imag
    return np.argmin(dist, axis=1)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=False)
    def path_delay_numba(antennas, scatterers, wavenumber, min_distance):
        k = antennas.shape[0]
        m = scatterers.shape[0]
        out = np.zeros((k, m), dtype=np.complex128)
        four_pi = 4.0 * np.pi
        for i in range(k):
            ax = antennas[i, 0]
            ay = antennas[i, 1]
            for j in range(m):
                dx = ax - scatterers[j, 0]
                dy = ay - scatterers[j, 1]
                d = np.sqrt(dx * dx + dy * dy)
                if d < min_distance:
                    return out, i * m + j
                phase = -wavenumber * d
                out[i, j] = complex(np.cos(phase), np.sin(phase)) / (four_pi * d)
        return out, -1

    @njit(cache=False)
    def khatri_rao_numba(a, b):
        t, m = a.shape
        r = b.shape[0]
        out = np.empty((t * r, m), dtype=np.complex128)
        for i in range(t):
            for k in range(r):
                row = i * r + k
                for j in range(m):
                    out[row, j] = a[i, j] * b[k, j]
        return out

    @njit(cache=False)
    def nearest_index_numba(x, points):
        n = x.shape[0]
        p = points.shape[0]
        out = np.empty(n, dtype=np.int64)
        for i in range(n):
            best = 0
            diff = x[i] - points[0]
            best_d = diff.real * diff.real + diff.imag * diff.imag
            for j in range(1, p):
                diff = x[i] - points[j]
                d = diff.real * diff.real + diff.imag * diff.imag
                if d < best_d:
                    best_d = d
                    best = j
            out[i] = best
        return out

else:  # pragma: no cover
    path_delay_numba = path_delay_numpy
    khatri_rao_numba = khatri_rao_numpy
    nearest_index_numba = nearest_index_numpy


if USE_NUMBA:
    path_delay = path_delay_numba
    khatri_rao = khatri_rao_numba
    nearest_index = nearest_index_numba
else:
    path_delay = path_delay_numpy
    khatri_rao = khatri_rao_numpy
    nearest_index = nearest_index_numpy


def backend():
    """Name of the active kernel backend."""
    return "numba" if USE_NUMBA else "numpy"
