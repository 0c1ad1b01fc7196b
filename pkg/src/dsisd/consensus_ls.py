"""Exact minimizer of a graph-coupled least-squares problem.

Solves ``S z = b`` for ``S = rho (L^T L kron I_d) + blockdiag(A_n^H A_n)``
and ``b_n = A_n^H y_n + e_n`` with ``e`` orthogonal to the consensus subspace.
``z`` stacks one length-``d`` block per node and ``A_n`` is the data operator
of node ``n`` (absent for nodes without measurements).

Working in the eigenbasis of ``L`` splits ``z`` into the consensus component
(the kernel of ``L``) and the disagreement components. The latter see a
positive diagonal penalty, so they are eliminated with the Woodbury identity;
the consensus component reduces to a least-squares problem of size
``rank x d`` solved in the minimum-norm sense, in least-squares rather than
normal-equation form so roundoff is not amplified by the squared condition
number. Everything is expressed through the small cross products
``A_n A_m^H``, so ``S`` is never formed.
When ``S`` is singular the result is its pseudo-inverse solution.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from scipy import linalg as sla

from .errors import ConnectivityError, DimensionError


def compress_rows(a: np.ndarray):
    """Return ``(Q, R)`` with ``A = Q R`` and ``R`` at most ``A.shape[1]`` rows.

    ``Q`` is ``None`` when ``A`` already has no more rows than columns.
    """
    if a.shape[0] <= a.shape[1]:
        return None, a
    return np.linalg.qr(a)


class ConsensusLeastSquares:
    """Factorization of ``rho (L^T L kron I) + blockdiag(A_n^H A_n)``.

    Parameters
    ----------
    operators : sequence of (array or None)
        One entry per node; ``None`` for nodes without measurements.
    lap : ndarray
        Symmetric Laplacian of a connected graph.
    rho : float
        Consensus penalty weight.
    """

    def __init__(self, operators: Sequence[Optional[np.ndarray]], lap: np.ndarray,
                 rho: float):
        lap = np.asarray(lap, dtype=float)
        n = lap.shape[0]
        if len(operators) != n:
            raise DimensionError(f"{len(operators)} operators for {n} nodes")
        if rho <= 0:
            raise ValueError("rho must be positive")
        dims = {a.shape[1] for a in operators if a is not None}
        if len(dims) != 1:
            raise DimensionError("operators must share their column count")
        self.d = dims.pop()
        self.n = n
        w, v = np.linalg.eigh(lap)
        if n > 1 and w[1] <= 1e-10 * max(1.0, w[-1]):
            raise ConnectivityError("graph is disconnected")
        self._v0 = v[:, 0]
        self._vr = v[:, 1:]
        self._dg = rho * w[1:] ** 2
        self._coef = (self._vr / self._dg) @ self._vr.T

        self._qs = [None] * n
        self._ops = [None] * n
        for i, a in enumerate(operators):
            if a is not None:
                self._qs[i], self._ops[i] = compress_rows(np.asarray(a, dtype=np.complex128))
        self._data_nodes = [i for i, a in enumerate(self._ops) if a is not None]
        self._offsets = {}
        r = 0
        for i in self._data_nodes:
            self._offsets[i] = (r, r + self._ops[i].shape[0])
            r += self._ops[i].shape[0]
        self.rank_bound = r

        # Omega^{-1} = I + U_r Dg^{-1} U_r^H, blocks coef[i, j] A_i A_j^H
        om_inv = np.eye(r, dtype=np.complex128)
        for i in self._data_nodes:
            si = slice(*self._offsets[i])
            for j in self._data_nodes:
                if self._coef[i, j] != 0.0:
                    sj = slice(*self._offsets[j])
                    om_inv[si, sj] += self._coef[i, j] * (self._ops[i] @ self._ops[j].conj().T)
        self._chol = sla.cholesky(om_inv, lower=True)

        # A_c = chol^{-1} U_c, U_c row block i = v0[i] A_i
        u_c = np.vstack([self._v0[i] * self._ops[i] for i in self._data_nodes])
        a_c = sla.solve_triangular(self._chol, u_c, lower=True)
        u, s, vh = np.linalg.svd(a_c, full_matrices=False)
        keep = s > max(a_c.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
        self._pinv_u = u[:, keep].conj().T
        self._pinv_v = vh[keep].conj().T / s[keep]
        self.consensus_rank = int(keep.sum())

    # row-space helpers -----------------------------------------------------
    def _apply_blocks(self, per_node):
        """Stack ``A_i per_node[i]`` over data nodes."""
        return np.concatenate([self._ops[i] @ per_node[i] for i in self._data_nodes], axis=0)

    def _omega(self, u):
        return sla.cho_solve((self._chol, True), u)

    def solve(self, y: Sequence[Optional[np.ndarray]],
              extra: Optional[np.ndarray] = None) -> np.ndarray:
        """Solve ``S z = b`` with ``b_n = A_n^H y_n + extra_n``.

        Parameters
        ----------
        y : sequence of (array or None)
            Per-node measurements, vectors or matrices with ``k`` columns.
        extra : ndarray, optional
            Node-stacked term of shape (n, d) or (n, d, k). It must lie in the
            range of ``L^T kron I`` (as dual terms ``-rho L^T D`` do); its
            consensus component is discarded.

        Returns
        -------
        ndarray
            Node-stacked solution of shape (n, d) or (n, d, k).
        """
        vector = None
        ys = {}
        for i in self._data_nodes:
            yi = np.asarray(y[i], dtype=np.complex128)
            vector = yi.ndim == 1 if vector is None else vector
            yi = yi.reshape(yi.shape[0], -1)
            ys[i] = yi if self._qs[i] is None else self._qs[i].conj().T @ yi
        k = next(iter(ys.values())).shape[1]
        b = np.zeros((self.n, self.d, k), dtype=np.complex128)
        for i in self._data_nodes:
            b[i] = self._ops[i].conj().T @ ys[i]
        if extra is not None:
            extra = np.asarray(extra, dtype=np.complex128)
            if extra.shape[:2] != (self.n, self.d):
                raise DimensionError(f"extra term has shape {extra.shape}")
            b = b + extra.reshape(self.n, self.d, k)
        b_r = np.tensordot(self._vr.T, b, axes=(1, 0))

        # consensus block, least-squares form: c = A_c^+ chol^H (y - Omega U_r Dg^{-1} b_r)
        t = np.tensordot(self._vr / self._dg, b_r, axes=(1, 0))
        w = self._omega(self._apply_blocks(t))
        ystack = np.concatenate([ys[i] for i in self._data_nodes], axis=0)
        c = self._pinv_v @ (self._pinv_u @ (self._chol.conj().T @ (ystack - w)))

        # disagreement blocks via Woodbury
        u_c_c = self._apply_blocks(self._v0[:, None, None] * c[None])
        q = b_r - self._ur_adjoint(u_c_c)
        dq = q / self._dg[:, None, None]
        corr = self._omega(self._apply_blocks(np.tensordot(self._vr, dq, axes=(1, 0))))
        z = dq - self._ur_adjoint(corr) / self._dg[:, None, None]

        out = self._v0[:, None, None] * c[None] + np.tensordot(self._vr, z, axes=(1, 0))
        return out[..., 0] if vector else out

    def _split(self, u):
        return {i: u[slice(*self._offsets[i])] for i in self._data_nodes}

    def _ur_adjoint(self, u):
        parts = self._split(u)
        per_node = np.zeros((self.n, self.d, u.shape[1]), dtype=np.complex128)
        for i in self._data_nodes:
            per_node[i] = self._ops[i].conj().T @ parts[i]
        return np.tensordot(self._vr.T, per_node, axes=(1, 0))
