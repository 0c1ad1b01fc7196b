"""Structured channel/imaging operators and the least-squares kernels.

Vectorization is column-major throughout: ``vec(Y)`` stacks the columns of
``Y``, so ``vec(A diag(f) B X) = ((X^T B^T) * A) f`` with ``*`` the
column-wise Khatri-Rao product.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from . import _accel
from .errors import DimensionError, SingularSystemError


def vec(y: np.ndarray) -> np.ndarray:
    return np.asarray(y).reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int) -> np.ndarray:
    return np.asarray(v).reshape(rows, -1, order="F")


def build_h_comm(p_rx_n: np.ndarray, f: np.ndarray, p_tx: np.ndarray) -> np.ndarray:
    """Channel matrix ``P_rx diag(f) P_tx^T`` (K_RX x K_TX)."""
    f = np.asarray(f)
    if p_rx_n.shape[1] != f.shape[0] or p_tx.shape[1] != f.shape[0]:
        raise DimensionError(
            f"p_rx {p_rx_n.shape}, f {f.shape}, p_tx {p_tx.shape} are inconsistent")
    return (p_rx_n * f[None, :]) @ p_tx.T


def khatri_rao(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Column-wise Khatri-Rao product; column m is ``kron(a[:, m], b[:, m])``."""
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"column counts differ: {a.shape[1]} vs {b.shape[1]}")
    return _accel.khatri_rao(np.ascontiguousarray(a, dtype=np.complex128),
                             np.ascontiguousarray(b, dtype=np.complex128))


def build_h_img(x_t: np.ndarray, p_tx: np.ndarray, p_rx_stacked: np.ndarray) -> np.ndarray:
    """Imaging operator whose column m is ``(X^T p_tx[:, m]) kron p_rx[:, m]``.

    Equals ``(X^T kron I) (P_tx * P_rx)`` and satisfies
    ``vec(P_rx diag(f) P_tx^T X) = H f``. Pass a single node's ``P_rx`` for
    the local operator or the row-stack over nodes for the global one.
    """
    if x_t.shape[0] != p_tx.shape[0]:
        raise DimensionError(f"x_t {x_t.shape} does not match p_tx {p_tx.shape}")
    return khatri_rao(x_t.T @ p_tx, p_rx_stacked)


def h_img_gram(x_t: np.ndarray, p_tx: np.ndarray, p_rx: np.ndarray) -> np.ndarray:
    """``H^H H`` without forming ``H``: ``(A^H A) o (B^H B)``, A = X^T P_tx, B = P_rx."""
    a = x_t.T @ p_tx
    return (a.conj().T @ a) * (p_rx.conj().T @ p_rx)


def h_img_adjoint(x_t: np.ndarray, p_tx: np.ndarray, p_rx: np.ndarray,
                  y: np.ndarray) -> np.ndarray:
    """``H^H vec(y)`` without forming ``H``."""
    a = x_t.T @ p_tx
    return np.einsum("mt,tm->m", p_rx.conj().T @ y, a.conj())


def pinv_solve(a: np.ndarray, b: np.ndarray, return_rank: bool = False):
    """Minimum-norm least-squares solution ``A^+ b`` via SVD.

    Singular values below ``max(A.shape) * eps * sigma_max`` are discarded.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[0] != b.shape[0]:
        raise DimensionError(f"A has {a.shape[0]} rows but b has {b.shape[0]}")
    if a.size == 0:
        out = np.zeros((a.shape[1],) + b.shape[1:], dtype=np.result_type(a, b))
        return (out, 0) if return_rank else out
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    tol = max(a.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    r = int(np.count_nonzero(s > tol))
    ub = u[:, :r].conj().T @ b
    ub = ub / (s[:r] if b.ndim == 1 else s[:r, None])
    x = vh[:r].conj().T @ ub
    return (x, r) if return_rank else x


def solve_normal(gram: np.ndarray, rhs: np.ndarray, mu: float) -> np.ndarray:
    """Solve ``(G + mu I) z = rhs`` for Hermitian PSD ``G`` by Cholesky."""
    n = gram.shape[0]
    mat = gram + mu * np.eye(n)
    try:
        c = scipy.linalg.cho_factor(mat, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            "regularized normal matrix is not positive definite") from exc
    return scipy.linalg.cho_solve(c, rhs, check_finite=False)


def ridge_solve(a: np.ndarray, b: np.ndarray, mu: float,
                linear_shift=None, method: str = "auto") -> np.ndarray:
    """Solve ``(A^H A + mu I) z = A^H b - s``.

    This is the minimizer of ``0.5 ||b - A z||^2 + 0.5 mu ||z||^2 + Re<s, z>``.
    Requires ``mu > 0`` or ``A`` of full column rank.

    ``method`` is ``"cholesky"`` (normal equations), ``"qr"`` (stacked system
    ``[A; sqrt(mu) I] z = [b; -s / sqrt(mu)]``, needs ``mu > 0``) or
    ``"auto"``, which uses Cholesky unless the factor suggests a condition
    number above ``RIDGE_COND_LIMIT``.
    """
    if mu < 0:
        raise ValueError(f"mu must be nonnegative, got {mu}")
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[0] != b.shape[0]:
        raise DimensionError(f"A has {a.shape[0]} rows but b has {b.shape[0]}")
    shift = None if linear_shift is None else np.asarray(linear_shift)
    if method == "qr":
        return _ridge_qr(a, b, mu, shift)
    if method not in ("auto", "cholesky"):
        raise ValueError(f"unknown method {method!r}")

    n = a.shape[1]
    rhs = a.conj().T @ b
    if shift is not None:
        rhs = rhs - shift
    mat = a.conj().T @ a + mu * np.eye(n)
    try:
        c = scipy.linalg.cho_factor(mat, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        if method == "auto" and mu > 0:
            return _ridge_qr(a, b, mu, shift)
        raise SingularSystemError(
            "regularized normal matrix is not positive definite") from exc
    if method == "auto" and mu > 0:
        d = np.abs(np.diag(c[0]))
        if d.min() == 0 or (d.max() / d.min()) ** 2 > RIDGE_COND_LIMIT:
            return _ridge_qr(a, b, mu, shift)
    return scipy.linalg.cho_solve(c, rhs, check_finite=False)


#: Condition-number estimate above which ``ridge_solve`` switches to QR.
RIDGE_COND_LIMIT = 1e8


def _ridge_qr(a, b, mu, shift):
    if not mu > 0:
        raise SingularSystemError("stacked QR ridge solve needs mu > 0")
    n = a.shape[1]
    root = np.sqrt(mu)
    lower = np.zeros((n,) + b.shape[1:], dtype=np.result_type(a, b, complex))
    if shift is not None:
        lower = lower - shift / root
    stacked = np.vstack([a, root * np.eye(n)])
    q, r = np.linalg.qr(stacked)
    return scipy.linalg.solve_triangular(r, q.conj().T @ np.concatenate([b, lower]))
