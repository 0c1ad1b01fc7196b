"""Consensus-ADMM joint imaging and symbol detection over a backhaul graph.

Every node keeps its own reflectivity estimate ``f`` (length M), data-symbol
estimate ``X`` (K_TX x (T - T1)) and scaled duals ``D_f``, ``D_X``. One
iteration is

1. reflectivity step for all nodes,
2. data-symbol step for all nodes using the fresh ``f``,
3. dual ascent ``D += (L kron I) v`` with the fresh iterates.

Two primal schemes are provided. The exact scheme minimizes the augmented
Lagrangian over each block jointly. The Jacobi scheme lets every node solve
its own regularized problem against neighbour values from the previous
iteration; fusion nodes, which hold no measurements, use the closed-form
minimizer of their consensus terms with the symbols projected onto the
constellation.

Stacked quantities are node-major arrays: ``f`` has shape (nodes, M) and
``X`` has shape (nodes, K_TX, T - T1).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from . import linops
from .errors import ConnectivityError, DimensionError, DivergenceError
from .graph import apply_laplacian
from .consensus_ls import ConsensusLeastSquares
from .linops import build_h_comm, h_img_adjoint, h_img_gram, solve_normal
from .problem import Problem
from .signals import Constellation, project_constellation


@dataclass(frozen=True)
class PenaltyParams:
    rho_x: float = 1.0
    rho_f: float = 1.0

    def __post_init__(self):
        if not (self.rho_x > 0 and self.rho_f > 0):
            raise ValueError(f"penalties must be positive, got {self}")


@dataclass
class NodeState:
    f_local: np.ndarray
    x_data_local: np.ndarray
    d_f: np.ndarray
    d_x: np.ndarray


@dataclass
class StackedIterate:
    f: np.ndarray
    x: np.ndarray
    d_f: np.ndarray
    d_x: np.ndarray

    @classmethod
    def zeros(cls, problem: Problem) -> "StackedIterate":
        n = problem.node_count
        f = np.zeros((n, problem.m), dtype=np.complex128)
        x = np.zeros((n, problem.k_tx, problem.t_data), dtype=np.complex128)
        return cls(f, x, f.copy(), x.copy())

    def node(self, n: int) -> NodeState:
        return NodeState(self.f[n], self.x[n], self.d_f[n], self.d_x[n])

    def copy(self) -> "StackedIterate":
        return StackedIterate(self.f.copy(), self.x.copy(), self.d_f.copy(), self.d_x.copy())

    def with_duals(self, d_f, d_x) -> "StackedIterate":
        return StackedIterate(self.f, self.x, d_f, d_x)


@dataclass
class IterationRecord:
    iter: int
    objective: float
    aug_lagrangian: float
    consensus_f: float
    consensus_x: float
    dual_change_f: float
    dual_change_x: float
    q: float
    wall_ms: float


@dataclass
class IterationTrace:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def running_average_q(self) -> np.ndarray:
        q = self.column("q")
        return np.cumsum(q) / np.arange(1, q.size + 1)


@dataclass
class SolveResult:
    f_hat: np.ndarray
    x_hat: np.ndarray
    x_soft: np.ndarray
    trace: IterationTrace
    per_node: list = field(default_factory=list)
    info: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# objective, augmented Lagrangian, gradients
# ---------------------------------------------------------------------------

def _real_inner(a, b) -> float:
    return float(np.vdot(a, b).real)


def _sq(a) -> float:
    return float(np.vdot(a, a).real)


def node_residual(problem: Problem, n: int, f_n, x_data_n) -> np.ndarray:
    x_t = problem.x_full(x_data_n)
    return problem.y[n] - (problem.p_rx[n] * f_n[None, :]) @ (problem.p_tx.T @ x_t)


def objective_g(problem: Problem, f_bar, x_bar) -> float:
    """Half the summed squared fitting error over base stations."""
    f_bar = np.asarray(f_bar)
    x_bar = np.asarray(x_bar)
    if f_bar.shape != (problem.node_count, problem.m):
        raise DimensionError(f"f_bar has shape {f_bar.shape}")
    if x_bar.shape != (problem.node_count, problem.k_tx, problem.t_data):
        raise DimensionError(f"x_bar has shape {x_bar.shape}")
    return 0.5 * sum(_sq(node_residual(problem, n, f_bar[n], x_bar[n]))
                     for n in problem.base_stations)


def augmented_lagrangian(problem: Problem, it: StackedIterate, pen: PenaltyParams,
                         lap: Optional[np.ndarray] = None) -> float:
    lap = problem.laplacian() if lap is None else lap
    lf = apply_laplacian(lap, it.f)
    lx = apply_laplacian(lap, it.x)
    return (objective_g(problem, it.f, it.x)
            + pen.rho_x * _real_inner(it.d_x, lx) + pen.rho_f * _real_inner(it.d_f, lf)
            + 0.5 * pen.rho_x * _sq(lx) + 0.5 * pen.rho_f * _sq(lf))


def _f_normal(problem: Problem, n: int, x_data_n):
    x_t = problem.x_full(x_data_n)
    gram = h_img_gram(x_t, problem.p_tx, problem.p_rx[n])
    rhs = h_img_adjoint(x_t, problem.p_tx, problem.p_rx[n], problem.y[n])
    return gram, rhs


def gradients(problem: Problem, it: StackedIterate, pen: PenaltyParams,
              lap: Optional[np.ndarray] = None):
    """Gradients of the augmented Lagrangian with respect to ``f`` and ``X``.

    For a real function of complex ``z`` the gradient is
    ``d/dRe(z) + 1j * d/dIm(z)``.
    """
    lap = problem.laplacian() if lap is None else lap
    gf = pen.rho_f * apply_laplacian(lap.T, it.d_f + apply_laplacian(lap, it.f))
    gx = pen.rho_x * apply_laplacian(lap.T, it.d_x + apply_laplacian(lap, it.x))
    t1 = problem.t1
    for n in problem.base_stations:
        gram, rhs = _f_normal(problem, n, it.x[n])
        gf[n] += gram @ it.f[n] - rhs
        hc = build_h_comm(problem.p_rx[n], it.f[n], problem.p_tx)
        gx[n] += hc.conj().T @ (hc @ it.x[n] - problem.y[n][:, t1:])
    return gf, gx


def optimality_gap(problem: Problem, it: StackedIterate, pen: PenaltyParams,
                   lap: Optional[np.ndarray] = None) -> float:
    """Squared consensus residuals plus squared augmented-Lagrangian gradients.

    Evaluate at the post-primal iterate with the duals from before the
    dual step.
    """
    lap = problem.laplacian() if lap is None else lap
    gf, gx = gradients(problem, it, pen, lap)
    return (_sq(apply_laplacian(lap, it.x)) + _sq(apply_laplacian(lap, it.f))
            + _sq(gf) + _sq(gx))


# ---------------------------------------------------------------------------
# per-node updates
# ---------------------------------------------------------------------------

def _coupling(n: int, neighbor_values: Mapping[int, np.ndarray], lap_row) -> np.ndarray:
    out = None
    for m, v in neighbor_values.items():
        if m == n:
            continue
        term = lap_row[m] * v
        out = term if out is None else out + term
    return out


def _diag(lap_row, n):
    l_nn = float(lap_row[n])
    if l_nn == 0.0:
        raise ConnectivityError(f"node {n} has no neighbours")
    return l_nn


def local_f_update(problem: Problem, n: int, state: NodeState,
                   neighbor_f: Mapping[int, np.ndarray], lap_row, rho_f: float,
                   prox: float = 0.0) -> np.ndarray:
    """Reflectivity step at base station ``n``.

    Minimizes ``rho_f/2 ||c + L_nn f + D_f||^2 + 1/2 ||vec(Y) - H f||^2`` where
    ``c`` sums ``L(n, m) f_m`` over neighbours and ``H`` is built from the
    node's current symbol estimate. ``prox > 0`` adds
    ``prox * rho_f * L_nn^2 / 2 * ||f - f_prev||^2``.
    """
    l_nn = _diag(lap_row, n)
    c = _coupling(n, neighbor_f, lap_row)
    c = np.zeros_like(state.d_f) if c is None else c
    gram, rhs = _f_normal(problem, n, state.x_data_local)
    w = rho_f * l_nn ** 2
    shift = rho_f * l_nn * (c + state.d_f) - prox * w * state.f_local
    return solve_normal(gram, rhs - shift, w * (1.0 + prox))


def local_x_update(problem: Problem, n: int, state: NodeState, f_new: np.ndarray,
                   neighbor_x: Mapping[int, np.ndarray], lap_row, rho_x: float,
                   prox: float = 0.0) -> np.ndarray:
    """Data-symbol step at base station ``n`` with the fresh local ``f``.

    Pilot columns stay fixed; all data columns share one K_TX x K_TX system.
    ``prox`` works as in :func:`local_f_update`.
    """
    l_nn = _diag(lap_row, n)
    c = _coupling(n, neighbor_x, lap_row)
    c = np.zeros_like(state.d_x) if c is None else c
    hc = build_h_comm(problem.p_rx[n], f_new, problem.p_tx)
    w = rho_x * l_nn ** 2
    rhs = (hc.conj().T @ problem.y[n][:, problem.t1:] - rho_x * l_nn * (c + state.d_x)
           + prox * w * state.x_data_local)
    return solve_normal(hc.conj().T @ hc, rhs, w * (1.0 + prox))


def fusion_node_update(n: int, state: NodeState, neighbor_f: Mapping[int, np.ndarray],
                       neighbor_x: Mapping[int, np.ndarray], lap_row,
                       constellation: Constellation, prox: float = 0.0, project: bool = True):
    """Closed-form step at a measurement-free hub.

    ``f = -(c_f + D_f) / L_nn`` and ``X = Proj(-(c_x + D_X) / L_nn)``, i.e. the
    exact minimizers of the hub's consensus terms, with the symbol estimate
    snapped to the constellation. With ``prox > 0`` both minimizers are
    averaged with the previous iterate, weight ``prox / (1 + prox)``.
    """
    l_nn = _diag(lap_row, n)
    c_f = _coupling(n, neighbor_f, lap_row)
    c_x = _coupling(n, neighbor_x, lap_row)
    c_f = np.zeros_like(state.d_f) if c_f is None else c_f
    c_x = np.zeros_like(state.d_x) if c_x is None else c_x
    f = (-(c_f + state.d_f) / l_nn + prox * state.f_local) / (1.0 + prox)
    x = (-(c_x + state.d_x) / l_nn + prox * state.x_data_local) / (1.0 + prox)
    if project:
        x = project_constellation(x, constellation)
    return f, x


def dual_update(n: int, state: NodeState, fresh_f: Mapping[int, np.ndarray],
                fresh_x: Mapping[int, np.ndarray], lap_row):
    """``D += L_nn v_n + sum_m L(n, m) v_m`` for ``v`` in {f, X}.

    ``fresh_*`` hold this iteration's values for node ``n`` and its neighbours.
    """
    d_f = state.d_f + lap_row[n] * fresh_f[n]
    d_x = state.d_x + lap_row[n] * fresh_x[n]
    c_f = _coupling(n, fresh_f, lap_row)
    c_x = _coupling(n, fresh_x, lap_row)
    if c_f is not None:
        d_f = d_f + c_f
        d_x = d_x + c_x
    return d_f, d_x


# ---------------------------------------------------------------------------
# exact block minimization of the augmented Lagrangian
# ---------------------------------------------------------------------------

def _operators(problem: Problem, build):
    return [None if problem.is_fusion(n) else build(n) for n in range(problem.node_count)]


def exact_f_update(problem: Problem, it: StackedIterate, pen: PenaltyParams,
                   lap: np.ndarray) -> np.ndarray:
    """Minimize the augmented Lagrangian over all ``f`` blocks jointly.

    The symbol blocks and duals are held at ``it``. Nodes are coupled up to
    two hops apart through ``L^T L``; the joint system is solved exactly
    (pseudo-inverse solution when singular).
    """
    def op(n):
        return linops.build_h_img(problem.x_full(it.x[n]), problem.p_tx, problem.p_rx[n])

    ys = [None if problem.is_fusion(n) else linops.vec(problem.y[n])
          for n in range(problem.node_count)]
    extra = -pen.rho_f * apply_laplacian(lap.T, it.d_f)
    return ConsensusLeastSquares(_operators(problem, op), lap, pen.rho_f).solve(ys, extra)


def exact_x_update(problem: Problem, f_new: np.ndarray, it: StackedIterate,
                   pen: PenaltyParams, lap: np.ndarray) -> np.ndarray:
    """Minimize over all data-symbol blocks jointly given fresh ``f`` blocks."""
    def op(n):
        return build_h_comm(problem.p_rx[n], f_new[n], problem.p_tx)

    ys = [None if problem.is_fusion(n) else problem.y[n][:, problem.t1:]
          for n in range(problem.node_count)]
    extra = -pen.rho_x * apply_laplacian(lap.T, it.d_x)
    return ConsensusLeastSquares(_operators(problem, op), lap, pen.rho_x).solve(ys, extra)


def dsisd_imaging(operators: Sequence[Optional[np.ndarray]], y: Sequence[Optional[np.ndarray]],
                  lap: np.ndarray, rho_f: float, k_max: int = 30) -> np.ndarray:
    """Reflectivity-only DSISD iterations with the transmitted symbols known.

    Runs the exact ``f`` step and dual step ``k_max`` times from zero, with
    ``operators[n]`` the local imaging operator of node ``n`` (``None`` at
    fusion nodes) and ``y[n]`` its vectorized measurements. The operators
    are fixed, so the joint system is factored once. Returns the node-stacked
    reflectivity estimates.
    """
    solver = ConsensusLeastSquares(operators, lap, rho_f)
    d_f = np.zeros((len(operators), solver.d), dtype=np.complex128)
    f = d_f.copy()
    for _ in range(k_max):
        f = solver.solve(y, -rho_f * apply_laplacian(lap.T, d_f))
        d_f = d_f + apply_laplacian(lap, f)
    return f


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

def jacobi_sweep(problem: Problem, prev: StackedIterate, pen: PenaltyParams,
                 lap: np.ndarray, order: Optional[Sequence[int]] = None,
                 prox: float = 0.0, fusion_projection: bool = True):
    """One primal sweep in which every node reads only ``prev`` neighbour values."""
    graph = problem.graph
    nodes = range(problem.node_count) if order is None else order
    f_new = np.empty_like(prev.f)
    x_new = np.empty_like(prev.x)
    for n in nodes:
        nb = graph.neighbors(n)
        nf = {m: prev.f[m] for m in nb}
        nx = {m: prev.x[m] for m in nb}
        state = prev.node(n)
        if problem.is_fusion(n):
            f_new[n], x_new[n] = fusion_node_update(n, state, nf, nx, lap[n],
                                                    problem.constellation, prox,
                                                    fusion_projection)
        else:
            f_new[n] = local_f_update(problem, n, state, nf, lap[n], pen.rho_f, prox)
    for n in nodes:
        if problem.is_fusion(n):
            continue
        nx = {m: prev.x[m] for m in graph.neighbors(n)}
        x_new[n] = local_x_update(problem, n, prev.node(n), f_new[n], nx, lap[n],
                                  pen.rho_x, prox)
    return f_new, x_new


def dual_sweep(problem: Problem, prev: StackedIterate, f_new, x_new, lap,
               order: Optional[Sequence[int]] = None):
    d_f = np.empty_like(prev.d_f)
    d_x = np.empty_like(prev.d_x)
    nodes = range(problem.node_count) if order is None else order
    for n in nodes:
        nb = problem.graph.neighbors(n) + [n]
        d_f[n], d_x[n] = dual_update(n, prev.node(n), {m: f_new[m] for m in nb},
                                     {m: x_new[m] for m in nb}, lap[n])
    return d_f, d_x


def _finite_and_bounded(arrays, bound):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            return False
        if np.sqrt(_sq(a)) > bound:
            return False
    return True


def run_dsisd(problem: Problem, penalties: PenaltyParams = PenaltyParams(),
              k_max: int = 30, *, updates: str = "exact",
              order: Optional[Sequence[int]] = None, report_node: Optional[int] = None,
              report: str = "node", diagnostics: bool = True,
              prox: float = 1.0, fusion_projection: bool = True,
              divergence_bound: float = 1e12, callback=None) -> SolveResult:
    """Run ``k_max`` consensus-ADMM iterations from zero initial iterates.

    Parameters
    ----------
    updates : {"exact", "jacobi"}
        ``"exact"`` minimizes the augmented Lagrangian exactly over all ``f``
        blocks, then over all ``X`` blocks, followed by the dual step. Since
        the penalty couples nodes two hops apart, this is a joint solve.
        ``"jacobi"`` is the per-node scheme: each node solves its own
        regularized problem against the previous neighbour values, and
        fusion nodes use the projected closed form. With ``prox=0`` it is
        the undamped per-node iteration, which is typically unstable.
    order : sequence of int, optional
        Processing order of nodes within a Jacobi sweep. Results do not
        depend on it.
    report_node : int, optional
        Node whose iterate is reported; defaults to the last base station.
    report : {"node", "average"}
        ``"average"`` reports the mean over base stations instead.
    diagnostics : bool
        Evaluate objective, augmented Lagrangian and optimality gap per
        iteration. Consensus residuals are always recorded.
    prox, fusion_projection
        Jacobi-only: proximal damping weight (relative to ``rho L_nn^2``) and
        whether fusion nodes project their symbol estimate.
    divergence_bound : float
        Abort with :class:`DivergenceError` once any iterate norm exceeds it.
    """
    if problem.graph is None:
        raise ConnectivityError("DSISD needs a backhaul graph")
    if updates not in ("exact", "jacobi"):
        raise ValueError(f"unknown update scheme {updates!r}")
    if report not in ("node", "average"):
        raise ValueError(f"unknown report mode {report!r}")
    if order is not None and sorted(order) != list(range(problem.node_count)):
        raise ValueError("order must be a permutation of the node indices")
    lap = problem.laplacian()
    bs = problem.base_stations
    if not bs:
        raise ValueError("graph has no base stations")
    report_node = bs[-1] if report_node is None else report_node
    if report == "node" and report_node not in bs:
        raise ValueError(f"report node {report_node} is not a base station")

    it = StackedIterate.zeros(problem)
    trace = IterationTrace()
    nan = math.nan
    for k in range(1, k_max + 1):
        tic = time.perf_counter()
        if updates == "jacobi":
            f_new, x_new = jacobi_sweep(problem, it, penalties, lap, order, prox,
                                        fusion_projection)
        else:
            f_new = exact_f_update(problem, it, penalties, lap)
            x_new = exact_x_update(problem, f_new, it, penalties, lap)
        if not _finite_and_bounded((f_new, x_new), divergence_bound):
            raise DivergenceError(f"iterate diverged at iteration {k}", trace)
        post = StackedIterate(f_new, x_new, it.d_f, it.d_x)
        if updates == "jacobi":
            d_f, d_x = dual_sweep(problem, it, f_new, x_new, lap, order)
        else:
            d_f = it.d_f + apply_laplacian(lap, f_new)
            d_x = it.d_x + apply_laplacian(lap, x_new)
        if not _finite_and_bounded((d_f, d_x), divergence_bound):
            raise DivergenceError(f"dual variable diverged at iteration {k}", trace)
        wall = (time.perf_counter() - tic) * 1e3
        cf = float(np.sqrt(_sq(apply_laplacian(lap, f_new))))
        cx = float(np.sqrt(_sq(apply_laplacian(lap, x_new))))
        if diagnostics:
            obj = objective_g(problem, f_new, x_new)
            aug = augmented_lagrangian(problem, post, penalties, lap)
            q = optimality_gap(problem, post, penalties, lap)
        else:
            obj = aug = q = nan
        trace.records.append(IterationRecord(
            k, obj, aug, cf, cx, float(np.sqrt(_sq(d_f - it.d_f))),
            float(np.sqrt(_sq(d_x - it.d_x))), q, wall))
        if callback is not None:
            callback(k, post)
        it = StackedIterate(f_new, x_new, d_f, d_x)

    if report == "node":
        f_hat, x_soft = it.f[report_node].copy(), it.x[report_node].copy()
    else:
        f_hat, x_soft = it.f[bs].mean(axis=0), it.x[bs].mean(axis=0)
    x_hat = project_constellation(x_soft, problem.constellation)
    per_node = [it.node(n) for n in range(problem.node_count)]
    return SolveResult(f_hat, x_hat, x_soft, trace, per_node,
                       {"scheme": "dsisd", "updates": updates, "report_node": report_node,
                        "final_iterate": it})


def frozen_dual_descent_check(problem: Problem, before: StackedIterate, after: StackedIterate,
                              pen: PenaltyParams, tol: float = 1e-9):
    """Check that a primal sweep did not increase the augmented Lagrangian.

    Both points are evaluated with the duals of ``before``. Returns
    ``(passed, margin)`` where ``margin = A(after) - A(before)``; it passes
    when ``margin <= tol * max(1, |A(before)|)``.
    """
    lap = problem.laplacian()
    a0 = augmented_lagrangian(problem, before, pen, lap)
    a1 = augmented_lagrangian(problem, after.with_duals(before.d_f, before.d_x), pen, lap)
    margin = a1 - a0
    return bool(margin <= tol * max(1.0, abs(a0))), float(margin)
