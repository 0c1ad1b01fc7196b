"""Centralized decode-and-image baseline.

All received blocks are pooled. Starting from a pilot-only reflectivity
estimate, the solver alternates pseudo-inverse imaging over the full frame
with zero-forcing symbol estimation, then projects onto the constellation.
"""
from __future__ import annotations

import math
import time

import numpy as np

from .admm import IterationRecord, IterationTrace, SolveResult
from .linops import build_h_comm, build_h_img, pinv_solve, vec
from .problem import Problem
from .signals import project_constellation


def _stack(problem: Problem):
    bs = problem.base_stations
    return (np.vstack([problem.p_rx[n] for n in bs]),
            np.vstack([problem.y[n] for n in bs]))


def run_decode_and_image(problem: Problem, alternations: int = 30, *,
                         tol: float = 0.0) -> SolveResult:
    """Alternate ``f = H_img^+ vec(Y)`` and ``X = H_comm^+ Y_data``.

    ``tol > 0`` stops early once the relative change of both ``f`` and the
    soft symbols falls below it. The trace records the fitting objective per
    alternation; ADMM-only columns are NaN.
    """
    p_rx, y = _stack(problem)
    t1 = problem.t1
    y_data = y[:, t1:]
    info = {"scheme": "centralized"}

    f, rank = pinv_solve(build_h_img(problem.pilots, problem.p_tx, p_rx),
                         vec(y[:, :t1]), return_rank=True)
    info["pilot_rank"] = rank
    trace = IterationTrace()
    if problem.t_data == 0:
        x = np.zeros((problem.k_tx, 0), dtype=np.complex128)
        info["img_rank"] = rank
        return SolveResult(f, x.copy(), x, trace, [], info)

    x, info["comm_rank"] = pinv_solve(build_h_comm(p_rx, f, problem.p_tx), y_data,
                                      return_rank=True)
    nan = math.nan
    for a in range(1, alternations + 1):
        tic = time.perf_counter()
        x_t = problem.x_full(x)
        f_new, info["img_rank"] = pinv_solve(build_h_img(x_t, problem.p_tx, p_rx), vec(y),
                                             return_rank=True)
        x_new, info["comm_rank"] = pinv_solve(build_h_comm(p_rx, f_new, problem.p_tx),
                                              y_data, return_rank=True)
        resid = y - (p_rx * f_new[None, :]) @ (problem.p_tx.T @ problem.x_full(x_new))
        obj = 0.5 * float(np.vdot(resid, resid).real)
        df = np.linalg.norm(f_new - f) / max(np.linalg.norm(f_new), 1e-300)
        dx = np.linalg.norm(x_new - x) / max(np.linalg.norm(x_new), 1e-300)
        f, x = f_new, x_new
        trace.records.append(IterationRecord(a, obj, nan, nan, nan, nan, nan, nan,
                                             (time.perf_counter() - tic) * 1e3))
        if tol > 0 and df < tol and dx < tol:
            break
    info["alternations"] = len(trace)
    return SolveResult(f, project_constellation(x, problem.constellation), x, trace, [], info)
