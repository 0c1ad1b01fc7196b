"""Analytic operation and communication counts for both schemes.

Cost model
----------
* Every term of the operation-count formulas is a number of complex
  multiply-adds, each worth ``REAL_FLOPS_PER_COMPLEX_MAC = 8`` real flops.
* DSISD, per iteration and base station: ``M (K_RX T)^2 + M^2 K_RX T`` for the
  reflectivity least squares plus ``K_RX K_TX^2 + K_TX K_RX^2`` for the
  symbol least squares.
* Decode-and-image, per alternation: ``K_RX N T M (M + K_RX N T)`` for least
  squares over the pooled ``N K_RX T``-row system.
* Communication counts real scalars, a complex value being two. Each DSISD
  iteration sends the local ``f`` (M entries) and data block
  (``K_TX (T - T1)`` entries) in both directions of every edge. The
  centralized scheme ships every ``K_RX x T`` received block once.

Counts depend only on the configuration.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .config import ExperimentConfig

REAL_FLOPS_PER_COMPLEX_MAC = 8
REALS_PER_COMPLEX = 2


@dataclass(frozen=True)
class ComplexityReport:
    scheme: str
    flops: int
    comm_reals: int


def dsisd_counts(n_base: int, n_edges: int, m: int, k_tx: int, k_rx: int, t: int, t1: int,
                 iterations: int) -> ComplexityReport:
    per_node = m * (k_rx * t) ** 2 + m ** 2 * k_rx * t + k_rx * k_tx ** 2 + k_tx * k_rx ** 2
    flops = REAL_FLOPS_PER_COMPLEX_MAC * n_base * per_node * iterations
    comm = REALS_PER_COMPLEX * 2 * n_edges * (m + k_tx * (t - t1)) * iterations
    return ComplexityReport("dsisd", int(flops), int(comm))


def centralized_counts(n_base: int, m: int, k_rx: int, t: int,
                       alternations: int) -> ComplexityReport:
    flops = (REAL_FLOPS_PER_COMPLEX_MAC * k_rx * n_base * t * m * (m + k_rx * n_base * t)
             * alternations)
    comm = REALS_PER_COMPLEX * n_base * k_rx * t
    return ComplexityReport("centralized", int(flops), int(comm))


def complexity_report(cfg: ExperimentConfig, scheme: str,
                      n_base: Optional[int] = None) -> ComplexityReport:
    """Counts for ``scheme`` under ``cfg``.

    ``n_base`` overrides the number of base stations; the graph is then the
    configured topology family rebuilt at that size. ``M`` is
    ``[complexity] scatterers`` when set, else the scene size.
    """
    from .experiments import graph_for

    n = cfg.n_base if n_base is None else int(n_base)
    m = cfg.complexity_scatterers or cfg.geometry.scene_count
    fr = cfg.frame
    if scheme == "dsisd":
        edges = len(graph_for(cfg, n).edges)
        return dsisd_counts(n, edges, m, fr.k_tx, fr.k_rx, fr.t, fr.t1,
                            cfg.solver.iterations)
    if scheme == "centralized":
        return centralized_counts(n, m, fr.k_rx, fr.t, cfg.solver.alternations)
    raise ValueError(f"unknown scheme {scheme!r}")
