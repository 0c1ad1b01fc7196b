"""Experiment drivers: instance synthesis, BER sweeps, PSFs and traces."""
from __future__ import annotations

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .. import linops
from ..admm import PenaltyParams, SolveResult, dsisd_imaging, run_dsisd
from ..centralized import run_decode_and_image
from ..geometry import (Position2D, SceneModel, Wavelength,
                        build_path_delay_matrix, make_ula)
from ..graph import BackhaulGraph, NodeRole, complete_graph, laplacian, path_graph, star_with_fusion
from ..problem import Instance, Problem, synthesize
from ..signals import Constellation, forward_model, make_frame
from .config import ExperimentConfig
from .metrics import BerPoint, PsfGrid, bit_errors, mainlobe_widths

SCHEMES = ("dsisd", "centralized")


class TrialError(RuntimeError):
    """A solver failure inside a sweep, tagged with its SNR and trial index."""

    def __init__(self, snr_db: float, trial: int, cause: Exception):
        super().__init__(f"trial {trial} at {snr_db} dB failed: "
                         f"{type(cause).__name__}: {cause}")
        self.snr_db = snr_db
        self.trial = trial
        self.cause = cause


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 32-bit seed for the stream identified by ``keys``."""
    return int(np.random.SeedSequence([int(seed) & (2 ** 64 - 1), *keys]).generate_state(1)[0])


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def build_geometry(cfg: ExperimentConfig):
    """Return ``(wavelength, tx_array, rx_arrays, scene)``."""
    g, fr = cfg.geometry, cfg.frame
    lam = Wavelength(g.wavelength_m)
    spacing = g.spacing_wavelengths * g.wavelength_m
    tx = make_ula(fr.k_tx, spacing, Position2D(*g.tx_center_m), g.tx_orientation_deg)
    rx = []
    for a in g.rx_angles_deg:
        r = math.radians(a)
        center = Position2D(-g.rx_radius_m * math.cos(r), -g.rx_radius_m * math.sin(r))
        rx.append(make_ula(fr.k_rx, spacing, center, a + g.rx_orientation_offset_deg))
    rng = np.random.default_rng(g.scene_seed)
    pts = rng.uniform(-g.scene_half_width_m, g.scene_half_width_m, (g.scene_count, 2))
    refl = np.exp(2j * np.pi * rng.uniform(size=g.scene_count))
    scene = SceneModel(tuple(Position2D(*p) for p in pts), refl)
    return lam, tx, rx, scene


def graph_for(cfg: ExperimentConfig, n_base: int) -> BackhaulGraph:
    """The configured topology family with ``n_base`` base stations."""
    topo = cfg.graph.topology
    if topo == "star_with_fusion":
        return star_with_fusion(n_base)
    if topo == "path":
        return path_graph(n_base)
    if topo == "complete":
        return complete_graph(n_base)
    fusion = set(cfg.graph.fusion_nodes)
    count = n_base + len(fusion)
    if n_base != cfg.n_base:
        raise ValueError("explicit topologies cannot be resized")
    roles = tuple(NodeRole.FUSION if i in fusion else NodeRole.BASE_STATION
                  for i in range(count))
    return BackhaulGraph(count, cfg.graph.edges, roles)


def build_graph(cfg: ExperimentConfig) -> BackhaulGraph:
    return graph_for(cfg, cfg.n_base)


def make_instance(cfg: ExperimentConfig, snr_db: float, seed: int) -> Instance:
    """Synthesize one coherence interval: fresh data symbols and noise."""
    lam, tx, rx, scene = build_geometry(cfg)
    fr = cfg.frame
    frame = make_frame(Constellation.from_name(fr.constellation), fr.k_tx, fr.t, fr.t1,
                       seed=derive_seed(seed, 0))
    return synthesize(tx, rx, scene, lam, frame, snr_db, derive_seed(seed, 1),
                      build_graph(cfg))


def solve(cfg: ExperimentConfig, problem: Problem, scheme: str, *,
          diagnostics: bool = True) -> SolveResult:
    s = cfg.solver
    if scheme == "dsisd":
        return run_dsisd(problem, PenaltyParams(s.rho_x, s.rho_f), s.iterations,
                         updates=s.updates, report=s.report,
                         report_node=None if s.report_node < 0 else s.report_node,
                         prox=s.prox, diagnostics=diagnostics)
    if scheme == "centralized":
        return run_decode_and_image(problem.restrict(problem.base_stations), s.alternations)
    raise ValueError(f"unknown scheme {scheme!r}")


def run_single(cfg: ExperimentConfig, scheme: str, snr_db: Optional[float] = None
               ) -> Tuple[Instance, SolveResult]:
    snr = cfg.run_snr_db if snr_db is None else snr_db
    inst = make_instance(cfg, snr, cfg.seed)
    return inst, solve(cfg, inst.problem, scheme)


# ---------------------------------------------------------------------------
# BER
# ---------------------------------------------------------------------------

def ber_sweep(cfg: ExperimentConfig, scheme: str, snr_db: Optional[Sequence[float]] = None,
              trials: Optional[int] = None) -> List[BerPoint]:
    """Monte-Carlo BER per SNR.

    Trial ``t`` uses the same symbols and noise shape at every SNR (seeds
    derive from the config seed and ``t`` only), which keeps curves smooth
    and lets schemes be compared on identical realizations.
    """
    snrs = cfg.sweep.snr_db if snr_db is None else tuple(snr_db)
    n_trials = cfg.sweep.trials if trials is None else int(trials)
    points = []
    for snr in snrs:
        errors = total = 0
        for t in range(n_trials):
            inst = make_instance(cfg, snr, derive_seed(cfg.seed, 2, t))
            try:
                res = solve(cfg, inst.problem, scheme, diagnostics=False)
            except Exception as exc:
                raise TrialError(snr, t, exc) from exc
            e, b = bit_errors(res.x_hat, inst.frame.data, inst.frame.constellation)
            errors += e
            total += b
        points.append(BerPoint(float(snr), n_trials, total, errors))
    return points


# ---------------------------------------------------------------------------
# PSF
# ---------------------------------------------------------------------------

def psf_grid_axes(cfg: ExperimentConfig, source: Optional[Position2D] = None):
    src = Position2D(*cfg.psf.source_m) if source is None else source
    step = cfg.psf.cell_wavelengths * cfg.geometry.wavelength_m
    half = cfg.psf.cells // 2
    offsets = np.arange(-half, half + 1) * step
    return src, src.x + offsets, src.y + offsets


def _psf_operators(cfg: ExperimentConfig, source: Optional[Position2D]):
    lam, tx, rx, _ = build_geometry(cfg)
    src, xs, ys = psf_grid_axes(cfg, source)
    cells = SceneModel(tuple(Position2D(x, y) for x in xs for y in ys),
                       np.zeros(xs.size * ys.size, dtype=np.complex128))
    point = SceneModel((src,), np.ones(1, dtype=np.complex128))
    fr = cfg.frame
    frame = make_frame(Constellation.from_name(fr.constellation), fr.k_tx, fr.t, fr.t1,
                       seed=derive_seed(cfg.seed, 3))
    p_tx = build_path_delay_matrix(tx, cells, lam)
    p_tx_src = build_path_delay_matrix(tx, point, lam)
    ops, ys_ = [], []
    for arr in rx:
        ops.append(linops.build_h_img(frame.x_t, p_tx, build_path_delay_matrix(arr, cells, lam)))
        y = forward_model(point, p_tx_src, build_path_delay_matrix(arr, point, lam), frame)
        ys_.append(linops.vec(y))
    return xs, ys, ops, ys_


def psf(cfg: ExperimentConfig, scheme: str, source: Optional[Position2D] = None,
        node: Optional[int] = None) -> PsfGrid:
    """Noiseless point-spread function on the configured grid.

    The grid cells are the hypothesized scatterer positions and the
    transmitted frame is known, so each scheme runs its imaging step only.
    ``scheme`` is ``"dsisd"``, ``"centralized"`` or ``"local"``; the last
    images with base station ``node`` alone (index into the receive arrays).
    """
    xs, ys, ops, meas = _psf_operators(cfg, source)
    shape = (xs.size, ys.size)
    if scheme == "centralized":
        f = linops.pinv_solve(np.vstack(ops), np.concatenate(meas))
        label = "centralized"
    elif scheme == "local":
        if node is None or not 0 <= node < len(ops):
            raise ValueError(f"local PSF needs a base-station index, got {node}")
        f = linops.pinv_solve(ops[node], meas[node])
        label = f"local{node}"
    elif scheme == "dsisd":
        graph = build_graph(cfg)
        node_ops = [None] * graph.node_count
        node_y = [None] * graph.node_count
        for k, n in enumerate(graph.base_stations):
            node_ops[n], node_y[n] = ops[k], meas[k]
        stacked = dsisd_imaging(node_ops, node_y, laplacian(graph), cfg.solver.rho_f,
                                cfg.solver.iterations)
        s = cfg.solver
        if s.report == "average":
            f = stacked[graph.base_stations].mean(axis=0)
        else:
            f = stacked[graph.base_stations[-1] if s.report_node < 0 else s.report_node]
        label = "dsisd"
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    grid = np.abs(f).reshape(shape)
    return PsfGrid(grid, xs, ys, mainlobe_widths(grid, xs, ys), label)


# ---------------------------------------------------------------------------
# convergence traces
# ---------------------------------------------------------------------------

def convergence(cfg: ExperimentConfig, snr_db: Optional[Sequence[float]] = None):
    """DSISD traces at each SNR on the same symbols and noise shape."""
    snrs = cfg.convergence_snr_db if snr_db is None else tuple(snr_db)
    out = []
    for snr in snrs:
        inst = make_instance(cfg, snr, cfg.seed)
        out.append((float(snr), solve(cfg, inst.problem, "dsisd").trace))
    return out
