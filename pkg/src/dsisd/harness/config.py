"""Experiment configuration: INI files parsed into validated dataclasses.

Schema (section.key, type, default)::

    [experiment] seed            int      0
    [geometry]   wavelength_m    float    0.125
                 spacing_wavelengths float 0.5
                 tx_center_m     x, y     -1.0, 0.0
                 tx_orientation_deg float 90
                 rx_radius_m     float    2.0
                 rx_angles_deg   list     0, -30, 45
                 rx_orientation_offset_deg float 90
                 scene_count     int      12
                 scene_half_width_m float 0.5
                 scene_seed      int      1
    [frame]      k_tx, k_rx, t, t1 (int), constellation (bpsk|qpsk)
    [graph]      topology        star_with_fusion|path|complete|explicit
                 edges           "i-j, ..." (explicit only)
                 fusion_nodes    "i, ..." (explicit only)
    [solver]     rho_x, rho_f    float
                 iterations      int      30
                 alternations    int      30
                 report_node     int      -1 (last base station)
                 report          node|average
                 updates         exact|jacobi
                 prox            float    1.0 (jacobi only)
    [run]        snr_db          float    30
    [sweep]      snr_db          list     trials int
    [convergence] snr_db         list
    [psf]        source_m        x, y     cells int  cell_wavelengths float
    [complexity] scatterers      int      (defaults to scene_count)

Base station ``n`` sits on a circle of radius ``rx_radius_m`` at angle
``rx_angles_deg[n]`` measured from the negative x axis, i.e. at
``(-R cos a, -R sin a)``, with its array axis rotated by
``a + rx_orientation_offset_deg``. ``snr_db`` accepts ``inf`` for noiseless runs.
"""
from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Tuple


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


@dataclass(frozen=True)
class GeometrySpec:
    wavelength_m: float = 0.125
    spacing_wavelengths: float = 0.5
    tx_center_m: Tuple[float, float] = (-1.0, 0.0)
    tx_orientation_deg: float = 90.0
    rx_radius_m: float = 2.0
    rx_angles_deg: Tuple[float, ...] = (0.0, -30.0, 45.0)
    rx_orientation_offset_deg: float = 90.0
    scene_count: int = 12
    scene_half_width_m: float = 0.5
    scene_seed: int = 1


@dataclass(frozen=True)
class FrameSpec:
    k_tx: int = 4
    k_rx: int = 8
    t: int = 100
    t1: int = 4
    constellation: str = "bpsk"


@dataclass(frozen=True)
class GraphSpec:
    topology: str = "star_with_fusion"
    edges: Tuple[Tuple[int, int], ...] = ()
    fusion_nodes: Tuple[int, ...] = ()


@dataclass(frozen=True)
class SolverSpec:
    rho_x: float = 1.0
    rho_f: float = 1.0
    iterations: int = 30
    alternations: int = 30
    report_node: int = -1
    report: str = "node"
    updates: str = "exact"
    prox: float = 1.0


@dataclass(frozen=True)
class SweepSpec:
    snr_db: Tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0)
    trials: int = 27


@dataclass(frozen=True)
class PsfSpec:
    source_m: Tuple[float, float] = (0.0, 0.0)
    cells: int = 41
    cell_wavelengths: float = 0.1


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: GeometrySpec = field(default_factory=GeometrySpec)
    frame: FrameSpec = field(default_factory=FrameSpec)
    graph: GraphSpec = field(default_factory=GraphSpec)
    solver: SolverSpec = field(default_factory=SolverSpec)
    run_snr_db: float = 30.0
    sweep: SweepSpec = field(default_factory=SweepSpec)
    convergence_snr_db: Tuple[float, ...] = (10.0, 20.0, 30.0)
    psf: PsfSpec = field(default_factory=PsfSpec)
    complexity_scatterers: Optional[int] = None
    seed: int = 0

    @property
    def n_base(self) -> int:
        return len(self.geometry.rx_angles_deg)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=int(seed))

    def config_hash(self) -> str:
        """SHA-256 prefix of the canonical content, excluding the seed."""
        body = asdict(self)
        body.pop("seed")
        text = json.dumps(body, sort_keys=True, default=_json_default)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def validate(self) -> "ExperimentConfig":
        g, fr, s = self.geometry, self.frame, self.solver
        _require(g.wavelength_m > 0, "geometry.wavelength_m", "must be positive")
        _require(g.spacing_wavelengths > 0, "geometry.spacing_wavelengths", "must be positive")
        _require(g.rx_radius_m > 0, "geometry.rx_radius_m", "must be positive")
        _require(len(g.rx_angles_deg) >= 1, "geometry.rx_angles_deg", "needs at least one angle")
        _require(g.scene_count >= 1, "geometry.scene_count", "must be at least 1")
        _require(g.scene_half_width_m > 0, "geometry.scene_half_width_m", "must be positive")
        _require(fr.k_tx >= 1, "frame.k_tx", "must be at least 1")
        _require(fr.k_rx >= 1, "frame.k_rx", "must be at least 1")
        _require(fr.t1 >= fr.k_tx, "frame.t1", f"must be >= k_tx = {fr.k_tx} (pilot rank)")
        _require(fr.t >= fr.t1, "frame.t", f"must be >= t1 = {fr.t1}")
        _require(fr.constellation in ("bpsk", "qpsk"), "frame.constellation",
                 "must be bpsk or qpsk")
        _require(self.graph.topology in ("star_with_fusion", "path", "complete", "explicit"),
                 "graph.topology", "must be star_with_fusion, path, complete or explicit")
        if self.graph.topology == "explicit":
            _require(len(self.graph.edges) > 0, "graph.edges", "explicit topology needs edges")
        _require(s.rho_x > 0, "solver.rho_x", "must be positive")
        _require(s.rho_f > 0, "solver.rho_f", "must be positive")
        _require(s.iterations >= 1, "solver.iterations", "must be at least 1")
        _require(s.alternations >= 0, "solver.alternations", "must be non-negative")
        _require(s.report in ("node", "average"), "solver.report", "must be node or average")
        _require(s.updates in ("exact", "jacobi"), "solver.updates", "must be exact or jacobi")
        _require(s.prox >= 0, "solver.prox", "must be non-negative")
        _require(self.sweep.trials >= 1, "sweep.trials", "must be at least 1")
        _require(len(self.sweep.snr_db) >= 1, "sweep.snr_db", "needs at least one value")
        _require(self.psf.cells >= 3 and self.psf.cells % 2 == 1, "psf.cells",
                 "must be an odd integer >= 3")
        _require(self.psf.cell_wavelengths > 0, "psf.cell_wavelengths", "must be positive")
        if self.complexity_scatterers is not None:
            _require(self.complexity_scatterers >= 1, "complexity.scatterers",
                     "must be at least 1")
        # graph construction checks connectivity and role counts
        from .experiments import build_graph
        try:
            graph = build_graph(self)
        except ValueError as exc:
            raise ConfigError("graph", str(exc)) from exc
        _require(len(graph.base_stations) == self.n_base, "graph",
                 f"graph has {len(graph.base_stations)} base stations, geometry has "
                 f"{self.n_base} receive arrays")
        if s.report_node >= 0:
            _require(s.report_node in graph.base_stations, "solver.report_node",
                     "must index a base-station node")
        return self


def _json_default(obj):
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    raise TypeError(type(obj))


def _require(ok: bool, path: str, message: str) -> None:
    if not ok:
        raise ConfigError(path, message)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def _float(text: str, path: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        return float(t)
    except ValueError:
        raise ConfigError(path, f"expected a number, got {text!r}") from None


def _int(text: str, path: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigError(path, f"expected an integer, got {text!r}") from None


def parse_float_list(text: str, path: str = "value") -> Tuple[float, ...]:
    items = [s for s in text.replace(";", ",").split(",") if s.strip()]
    return tuple(_float(s, path) for s in items)


def _pair(text: str, path: str) -> Tuple[float, float]:
    vals = parse_float_list(text, path)
    if len(vals) != 2:
        raise ConfigError(path, f"expected two comma-separated numbers, got {text!r}")
    return vals


def _edges(text: str, path: str):
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split("-")
        if len(parts) != 2:
            raise ConfigError(path, f"edge {item!r} is not of the form i-j")
        out.append((_int(parts[0], path), _int(parts[1], path)))
    return tuple(out)


_SCHEMA = {
    "experiment": {"seed": _int},
    "geometry": {
        "wavelength_m": _float, "spacing_wavelengths": _float, "tx_center_m": _pair,
        "tx_orientation_deg": _float, "rx_radius_m": _float,
        "rx_angles_deg": parse_float_list, "rx_orientation_offset_deg": _float,
        "scene_count": _int, "scene_half_width_m": _float, "scene_seed": _int,
    },
    "frame": {"k_tx": _int, "k_rx": _int, "t": _int, "t1": _int,
              "constellation": lambda s, p: s.strip().lower()},
    "graph": {"topology": lambda s, p: s.strip().lower(), "edges": _edges,
              "fusion_nodes": lambda s, p: tuple(int(v) for v in parse_float_list(s, p))},
    "solver": {"rho_x": _float, "rho_f": _float, "iterations": _int, "alternations": _int,
               "report_node": _int, "report": lambda s, p: s.strip().lower(),
               "updates": lambda s, p: s.strip().lower(), "prox": _float},
    "run": {"snr_db": _float},
    "sweep": {"snr_db": parse_float_list, "trials": _int},
    "convergence": {"snr_db": parse_float_list},
    "psf": {"source_m": _pair, "cells": _int, "cell_wavelengths": _float},
    "complexity": {"scatterers": _int},
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse INI text into a validated :class:`ExperimentConfig`."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc).splitlines()[0]) from None
    values = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(section, "unknown section")
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
            path = f"{section}.{key}"
            values[path] = _SCHEMA[section][key](raw, path)

    def pick(prefix):
        return {k.split(".", 1)[1]: v for k, v in values.items() if k.startswith(prefix + ".")}

    cfg = ExperimentConfig(
        geometry=GeometrySpec(**pick("geometry")),
        frame=FrameSpec(**pick("frame")),
        graph=GraphSpec(**pick("graph")),
        solver=SolverSpec(**pick("solver")),
        run_snr_db=values.get("run.snr_db", ExperimentConfig.run_snr_db),
        sweep=SweepSpec(**pick("sweep")),
        convergence_snr_db=values.get("convergence.snr_db",
                                      ExperimentConfig.convergence_snr_db),
        psf=PsfSpec(**pick("psf")),
        complexity_scatterers=values.get("complexity.scatterers"),
        seed=values.get("experiment.seed", 0),
    )
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError("--config", f"config file not found: {path}")
    return parse_config(path.read_text())


def default_config_path() -> Path:
    """Location of the bundled ``star3.cfg``."""
    return Path(__file__).resolve().parent.parent / "configs" / "star3.cfg"
