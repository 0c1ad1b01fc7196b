"""Problem instances: path-delay matrices, received blocks and topology."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import signals
from .errors import DimensionError
from .geometry import ArrayGeometry, SceneModel, Wavelength, build_path_delay_matrix
from .graph import BackhaulGraph, NodeRole, laplacian
from .signals import Constellation, NoiseSpec, SymbolFrame


@dataclass(frozen=True)
class Problem:
    """Everything the solvers see.

    ``p_rx`` and ``y`` are indexed by graph node; fusion nodes carry ``None``.
    Without a graph every entry is a base station and only the centralized
    solver applies.
    """

    p_tx: np.ndarray = field(repr=False)
    p_rx: tuple = field(repr=False)
    y: tuple = field(repr=False)
    pilots: np.ndarray = field(repr=False)
    constellation: Constellation
    graph: Optional[BackhaulGraph] = None

    def __post_init__(self):
        k_tx, m = self.p_tx.shape
        if self.pilots.shape[0] != k_tx:
            raise DimensionError(
                f"pilots have {self.pilots.shape[0]} rows, P_tx has {k_tx}")
        signals.check_pilots(self.pilots)
        if len(self.p_rx) != len(self.y):
            raise DimensionError("p_rx and y must list the same nodes")
        if self.graph is not None and len(self.p_rx) != self.graph.node_count:
            raise DimensionError(
                f"{len(self.p_rx)} node blocks for a {self.graph.node_count}-node graph")
        shape = None
        for n in self.base_stations:
            p, yn = self.p_rx[n], self.y[n]
            if p is None or yn is None:
                raise ValueError(f"base station {n} is missing P_rx or Y")
            if p.shape[1] != m:
                raise DimensionError(f"P_rx[{n}] has {p.shape[1]} columns, expected {m}")
            if yn.shape[0] != p.shape[0]:
                raise DimensionError(f"Y[{n}] rows do not match P_rx[{n}] rows")
            if shape is None:
                shape = yn.shape
            elif yn.shape != shape:
                raise DimensionError("received blocks must share dimensions")
        if shape is not None and shape[1] < self.pilots.shape[1]:
            raise DimensionError("frame shorter than the pilot block")

    @property
    def base_stations(self) -> list:
        if self.graph is None:
            return list(range(len(self.p_rx)))
        return self.graph.base_stations

    @property
    def node_count(self) -> int:
        return len(self.p_rx)

    @property
    def k_tx(self) -> int:
        return self.p_tx.shape[0]

    @property
    def m(self) -> int:
        return self.p_tx.shape[1]

    @property
    def k_rx(self) -> int:
        return self.p_rx[self.base_stations[0]].shape[0]

    @property
    def t(self) -> int:
        return self.y[self.base_stations[0]].shape[1]

    @property
    def t1(self) -> int:
        return self.pilots.shape[1]

    @property
    def t_data(self) -> int:
        return self.t - self.t1

    def laplacian(self) -> np.ndarray:
        if self.graph is None:
            raise ValueError("problem has no backhaul graph")
        return laplacian(self.graph)

    def is_fusion(self, n: int) -> bool:
        return self.graph is not None and self.graph.roles[n] is NodeRole.FUSION

    def x_full(self, x_data: np.ndarray) -> np.ndarray:
        return np.hstack([self.pilots, x_data])

    def restrict(self, nodes: Sequence[int]) -> "Problem":
        """Graph-free problem over a subset of base stations."""
        return Problem(self.p_tx, tuple(self.p_rx[n] for n in nodes),
                       tuple(self.y[n] for n in nodes), self.pilots,
                       self.constellation, None)

    def with_graph(self, graph: BackhaulGraph, placement: Sequence[int]) -> "Problem":
        """Attach ``graph``; ``placement[i]`` is the graph node of base station i."""
        bs = self.base_stations
        p_rx = [None] * graph.node_count
        y = [None] * graph.node_count
        for i, node in enumerate(placement):
            p_rx[node] = self.p_rx[bs[i]]
            y[node] = self.y[bs[i]]
        return Problem(self.p_tx, tuple(p_rx), tuple(y), self.pilots,
                       self.constellation, graph)


@dataclass(frozen=True)
class Instance:
    """A synthesized problem together with its ground truth."""

    problem: Problem
    scene: SceneModel
    frame: SymbolFrame
    noiseless: tuple = field(repr=False)


def synthesize(tx: ArrayGeometry, rx: Sequence[ArrayGeometry], scene: SceneModel,
               wavelength: Wavelength, frame: SymbolFrame, snr_db: float = math.inf,
               seed: int = 0, graph: Optional[BackhaulGraph] = None) -> Instance:
    """Build received blocks for each base station.

    Base station ``i`` (in ``rx`` order) gets noise seed ``seed + i``. With a
    graph, base stations fill its base-station nodes in index order.
    """
    p_tx = build_path_delay_matrix(tx, scene, wavelength)
    p_rx, ys, clean = [], [], []
    for i, arr in enumerate(rx):
        p = build_path_delay_matrix(arr, scene, wavelength)
        s = signals.forward_model(scene, p_tx, p, frame)
        p_rx.append(p)
        clean.append(s)
        ys.append(signals.add_noise(s, s, NoiseSpec(snr_db, seed + i)))
    base = Problem(p_tx, tuple(p_rx), tuple(ys), frame.pilots, frame.constellation)
    if graph is not None:
        if len(graph.base_stations) != len(rx):
            raise DimensionError(
                f"graph has {len(graph.base_stations)} base stations, {len(rx)} arrays given")
        base = base.with_graph(graph, graph.base_stations)
    return Instance(base, scene, frame, tuple(clean))
