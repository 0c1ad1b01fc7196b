"""Static undirected backhaul graphs and their Laplacians."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.sparse.csgraph

from .errors import ConnectivityError, DimensionError


class NodeRole(enum.Enum):
    BASE_STATION = "base_station"
    FUSION = "fusion"


@dataclass(frozen=True)
class BackhaulGraph:
    """Undirected graph on nodes ``0..node_count-1``.

    Edges are stored as sorted ``(i, j)`` pairs with ``i < j``. Construction
    rejects self-loops, out-of-range indices and disconnected graphs.
    """

    node_count: int
    edges: tuple
    roles: tuple

    def __post_init__(self):
        n = self.node_count
        if n < 1:
            raise ValueError("graph needs at least one node")
        norm = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) references a node outside 0..{n - 1}")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", tuple(sorted(norm)))
        roles = tuple(NodeRole(r) for r in self.roles)
        if len(roles) != n:
            raise ValueError(f"{len(roles)} roles given for {n} nodes")
        object.__setattr__(self, "roles", roles)
        if n > 1 and not _connected(n, self.edges):
            raise ConnectivityError("backhaul graph is disconnected")
        if n == 1:
            raise ConnectivityError(
                "a single node has no consensus constraints; use the centralized solver")

    def neighbors(self, i: int) -> list:
        return [b if a == i else a for a, b in self.edges if i in (a, b)]

    @property
    def base_stations(self) -> list:
        return [i for i, r in enumerate(self.roles) if r is NodeRole.BASE_STATION]

    @property
    def fusion_nodes(self) -> list:
        return [i for i, r in enumerate(self.roles) if r is NodeRole.FUSION]

    def degree(self, i: int) -> int:
        return len(self.neighbors(i))


def _connected(n, edges):
    if not edges:
        return False
    adj = np.zeros((n, n))
    for i, j in edges:
        adj[i, j] = adj[j, i] = 1
    count, _ = scipy.sparse.csgraph.connected_components(adj, directed=False)
    return count == 1


def star_with_fusion(n_base: int) -> BackhaulGraph:
    """Base stations ``0..n_base-1`` each linked to a fusion hub at index ``n_base``."""
    roles = [NodeRole.BASE_STATION] * n_base + [NodeRole.FUSION]
    return BackhaulGraph(n_base + 1, tuple((i, n_base) for i in range(n_base)), tuple(roles))


def path_graph(n: int) -> BackhaulGraph:
    return BackhaulGraph(n, tuple((i, i + 1) for i in range(n - 1)),
                         (NodeRole.BASE_STATION,) * n)


def complete_graph(n: int) -> BackhaulGraph:
    return BackhaulGraph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)),
                         (NodeRole.BASE_STATION,) * n)


def laplacian(g: BackhaulGraph) -> np.ndarray:
    """Combinatorial Laplacian ``D - A`` (unit edge weights)."""
    lap = np.zeros((g.node_count, g.node_count))
    for i, j in g.edges:
        lap[i, j] = lap[j, i] = -1.0
        lap[i, i] += 1.0
        lap[j, j] += 1.0
    return lap


def apply_laplacian(lap: np.ndarray, stacked: np.ndarray) -> np.ndarray:
    """``(L kron I) x`` for a node-major stack of shape (nodes, ...)."""
    stacked = np.asarray(stacked)
    if stacked.shape[0] != lap.shape[0]:
        raise DimensionError(
            f"{stacked.shape[0]} blocks given for a {lap.shape[0]}-node Laplacian")
    return np.tensordot(lap, stacked, axes=1)


def consensus_residual(lap: np.ndarray, stacked: np.ndarray, block_dim: int | None = None) -> float:
    """Frobenius norm of ``(L kron I) x``.

    ``stacked`` is either node-major ``(nodes, ...)`` or a flat block vector
    of ``nodes * block_dim`` rows.
    """
    stacked = np.asarray(stacked)
    if block_dim is not None:
        if stacked.shape[0] != lap.shape[0] * block_dim:
            raise DimensionError(
                f"{stacked.shape[0]} rows is not {lap.shape[0]} blocks of {block_dim}")
        stacked = stacked.reshape((lap.shape[0], block_dim) + stacked.shape[1:])
    r = apply_laplacian(lap, stacked)
    return float(np.sqrt(np.sum(np.abs(r) ** 2)))


def laplacian_spectrum(lap: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(lap)


def fiedler_value(lap: np.ndarray) -> float:
    """Second-smallest Laplacian eigenvalue (algebraic connectivity)."""
    ev = laplacian_spectrum(lap)
    scale = max(1.0, float(np.abs(ev).max()))
    if ev.shape[0] < 2 or ev[1] <= 1e-10 * scale:
        raise ConnectivityError("graph is disconnected (lambda_2 = 0)")
    return float(ev[1])


def lt_l_extremes(lap: np.ndarray) -> tuple:
    """``(lambda_min(L^T L), smallest nonzero eigenvalue of L^T L)``.

    The first is always zero for a Laplacian; the second equals
    ``fiedler_value(L) ** 2``.
    """
    ev = np.linalg.eigvalsh(lap.T @ lap)
    scale = max(1.0, float(ev.max()))
    nonzero = ev[ev > 1e-10 * scale]
    return float(max(ev[0], 0.0)), float(nonzero[0]) if nonzero.size else 0.0
