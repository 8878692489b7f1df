"""Communication topologies and gossip matrices.

A gossip matrix ``P`` is a dense, doubly stochastic, symmetric matrix whose
sparsity follows the graph edges. The constructions here follow the
normalized-Laplacian recipe::

    regular graphs (common degree d):   P = I - d/(d+1) * L_norm
    non-regular graphs (max degree D):  P = I - 1/(D+1) * D^{1/2} L_norm D^{1/2}

with ``L_norm = I - D^{-1/2} A D^{-1/2}``. :func:`cycle_half_matrix` builds the
zero-diagonal circulant cycle matrix whose spectrum is ``cos(2 pi j / N)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Literal

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DisconnectedGraphError, NonSquareGridError, NonSymmetricMatrixError

__all__ = [
    "Topology",
    "GossipMatrix",
    "SpectralInfo",
    "ValidationReport",
    "build_topology",
    "build_gossip_matrix",
    "cycle_half_matrix",
    "spectral_summary",
    "validate_gossip",
    "load_edge_list",
]

TopologyKind = Literal["cycle", "grid", "complete", "custom"]

STOCHASTIC_TOL = 1e-12
SPECTRUM_TOL = 1e-9


@dataclass(frozen=True)
class Topology:
    kind: str
    node_count: int
    edges: frozenset[tuple[int, int]]

    @property
    def degree(self) -> dict[int, int]:
        deg = {i: 0 for i in range(self.node_count)}
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def neighbors(self, node: int) -> list[int]:
        """Sorted neighbors of ``node``, excluding the node itself."""
        out = [v if u == node else u for u, v in self.edges if node in (u, v)]
        return sorted(out)

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.node_count, self.node_count))
        for u, v in self.edges:
            adj[u, v] = adj[v, u] = 1.0
        return adj

    def is_regular(self) -> bool:
        return len(set(self.degree.values())) <= 1


@dataclass(frozen=True)
class SpectralInfo:
    lambda2_abs: float
    spectral_gap: float
    full_spectrum: np.ndarray


@dataclass(frozen=True, eq=False)
class GossipMatrix:
    """Dense gossip matrix with its spectrum computed lazily and cached."""

    entries: np.ndarray
    topology: Topology | None = None
    symmetric: bool = True

    def __post_init__(self):
        arr = np.array(self.entries, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def spectrum(self) -> SpectralInfo:
        return spectral_summary(self)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.spectrum.full_spectrum

    @property
    def lambda2_abs(self) -> float:
        return self.spectrum.lambda2_abs

    def row(self, i: int) -> dict[int, float]:
        """Nonzero entries of row ``i`` as ``{j: P_ij}`` (self-weight included)."""
        nz = np.flatnonzero(self.entries[i])
        return {int(j): float(self.entries[i, j]) for j in nz}


@dataclass
class ValidationReport:
    checks: dict[str, bool]
    details: dict[str, float]

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def failed(self) -> list[str]:
        return [name for name, passed in self.checks.items() if not passed]


def _normalize_edges(n: int, edges: Iterable[tuple[int, int]]) -> frozenset[tuple[int, int]]:
    out = set()
    for u, v in edges:
        u, v = int(u), int(v)
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u}, {v}) out of range for {n} nodes")
        if u == v:
            continue
        out.add((min(u, v), max(u, v)))
    return frozenset(out)


def _is_connected(n: int, edges: frozenset[tuple[int, int]]) -> bool:
    if n == 1:
        return True
    if not edges:
        return False
    rows, cols = zip(*edges)
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    n_comp, _ = connected_components(graph, directed=False)
    return n_comp == 1


def build_topology(
    kind: TopologyKind, n: int, edges: Iterable[tuple[int, int]] | None = None
) -> Topology:
    """Build a connected topology of the given shape.

    ``grid`` is a ``sqrt(n) x sqrt(n)`` lattice without wraparound. ``custom``
    takes an explicit edge list; self-loops are dropped.
    """
    if n < 1:
        raise ValueError(f"node count must be >= 1, got {n}")
    if kind == "cycle":
        if n == 1:
            pairs = []
        elif n == 2:
            pairs = [(0, 1)]
        else:
            pairs = [(i, (i + 1) % n) for i in range(n)]
    elif kind == "complete":
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    elif kind == "grid":
        side = math.isqrt(n)
        if side * side != n:
            raise NonSquareGridError(f"grid needs a perfect-square node count, got {n}")
        pairs = []
        for r in range(side):
            for c in range(side):
                i = r * side + c
                if c + 1 < side:
                    pairs.append((i, i + 1))
                if r + 1 < side:
                    pairs.append((i, i + side))
    elif kind == "custom":
        if edges is None:
            raise ValueError("custom topology requires an edge list")
        pairs = list(edges)
    else:
        raise ValueError(f"unknown topology kind {kind!r}")

    edge_set = _normalize_edges(n, pairs)
    if not _is_connected(n, edge_set):
        raise DisconnectedGraphError(f"{kind} topology on {n} nodes is not connected")
    return Topology(kind=kind, node_count=n, edges=edge_set)


def load_edge_list(path: str | Path, n: int | None = None) -> Topology:
    """Load a custom topology from a text file of ``u v`` pairs (0-indexed).

    Blank lines and ``#`` comments are ignored. ``n`` defaults to one more
    than the largest node id.
    """
    pairs = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'u v', got {line!r}")
        pairs.append((int(parts[0]), int(parts[1])))
    if n is None:
        n = 1 + max((max(p) for p in pairs), default=0)
    return build_topology("custom", n, pairs)


def build_gossip_matrix(topology: Topology) -> GossipMatrix:
    n = topology.node_count
    if n == 1:
        return GossipMatrix(np.ones((1, 1)), topology)
    adj = topology.adjacency()
    deg = adj.sum(axis=1)
    d_isqrt = np.diag(1.0 / np.sqrt(deg))
    lap = np.eye(n) - d_isqrt @ adj @ d_isqrt
    if topology.is_regular():
        delta = deg[0]
        p = np.eye(n) - (delta / (delta + 1.0)) * lap
    else:
        d_sqrt = np.diag(np.sqrt(deg))
        p = np.eye(n) - (1.0 / (deg.max() + 1.0)) * (d_sqrt @ lap @ d_sqrt)
    # Symmetrize away rounding and clear structural zeros.
    p = 0.5 * (p + p.T)
    mask = (adj > 0) | np.eye(n, dtype=bool)
    p[~mask] = 0.0
    return GossipMatrix(p, topology)


def cycle_half_matrix(n: int) -> GossipMatrix:
    """Cycle matrix with ``P_ij = 1/2`` on neighbors and zero diagonal.

    Its eigenvalues are ``cos(2 pi j / n)``. For even ``n`` it has eigenvalue
    -1 and is not a valid gossip matrix.
    """
    if n < 3:
        raise ValueError("cycle_half_matrix needs n >= 3")
    p = np.zeros((n, n))
    idx = np.arange(n)
    p[idx, (idx + 1) % n] = 0.5
    p[idx, (idx - 1) % n] = 0.5
    return GossipMatrix(p, build_topology("cycle", n))


def spectral_summary(matrix: GossipMatrix | np.ndarray) -> SpectralInfo:
    """Eigenvalues sorted by magnitude (descending) and the spectral gap."""
    if isinstance(matrix, GossipMatrix):
        p, flagged = matrix.entries, matrix.symmetric
    else:
        p, flagged = np.asarray(matrix, dtype=np.float64), True
    if not flagged or np.max(np.abs(p - p.T), initial=0.0) > 1e-12:
        raise NonSymmetricMatrixError("spectral_summary only handles symmetric matrices")
    ev = np.linalg.eigvalsh(p)
    # Stable sort: magnitude descending, ties broken by larger signed value.
    order = np.lexsort((-ev, -np.abs(ev)))
    ev = ev[order]
    lam2 = float(abs(ev[1])) if len(ev) > 1 else 0.0
    return SpectralInfo(lambda2_abs=lam2, spectral_gap=1.0 - lam2, full_spectrum=ev)


def validate_gossip(
    matrix: GossipMatrix,
    tol: float = STOCHASTIC_TOL,
    spectrum_tol: float = SPECTRUM_TOL,
) -> ValidationReport:
    p = matrix.entries
    n = p.shape[0]
    checks: dict[str, bool] = {}
    details: dict[str, float] = {}

    if matrix.topology is not None:
        allowed = matrix.topology.adjacency() > 0
        allowed |= np.eye(n, dtype=bool)
        checks["sparsity"] = bool(np.all(p[~allowed] == 0.0))
    else:
        checks["sparsity"] = True

    row_err = float(np.max(np.abs(p.sum(axis=1) - 1.0)))
    col_err = float(np.max(np.abs(p.sum(axis=0) - 1.0)))
    details["row_sum_error"] = row_err
    details["col_sum_error"] = col_err
    checks["row_sums"] = row_err <= tol
    checks["col_sums"] = col_err <= tol

    sym_err = float(np.max(np.abs(p - p.T)))
    details["symmetry_error"] = sym_err
    if sym_err <= 1e-12:
        ev = np.linalg.eigvalsh(p)
        checks["real_spectrum"] = True
    else:
        ev_c = np.linalg.eigvals(p)
        checks["real_spectrum"] = bool(np.max(np.abs(ev_c.imag)) <= spectrum_tol)
        ev = ev_c.real
    mags = np.sort(np.abs(ev))[::-1]
    lam2 = float(mags[1]) if n > 1 else 0.0
    details["lambda2_abs"] = lam2
    details["lambda1_error"] = float(abs(mags[0] - 1.0))
    checks["lambda2_below_one"] = lam2 < 1.0 - spectrum_tol
    return ValidationReport(checks=checks, details=details)
