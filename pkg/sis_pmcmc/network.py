"""Contact networks: neighbourhood sets N_n and degrees D(n)."""

from __future__ import annotations

import logging
import os
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numba as nb
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ContractViolation, DataLoadError

logger = logging.getLogger("sis-pmcmc.network")

__all__ = [
    "Network",
    "fully_connected",
    "block_network",
    "grid8_network",
    "load_edge_list",
]


@nb.njit(parallel=True, cache=True)
def _csr_infected_counts(states, indptr, indices):  # pragma: no cover
    n_particles, n_agents = states.shape
    out = np.zeros((n_particles, n_agents), dtype=np.int64)
    for p in nb.prange(n_particles):
        for n in range(n_agents):
            c = 0
            for j in range(indptr[n], indptr[n + 1]):
                c += states[p, indices[j]]
            out[p, n] = c
    return out


@nb.njit(nogil=True, cache=True)
def _csr_infected_counts_serial(states, indptr, indices):  # pragma: no cover
    n_particles, n_agents = states.shape
    out = np.zeros((n_particles, n_agents), dtype=np.int64)
    for p in range(n_particles):
        for n in range(n_agents):
            c = 0
            for j in range(indptr[n], indptr[n + 1]):
                c += states[p, indices[j]]
            out[p, n] = c
    return out


class Network:
    """Undirected contact structure without self-loops.

    Networks made of complete blocks (fully connected, block) keep their block
    labels so infected-neighbour counts come from block totals, O(1) per agent.
    Any other topology is stored as CSR adjacency.
    """

    def __init__(
        self,
        n_agents: int,
        *,
        indptr: Optional[np.ndarray] = None,
        indices: Optional[np.ndarray] = None,
        blocks: Optional[np.ndarray] = None,
        kind: str = "custom",
    ):
        if (blocks is None) == (indptr is None):
            raise ContractViolation("Network needs either block labels or CSR adjacency")
        self.n_agents = int(n_agents)
        self.kind = kind
        if blocks is not None:
            self.blocks: Optional[np.ndarray] = np.asarray(blocks, dtype=np.int64)
            sizes = np.bincount(self.blocks)
            self.block_sizes = sizes
            self.degrees = (sizes[self.blocks] - 1).astype(np.int64)
            self._block_onehot = np.zeros((self.n_agents, sizes.size))
            self._block_onehot[np.arange(self.n_agents), self.blocks] = 1.0
        else:
            self.blocks = None
            self.__dict__["csr"] = (np.asarray(indptr, dtype=np.int64), np.asarray(indices, dtype=np.int64))
            self.degrees = np.diff(self.csr[0])

    @cached_property
    def csr(self) -> Tuple[np.ndarray, np.ndarray]:
        """(indptr, indices); materialised lazily for block networks."""
        assert self.blocks is not None
        members = {b: np.flatnonzero(self.blocks == b) for b in range(self.block_sizes.size)}
        parts = []
        for n in range(self.n_agents):
            m = members[self.blocks[n]]
            parts.append(m[m != n])
        indptr = np.zeros(self.n_agents + 1, dtype=np.int64)
        indptr[1:] = np.cumsum(self.degrees)
        indices = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
        return indptr, indices

    @property
    def neighbor_lists(self) -> List[np.ndarray]:
        indptr, indices = self.csr
        return [indices[indptr[n]:indptr[n + 1]] for n in range(self.n_agents)]

    def neighbors(self, n: int) -> np.ndarray:
        if not 0 <= n < self.n_agents:
            raise ContractViolation(f"agent index {n} out of range [0, {self.n_agents})")
        if self.blocks is not None:
            m = np.flatnonzero(self.blocks == self.blocks[n])
            return m[m != n]
        indptr, indices = self.csr
        return indices[indptr[n]:indptr[n + 1]]

    def infected_neighbor_counts(self, states: np.ndarray) -> np.ndarray:
        """Infected-neighbour count per agent, for one state vector or a (P, N) ensemble."""
        squeeze = states.ndim == 1
        ensemble = states[None, :] if squeeze else states
        if ensemble.shape[1] != self.n_agents:
            raise ContractViolation(
                f"state width {ensemble.shape[1]} does not match network size {self.n_agents}"
            )
        if self.blocks is not None:
            totals = ensemble @ self._block_onehot
            counts = np.rint(totals).astype(np.int64)[:, self.blocks] - ensemble
        else:
            indptr, indices = self.csr
            # 単一状態はスレッドから呼ばれるため並列カーネルを使わない
            kernel = _csr_infected_counts_serial if squeeze else _csr_infected_counts
            counts = kernel(np.ascontiguousarray(ensemble, dtype=np.uint8), indptr, indices)
        return counts[0] if squeeze else counts

    def to_sparse(self) -> csr_matrix:
        indptr, indices = self.csr
        data = np.ones(indices.size, dtype=np.int8)
        return csr_matrix((data, indices, indptr), shape=(self.n_agents, self.n_agents))

    def n_components(self) -> int:
        if self.blocks is not None:
            return int(self.block_sizes.size)
        count, _ = connected_components(self.to_sparse(), directed=False)
        return int(count)

    def is_symmetric(self) -> bool:
        adjacency = self.to_sparse()
        return (adjacency != adjacency.T).nnz == 0

    def has_self_loops(self) -> bool:
        return bool(self.to_sparse().diagonal().any())


def _from_edges(n_agents: int, src: np.ndarray, dst: np.ndarray, kind: str) -> Network:
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    keep = src != dst
    both_src = np.concatenate([src[keep], dst[keep]])
    both_dst = np.concatenate([dst[keep], src[keep]])
    codes = np.unique(both_src * n_agents + both_dst)
    rows, cols = np.divmod(codes, n_agents)
    indptr = np.zeros(n_agents + 1, dtype=np.int64)
    indptr[1:] = np.cumsum(np.bincount(rows, minlength=n_agents))
    return Network(n_agents, indptr=indptr, indices=cols, kind=kind)


def fully_connected(n_agents: int) -> Network:
    if n_agents < 2:
        raise ContractViolation(f"fully connected network needs >= 2 agents, got {n_agents}")
    return Network(n_agents, blocks=np.zeros(n_agents, dtype=np.int64), kind="fully_connected")


def block_network(group_labels: Sequence) -> Network:
    """Complete graph inside each group, no edges between groups."""
    labels = np.asarray(group_labels)
    if labels.ndim != 1 or labels.size == 0:
        raise ContractViolation("group_labels must be a non-empty 1-d sequence")
    uniques, codes, sizes = np.unique(labels, return_inverse=True, return_counts=True)
    small = uniques[sizes < 2]
    if small.size:
        raise ContractViolation(f"every group needs >= 2 agents; undersized groups: {small.tolist()}")
    logger.info(
        "built block network",
        extra={"groups": dict(zip(map(str, uniques.tolist()), sizes.tolist()))},
    )
    return Network(labels.size, blocks=codes, kind="block")


def grid8_network(rows: int, cols: int, wrap: bool = True, n_agents: Optional[int] = None) -> Network:
    """Moore neighbourhood on a rows x cols lattice; agent index = r * cols + c."""
    if rows < 1 or cols < 1:
        raise ContractViolation("grid dimensions must be positive")
    if n_agents is not None and rows * cols != n_agents:
        raise ContractViolation(f"grid {rows}x{cols} does not hold {n_agents} agents")
    if wrap and (rows < 3 or cols < 3):
        raise ContractViolation("wrapped grid needs rows, cols >= 3")

    r, c = np.divmod(np.arange(rows * cols), cols)
    src, dst = [], []
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            rr, cc = r + dr, c + dc
            if wrap:
                rr, cc = rr % rows, cc % cols
                valid = np.ones(r.size, dtype=bool)
            else:
                valid = (rr >= 0) & (rr < rows) & (cc >= 0) & (cc < cols)
            src.append((r * cols + c)[valid])
            dst.append((rr * cols + cc)[valid])
    return _from_edges(rows * cols, np.concatenate(src), np.concatenate(dst), kind="grid8")


def load_edge_list(path: str, n_agents: int) -> Network:
    """Whitespace-separated two-column integer edge list; '#' starts a comment."""
    if not os.path.exists(path):
        raise DataLoadError(path, "edge list file not found")
    try:
        edges = np.loadtxt(path, dtype=np.int64, comments="#", ndmin=2)
    except ValueError as exc:
        raise DataLoadError(path, f"unparseable edge list: {exc}") from exc
    if edges.size == 0:
        return _from_edges(n_agents, np.zeros(0), np.zeros(0), kind="edge_list")
    if edges.shape[1] != 2:
        raise DataLoadError(path, f"expected 2 columns, found {edges.shape[1]}")
    if edges.min() < 0 or edges.max() >= n_agents:
        raise DataLoadError(path, f"agent index outside [0, {n_agents})")
    loops = int(np.count_nonzero(edges[:, 0] == edges[:, 1]))
    if loops:
        logger.warning(f"Dropping {loops} self-loop(s) from {path}")
    return _from_edges(n_agents, edges[:, 0], edges[:, 1], kind="edge_list")
