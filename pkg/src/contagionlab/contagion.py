"""Synchronous k-complex contagion.

A node becomes infected in round r+1 once at least k of its neighbours are
infected at the end of round r. Seeds are infected at round 0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .graphs import EvolvingGraph, Multigraph


class ContagionError(ValueError):
    pass


@dataclass(frozen=True)
class ContagionConfig:
    k: int
    seeds: tuple[int, ...]
    count_multiplicity: bool = False
    max_rounds: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.k < 1:
            raise ContagionError("k must be >= 1")
        if len(set(self.seeds)) < self.k:
            warnings.warn(f"{len(set(self.seeds))} seeds for k={self.k}: no spread possible", stacklevel=3)


@dataclass
class ContagionResult:
    rounds: np.ndarray  # infection round per node, index 0 unused, -1 if never infected
    rounds_to_fixation: int
    infected_count: int
    fully_infected: bool

    @property
    def infection_round(self) -> dict[int, int]:
        idx = np.flatnonzero(self.rounds >= 0)
        return dict(zip(idx.tolist(), self.rounds[idx].tolist()))

    def infected(self) -> np.ndarray:
        return np.flatnonzero(self.rounds >= 0)

    def frontier(self, r: int) -> np.ndarray:
        return np.flatnonzero(self.rounds == r)

    def __eq__(self, other):
        if not isinstance(other, ContagionResult):
            return NotImplemented
        return (
            np.array_equal(self.rounds, other.rounds)
            and self.rounds_to_fixation == other.rounds_to_fixation
            and self.infected_count == other.infected_count
            and self.fully_infected == other.fully_infected
        )


def _csr(n: int, src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Adjacency of directed pairs src -> dst as (indptr, indices)."""
    order = np.argsort(src, kind="stable")
    indices = dst[order]
    indptr = np.zeros(n + 2, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n + 1), out=indptr[1:])
    return indptr, indices


def _gather(indptr: np.ndarray, indices: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    starts = indptr[nodes]
    lens = indptr[nodes + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return np.empty(0, dtype=indices.dtype)
    offs = np.repeat(starts - np.cumsum(lens) + lens, lens) + np.arange(total)
    return indices[offs]


def _spread(n: int, indptr, indices, seeds: np.ndarray, k: int, max_rounds: int) -> ContagionResult:
    """Frontier propagation; ``indices`` lists whom a node exposes once infected."""
    rounds = np.full(n + 1, -1, dtype=np.int64)
    exposure = np.zeros(n + 1, dtype=np.int64)
    rounds[seeds] = 0
    frontier = seeds
    r = 0
    while frontier.size and r < max_rounds:
        hit = _gather(indptr, indices, frontier)
        if hit.size == 0:
            break
        exposure += np.bincount(hit, minlength=n + 1)
        cand = np.unique(hit)
        new = cand[(rounds[cand] < 0) & (exposure[cand] >= k)]
        if new.size == 0:
            break
        r += 1
        rounds[new] = r
        frontier = new
    infected = int((rounds[1:] >= 0).sum())
    return ContagionResult(rounds, int(rounds.max()), infected, infected == n)


def _check_seeds(n: int, seeds) -> np.ndarray:
    s = np.unique(np.asarray(seeds, dtype=np.int64))
    if s.size == 0:
        raise ContagionError("empty seed set")
    if s[0] < 1 or s[-1] > n:
        raise ContagionError(f"seed index outside 1..{n}")
    return s


def _edges_of(g) -> tuple[int, np.ndarray]:
    if isinstance(g, (EvolvingGraph, Multigraph)):
        return g.n, g.edge_array()
    n, edges = g
    return int(n), np.asarray(edges, dtype=np.int64).reshape(-1, 2)


def run(g: EvolvingGraph | Multigraph, cfg: ContagionConfig) -> ContagionResult:
    """k-complex contagion on the undirected (multi)graph ``g``."""
    n, edges = _edges_of(g)
    seeds = _check_seeds(n, cfg.seeds)
    a, b = edges[:, 0], edges[:, 1]
    keep = a != b
    a, b = a[keep], b[keep]
    if not cfg.count_multiplicity:
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        code = np.unique(lo * (n + 1) + hi)
        a, b = code // (n + 1), code % (n + 1)
    indptr, indices = _csr(n, np.concatenate([a, b]), np.concatenate([b, a]))
    max_rounds = n if cfg.max_rounds is None else cfg.max_rounds
    return _spread(n, indptr, indices, seeds, cfg.k, max_rounds)


def followed_edges(g: EvolvingGraph, k: int) -> np.ndarray:
    """(follower, target) pairs kept by the pruned process.

    Non-clique nodes keep slots 1..k. Clique node c keeps its backward clique
    neighbours among 1..k (fewer than k when c <= k).
    """
    if k > g.m:
        raise ContagionError(f"pruning needs k <= m, got k={k}, m={g.m}")
    pairs = [(c, t) for c in range(2, g.m + 2) for t in range(1, min(c - 1, k) + 1)]
    clique = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    v = np.repeat(g.sources, k)
    t = g.targets[:, :k].ravel().astype(np.int64)
    return np.concatenate([clique, np.stack([v, t], axis=1)])


def run_directed_pruned(g: EvolvingGraph, cfg: ContagionConfig) -> ContagionResult:
    """Directed upper-bound process: each node follows only its first k slots.

    A node is infected once at least k of its followed targets are infected
    (counting repeated targets only when ``count_multiplicity`` is set).
    """
    pairs = followed_edges(g, cfg.k)
    if not cfg.count_multiplicity:
        pairs = np.unique(pairs, axis=0)
    seeds = _check_seeds(g.n, cfg.seeds)
    # infection flows target -> follower
    indptr, indices = _csr(g.n, pairs[:, 1], pairs[:, 0])
    max_rounds = g.n if cfg.max_rounds is None else cfg.max_rounds
    return _spread(g.n, indptr, indices, seeds, cfg.k, max_rounds)


def bfs_layers(n: int, edges: np.ndarray, seeds: Iterable[int]) -> np.ndarray:
    """Multi-source BFS distance per node (-1 if unreachable); plain-Python oracle."""
    adj: list[list[int]] = [[] for _ in range(n + 1)]
    for a, b in np.asarray(edges).reshape(-1, 2).tolist():
        adj[a].append(b)
        adj[b].append(a)
    dist = [-1] * (n + 1)
    frontier = sorted(set(seeds))
    for s in frontier:
        dist[s] = 0
    d = 0
    while frontier:
        nxt = []
        for x in frontier:
            for y in adj[x]:
                if dist[y] < 0:
                    dist[y] = d + 1
                    nxt.append(y)
        frontier = nxt
        d += 1
    return np.asarray(dist, dtype=np.int64)


def parse_seed_spec(spec: str, n: int) -> list[int]:
    """``oldest:<c>``, ``list:<csv>`` or ``random:<s>:<rng-seed>``."""
    kind, _, rest = spec.partition(":")
    if kind == "oldest":
        return list(range(1, int(rest) + 1))
    if kind == "list":
        return [int(x) for x in rest.split(",") if x]
    if kind == "random":
        size, _, rs = rest.partition(":")
        rng = np.random.default_rng(int(rs or 0))
        return sorted((rng.choice(n, size=int(size), replace=False) + 1).tolist())
    raise ContagionError(f"bad seed spec {spec!r}")
