"""Time-evolving random graphs: preferential attachment and copy models.

Nodes are labelled 1..n in arrival order. Nodes 1..m+1 form the initial
clique; every later node v owns m outgoing slots, slot j (1-based) landing
on an earlier node u < v. A slot is therefore an oriented triple (u, v, j).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class ConfigError(ValueError):
    pass


class Model(str, enum.Enum):
    PA_INDEPENDENT = "PA_INDEPENDENT"
    PA_SEQUENTIAL = "PA_SEQUENTIAL"
    PA_CONDITIONAL = "PA_CONDITIONAL"
    CM_INDEPENDENT = "CM_INDEPENDENT"
    CM_CONDITIONED = "CM_CONDITIONED"

    @property
    def is_pa(self) -> bool:
        return self.value.startswith("PA_")


@dataclass(frozen=True)
class GenConfig:
    model: Model
    n: int
    m: int
    p: float
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        if not isinstance(self.m, (int, np.integer)) or self.m < 1:
            raise ConfigError(f"m must be a positive integer, got {self.m!r}")
        if not isinstance(self.n, (int, np.integer)) or self.n < self.m + 2:
            raise ConfigError(f"n must be >= m + 2 = {self.m + 2}, got {self.n!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"p must lie in [0, 1], got {self.p!r}")


@dataclass(frozen=True, order=True)
class OrientedTriple:
    u: int
    v: int
    j: int

    def __post_init__(self):
        if not self.u < self.v:
            raise ValueError(f"triple {self} is not oriented (needs u < v)")


@dataclass
class Multigraph:
    """Plain undirected multigraph on nodes 1..n; ``edges`` is an (E, 2) int array."""

    n: int
    edges: np.ndarray

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Multigraph":
        arr = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if arr.size and (arr.min() < 1 or arr.max() > n):
            raise ValueError("edge endpoint outside 1..n")
        return cls(n=n, edges=arr)

    def edge_array(self) -> np.ndarray:
        return self.edges

    def degrees(self) -> np.ndarray:
        """Degree of every node, indexed 0..n (entry 0 unused)."""
        return np.bincount(self.edges.ravel(), minlength=self.n + 1)


@dataclass
class EvolvingGraph:
    """Arrival-ordered multigraph.

    ``targets[r, j-1]`` is the node hit by slot j of node ``v = m + 2 + r``.
    """

    n: int
    m: int
    targets: np.ndarray
    model: Model = Model.PA_INDEPENDENT
    p: float = 1.0
    seed: int = 0
    _edges: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def clique_size(self) -> int:
        return self.m + 1

    @property
    def sources(self) -> np.ndarray:
        return np.arange(self.m + 2, self.n + 1, dtype=np.int64)

    def clique_edges(self) -> np.ndarray:
        iu, ju = np.triu_indices(self.m + 1, k=1)
        return np.stack([iu + 1, ju + 1], axis=1).astype(np.int64)

    def slot_edges(self) -> np.ndarray:
        """(u, v) pairs of all slot edges, row-major in (v, j)."""
        v = np.repeat(self.sources, self.m)
        return np.stack([self.targets.ravel().astype(np.int64), v], axis=1)

    def edge_array(self) -> np.ndarray:
        if self._edges is None:
            self._edges = np.concatenate([self.clique_edges(), self.slot_edges()])
        return self._edges

    def to_multigraph(self) -> Multigraph:
        return Multigraph(self.n, self.edge_array())

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edge_array().ravel(), minlength=self.n + 1)

    def triples(self) -> np.ndarray:
        """All oriented slot triples as an (n_slots, 3) array of (u, v, j)."""
        v = np.repeat(self.sources, self.m)
        j = np.tile(np.arange(1, self.m + 1), len(self.sources))
        return np.stack([self.targets.ravel().astype(np.int64), v, j], axis=1)

    def out_slots(self, node: int) -> list[int]:
        """Targets of ``node``'s slots; clique nodes list their clique neighbours ascending."""
        if node <= self.m + 1:
            return [c for c in range(1, self.m + 2) if c != node]
        return [int(t) for t in self.targets[node - self.m - 2]]

    def check(self) -> None:
        """Assert the structural invariants shared by all models."""
        assert self.targets.shape == (self.n - self.m - 1, self.m)
        if self.targets.size:
            v = self.sources[:, None]
            assert (self.targets >= 1).all() and (self.targets < v).all()
        if self.model in (Model.PA_CONDITIONAL, Model.CM_CONDITIONED) and self.targets.size:
            s = np.sort(self.targets, axis=1)
            assert (np.diff(s, axis=1) != 0).all(), "duplicate target in a simple out-neighbourhood"


# --- generation -------------------------------------------------------------


def generate(cfg: GenConfig) -> EvolvingGraph:
    """Draw one graph from ``cfg.model``; deterministic in ``cfg``."""
    rng = np.random.default_rng(cfg.seed)
    gen = _GENERATORS[cfg.model]
    targets = gen(cfg.n, cfg.m, cfg.p, rng)
    g = EvolvingGraph(cfg.n, cfg.m, targets, cfg.model, float(cfg.p), cfg.seed)
    return g


def _resolve(value: np.ndarray, ptr: np.ndarray) -> np.ndarray:
    """Pointer jumping: entries with value 0 copy the value of slot ``ptr``.

    Pointers always refer to strictly earlier slots, so chains terminate.
    """
    value = value.copy()
    ptr = ptr.copy()
    todo = np.flatnonzero(value == 0)
    while todo.size:
        p = ptr[todo]
        hit = value[p]
        done = hit != 0
        value[todo[done]] = hit[done]
        todo = todo[~done]
        ptr[todo] = ptr[p[~done]]
    return value


def _uniform_targets(v: np.ndarray, u01: np.ndarray) -> np.ndarray:
    # uniform over the v - 1 existing nodes
    return np.minimum((u01 * (v - 1)).astype(np.int64), v - 2) + 1


def _pa_tape(n: int, m: int, p: float, rng: np.random.Generator, sequential: bool) -> np.ndarray:
    """Vectorised PA generation through the degree tape.

    The tape lists one entry per edge endpoint, so a uniform position on it
    is a degree-proportional node. Clique endpoints come first (each clique
    node m times); node v then contributes its m targets followed by m copies
    of itself. Independent slots of v only see the tape up to v's block;
    sequential slot j also sees the targets of v's first j-1 slots.
    """
    rows = n - m - 1
    clique_len = m * (m + 1)
    r = np.repeat(np.arange(rows, dtype=np.int64), m)
    j = np.tile(np.arange(m, dtype=np.int64), rows)
    v = r + m + 2
    pref = rng.random(rows * m) < p
    u01 = rng.random(rows * m)
    base = clique_len + 2 * m * r
    length = base + (j if sequential else 0)
    pos = np.minimum((u01 * length).astype(np.int64), length - 1)

    value = np.zeros(rows * m, dtype=np.int64)
    ptr = np.zeros(rows * m, dtype=np.int64)
    unif = ~pref
    value[unif] = _uniform_targets(v[unif], u01[unif])

    in_clique = pref & (pos < clique_len)
    value[in_clique] = pos[in_clique] // m + 1
    rest = pref & ~in_clique
    off = pos[rest] - clique_len
    r2 = off // (2 * m)
    rem = off % (2 * m)
    # block of node r2: m targets then m copies of the node itself
    is_target = rem < m
    vals = np.where(is_target, 0, r2 + m + 2)
    value[rest] = vals
    ptr[rest] = np.where(is_target, r2 * m + rem, 0)
    return _resolve(value, ptr).reshape(rows, m)


def _gen_pa_independent(n, m, p, rng):
    return _pa_tape(n, m, p, rng, sequential=False)


def _gen_pa_sequential(n, m, p, rng):
    return _pa_tape(n, m, p, rng, sequential=True)


def _gen_cm_independent(n, m, p, rng):
    rows = n - m - 1
    v = np.arange(m + 2, n + 1, dtype=np.int64)
    proto = _uniform_targets(v, rng.random(rows))
    copy = rng.random((rows, m)) < p
    u01 = rng.random((rows, m))
    vv = np.repeat(v, m).reshape(rows, m)
    jj = np.broadcast_to(np.arange(m, dtype=np.int64), (rows, m))
    zz = np.broadcast_to(proto[:, None], (rows, m))

    value = np.where(copy, 0, _uniform_targets(vv, u01))
    ptr = np.zeros((rows, m), dtype=np.int64)
    # clique prototypes: slot j is the (j+1)-th smallest clique neighbour
    cz = copy & (zz <= m + 1)
    value[cz] = np.where(jj[cz] + 1 < zz[cz], jj[cz] + 1, jj[cz] + 2)
    lz = copy & (zz > m + 1)
    ptr[lz] = (zz[lz] - m - 2) * m + jj[lz]
    return _resolve(value.ravel(), ptr.ravel()).reshape(rows, m)


class _Uniforms:
    """Buffered stream of U(0,1) draws for the sequential generators."""

    def __init__(self, rng: np.random.Generator, block: int = 1 << 16):
        self.rng = rng
        self.block = block
        self.buf: list[float] = []
        self.i = 0

    def __call__(self) -> float:
        if self.i >= len(self.buf):
            self.buf = self.rng.random(self.block).tolist()
            self.i = 0
        x = self.buf[self.i]
        self.i += 1
        return x


def _gen_pa_conditional(n, m, p, rng):
    draw = _Uniforms(rng)
    tape = np.empty(m * (m + 1) + 2 * m * (n - m - 1), dtype=np.int64)
    tape[: m * (m + 1)] = np.repeat(np.arange(1, m + 2), m)
    tape_len = m * (m + 1)
    targets = np.empty((n - m - 1, m), dtype=np.int64)
    for v in range(m + 2, n + 1):
        chosen: list[int] = []
        for _ in range(m):
            while True:
                if draw() < p:
                    w = int(tape[min(int(draw() * tape_len), tape_len - 1)])
                else:
                    w = min(int(draw() * (v - 1)), v - 2) + 1
                if w not in chosen:
                    break
            chosen.append(w)
        r = v - m - 2
        targets[r] = chosen
        tape[tape_len : tape_len + m] = chosen
        tape[tape_len + m : tape_len + 2 * m] = v
        tape_len += 2 * m
    return targets


def _gen_cm_conditioned(n, m, p, rng):
    draw = _Uniforms(rng)
    targets = np.empty((n - m - 1, m), dtype=np.int64)
    clique_slots = [[c for c in range(1, m + 2) if c != z] for z in range(m + 2)]

    def slots_of(z: int) -> list[int]:
        if z <= m + 1:
            return clique_slots[z]
        return targets[z - m - 2].tolist()

    for v in range(m + 2, n + 1):
        z = min(int(draw() * (v - 1)), v - 2) + 1
        zs = slots_of(z)
        chosen: list[int] = []
        for i in range(m):
            w = 0
            if draw() < p:
                for step in range(m):
                    cand = zs[(i + step) % m]
                    if cand not in chosen:
                        w = cand
                        break
            if w == 0:
                # uniform without replacement among earlier nodes
                while True:
                    w = min(int(draw() * (v - 1)), v - 2) + 1
                    if w not in chosen:
                        break
            chosen.append(w)
        targets[v - m - 2] = chosen
    return targets


_GENERATORS = {
    Model.PA_INDEPENDENT: _gen_pa_independent,
    Model.PA_SEQUENTIAL: _gen_pa_sequential,
    Model.PA_CONDITIONAL: _gen_pa_conditional,
    Model.CM_INDEPENDENT: _gen_cm_independent,
    Model.CM_CONDITIONED: _gen_cm_conditioned,
}


# --- stages and orderings ---------------------------------------------------

def _stage_upper(i: int) -> int:
    """Largest node index in stage i >= 1, i.e. floor(1.5^(i+1)), computed exactly."""
    return 3 ** (i + 1) // 2 ** (i + 1)


def stage_of(s: int, n: int | None = None) -> int:
    """Stage index of node ``s``: S_0 = {1, 2}, S_i = {s : 1.5^i < s <= 1.5^(i+1)}."""
    if s < 1 or (n is not None and s > n):
        raise IndexError(f"node index {s} out of range")
    if s <= 2:
        return 0
    i = 1
    while _stage_upper(i) < s:
        i += 1
    return i


def stage_array(n: int) -> np.ndarray:
    """Stage of every node 0..n (entry 0 unused, set to -1)."""
    return StagePartition.for_n(n).labels()


@dataclass(frozen=True)
class StagePartition:
    n: int
    stages: tuple[tuple[int, int], ...]  # inclusive (lo, hi); empty stages have lo > hi

    @classmethod
    def for_n(cls, n: int) -> "StagePartition":
        r = math.ceil(math.log(n) / math.log(1.5)) if n > 1 else 0
        r = max(r, stage_of(n))
        bounds = [(1, min(2, n))]
        for i in range(1, r + 1):
            lo = max(_stage_upper(i - 1) + 1, 3)
            hi = min(_stage_upper(i), n)
            bounds.append((lo, hi))
        return cls(n, tuple(bounds))

    @property
    def r(self) -> int:
        return len(self.stages) - 1

    def members(self, i: int) -> range:
        lo, hi = self.stages[i]
        return range(lo, hi + 1)

    def labels(self) -> np.ndarray:
        out = np.full(self.n + 1, -1, dtype=np.int64)
        for i, (lo, hi) in enumerate(self.stages):
            if lo <= hi:
                out[lo : hi + 1] = i
        return out


def at_key(t) -> tuple[int, int, int]:
    u, v, j = t
    return (v, j, -u)


def bf_key(t) -> tuple[int, int, int]:
    u, v, j = t
    return (-u, v, j)


def sort_triples(triples, order: str = "AT") -> list[OrientedTriple]:
    """Sort triples in arrival-time (AT) or backward-forward (BF) order."""
    if isinstance(triples, EvolvingGraph):
        triples = triples.triples()
    key = {"AT": at_key, "BF": bf_key}[order.upper()]
    items = [OrientedTriple(int(u), int(v), int(j)) for u, v, j in triples]
    return sorted(items, key=lambda t: key((t.u, t.v, t.j)))


# --- file format ------------------------------------------------------------


def save_graph(g: EvolvingGraph, path) -> None:
    """Header ``n m model p seed``; clique edges as ``u v 0``; slots in AT order."""
    lines = [f"{g.n} {g.m} {g.model.value} {g.p!r} {g.seed}"]
    lines += [f"{u} {v} 0" for u, v in g.clique_edges()]
    lines += [f"{u} {v} {j}" for u, v, j in g.triples()]
    Path(path).write_text("\n".join(lines) + "\n")


def load_graph(path) -> EvolvingGraph:
    rows = Path(path).read_text().split("\n")
    n, m, model, p, seed = rows[0].split()
    n, m = int(n), int(m)
    targets = np.zeros((n - m - 1, m), dtype=np.int64)
    clique = 0
    for line in rows[1:]:
        if not line.strip():
            continue
        u, v, j = map(int, line.split())
        if j == 0:
            if not (1 <= u < v <= m + 1):
                raise ValueError(f"bad clique edge: {line!r}")
            clique += 1
            continue
        targets[v - m - 2, j - 1] = u
    if clique != m * (m + 1) // 2:
        raise ValueError("clique edge count does not match m")
    if (targets == 0).any():
        raise ValueError("missing slot lines")
    return EvolvingGraph(n, m, targets, Model(model), float(p), int(seed))
