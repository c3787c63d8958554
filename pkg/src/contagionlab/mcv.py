"""Layered monotone circuits and their reduction to a k-complex contagion.

Circuit file format, one gate per line::

    gate <id> <level> <ZERO|ONE|AND|OR> [<in1> <in2>]
    output <id>

Each gate becomes k vertices, each wire k^2 vertices, and a pad set T of M
vertices is infected exactly when the output gate is.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .contagion import ContagionConfig, ContagionResult, run
from .graphs import Multigraph

KINDS = ("ZERO", "ONE", "AND", "OR")


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    id: str
    level: int
    kind: str
    inputs: tuple[str, ...] = ()


@dataclass
class Circuit:
    gates: dict[str, Gate]
    output: str

    @property
    def depth(self) -> int:
        return self.gates[self.output].level

    def wires(self) -> list[tuple[str, str]]:
        """(source, sink) per input slot, in gate order; fan-out gives one wire each."""
        return [(a, g.id) for g in self.gates.values() for a in g.inputs]

    def by_level(self) -> dict[int, list[Gate]]:
        out: dict[int, list[Gate]] = defaultdict(list)
        for g in self.gates.values():
            out[g.level].append(g)
        return dict(out)

    def to_text(self) -> str:
        lines = []
        for g in sorted(self.gates.values(), key=lambda g: g.level):
            lines.append(" ".join(["gate", g.id, str(g.level), g.kind, *g.inputs]))
        lines.append(f"output {self.output}")
        return "\n".join(lines) + "\n"


def validate(c: Circuit) -> None:
    errors = []
    if c.output not in c.gates:
        errors.append(f"output gate {c.output!r} undefined")
    else:
        top = c.gates[c.output].level
        others = [g.id for g in c.gates.values() if g.level >= top and g.id != c.output]
        if others:
            errors.append(f"output must be alone at the top level; also there: {others}")
    for g in c.gates.values():
        if g.kind not in KINDS:
            errors.append(f"gate {g.id}: non-monotone kind {g.kind}")
            continue
        if g.kind in ("ZERO", "ONE"):
            if g.inputs:
                errors.append(f"gate {g.id}: constant with inputs")
            if g.level != 0:
                errors.append(f"gate {g.id}: constant at level {g.level}")
            continue
        if len(g.inputs) != 2:
            errors.append(f"gate {g.id}: {g.kind} needs exactly 2 inputs")
            continue
        if g.inputs[0] == g.inputs[1] or g.id in g.inputs:
            errors.append(f"gate {g.id}: inputs must be two distinct other gates")
            continue
        for a in g.inputs:
            if a not in c.gates:
                errors.append(f"gate {g.id}: unknown input {a}")
            elif c.gates[a].level != g.level - 1:
                errors.append(f"gate {g.id}: wire from level {c.gates[a].level} to {g.level} is not layered")
        if g.level == 0:
            errors.append(f"gate {g.id}: {g.kind} at level 0")
    if errors:
        raise CircuitError("; ".join(errors))


def parse_circuit(text: str) -> Circuit:
    gates: dict[str, Gate] = {}
    output = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            if tok[0] == "gate":
                gid, level, kind = tok[1], int(tok[2]), tok[3].upper()
                if gid in gates:
                    raise CircuitError(f"duplicate gate {gid}")
                gates[gid] = Gate(gid, level, kind, tuple(tok[4:]))
            elif tok[0] == "output":
                output = tok[1]
            else:
                raise CircuitError(f"unknown directive {tok[0]!r}")
        except (IndexError, ValueError) as e:
            raise CircuitError(f"line {lineno}: {raw.strip()!r}: {e}") from None
    if output is None:
        raise CircuitError("missing output line")
    c = Circuit(gates, output)
    validate(c)
    return c


def evaluate_circuit(c: Circuit) -> bool:
    return evaluate_all(c)[c.output]


def evaluate_all(c: Circuit) -> dict[str, bool]:
    """Value of every gate, computed level by level."""
    val: dict[str, bool] = {}
    for level in sorted(c.by_level()):
        for g in c.by_level()[level]:
            if g.kind == "ONE":
                val[g.id] = True
            elif g.kind == "ZERO":
                val[g.id] = False
            elif g.kind == "AND":
                val[g.id] = val[g.inputs[0]] and val[g.inputs[1]]
            else:
                val[g.id] = val[g.inputs[0]] or val[g.inputs[1]]
    return val


@dataclass
class ReductionInstance:
    graph: Multigraph
    seeds: list[int]
    M: int
    R: int
    k: int
    epsilon: float
    gate_nodes: dict[str, list[int]]
    wire_nodes: dict[tuple[int, str, str], list[int]]  # key (index, source, sink)
    pad: range  # the T vertices
    gap_M: int

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def non_pad(self) -> int:
        return self.pad.start - 1


def minimal_threshold(c: Circuit, k: int) -> int:
    """Smallest M meeting the use-once constraint: k pad vertices per non-pad vertex."""
    return k * (k * len(c.gates) + k * k * len(c.wires()))


def gap_threshold(k: int, gates: int, epsilon: float) -> int:
    return math.ceil((3 * k**3 * gates) ** (1 / epsilon))


def build(c: Circuit, k: int, epsilon: float, M_override: int | None = None) -> ReductionInstance:
    if k < 2:
        raise CircuitError("k must be >= 2")
    if not 0 < epsilon < 1:
        raise CircuitError("epsilon must lie in (0, 1)")
    next_id = 1

    def block(size: int) -> list[int]:
        nonlocal next_id
        ids = list(range(next_id, next_id + size))
        next_id += size
        return ids

    gate_nodes = {gid: block(k) for gid in c.gates}
    wire_nodes = {}
    for idx, (a, b) in enumerate(c.wires()):
        wire_nodes[(idx, a, b)] = block(k * k)
    non_pad = next_id - 1
    min_M = k * non_pad
    gap_M = gap_threshold(k, len(c.gates), epsilon)
    M = gap_M if M_override is None else M_override
    if M < min_M:
        raise CircuitError(f"M={M} infeasible: use-once pad needs M >= {min_M}")
    pad = range(next_id, next_id + M)

    edges: list[tuple[int, int]] = []
    for (idx, a, b), w in wire_nodes.items():
        gate = c.gates[b]
        for ga in gate_nodes[a]:
            edges.extend((ga, x) for x in w)
        # w^{i,j} sits at w[i * k + j]
        if gate.kind == "OR":
            jmax = k
        elif a == gate.inputs[0]:
            jmax = math.ceil(k / 2)
        else:
            jmax = k // 2
        for i, gc in enumerate(gate_nodes[b]):
            edges.extend((w[i * k + j], gc) for j in range(jmax))
    out_nodes = gate_nodes[c.output]
    for t in pad:
        edges.extend((g, t) for g in out_nodes)
    # use-once pad edges, assigned round-robin in vertex-creation order
    t_iter = iter(pad)
    for v in range(1, non_pad + 1):
        for _ in range(k):
            edges.append((v, next(t_iter)))

    n = non_pad + M
    seeds = [v for g in c.gates.values() if g.kind == "ONE" for v in gate_nodes[g.id]]
    graph = Multigraph(n, np.asarray(edges, dtype=np.int64).reshape(-1, 2))
    R = 3 * k * k * len(c.gates)
    return ReductionInstance(graph, seeds, M, R, k, epsilon, gate_nodes, wire_nodes, pad, gap_M)


@dataclass
class Verdict:
    circuit_value: bool
    infected_count: int
    reached_M: bool
    passed: bool
    timing_ok: bool
    n: int
    M: int
    R: int
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "circuit_value": self.circuit_value,
            "infected_count": self.infected_count,
            "reached_M": self.reached_M,
            "verdict": "PASS" if self.passed else "FAIL",
            "timing_ok": self.timing_ok,
            "n": self.n,
            "M": self.M,
            "R": self.R,
            "notes": self.notes,
        }


def spread(inst: ReductionInstance) -> ContagionResult | None:
    """Run the contagion; None when there are no seeds (nothing can happen)."""
    if not inst.seeds:
        return None
    return run(inst.graph, ContagionConfig(inst.k, tuple(inst.seeds), count_multiplicity=False))


def timing_violations(c: Circuit, inst: ReductionInstance, res: ContagionResult | None) -> list[str]:
    """Compare every vertex's infection round with the circuit's evaluation trace.

    Up to round 2*depth, the vertices of a gate at level l that evaluates to 1
    are infected exactly at round 2l and those of a wire leaving such a gate
    at 2l+1; nothing else is infected. T follows at 2*depth+1 iff the output
    is 1, and then every remaining vertex at 2*depth+2.
    """
    val = evaluate_all(c)
    top = 2 * c.depth
    rounds = res.rounds if res is not None else np.full(inst.n + 1, -1)
    bad = []

    def expect(label: str, nodes: list[int], want: int | None) -> None:
        got = rounds[nodes]
        if want is not None:
            if (got != want).any():
                bad.append(f"{label}: rounds {sorted(set(got.tolist()))}, expected {want}")
        elif ((got >= 0) & (got <= top)).any() or (not val[c.output] and (got >= 0).any()):
            bad.append(f"{label}: infected at {sorted(set(got.tolist()))} outside the trace")

    for gid, nodes in inst.gate_nodes.items():
        expect(f"gate {gid}", nodes, 2 * c.gates[gid].level if val[gid] else None)
    for (_, a, b), nodes in inst.wire_nodes.items():
        expect(f"wire {a}->{b}", nodes, 2 * c.gates[a].level + 1 if val[a] else None)
    pad = rounds[inst.pad.start : inst.pad.stop]
    want_pad = top + 1 if val[c.output] else -1
    if (pad != want_pad).any():
        bad.append(f"pad rounds {sorted(set(pad.tolist()))}, expected {want_pad}")
    if val[c.output] and ((rounds[1:] < 0) | (rounds[1:] > top + 2)).any():
        bad.append("true circuit did not infect the whole graph by round 2*depth+2")
    return bad


def check(c: Circuit, k: int, epsilon: float, M_override: int | None = None, minimal_M: bool = False) -> Verdict:
    """Build the instance, run the contagion and compare with direct evaluation."""
    if minimal_M:
        M_override = minimal_threshold(c, k)
    inst = build(c, k, epsilon, M_override)
    value = evaluate_circuit(c)
    res = spread(inst)
    infected = 0 if res is None else res.infected_count
    reached = infected >= inst.M
    passed = reached == value and (value or infected <= inst.R)
    notes = timing_violations(c, inst, res)
    if M_override is None and not inst.R < inst.M**epsilon:
        notes.append("R >= M^epsilon")
        passed = False
    return Verdict(value, infected, reached, passed, not notes, inst.n, inst.M, inst.R, notes)


def random_circuit(rng: np.random.Generator, depth: int, width: int) -> Circuit:
    """Random layered circuit of the given depth.

    Level 0 holds one ONE, one ZERO and up to ``width - 2`` further random
    constants; inner levels hold 2..width gates, the top level the single
    output. Each gate draws its kind uniformly and two distinct inputs from
    the level below.
    """
    if width < 2:
        raise CircuitError("width must be >= 2")
    if depth == 0:
        return Circuit({"c0": Gate("c0", 0, "ONE")}, "c0")
    gates: dict[str, Gate] = {}
    extra = int(rng.integers(0, width - 1))
    kinds = ["ONE", "ZERO"] + [("ZERO", "ONE")[int(rng.integers(2))] for _ in range(extra)]
    prev = []
    for i, kind in enumerate(kinds):
        gates[f"c{i}"] = Gate(f"c{i}", 0, kind)
        prev.append(f"c{i}")
    for level in range(1, depth + 1):
        count = 1 if level == depth else int(rng.integers(2, width + 1))
        cur = []
        for i in range(count):
            gid = f"g{level}_{i}"
            a, b = rng.choice(len(prev), size=2, replace=False)
            gates[gid] = Gate(gid, level, ("AND", "OR")[int(rng.integers(2))], (prev[a], prev[b]))
            cur.append(gid)
        prev = cur
    c = Circuit(gates, prev[0])
    validate(c)
    return c
