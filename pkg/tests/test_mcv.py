import math
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contagionlab import mcv
from contagionlab.mcv import CircuitError, parse_circuit

AND_ONE_ZERO = """
gate a 0 ONE
gate b 0 ZERO
gate c 1 AND a b
output c
"""


def recursive_value(c):
    """Independent evaluator: memoised recursion from each gate down to the constants."""

    @lru_cache(maxsize=None)
    def val(gid):
        g = c.gates[gid]
        if g.kind in ("ONE", "ZERO"):
            return g.kind == "ONE"
        x, y = (val(i) for i in g.inputs)
        return (x and y) if g.kind == "AND" else (x or y)

    return {gid: val(gid) for gid in c.gates}


def test_parse_minimal():
    c = parse_circuit("gate g 0 ONE\noutput g\n")
    assert c.depth == 0 and mcv.evaluate_circuit(c)


@pytest.mark.parametrize(
    "text,needle",
    [
        ("gate a 0 ONE\ngate b 0 ZERO\ngate x 1 OR a b\ngate c 2 AND a x\noutput c", "not layered"),
        ("gate a 0 ONE\ngate c 1 AND a\noutput c", "exactly 2"),
        ("gate a 0 ONE\ngate b 0 ONE\ngate c 1 NOT a b\noutput c", "non-monotone"),
        ("gate a 0 ONE\n", "missing output"),
        ("gate a 0 ONE\ngate a 0 ZERO\noutput a", "duplicate"),
        ("gate a 0 ONE\ngate c 1 OR a a\noutput c", "distinct"),
        ("gate a 0 ONE\ngate b 0 ONE\ngate c 1 OR a z\noutput c", "unknown input"),
        ("gate a 0 ONE\ngate b 0 ONE\noutput a", "alone"),
        ("gate a 1 ONE\noutput a", "constant at level"),
        ("gate a zero ONE\noutput a", "line 1"),
        ("wire a b\noutput a", "unknown directive"),
    ],
)
def test_parse_rejects(text, needle):
    with pytest.raises(CircuitError, match=needle):
        parse_circuit(text)


def test_roundtrip_text():
    c = parse_circuit(AND_ONE_ZERO)
    assert parse_circuit(c.to_text()) == c


def test_evaluate_examples():
    assert not mcv.evaluate_circuit(parse_circuit(AND_ONE_ZERO))
    assert mcv.evaluate_circuit(parse_circuit(AND_ONE_ZERO.replace("AND", "OR")))


@settings(max_examples=80)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(2, 6))
def test_evaluators_agree_gate_by_gate(seed, depth, width):
    c = mcv.random_circuit(np.random.default_rng(seed), depth, width)
    assert mcv.evaluate_all(c) == recursive_value(c)


def test_random_circuit_shape():
    rng = np.random.default_rng(0)
    for _ in range(30):
        c = mcv.random_circuit(rng, 4, 6)
        lv = c.by_level()
        assert len(lv[4]) == 1 and c.output == lv[4][0].id
        assert {"ONE", "ZERO"} <= {g.kind for g in lv[0]}
        assert all(2 <= len(lv[i]) <= 6 for i in range(1, 4))


@pytest.mark.parametrize("k", [2, 3, 4])
def test_build_structure(k):
    c = parse_circuit(AND_ONE_ZERO.replace("AND", "OR"))
    inst = mcv.build(c, k, 0.5, mcv.minimal_threshold(c, k))
    assert all(len(v) == k for v in inst.gate_nodes.values())
    assert all(len(v) == k * k for v in inst.wire_nodes.values())
    assert inst.non_pad == 3 * k + 2 * k * k <= inst.R
    e = inst.graph.edge_array()
    pad = e[:, 1] >= inst.pad.start
    # k use-once pad edges per non-pad vertex, plus G_* x T for the output gate
    out = set(inst.gate_nodes[c.output])
    counts = np.bincount(e[pad][:, 0], minlength=inst.n + 1)
    want = [k + (inst.M if v in out else 0) for v in range(1, inst.non_pad + 1)]
    assert counts[1 : inst.non_pad + 1].tolist() == want
    assert inst.seeds == inst.gate_nodes["a"]


def test_pad_used_once():
    c = parse_circuit(AND_ONE_ZERO)
    k = 3
    inst = mcv.build(c, k, 0.5, mcv.minimal_threshold(c, k) + 7)
    out = set(inst.gate_nodes[c.output])
    e = inst.graph.edge_array()
    pad = e[:, 1] >= inst.pad.start
    once = e[pad & ~np.isin(e[:, 0], list(out))]
    # output gate vertices also get use-once edges; they are duplicates of G_* x T
    hits = np.bincount(e[pad][:, 1], minlength=inst.n + 1)[inst.pad.start :]
    assert hits.max() <= k + 1
    assert len(set(once[:, 1].tolist())) == len(once)


def test_and_gate_edge_split():
    c = parse_circuit(AND_ONE_ZERO)
    for k in (2, 3, 5):
        inst = mcv.build(c, k, 0.5, mcv.minimal_threshold(c, k))
        e = {tuple(r) for r in inst.graph.edge_array().tolist()}
        gc = inst.gate_nodes["c"]
        for (idx, a, b), w in inst.wire_nodes.items():
            want = math.ceil(k / 2) if a == "a" else k // 2
            for i in range(k):
                got = sum((w[i * k + j], gc[i]) in e for j in range(k))
                assert got == want


def test_infeasible_M():
    c = parse_circuit(AND_ONE_ZERO)
    need = mcv.minimal_threshold(c, 2)
    with pytest.raises(CircuitError, match=str(need)):
        mcv.build(c, 2, 0.5, need - 1)
    with pytest.raises(CircuitError):
        mcv.build(c, 1, 0.5)
    with pytest.raises(CircuitError):
        mcv.build(c, 2, 1.0)


def test_single_one():
    c = parse_circuit("gate g 0 ONE\noutput g")
    v = mcv.check(c, 2, 0.5, minimal_M=True)
    assert v.passed and v.timing_ok and v.infected_count == v.n
    inst = mcv.build(c, 2, 0.5, mcv.minimal_threshold(c, 2))
    res = mcv.spread(inst)
    assert (res.rounds[inst.pad.start : inst.pad.stop] == 1).all()


def test_single_zero():
    v = mcv.check(parse_circuit("gate g 0 ZERO\noutput g"), 2, 0.5, minimal_M=True)
    assert v.passed and v.infected_count == 0


@pytest.mark.parametrize("k", [2, 3])
def test_and_one_zero_stalls(k):
    v = mcv.check(parse_circuit(AND_ONE_ZERO), k, 0.5, minimal_M=True)
    assert not v.circuit_value and v.passed and v.timing_ok
    assert v.infected_count == k + k * k  # G_a plus its wire, nothing else


def test_gap_threshold():
    c = parse_circuit(AND_ONE_ZERO)
    v = mcv.check(c, 2, 0.9)
    assert v.M == math.ceil((3 * 8 * 3) ** (1 / 0.9))
    assert v.R == 36 and v.R < v.M**0.9 and v.passed


def test_timing_catches_tampering():
    c = parse_circuit(AND_ONE_ZERO.replace("AND", "OR"))
    inst = mcv.build(c, 2, 0.5, mcv.minimal_threshold(c, 2))
    res = mcv.spread(inst)
    assert mcv.timing_violations(c, inst, res) == []
    res.rounds[inst.gate_nodes["c"][0]] += 1
    assert mcv.timing_violations(c, inst, res)


def test_random_suite_all_pass():
    rng = np.random.default_rng(42)
    for i in range(40):
        c = mcv.random_circuit(rng, int(rng.integers(1, 5)), 6)
        v = mcv.check(c, int(rng.choice([2, 3])), 0.5, minimal_M=True)
        assert v.passed and v.timing_ok, v.notes
        assert v.n - v.M <= v.R
