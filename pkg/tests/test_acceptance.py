"""Full-scale acceptance checks, one pass/fail line per criterion.

Each test prints a line through ``report`` and then asserts at the stated
tolerance. Run alone with ``pytest -m acceptance -s``.
"""

import math

import numpy as np
import pytest

from contagionlab import analytics, branching, experiments as ex
from contagionlab.contagion import ContagionConfig, bfs_layers, run
from contagionlab.graphs import Model, Multigraph

pytestmark = pytest.mark.acceptance

NS = [2**10, 2**12, 2**14, 2**16]
REPS = 50


def spread_verdict(row):
    means = dict(zip(row["ns"], row["mean_rounds"]))
    stab = row["stability"]
    ok = row["full_fraction"] == 1.0 and 0.5 <= stab <= 2.0 and means[2**16] <= 40
    detail = (
        f"{row['model']} p={row['p']}: full={row['full_fraction']:.2f} "
        f"rounds={[round(x, 1) for x in row['mean_rounds']]} slope={row['slope']:.2f} stability={stab:.2f}"
    )
    return ok, detail


@pytest.fixture(scope="session")
def pa_spread():
    recs = ex.run_spread_time(NS, [Model.PA_INDEPENDENT], [0.0, 0.5, 1.0], m=2, reps=REPS, base_seed=101)
    return recs, ex.summarize_spread(recs)


@pytest.fixture(scope="session")
def cm_spread():
    recs = ex.run_spread_time(NS, [Model.CM_INDEPENDENT, Model.CM_CONDITIONED], [0.3, 0.7], m=2, reps=REPS, base_seed=202)
    return recs, ex.summarize_spread(recs)


@pytest.mark.parametrize("p", [0.0, 0.5, 1.0])
def test_c1_log_spread_pa(pa_spread, report, p):
    (row,) = [r for r in pa_spread[1] if r["p"] == p]
    ok, detail = spread_verdict(row)
    report(f"C1 log spread PA p={p}", ok, detail)
    assert ok, detail


@pytest.mark.parametrize("model", [Model.CM_INDEPENDENT, Model.CM_CONDITIONED])
@pytest.mark.parametrize("p", [0.3, 0.7])
def test_c2_copy_model_spread(cm_spread, report, model, p):
    (row,) = [r for r in cm_spread[1] if r["p"] == p and r["model"] == model.value]
    ok, detail = spread_verdict(row)
    report(f"C2 copy-model spread {model.value} p={p}", ok, detail)
    assert ok, detail


def test_c3_branching_extinction(report):
    m, alpha, x = 2, 0.9, 16
    _, delta = branching.constants(m, alpha)
    depth = branching.extinction_depth_bound(m, alpha, x, 2**x, c3=1)
    rows, summ = ex.run_branch_extinction(m, alpha, x, depth, 10**4, seed=3)
    no_survivors = summ["survivors_at_depth"] == 0
    bad_ratio = []
    for r in rows:
        if r["survivors"] >= 100 and not math.isnan(r["ratio_mean"]):
            se = r["ratio_sd"] / math.sqrt(r["survivors"])
            if r["ratio_mean"] > delta + 3 * se:
                bad_ratio.append(r["depth"])
    zero_off = []
    for xx in range(1, 6):
        _, s = ex.run_branch_extinction(m, alpha, xx, 400, 10**4, seed=100 + xx)
        z = (s["zero_labelled_mean"] - s["expected_zero_labelled"]) / s["zero_labelled_se"]
        if abs(z) > 3:
            zero_off.append((xx, round(z, 2)))
    ok = no_survivors and not bad_ratio and not zero_off
    detail = (
        f"depth={depth} survivors={summ['survivors_at_depth']} max_extinct={summ['max_extinction_depth']} "
        f"ratio_violations={bad_ratio} zero_label_off={zero_off}"
    )
    report("C3 branching extinction", ok, detail)
    assert ok, detail


def test_c4_degree_law(report):
    slopes = {p: analytics.solve_eta(p, 2, 65536).tail_slope(1024, 65536) for p in (0.5, 1.0)}
    slope_ok = all(abs(s + 1 + 2 / p) <= 0.1 for p, s in slopes.items())
    _, summ = ex.degree_law(2**17, 1.0, 2, 20, base_seed=404, track=(4,))
    ok = slope_ok and summ["bound_holds"]
    detail = (
        f"eta slopes {{0.5: {slopes[0.5]:.3f}, 1: {slopes[1.0]:.3f}}}; "
        f"worst count/bound={summ['worst_count_to_bound']:.3f} over {summ['checked_degrees']} degrees"
    )
    report("C4 degree law", ok, detail)
    assert ok, detail


def test_c5_early_nodes(report):
    _, summ = ex.degree_law(2**14, 1.0, 2, 500, base_seed=505, track=(4, 16, 64))
    early = summ["early_nodes"]
    z_ok = all(abs(e["z_exact"]) <= 3 for e in early)
    ratios = [e["ratio_to_scale"] for e in early]
    ratio_ok = max(ratios) / min(ratios) < 2
    ok = z_ok and ratio_ok
    detail = "; ".join(
        f"s={e['s']} mean={e['mean']:.2f} exact={e['recurrence_exact']:.2f} z={e['z_exact']:.2f} "
        f"(asymptotic form z={e['z_asymptotic']:.2f})"
        for e in early
    ) + f"; ratio spread={max(ratios) / min(ratios):.3f}"
    report("C5 early-node degree", ok, detail)
    assert ok, detail


def test_c6_staging(report):
    _, summ = ex.staging(2**14, 1.0, 2, 200, base_seed=606)
    worst = max((s for s in summ["stages"][3:] if s["fraction"] is not None), key=lambda s: s["fraction"] - s["slack"])
    detail = f"worst stage {worst['stage']}: fraction={worst['fraction']:.4f} limit={1 / 3 + worst['slack']:.4f}"
    report("C6 staging", summ["all_pass"], detail)
    assert summ["all_pass"], detail


@pytest.fixture(scope="module")
def bootstrap_runs():
    n = 2**20
    low = ex.summarize_bootstrap(ex.run_bootstrap(n, 1.0, 2, 2, ["pow:0.3"], "ROUND1_ONLY", 200, base_seed=707))[0]
    high = ex.summarize_bootstrap(ex.run_bootstrap(n, 1.0, 2, 2, ["rescue:4"], "FULL", 200, base_seed=708))[0]
    return n, low, high


def test_c7a_bootstrap_no_spread(bootstrap_runs, report):
    _, low, _ = bootstrap_runs
    ok = low["frac_any_round1"] <= 0.05
    lo, hi = analytics.proportion_interval(round(low["frac_any_round1"] * low["runs"]), low["runs"])
    detail = f"s={low['s']}: any round-1 infection in {low['frac_any_round1']:.3f} of {low['runs']} runs (95% CI {lo:.3f}-{hi:.3f})"
    report("C7a bootstrap no-spread", ok, detail)
    assert ok, detail


def test_c7b_bootstrap_rescue(bootstrap_runs, report):
    n, _, high = bootstrap_runs
    limit = 3 * math.log2(n)
    ok = high["frac_fully_infected"] >= 0.95 and high["max_rounds"] <= limit and high["frac_vk_by_round1"] >= 0.95
    detail = (
        f"s={high['s']}: full={high['frac_fully_infected']:.3f} max rounds={high['max_rounds']} (limit {limit:.0f}) "
        f"v_k by round 1={high['frac_vk_by_round1']:.3f}"
    )
    report("C7b bootstrap rescue", ok, detail)
    assert ok, detail


def test_c8_mcv_reduction(report):
    rows = ex.run_mcv_suite(100, 4, 6, ks=(2, 3), seed=808)
    passed = sum(r["verdict"] == "PASS" for r in rows)
    timing = sum(r["timing_ok"] for r in rows)
    ok = passed == timing == 100
    detail = f"{passed}/100 outcome PASS, {timing}/100 timing exact, {sum(r['circuit_value'] for r in rows)} true circuits"
    report("C8 MCV reduction", ok, detail)
    assert ok, detail


def test_c9_oracles(pa_spread, cm_spread, report):
    rng = np.random.default_rng(909)
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(2, 201))
        e = rng.integers(1, n + 1, size=(int(rng.integers(0, 3 * n)), 2))
        seeds = rng.choice(n, size=int(rng.integers(1, min(n, 3) + 1)), replace=False) + 1
        res = run(Multigraph.from_edges(n, e), ContagionConfig(1, tuple(seeds.tolist())))
        mismatches += not np.array_equal(res.rounds, bfs_layers(n, e, seeds.tolist()))
    recs = pa_spread[0] + cm_spread[0]
    dominated = sum(r["pruned_dominated"] for r in recs)
    ok = mismatches == 0 and dominated == len(recs)
    detail = f"k=1 vs BFS mismatches={mismatches}/1000; pruned domination {dominated}/{len(recs)} runs"
    report("C9 oracle equivalences", ok, detail)
    assert ok, detail
