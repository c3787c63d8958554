import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from contagionlab import analytics as an
from contagionlab.graphs import EvolvingGraph, GenConfig, Model, StagePartition, generate


def test_eta_p1_closed_form():
    # a_x = x/2 gives eta_x = eta_m * m(m+1)(m+2) / (x(x+1)(x+2))
    for m in (1, 2, 3):
        t = an.solve_eta(1.0, m, 500)
        x = np.arange(m, 501)
        want = (1 / (1 + m / 2)) * m * (m + 1) * (m + 2) / (x * (x + 1) * (x + 2))
        assert np.allclose(t.eta[m:], want, rtol=1e-12)
        assert (t.eta[1:m] == 0).all()


def test_eta_p0_geometric():
    t = an.solve_eta(0.0, 2, 200)
    r = t.eta[3:101] / t.eta[2:100]
    assert np.allclose(r, 2 / 3)
    assert t.eta[2] == pytest.approx(1 / 3)


@pytest.mark.parametrize("p,slope", [(1.0, -3.0), (0.5, -5.0)])
def test_eta_tail_slope(p, slope):
    t = an.solve_eta(p, 2, 65536)
    assert abs(t.tail_slope(1024, 65536) - slope) < 0.05


def test_eta_underflow_truncation():
    t = an.solve_eta(0.0, 2, 5000)
    assert t.truncated_at is not None
    assert (t.eta[t.truncated_at :] == 0).all()
    assert (t.eta[2 : t.truncated_at] > 0).all()


def test_eta_source_switch():
    t = an.solve_eta(1.0, 2, 50, source=3)
    assert t.eta[2] == 0 and t.eta[3] > 0


@given(st.floats(0, 1), st.integers(1, 4))
def test_eta_mass_below_one(p, m):
    t = an.solve_eta(p, m, 400)
    assert (t.eta >= 0).all()
    assert t.eta.sum() <= 1 + 1e-9


def test_expected_degree_p0_harmonic():
    m, s, n = 2, 10, 1000
    e = an.expected_degree(0.0, m, s, n)
    t = np.arange(s, n + 1)
    harmonic = np.concatenate([[0], np.cumsum(1 / (t[1:] - 1))])
    assert np.allclose(e.values, m * (1 + harmonic))


def test_expected_degree_edges():
    assert an.expected_degree(0.7, 2, 8, 8).at(8) == 2
    with pytest.raises(ValueError):
        an.expected_degree(0.5, 2, 1, 10, "asymptotic")
    with pytest.raises(ValueError):
        an.expected_degree(0.5, 2, 3, 10, "exact")
    an.expected_degree(0.5, 2, 3, 10, "asymptotic")


def test_expected_degree_forms_converge_for_late_nodes():
    a = an.expected_degree(1.0, 2, 1000, 10**5, "exact").at(10**5)
    b = an.expected_degree(1.0, 2, 1000, 10**5, "asymptotic").at(10**5)
    assert a == pytest.approx(b, rel=5e-3)
    assert b == pytest.approx(2 * math.sqrt(100), rel=0.01)


def test_expected_degree_monte_carlo():
    m, p, n, s, reps = 2, 0.6, 3000, 10, 400
    d = [generate(GenConfig(Model.PA_INDEPENDENT, n, m, p, i)).degrees()[s] for i in range(reps)]
    want = an.expected_degree(p, m, s, n, "exact").at(n)
    assert abs(np.mean(d) - want) < 4 * np.std(d) / math.sqrt(reps)


def direct_bound(n, s, m=2, k=2):
    """Plain loop with the p = 1 closed form eta_x = 12 / (x(x+1)(x+2))."""
    total = 0.0
    for x in range(k, m * n + 1):
        q = x * s / n
        w = 1.0 if q > 0.5 else min(q**k / (1 - q), 1.0)
        total += w * m * n * 12 / (x * (x + 1) * (x + 2))
    return min(total, n)


def test_bootstrap_bound_examples():
    n, m, k = 10**6, 2, 2
    table = an.solve_eta(1.0, m, m * n)
    small = an.expected_round1_infections(1.0, m, k, int(n**0.3), n, table)
    big = an.expected_round1_infections(1.0, m, k, int(n**0.6), n, table)
    # frozen from direct_bound(10**6, 63) and direct_bound(10**6, 3981)
    assert small == pytest.approx(0.9602857760, rel=1e-8)
    assert big == pytest.approx(2234.679634, rel=1e-8)
    assert small < 1 <= big
    assert an.expected_round1_infections(1.0, m, k, n // 2, n, table) == n


@pytest.mark.slow
def test_bootstrap_bound_oracle():
    assert direct_bound(10**5, 20) == pytest.approx(an.expected_round1_infections(1.0, 2, 2, 20, 10**5), rel=1e-9)


def test_bootstrap_bound_needs_k_seeds():
    with pytest.raises(ValueError):
        an.expected_round1_infections(1.0, 2, 3, 2, 100)


def test_round1_weight_cut():
    w = an.round1_weight(np.array([1, 50, 60, 100]), 1, 100, 2)
    assert w[0] == pytest.approx(0.01**2 / 0.99)
    assert w[1] == pytest.approx(min(0.25 / 0.5, 1))
    assert w[2] == 1 and w[3] == 1


def test_fit_power_law_exact():
    x = np.arange(1, 200)
    hist = {int(v): 1e6 * v**-2.5 for v in x}
    fit = an.fit_power_law(hist, (10, 150))
    assert fit.slope == pytest.approx(-2.5)
    assert fit.points == 141
    arr = np.zeros(200)
    arr[1:] = 1e6 * x**-2.5
    assert an.fit_power_law(arr, (10, 150)).slope == pytest.approx(-2.5)


def test_fit_power_law_too_few_points():
    with pytest.raises(ValueError):
        an.fit_power_law({1: 5, 2: 3, 3: 1}, (1, 3))


def test_degree_histogram_sums_to_n():
    g = generate(GenConfig(Model.PA_INDEPENDENT, 500, 2, 0.5, 1))
    h = an.degree_histogram(g)
    assert h.sum() == 500
    assert (h * np.arange(len(h))).sum() == 2 * len(g.edge_array())


def test_staging_counts_by_hand():
    # n = 5, m = 1: clique {1, 2}; node 3 -> 1, 4 -> 3, 5 -> 4
    g = EvolvingGraph(5, 1, np.array([[1], [3], [4]]))
    part = StagePartition.for_n(5)
    esc = an.staging_escape_stats(g, part)
    lab = part.labels()
    want_issued = np.zeros(len(part.stages), dtype=int)
    want_same = np.zeros(len(part.stages), dtype=int)
    for new, old in [(3, 1), (4, 3), (5, 4)]:
        want_issued[lab[new]] += 1
        want_same[lab[new]] += lab[old] == lab[new]
    assert esc.issued.tolist() == want_issued.tolist()
    assert esc.same.tolist() == want_same.tolist()
    fr = esc.fractions()
    assert all(f is None for f, i in zip(fr, want_issued) if i == 0)


def test_staging_fraction_below_third_on_large_graph():
    g = generate(GenConfig(Model.PA_INDEPENDENT, 2**14, 2, 1.0, 2))
    esc = an.staging_escape_stats(g)
    for f, issued in zip(esc.fractions()[3:], esc.issued[3:]):
        if issued > 2000:
            assert f < 1 / 3 + 0.03


def test_intervals():
    lo, hi = an.proportion_interval(0, 100)
    assert lo == 0 and hi == pytest.approx(1 - 0.025 ** (1 / 100))
    assert an.binomial_upper(0, 100, 0.99) == pytest.approx(1 - 0.01 ** (1 / 100))
    assert an.binomial_upper(5, 5) == 1.0


def test_slope_stability():
    ns = [2**10, 2**12, 2**14, 2**16]
    assert an.slope_stability(ns, [10, 14, 18, 22]) == pytest.approx(1.0)
    assert an.slope_stability(ns, [10, 14, 18, 20]) == pytest.approx(0.5)
    assert an.log2_slope(ns, [10, 14, 18, 22]) == pytest.approx(2.0)
