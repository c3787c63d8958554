"""Degree analytics for PA graphs: master-equation profile, early-node degrees,
round-one infection bound, power-law fits and stage escape frequencies."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .graphs import EvolvingGraph, StagePartition

UNDERFLOW = 1e-300


@dataclass
class MasterEquationTable:
    p: float
    m: int
    source: int
    a: np.ndarray  # a[x] for x in 0..x_max
    c: np.ndarray
    eta: np.ndarray  # eta[0] = 0
    truncated_at: int | None = None  # first x where eta underflowed

    @property
    def x_max(self) -> int:
        return len(self.eta) - 1

    def bound(self, n: int) -> np.ndarray:
        """Upper bound m * n * eta_x on the expected number of degree-x nodes."""
        return self.m * n * self.eta

    def tail_slope(self, lo: int, hi: int) -> float:
        x = np.arange(lo, hi + 1)
        return float(np.polyfit(np.log(x), np.log(self.eta[x]), 1)[0])


def drift(p: float, m: int, x):
    with np.errstate(under="ignore"):
        return p * np.asarray(x, dtype=float) / 2 + m * (1 - p)


def solve_eta(p: float, m: int, x_max: int, source: int | None = None) -> MasterEquationTable:
    """Solve eta_x = a_{x-1}/(1+a_x) eta_{x-1} + c_x/(1+a_x) for x = 1..x_max.

    ``source`` is the degree at which nodes are born (default m; pass m+1
    for the alternative placement).
    """
    source = m if source is None else source
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    x = np.arange(x_max + 1)
    a = drift(p, m, x)
    c = (x == source).astype(float)
    eta = np.zeros(x_max + 1)
    for xi in range(1, min(source, x_max) + 1):
        eta[xi] = a[xi - 1] / (1 + a[xi]) * eta[xi - 1] + c[xi] / (1 + a[xi])
    truncated = None
    if x_max > source:
        # source-free tail is a running product; accumulate in logs
        ratio = a[source:x_max] / (1 + a[source + 1 : x_max + 1])
        with np.errstate(divide="ignore", under="ignore"):
            logs = np.log(eta[source]) + np.cumsum(np.log(ratio))
            tail = np.exp(logs)
        small = np.flatnonzero(tail < UNDERFLOW)
        if small.size:
            truncated = source + 1 + int(small[0])
            tail[small[0] :] = 0.0
        eta[source + 1 :] = tail
    return MasterEquationTable(p, m, source, a, c, eta, truncated)


@dataclass
class ExpectedDegreeTable:
    p: float
    m: int
    s: int
    n: int
    values: np.ndarray  # values[t - s] = E[d_t(s)] for t = s..n

    def at(self, t: int) -> float:
        return float(self.values[t - self.s])


def expected_degree(p: float, m: int, s: int, n: int, total: str = "exact") -> ExpectedDegreeTable:
    """Expected degree of node s at times s..n from the one-step recurrence.

    E[d_t] = E[d_{t-1}] (1 + p m / D_{t-1}) + m (1 - p) / (t - 1), d_s = m.
    ``total="exact"`` uses the true endpoint count of the PA_INDEPENDENT graph,
    D_{t-1} = 2m(t-1) - m(m+1); ``total="asymptotic"`` uses D_{t-1} = 2m(t-1),
    i.e. the factor (2t-2+p)/(2t-2).
    """
    if s < 2:
        raise ValueError("recurrence needs s >= 2")
    if n < s:
        raise ValueError("need n >= s")
    if total not in ("exact", "asymptotic"):
        raise ValueError(f"unknown total {total!r}")
    if total == "exact" and s <= m + 1:
        raise ValueError("clique nodes do not arrive with degree m; use Monte Carlo")
    t = np.arange(s + 1, n + 1, dtype=float)
    D = 2 * m * (t - 1) - (m * (m + 1) if total == "exact" else 0)
    mult = 1 + p * m / D
    add = m * (1 - p) / (t - 1)
    out = np.empty(n - s + 1)
    out[0] = m
    e = float(m)
    for i in range(len(t)):
        e = e * mult[i] + add[i]
        out[i + 1] = e
    return ExpectedDegreeTable(p, m, s, n, out)


def round1_weight(x: np.ndarray, s_size: int, n: int, k: int) -> np.ndarray:
    """min((xs/n)^k / (1 - xs/n), 1), cut to 1 once xs/n exceeds 1/2."""
    q = x * s_size / n
    w = np.ones_like(q, dtype=float)
    lo = q <= 0.5
    w[lo] = np.minimum(q[lo] ** k / (1 - q[lo]), 1.0)
    return w


def expected_round1_infections(p: float, m: int, k: int, s_size: int, n: int, table: MasterEquationTable | None = None) -> float:
    """Upper bound on the expected number of round-one infections from s random seeds."""
    if s_size < k:
        raise ValueError("need at least k seeds")
    x_max = m * n
    if table is None or table.x_max < x_max:
        table = solve_eta(p, m, x_max)
    x = np.arange(k, x_max + 1)
    total = float(np.sum(round1_weight(x, s_size, n, k) * m * n * table.eta[x]))
    return min(total, float(n))


@dataclass
class PowerLawFit:
    slope: float
    stderr: float
    intercept: float
    points: int


def fit_power_law(hist, x_range: tuple[int, int]) -> PowerLawFit:
    """Unweighted least squares of log(count) on log(x) over x in x_range.

    ``hist`` is a mapping degree -> count or a count array indexed by degree.
    """
    if isinstance(hist, dict):
        xs = np.array(sorted(hist), dtype=float)
        ys = np.array([hist[int(x)] for x in xs], dtype=float)
    else:
        ys = np.asarray(hist, dtype=float)
        xs = np.arange(len(ys), dtype=float)
    lo, hi = x_range
    sel = (xs >= lo) & (xs <= hi) & (ys > 0)
    if sel.sum() < 5:
        raise ValueError(f"need >= 5 positive points in {x_range}, have {int(sel.sum())}")
    res = stats.linregress(np.log(xs[sel]), np.log(ys[sel]))
    return PowerLawFit(float(res.slope), float(res.stderr), float(res.intercept), int(sel.sum()))


def degree_histogram(g: EvolvingGraph) -> np.ndarray:
    return np.bincount(g.degrees()[1:])


@dataclass
class StageEscape:
    same: np.ndarray  # same-stage slot count per stage
    issued: np.ndarray  # slots issued by stage members

    def fractions(self) -> list[float | None]:
        return [None if d == 0 else s / d for s, d in zip(self.same.tolist(), self.issued.tolist())]

    def __add__(self, other: "StageEscape") -> "StageEscape":
        return StageEscape(self.same + other.same, self.issued + other.issued)


def staging_escape_stats(g: EvolvingGraph, partition: StagePartition | None = None) -> StageEscape:
    """Per stage i: slots (u, v, j) with v in S_i, and how many also have u in S_i."""
    partition = partition or StagePartition.for_n(g.n)
    lab = partition.labels()
    tr = g.triples()
    sv = lab[tr[:, 1]]
    su = lab[tr[:, 0]]
    nst = len(partition.stages)
    issued = np.bincount(sv, minlength=nst)
    same = np.bincount(sv[su == sv], minlength=nst)
    return StageEscape(same, issued)


def binomial_upper(successes: int, trials: int, level: float = 0.99) -> float:
    """One-sided Clopper-Pearson upper confidence bound."""
    if trials == 0:
        return 1.0
    if successes >= trials:
        return 1.0
    return float(stats.beta.ppf(level, successes + 1, trials - successes))


def proportion_interval(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Two-sided Clopper-Pearson interval."""
    a = 1 - level
    lo = 0.0 if successes == 0 else float(stats.beta.ppf(a / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(stats.beta.ppf(1 - a / 2, successes + 1, trials - successes))
    return lo, hi


def log2_slope(ns, values) -> float:
    return float(np.polyfit(np.log2(np.asarray(ns, dtype=float)), np.asarray(values, dtype=float), 1)[0])


def slope_stability(ns, mean_rounds) -> float:
    """a(n_max) / a(n_max/4), each a local slope of rounds vs log2 n over a factor-4 step."""
    ns = list(ns)
    r = dict(zip(ns, mean_rounds))
    top = max(ns)
    a_top = (r[top] - r[top // 4]) / 2
    a_prev = (r[top // 4] - r[top // 16]) / 2
    if a_prev == 0:
        return math.nan if a_top == 0 else math.inf
    return a_top / a_prev
