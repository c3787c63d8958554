"""Seeded sweeps over the generators, contagion, branching, analytics and mcv.

Every (grid point, replication) pair owns an RNG stream whose seed is a hash
of (base_seed, grid point, replication). Records are merged in grid order, so
reruns give identical CSV apart from the ``wall_time`` column.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import itertools
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import analytics, branching, mcv
from .contagion import ContagionConfig, run, run_directed_pruned
from .graphs import GenConfig, Model, StagePartition, generate

log = logging.getLogger(__name__)

THREADS_ENV = "CONTAGIONLAB_THREADS"


class Kind(str, enum.Enum):
    SPREAD_TIME = "SPREAD_TIME"
    BOOTSTRAP_THRESHOLD = "BOOTSTRAP_THRESHOLD"
    OLDIES_RESCUE = "OLDIES_RESCUE"
    BRANCH_EXTINCTION = "BRANCH_EXTINCTION"
    DEGREE_LAW = "DEGREE_LAW"
    STAGING = "STAGING"
    MCV_SUITE = "MCV_SUITE"


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    kind: Kind
    grid: dict[str, list]
    replications: int = 1
    base_seed: int = 0
    params: dict[str, Any] = field(default_factory=dict)
    expected_runtime: float | None = None  # seconds; 10x overrun aborts
    out: str | None = None

    def __post_init__(self):
        self.kind = Kind(self.kind)
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not self.grid or any(len(v) == 0 for v in self.grid.values()):
            raise ValueError("grid must be non-empty")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def points(self) -> list[dict]:
        keys = list(self.grid)
        return [dict(zip(keys, vals)) for vals in itertools.product(*(self.grid[k] for k in keys))]


def stream_seed(base_seed: int, point: dict, rep: int) -> int:
    blob = json.dumps([base_seed, point, rep], sort_keys=True, default=str).encode()
    return int.from_bytes(hashlib.blake2b(blob, digest_size=8).digest(), "little")


def check_streams(base_seed: int, points: list[dict], reps: int) -> None:
    seen: dict[int, tuple] = {}
    for i, pt in enumerate(points):
        for r in range(reps):
            s = stream_seed(base_seed, pt, r)
            if s in seen:
                raise RuntimeError(f"RNG stream collision between {seen[s]} and {(i, r)}")
            seen[s] = (i, r)


def thread_count() -> int:
    return max(1, int(os.environ.get(THREADS_ENV, "1")))


def _sweep(
    points: list[dict],
    reps: int,
    base_seed: int,
    task: Callable[[dict, int, np.random.Generator], list[dict] | dict],
    budget: float | None = None,
    partial_path: Path | None = None,
) -> list[dict]:
    """Run ``task`` on every (point, replication); records come back in grid order."""
    check_streams(base_seed, points, reps)
    jobs = [(pt, r) for pt in points for r in range(reps)]
    start = time.perf_counter()
    records: list[dict] = []

    def one(job):
        pt, r = job
        t0 = time.perf_counter()
        rng = np.random.default_rng(stream_seed(base_seed, pt, r))
        out = task(pt, r, rng)
        rows = out if isinstance(out, list) else [out]
        wall = time.perf_counter() - t0
        return [{**pt, "rep": r, **row, "wall_time": wall} for row in rows]

    threads = thread_count()
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    results = pool.map(one, jobs) if pool else map(one, jobs)
    try:
        for rows in results:
            records.extend(rows)
            if budget is not None and time.perf_counter() - start > 10 * budget:
                if partial_path is not None:
                    write_records(records, partial_path)
                raise BudgetExceeded(f"exceeded 10x the expected {budget:.0f}s; partial results kept")
    finally:
        if pool:
            pool.shutdown(cancel_futures=True)
    return records


def _graph_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(2**63))


# --- spread time ------------------------------------------------------------


def spread_once(model, n: int, p: float, m: int, k: int, seed: int, count_multiplicity: bool = True, pruned: bool = True) -> dict:
    g = generate(GenConfig(Model(model), n, m, p, seed))
    cfg = ContagionConfig(k, tuple(range(1, k + 1)), count_multiplicity=count_multiplicity)
    res = run(g, cfg)
    rec = {
        "rounds_to_fixation": res.rounds_to_fixation,
        "infected_count": res.infected_count,
        "fully_infected": res.fully_infected,
    }
    if pruned:
        pr = run_directed_pruned(g, cfg)
        inside = bool(np.all(res.rounds[pr.rounds >= 0] >= 0))
        later = bool(np.all(pr.rounds[pr.rounds >= 0] >= res.rounds[pr.rounds >= 0]))
        rec.update(
            pruned_rounds=pr.rounds_to_fixation,
            pruned_infected=pr.infected_count,
            pruned_dominated=inside and later,
        )
    return rec


def run_spread_time(ns, models, ps, m: int = 2, k: int | None = None, reps: int = 50, base_seed: int = 0, count_multiplicity: bool = True, pruned: bool = True) -> list[dict]:
    """Oldest-k seeding on every (model, p, n); one record per replication."""
    k = m if k is None else k
    if k > m:
        raise ValueError("spread-time runs need k <= m")
    points = [{"model": Model(mo).value, "p": p, "m": m, "n": n} for mo in models for p in ps for n in ns]

    def task(pt, r, rng):
        return spread_once(pt["model"], pt["n"], pt["p"], m, k, _graph_seed(rng), count_multiplicity, pruned)

    return _sweep(points, reps, base_seed, task)


def summarize_spread(records: list[dict]) -> list[dict]:
    """Per (model, p, m): mean rounds per n, log2 fit and slope stability."""
    out = []
    groups: dict[tuple, dict[int, list[dict]]] = {}
    for rec in records:
        key = (rec["model"], rec["p"], rec["m"])
        groups.setdefault(key, {}).setdefault(rec["n"], []).append(rec)
    for (model, p, m), by_n in groups.items():
        ns = sorted(by_n)
        means = [float(np.mean([r["rounds_to_fixation"] for r in by_n[n]])) for n in ns]
        a, b = np.polyfit(np.log2(ns), means, 1) if len(ns) > 1 else (math.nan, means[0])
        full = float(np.mean([r["fully_infected"] for rs in by_n.values() for r in rs]))
        row = {
            "model": model,
            "p": p,
            "m": m,
            "ns": ns,
            "mean_rounds": means,
            "slope": float(a),
            "intercept": float(b),
            "full_fraction": full,
            "stability": analytics.slope_stability(ns, means) if len(ns) >= 3 else None,
        }
        if "pruned_dominated" in by_n[ns[0]][0]:
            row["pruned_dominated"] = all(r["pruned_dominated"] for rs in by_n.values() for r in rs)
        out.append(row)
    return out


# --- bootstrap --------------------------------------------------------------


def seed_count(rule, n: int, p: float) -> int:
    """Resolve a seed-size rule: an int, ``pow:<e>`` (floor n^e) or
    ``rescue:<c>`` (ceil c * n^(1-p/2) * log2 n)."""
    if isinstance(rule, (int, np.integer)):
        return int(rule)
    kind, _, arg = str(rule).partition(":")
    if kind == "pow":
        return int(math.floor(n ** float(arg) + 1e-9))
    if kind == "rescue":
        return int(math.ceil(float(arg) * n ** (1 - p / 2) * math.log2(n) - 1e-9))
    return int(rule)


def bootstrap_once(n: int, p: float, m: int, k: int, s: int, mode: str, rng: np.random.Generator, count_multiplicity: bool = True) -> dict:
    g = generate(GenConfig(Model.PA_INDEPENDENT, n, m, p, _graph_seed(rng)))
    seeds = rng.choice(n, size=s, replace=False) + 1
    cfg = ContagionConfig(k, tuple(seeds.tolist()), count_multiplicity, 1 if mode == "ROUND1_ONLY" else None)
    res = run(g, cfg)
    r1 = int(np.count_nonzero(res.rounds == 1))
    return {
        "s": s,
        "mode": mode,
        "round1_infections": r1,
        "any_round1": r1 > 0,
        "infected_count": res.infected_count,
        "fully_infected": res.fully_infected,
        "rounds_to_fixation": res.rounds_to_fixation,
        "vk_by_round1": bool(0 <= res.rounds[k] <= 1),
    }


def run_bootstrap(n: int, p: float, m: int, k: int, seed_sizes, mode: str = "FULL", reps: int = 200, base_seed: int = 0, count_multiplicity: bool = True) -> list[dict]:
    """Uniformly random seed sets of each size on PA_INDEPENDENT graphs."""
    if mode not in ("ROUND1_ONLY", "FULL"):
        raise ValueError(f"unknown mode {mode}")
    points = [{"n": n, "p": p, "m": m, "k": k, "s_rule": str(rule)} for rule in seed_sizes]
    for pt in points:
        if not seed_count(pt["s_rule"], n, p) < n:
            raise ValueError("seed sizes must be < n")

    def task(pt, r, rng):
        s = seed_count(pt["s_rule"], n, p)
        return bootstrap_once(n, p, m, k, s, mode, rng, count_multiplicity)

    return _sweep(points, reps, base_seed, task)


def summarize_bootstrap(records: list[dict]) -> list[dict]:
    out = []
    by_s: dict[int, list[dict]] = {}
    for rec in records:
        by_s.setdefault(rec["s"], []).append(rec)
    for s, rs in sorted(by_s.items()):
        out.append(
            {
                "s": s,
                "runs": len(rs),
                "frac_any_round1": float(np.mean([r["any_round1"] for r in rs])),
                "frac_fully_infected": float(np.mean([r["fully_infected"] for r in rs])),
                "frac_vk_by_round1": float(np.mean([r["vk_by_round1"] for r in rs])),
                "mean_rounds": float(np.mean([r["rounds_to_fixation"] for r in rs])),
                "max_rounds": int(max(r["rounds_to_fixation"] for r in rs)),
            }
        )
    return out


# --- branching --------------------------------------------------------------


def run_branch_extinction(m: int, alpha: float, x: int, depth: int, runs: int, seed: int = 0) -> tuple[list[dict], dict]:
    """Batch of runs; per-depth rows plus a summary with the zero-label census."""
    batch = branching.simulate_batch(branching.BranchingConfig(m, x, alpha, depth, seed), runs)
    rows = []
    for t in range(depth + 1):
        alive = int(batch.survivors[t]) if t < len(batch.survivors) else 0
        rows.append(
            {
                "depth": t,
                "mean_phi": float(batch.mean_phi[t]) if t < len(batch.mean_phi) else 0.0,
                "survivor_fraction": alive / runs,
                "survivors": alive,
                "ratio_mean": float(batch.ratio_mean[t]) if t < len(batch.ratio_mean) else math.nan,
                "ratio_sd": float(batch.ratio_sd[t]) if t < len(batch.ratio_sd) else math.nan,
            }
        )
    z = batch.zero_labelled
    summary = {
        "m": m,
        "alpha": alpha,
        "x": x,
        "depth": depth,
        "runs": runs,
        "survivors_at_depth": rows[-1]["survivors"],
        "max_extinction_depth": int(batch.extinct_at.max()),
        "zero_labelled_mean": float(z.mean()),
        "zero_labelled_se": float(z.std(ddof=1) / math.sqrt(runs)) if runs > 1 else math.nan,
    }
    if branching.in_regime(m, alpha):
        d, delta = branching.constants(m, alpha)
        summary.update(d=d, delta=delta, expected_zero_labelled=d**x)
    return rows, summary


# --- degree law / early nodes -----------------------------------------------


def degree_law(n: int, p: float, m: int, reps: int, base_seed: int = 0, track=(4, 16, 64), min_obs: int = 50, slack: float = 1.25) -> tuple[list[dict], dict]:
    """Pooled degree counts against m n eta_x, and tracked-node degrees against the recurrence."""
    pooled = np.zeros(1, dtype=np.int64)
    tracked = []
    point = {"n": n, "p": p, "m": m}
    records = []

    def task(pt, r, rng):
        g = generate(GenConfig(Model.PA_INDEPENDENT, n, m, p, _graph_seed(rng)))
        deg = g.degrees()
        return {"hist": np.bincount(deg[1:]), "tracked": deg[list(track)]}

    for rec in _sweep([point], reps, base_seed, task):
        h = rec.pop("hist")
        if len(h) > len(pooled):
            pooled = np.pad(pooled, (0, len(h) - len(pooled)))
        pooled[: len(h)] += h
        t = rec.pop("tracked")
        tracked.append(t)
        rec.update({f"deg_{s}": int(d) for s, d in zip(track, t)})
        records.append(rec)

    table = analytics.solve_eta(p, m, max(len(pooled), m + 3))
    bound = table.bound(n)
    xs = np.flatnonzero(pooled >= min_obs)
    mean_counts = pooled / reps
    worst = float(np.max(mean_counts[xs] / bound[xs])) if xs.size else math.nan
    tr = np.asarray(tracked, dtype=float)
    early = []
    for i, s in enumerate(track):
        mean = float(tr[:, i].mean())
        se = float(tr[:, i].std(ddof=1) / math.sqrt(reps)) if reps > 1 else math.nan
        exact = analytics.expected_degree(p, m, s, n, "exact").at(n) if s > m + 1 else math.nan
        asym = analytics.expected_degree(p, m, s, n, "asymptotic").at(n)
        early.append(
            {
                "s": s,
                "mean": mean,
                "se": se,
                "recurrence_exact": exact,
                "recurrence_asymptotic": asym,
                "z_exact": (mean - exact) / se if se else math.nan,
                "z_asymptotic": (mean - asym) / se if se else math.nan,
                "ratio_to_scale": mean / (n / s) ** (p / 2),
            }
        )
    summary = {
        "n": n,
        "p": p,
        "m": m,
        "reps": reps,
        "checked_degrees": int(xs.size),
        "worst_count_to_bound": worst,
        "bound_slack": slack,
        "bound_holds": bool(xs.size and worst <= slack),
        "early_nodes": early,
    }
    return records, summary


# --- staging ----------------------------------------------------------------


def staging(n: int, p: float, m: int, reps: int, base_seed: int = 0, model=Model.PA_INDEPENDENT, level: float = 0.99, first_stage: int = 3) -> tuple[list[dict], dict]:
    part = StagePartition.for_n(n)
    point = {"model": Model(model).value, "n": n, "p": p, "m": m}
    total = analytics.StageEscape(np.zeros(len(part.stages), dtype=np.int64), np.zeros(len(part.stages), dtype=np.int64))
    records = []

    def task(pt, r, rng):
        g = generate(GenConfig(Model(model), n, m, p, _graph_seed(rng)))
        return {"esc": analytics.staging_escape_stats(g, part)}

    for rec in _sweep([point], reps, base_seed, task):
        esc = rec.pop("esc")
        total = total + esc
        sel = slice(first_stage, None)
        rec.update(same_stage=int(esc.same[sel].sum()), issued=int(esc.issued[sel].sum()))
        records.append(rec)
    stages = []
    ok = True
    for i, (same, issued) in enumerate(zip(total.same.tolist(), total.issued.tolist())):
        if issued == 0:
            stages.append({"stage": i, "fraction": None, "issued": 0})
            continue
        # binomial slack at the 1/3 boundary, 99% one-sided
        slack = _binomial_slack(issued, 1 / 3, level)
        frac = same / issued
        passed = frac < 1 / 3 + slack
        if i >= first_stage:
            ok &= passed
        stages.append({"stage": i, "fraction": frac, "issued": issued, "slack": slack, "passed": passed})
    return records, {"n": n, "p": p, "m": m, "reps": reps, "stages": stages, "all_pass": ok}


def _binomial_slack(trials: int, q: float, level: float) -> float:
    from scipy.stats import norm

    return float(norm.ppf(level) * math.sqrt(q * (1 - q) / trials))


# --- mcv --------------------------------------------------------------------


def run_mcv_suite(count: int, depth_max: int, width_max: int, ks=(2, 3), seed: int = 0, epsilon: float = 0.5) -> list[dict]:
    """Random layered circuits, each checked against direct evaluation with the minimal M."""
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(count):
        depth = int(rng.integers(1, depth_max + 1))
        c = mcv.random_circuit(rng, depth, width_max)
        k = int(ks[int(rng.integers(len(ks)))])
        v = mcv.check(c, k, epsilon, minimal_M=True)
        rows.append(
            {
                "circuit": i,
                "depth": depth,
                "gates": len(c.gates),
                "k": k,
                **{key: val for key, val in v.as_dict().items() if key != "notes"},
                "notes": "; ".join(v.notes),
            }
        )
    return rows


# --- driver -----------------------------------------------------------------


def write_records(records: list[dict], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols: list[str] = []
    for rec in records:
        cols.extend(c for c in rec if c not in cols)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for rec in records:
            w.writerow({c: _cell(rec.get(c, "")) for c in cols})


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return json.dumps(v)
    if isinstance(v, np.generic):
        return v.item()
    return v


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, float) and not math.isfinite(o):
        return None
    return o


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> tuple[list[dict], Any]:
    """Dispatch on ``cfg.kind``; writes records.csv and summary.json when out_dir is given."""
    out_dir = Path(out_dir or cfg.out) if (out_dir or cfg.out) else None
    partial = out_dir / "records.partial.csv" if out_dir else None
    P = cfg.params
    pts = cfg.points()
    kind = cfg.kind
    if kind is Kind.SPREAD_TIME:
        k = P.get("k")
        mult = P.get("count_multiplicity", True)
        pruned = P.get("pruned", True)

        def task(pt, r, rng):
            return spread_once(pt["model"], pt["n"], pt["p"], pt["m"], k or pt["m"], _graph_seed(rng), mult, pruned)

        records = _sweep(pts, cfg.replications, cfg.base_seed, task, cfg.expected_runtime, partial)
        summary: Any = summarize_spread(records)
    elif kind in (Kind.BOOTSTRAP_THRESHOLD, Kind.OLDIES_RESCUE):
        mode = P.get("mode", "FULL" if kind is Kind.OLDIES_RESCUE else "ROUND1_ONLY")
        mult = P.get("count_multiplicity", True)

        def task(pt, r, rng):
            s = seed_count(pt.get("s", "rescue:4"), pt["n"], pt["p"])
            return bootstrap_once(pt["n"], pt["p"], pt["m"], pt["k"], s, mode, rng, mult)

        records = _sweep(pts, cfg.replications, cfg.base_seed, task, cfg.expected_runtime, partial)
        summary = summarize_bootstrap(records)
    elif kind is Kind.BRANCH_EXTINCTION:
        records, summary = [], []
        for i, pt in enumerate(pts):
            depth = pt.get("depth", P.get("depth"))
            if depth in (None, "bound"):
                n = pt.get("n", P.get("n", 2 ** pt["x"]))
                depth = branching.extinction_depth_bound(pt["m"], pt["alpha"], pt["x"], n, P.get("c3", 1.0))
            rows, summ = run_branch_extinction(pt["m"], pt["alpha"], pt["x"], int(depth), cfg.replications, stream_seed(cfg.base_seed, pt, 0))
            records += [{**pt, **row} for row in rows]
            summary.append(summ)
    elif kind is Kind.DEGREE_LAW:
        records, summary = [], []
        for pt in pts:
            recs, summ = degree_law(pt["n"], pt["p"], pt["m"], cfg.replications, cfg.base_seed, tuple(P.get("track", (4, 16, 64))))
            records += recs
            summary.append(summ)
    elif kind is Kind.STAGING:
        records, summary = [], []
        for pt in pts:
            recs, summ = staging(pt["n"], pt["p"], pt["m"], cfg.replications, cfg.base_seed, pt.get("model", Model.PA_INDEPENDENT))
            records += recs
            summary.append(summ)
    elif kind is Kind.MCV_SUITE:
        records, summary = [], []
        for pt in pts:
            recs = run_mcv_suite(cfg.replications, pt.get("depth_max", 4), pt.get("width_max", 6), pt.get("k", [2, 3]), cfg.base_seed)
            records += recs
            summary.append({**pt, "count": len(recs), "pass_rate": float(np.mean([r["verdict"] == "PASS" for r in recs]))})
    else:  # pragma: no cover
        raise ValueError(kind)
    if out_dir is not None:
        write_records(records, out_dir / "records.csv")
        (out_dir / "summary.json").write_text(json.dumps(_jsonable(summary), indent=2) + "\n")
        if partial and partial.exists():
            partial.unlink()
    return records, summary
