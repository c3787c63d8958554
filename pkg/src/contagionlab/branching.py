"""Labelled branching process B(m, x, alpha).

Every node with label i >= 1 has m children; each child independently takes
label i-1 with probability alpha and keeps label i otherwise. Label-0 nodes
are sterile. Only the per-depth label census is simulated: a label-j
population of size N spawns Binomial(m N, alpha) demoted children.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

POPULATION_CAP = 10**9


class BranchingError(ValueError):
    pass


class PopulationOverflow(BranchingError):
    pass


@dataclass(frozen=True)
class BranchingConfig:
    m: int
    x: int
    alpha: float
    max_depth: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise BranchingError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.m < 1 or self.x < 0:
            raise BranchingError("need m >= 1 and x >= 0")
        if not in_regime(self.m, self.alpha):
            warnings.warn(f"alpha={self.alpha} <= 1 - 1/m: outside the contracting regime", stacklevel=3)


def in_regime(m: int, alpha: float) -> bool:
    return alpha > 1 - 1 / m and 1 - m * (1 - alpha) > 0


def constants(m: int, alpha: float) -> tuple[float, float]:
    """(d, delta): expected demoted origins per node and the potential's contraction factor."""
    if not in_regime(m, alpha):
        raise BranchingError(f"need alpha > 1 - 1/m (m={m}, alpha={alpha})")
    d = m * alpha / (1 - m * (1 - alpha))
    delta = m * (1 - alpha) + 1 / m - (1 - alpha)
    if not delta < 1:
        raise BranchingError(f"delta={delta} is not < 1 for m={m}, alpha={alpha}")
    return d, delta


def extinction_depth_bound(m: int, alpha: float, x: int, n: float, c3: float = 1.0) -> int:
    """Depth c2 * ln n after which survival has probability <= n^-(c3+1), with x = c1 ln n."""
    d, delta = constants(m, alpha)
    ln_n = math.log(n)
    c1 = x / ln_n
    c2 = (c3 + 1 + c1 * math.log(m * d)) / math.log(1 / delta)
    return math.ceil(c2 * ln_n - 1e-9)


@dataclass
class BranchingRun:
    census: np.ndarray  # census[t, j] = N_t(j); shape (depths, x+1)
    log_phi: np.ndarray  # log phi(t); -inf once no positive labels remain
    extinct_at: int | None
    m: int
    alpha: float

    @property
    def phi(self) -> np.ndarray:
        return np.exp(self.log_phi)

    @property
    def zero_labelled(self) -> int:
        """Total 0-labelled nodes over all depths (all are origins, being sterile)."""
        return int(self.census[:, 0].sum())


def _log_phi(census: np.ndarray, log_md: float) -> np.ndarray:
    """log sum_{j>=1} N(j) (md)^j along the last axis."""
    cnt = census[..., 1:].astype(float)
    j = np.arange(1, census.shape[-1])
    with np.errstate(divide="ignore"):
        terms = np.log(cnt) + j * log_md
    top = terms.max(axis=-1, initial=-np.inf)
    safe = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(invalid="ignore"):
        s = np.exp(terms - safe[..., None]).sum(axis=-1)
    with np.errstate(divide="ignore"):
        return np.where(np.isfinite(top), safe + np.log(s), -np.inf)


def _step(pop: np.ndarray, m: int, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """One depth for a batch of censuses, shape (..., x+1)."""
    children = m * pop[..., 1:]
    demoted = rng.binomial(children, alpha)
    nxt = np.zeros_like(pop)
    nxt[..., 1:] += children - demoted
    nxt[..., :-1] += demoted
    if (nxt > POPULATION_CAP).any():
        raise PopulationOverflow("label population exceeded 1e9")
    return nxt


def _log_md(m: int, alpha: float) -> float:
    if in_regime(m, alpha):
        return math.log(m * constants(m, alpha)[0])
    return math.nan


def simulate(cfg: BranchingConfig, run_index: int = 0) -> BranchingRun:
    """One run; its stream is derived from (seed, run_index)."""
    rng = np.random.default_rng([cfg.seed, run_index])
    pop = np.zeros(cfg.x + 1, dtype=np.int64)
    pop[cfg.x] = 1
    rows = [pop]
    extinct = None
    for t in range(cfg.max_depth + 1):
        if not pop[1:].any():
            extinct = t
            break
        if t == cfg.max_depth:
            break
        pop = _step(pop, cfg.m, cfg.alpha, rng)
        rows.append(pop)
    census = np.array(rows)
    return BranchingRun(census, _log_phi(census, _log_md(cfg.m, cfg.alpha)), extinct, cfg.m, cfg.alpha)


@dataclass
class BatchSummary:
    """Per-depth aggregates over a batch of runs."""

    runs: int
    survivors: np.ndarray  # runs with positive labels at depth t
    mean_phi: np.ndarray  # mean of phi(t) over all runs (0 for extinct runs)
    ratio_mean: np.ndarray  # mean of phi(t+1)/phi(t) over runs alive at t
    ratio_sd: np.ndarray
    extinct_at: np.ndarray  # -1 if alive at max_depth
    zero_labelled: np.ndarray  # per-run total of 0-labelled nodes


def simulate_batch(cfg: BranchingConfig, runs: int) -> BatchSummary:
    """Vectorised independent runs sharing one stream derived from (seed, runs)."""
    rng = np.random.default_rng([cfg.seed, runs, 0xB7])
    log_md = _log_md(cfg.m, cfg.alpha)
    pop = np.zeros((runs, cfg.x + 1), dtype=np.int64)
    pop[:, cfg.x] = 1
    extinct = np.full(runs, -1, dtype=np.int64)
    zeros = np.zeros(runs, dtype=np.int64)
    survivors, mean_phi, ratio_mean, ratio_sd = [], [], [], []
    lp = _log_phi(pop, log_md)
    for t in range(cfg.max_depth + 1):
        alive = pop[:, 1:].any(axis=1)
        extinct[(~alive) & (extinct < 0)] = t
        survivors.append(int(alive.sum()))
        mean_phi.append(float(np.exp(lp).mean()))
        if t == cfg.max_depth or not alive.any():
            break
        pop = _step(pop, cfg.m, cfg.alpha, rng)
        zeros += pop[:, 0]
        nlp = _log_phi(pop, log_md)
        ratio = np.exp(nlp[alive] - lp[alive])
        ratio_mean.append(float(ratio.mean()))
        ratio_sd.append(float(ratio.std(ddof=1)) if ratio.size > 1 else math.nan)
        lp = nlp
        pop[:, 0] = 0  # sterile; already tallied
    return BatchSummary(
        runs,
        np.array(survivors),
        np.array(mean_phi),
        np.array(ratio_mean),
        np.array(ratio_sd),
        extinct,
        zeros,
    )


@dataclass
class TailEstimate:
    probability: float
    survivors: int
    runs: int
    interval: tuple[float, float]


def extinction_tail(cfg: BranchingConfig, depth_budget: int, runs: int) -> TailEstimate:
    """Fraction of runs with positive-label nodes at ``depth_budget``, with a 95% interval."""
    from .analytics import proportion_interval

    if runs < 1:
        raise BranchingError("runs must be >= 1")
    if cfg.x == 0:
        return TailEstimate(0.0, 0, runs, proportion_interval(0, runs))
    batch = simulate_batch(
        BranchingConfig(cfg.m, cfg.x, cfg.alpha, depth_budget, cfg.seed), runs
    )
    alive = int(np.sum((batch.extinct_at < 0) | (batch.extinct_at > depth_budget)))
    return TailEstimate(alive / runs, alive, runs, proportion_interval(alive, runs))


def extinction_cdf(m: int, alpha: float, x: int, depth: int) -> np.ndarray:
    """Exact P(extinct by depth t) for t = 0..depth.

    E_i(t) = (alpha E_{i-1}(t-1) + (1 - alpha) E_i(t-1))^m, E_0 = 1, E_i(0) = 0.
    """
    E = np.zeros(x + 1)
    E[0] = 1.0
    out = [E[x]]
    for _ in range(depth):
        nxt = E.copy()
        nxt[1:] = (alpha * E[:-1] + (1 - alpha) * E[1:]) ** m
        E = nxt
        out.append(E[x])
    return np.array(out)
