"""Two-stage stratified sampling under an oracle-call budget.

Stage 1 spreads a pilot share of the budget evenly across strata to
estimate each stratum's positive rate and spread; Stage 2 spends the rest
according to the plug-in optimal allocation. Pilot samples are kept in the
final estimate (sample reuse), and Stage-2 draws exclude Stage-1 records so
budget only buys new oracle calls. A uniform-sampling baseline shares the
same estimator and confidence-interval machinery.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import _kernels
from .bootstrap import BootstrapConfig, bootstrap_ci
from .data import ConfigError, Dataset, OracleLedger, QueryConfig
from .estimators import (
    AllocationPlan,
    NoPositiveSamplesError,
    StratumStats,
    aggregate_estimate,
    optimal_allocation,
    stratum_stats,
)
from .predicates import PredicateExpr, base_names, combine_scores, eval_oracle_expr, parse_predicate
from .stratify import Stratification, stratify_by_quantile

__all__ = ["SamplerState", "EstimateReport", "abae_sample", "uniform_sample"]


class _Pool:
    """Without-replacement draws from a fixed id set, resumable across stages.

    Each draw advances a cursor over a partial Fisher-Yates shuffle, so a
    later draw can never return an id produced by an earlier one.
    """

    def __init__(self, ids: np.ndarray):
        self._ids = np.ascontiguousarray(ids, dtype=np.int64).copy()
        self.cursor = 0

    @property
    def remaining(self) -> int:
        return len(self._ids) - self.cursor

    def draw(self, k: int, rng: np.random.Generator) -> np.ndarray:
        if k < 0 or k > self.remaining:
            raise ValueError(f"cannot draw {k} of {self.remaining} remaining ids")
        if k == 0:
            return np.empty(0, dtype=np.int64)
        start = self.cursor
        js = rng.integers(low=np.arange(start, start + k), high=len(self._ids))
        _kernels.shuffle_draw(self._ids, js, start)
        self.cursor += k
        return self._ids[start : start + k].copy()


def _fill_to_total(desired, capacities, total: int, order) -> np.ndarray:
    """Cap desired per-stratum counts and redistribute shortfall in ``order``.

    Hands out one draw per stratum per round until ``total`` is reached or
    every stratum is full.
    """
    counts = np.minimum(np.asarray(desired, dtype=np.int64), capacities)
    spent = int(counts.sum())
    while spent < total:
        progressed = False
        for k in order:
            if spent >= total:
                break
            if counts[k] < capacities[k]:
                counts[k] += 1
                spent += 1
                progressed = True
        if not progressed:
            break
    return counts


def _stage1_counts(n1: int, capacities: np.ndarray) -> np.ndarray:
    """Even split of the pilot budget, remainder to the first strata."""
    k = len(capacities)
    base, rem = divmod(n1, k)
    desired = base + (np.arange(k) < rem)
    return _fill_to_total(desired, capacities, n1, np.arange(k))


def _stage2_counts(n2: int, shares: np.ndarray, capacities: np.ndarray) -> np.ndarray:
    """Floor of the share allocation, remainder by descending share."""
    desired = np.floor(n2 * shares).astype(np.int64)
    order = np.lexsort((np.arange(len(shares)), -shares))
    return _fill_to_total(desired, capacities, n2, order)


@dataclass
class SamplerState:
    """Draw bookkeeping for one query execution."""

    stratification: Stratification
    stage1_ids: list[np.ndarray]
    stage2_ids: list[np.ndarray]  # new draws only, disjoint from stage 1
    rng_seed: int
    ledger: OracleLedger


@dataclass
class EstimateReport:
    """Point estimate, confidence interval, and per-stratum diagnostics."""

    estimate: float
    ci_low: float
    ci_high: float
    per_stratum: list[StratumStats]
    allocation_used: AllocationPlan
    oracle_calls: int
    seed: int
    aggregate: str
    budget_total: int
    warnings: list[str] = field(default_factory=list)
    state: Optional[SamplerState] = None

    def to_dict(self) -> dict:
        return {
            "aggregate": self.aggregate,
            "estimate": self.estimate,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "oracle_calls": self.oracle_calls,
            "budget_total": self.budget_total,
            "seed": self.seed,
            "allocation": [float(t) for t in self.allocation_used.shares],
            "allocation_uniform_fallback": self.allocation_used.uniform_fallback,
            "per_stratum": [
                {
                    "n_drawn": s.n_drawn,
                    "n_positive": int(len(s.positives)),
                    "p_hat": s.p_hat,
                    "mu_hat": s.mu_hat,
                    "sigma_hat": s.sigma_hat,
                }
                for s in self.per_stratum
            ],
            "warnings": list(self.warnings),
        }


def _resolve_predicate(predicate: Union[PredicateExpr, str]) -> PredicateExpr:
    return parse_predicate(predicate) if isinstance(predicate, str) else predicate


def _resolve_scores(dataset: Dataset, proxy, expr: PredicateExpr) -> np.ndarray:
    """Stratification scores: a named proxy, a score expression, or (by
    default) the predicate expression folded over same-named proxies."""
    if proxy is None:
        return np.asarray(combine_scores(expr, dataset.proxy_scores))
    if isinstance(proxy, str):
        return dataset.proxy(proxy)
    return np.asarray(combine_scores(proxy, dataset.proxy_scores))


def _matched(dataset: Dataset, expr: PredicateExpr, names, ids: np.ndarray) -> np.ndarray:
    labels = {name: dataset.oracle_labels[name][ids] for name in names}
    return np.asarray(eval_oracle_expr(expr, labels), dtype=bool)


def _empty_stats() -> StratumStats:
    return StratumStats(
        n_drawn=0, positives=np.empty(0, dtype=np.float64), p_hat=0.0, mu_hat=0.0, sigma_hat=0.0
    )


def _finish_report(
    samples: list[tuple[np.ndarray, np.ndarray]],
    sizes: np.ndarray,
    config_like: dict,
    plan: AllocationPlan,
    ledger: OracleLedger,
    boot_seed: int,
    state: Optional[SamplerState],
) -> EstimateReport:
    """Shared tail of every sampler: stats, point estimate, bootstrap CI."""
    stats = [
        stratum_stats(values, matched) if len(values) else _empty_stats()
        for values, matched in samples
    ]
    if sum(len(s.positives) for s in stats) == 0:
        raise NoPositiveSamplesError(
            "no drawn record matched the predicate; consider a larger budget"
        )
    estimate = aggregate_estimate(config_like["aggregate"], stats, sizes)
    cfg = BootstrapConfig(
        trials=config_like["bootstrap_trials"], alpha=config_like["alpha"], seed=boot_seed
    )
    boot_samples = [(v, m.astype(np.uint8)) for v, m in samples]
    ci = bootstrap_ci(boot_samples, cfg, aggregate=config_like["aggregate"], sizes=sizes)
    warnings = []
    if ci.degenerate:
        warnings.append(
            f"degenerate bootstrap: {ci.skipped_trials}/{ci.trials} resamples had no positives"
        )
    ci_low, ci_high = ci.low, ci.high
    if math.isnan(ci_low) or math.isnan(ci_high):
        ci_low = ci_high = estimate
        warnings.append("all bootstrap resamples were empty of positives; CI collapsed to the estimate")
    elif not ci_low <= estimate <= ci_high:
        warnings.append("point estimate fell outside the percentile interval")
    return EstimateReport(
        estimate=estimate,
        ci_low=ci_low,
        ci_high=ci_high,
        per_stratum=stats,
        allocation_used=plan,
        oracle_calls=ledger.calls_made,
        seed=config_like["seed"],
        aggregate=config_like["aggregate"],
        budget_total=config_like["budget_total"],
        warnings=warnings,
        state=state,
    )


def _boot_seed(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1, np.uint64)[0])


def abae_sample(
    dataset: Dataset,
    config: QueryConfig,
    stratification: Optional[Stratification] = None,
    sample_reuse: bool = True,
    faithful_resample: bool = False,
) -> EstimateReport:
    """Run the two-stage stratified sampler and return its estimate report.

    ``stratification`` may be passed in to amortize the proxy sort across
    repeated runs; it must match the config's proxy and stratum count.
    ``sample_reuse=False`` drops Stage-1 samples from the final estimates
    (Stage 1 still drives the allocation); ``faithful_resample=True`` draws
    Stage 2 from whole strata, deduplicating instead of excluding Stage-1
    records.
    """
    expr = _resolve_predicate(config.predicate)
    names = base_names(expr)
    for nm in names:
        if nm not in dataset.oracle_labels:
            raise ConfigError(f"dataset has no oracle label column {nm!r}")
    cost_per_record = len(names)
    n_rec = config.budget_total // cost_per_record
    k = config.num_strata
    n1 = int(math.floor(config.stage1_fraction * n_rec + 0.5))
    if n1 < k:
        raise ConfigError(
            f"stage-1 budget {n1} is smaller than the number of strata {k}"
        )
    if stratification is None:
        scores = _resolve_scores(dataset, config.proxy, expr)
        stratification = stratify_by_quantile(dataset, scores, k)
    elif stratification.num_strata != k:
        raise ConfigError("provided stratification does not match num_strata")

    ledger = OracleLedger(config.budget_total, names, dataset.n)
    root = np.random.SeedSequence(config.seed)
    sample_seq, boot_seq = root.spawn(2)
    rng = np.random.default_rng(sample_seq)

    pools = [_Pool(ids) for ids in stratification.strata]
    sizes = stratification.sizes()

    c1 = _stage1_counts(n1, sizes)
    stage1_ids = []
    stage1_samples = []
    for pool, count in zip(pools, c1):
        ids = pool.draw(int(count), rng)
        for nm in names:
            ledger.charge(nm, ids)
        stage1_ids.append(ids)
        stage1_samples.append((dataset.statistics[ids], _matched(dataset, expr, names, ids)))

    pilot = [
        stratum_stats(values, matched) if len(values) else _empty_stats()
        for values, matched in stage1_samples
    ]
    plan = optimal_allocation(
        [s.p_hat for s in pilot], [s.sigma_hat for s in pilot]
    )

    n2 = n_rec - int(c1.sum())
    if faithful_resample:
        # Draw from whole strata; overlaps with Stage 1 are deduplicated
        # below and their oracle charges are already memoized.
        stage2_pools = [_Pool(ids) for ids in stratification.strata]
        capacities = sizes.copy()
    else:
        stage2_pools = pools
        capacities = np.array([p.remaining for p in pools], dtype=np.int64)
    c2 = _stage2_counts(n2, plan.shares, capacities)

    stage2_ids = []
    for pool, count, seen in zip(stage2_pools, c2, stage1_ids):
        ids = pool.draw(int(count), rng)
        if faithful_resample and len(ids):
            ids = ids[~np.isin(ids, seen)]
        for nm in names:
            ledger.charge(nm, ids)
        stage2_ids.append(ids)

    samples = []
    for ids1, ids2 in zip(stage1_ids, stage2_ids):
        ids = np.concatenate([ids1, ids2]) if sample_reuse else ids2
        samples.append((dataset.statistics[ids], _matched(dataset, expr, names, ids)))

    state = SamplerState(
        stratification=stratification,
        stage1_ids=stage1_ids,
        stage2_ids=stage2_ids,
        rng_seed=config.seed,
        ledger=ledger,
    )
    config_like = {
        "aggregate": config.aggregate,
        "bootstrap_trials": config.bootstrap_trials,
        "alpha": config.alpha,
        "seed": config.seed,
        "budget_total": config.budget_total,
    }
    return _finish_report(samples, sizes, config_like, plan, ledger, _boot_seed(boot_seq), state)


def uniform_sample(
    dataset: Dataset,
    predicate: Union[PredicateExpr, str],
    budget: int,
    seed: int,
    aggregate: str = "AVG",
    alpha: float = 0.05,
    bootstrap_trials: int = 1_000,
) -> EstimateReport:
    """Uniform-sampling baseline: one stratum, same estimator and CI."""
    if budget < 1:
        raise ConfigError("budget must be at least 1")
    expr = _resolve_predicate(predicate)
    names = base_names(expr)
    for nm in names:
        if nm not in dataset.oracle_labels:
            raise ConfigError(f"dataset has no oracle label column {nm!r}")
    n_rec = min(budget // len(names), dataset.n)
    if n_rec < 1:
        raise ConfigError("budget does not cover a single record evaluation")

    ledger = OracleLedger(budget, names, dataset.n)
    root = np.random.SeedSequence(seed)
    sample_seq, boot_seq = root.spawn(2)
    rng = np.random.default_rng(sample_seq)

    pool = _Pool(np.arange(dataset.n, dtype=np.int64))
    ids = pool.draw(n_rec, rng)
    for nm in names:
        ledger.charge(nm, ids)
    samples = [(dataset.statistics[ids], _matched(dataset, expr, names, ids))]

    stratification = Stratification(
        strata=(np.arange(dataset.n, dtype=np.int64),), proxy_name="<uniform>"
    )
    state = SamplerState(
        stratification=stratification,
        stage1_ids=[ids],
        stage2_ids=[np.empty(0, dtype=np.int64)],
        rng_seed=seed,
        ledger=ledger,
    )
    config_like = {
        "aggregate": aggregate,
        "bootstrap_trials": bootstrap_trials,
        "alpha": alpha,
        "seed": seed,
        "budget_total": budget,
    }
    return _finish_report(
        samples,
        np.array([dataset.n]),
        config_like,
        AllocationPlan(shares=np.array([1.0])),
        ledger,
        _boot_seed(boot_seq),
        state,
    )
