"""Percentile bootstrap confidence intervals over both sampling stages.

The resampling unit is the drawn record (match indicator plus statistic
value), not just the positives, so uncertainty in the per-stratum positive
rates propagates into the interval. Each bootstrap trial resamples every
stratum's drawn records with replacement to their original size, recomputes
the per-stratum rates and means, and recombines them; the interval is the
percentile span of the recombined replicates.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels

__all__ = ["BootstrapConfig", "BootstrapResult", "bootstrap_ci", "bootstrap_replicates"]


@dataclass(frozen=True)
class BootstrapConfig:
    trials: int = 1_000
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("bootstrap trials must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")


@dataclass(frozen=True)
class BootstrapResult:
    """Percentile interval plus resampling diagnostics.

    Unpacks as ``(low, high)``. ``skipped_trials`` counts replicates whose
    resample contained no positive record (the combined mean is undefined
    there); ``degenerate`` flags that more than half were skipped.
    """

    low: float
    high: float
    trials: int
    skipped_trials: int
    degenerate: bool

    def __iter__(self):
        return iter((self.low, self.high))


def _normalize(per_stratum_samples) -> list[tuple[np.ndarray, np.ndarray]]:
    strata = []
    for sample in per_stratum_samples:
        if isinstance(sample, tuple) and len(sample) == 2 and np.ndim(sample[0]) == 1:
            values, matched = sample
        else:
            pairs = list(sample)
            values = [v for v, _ in pairs]
            matched = [m for _, m in pairs]
        values = np.ascontiguousarray(values, dtype=np.float64)
        matched = np.ascontiguousarray(matched, dtype=np.uint8)
        if values.shape != matched.shape:
            raise ValueError("values and matched must be parallel")
        strata.append((values, matched))
    return strata


def bootstrap_replicates(
    per_stratum_samples,
    trials: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Resampled positive counts and positive-value sums per trial.

    Returns ``(counts, sums)``, each of shape ``(K, trials)``: entry
    ``[k, b]`` is the positive count (resp. sum of positive statistic
    values) of trial ``b``'s resample of stratum ``k``. Strata with no
    drawn records yield zero rows.

    Resample indices are drawn stratum-by-stratum from ``rng``, so results
    are reproducible across kernel backends up to float summation order.
    """
    strata = _normalize(per_stratum_samples)
    counts = np.zeros((len(strata), trials), dtype=np.float64)
    sums = np.zeros((len(strata), trials), dtype=np.float64)
    for k, (values, matched) in enumerate(strata):
        n_k = len(values)
        if n_k == 0:
            continue
        idx = rng.integers(0, n_k, size=(trials, n_k), dtype=np.int64)
        _kernels.resample_stratum(values, matched, idx, counts[k], sums[k])
    return counts, sums


def replicate_estimates(
    counts: np.ndarray,
    sums: np.ndarray,
    n_drawn: np.ndarray,
    aggregate: str = "AVG",
    sizes: Optional[Sequence[int]] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial estimates from resampled counts/sums.

    Returns ``(estimates, valid)``. For AVG, trials whose resample has no
    positives anywhere are invalid; SUM and COUNT are defined everywhere.
    """
    n_drawn = np.asarray(n_drawn, dtype=np.float64)
    drawn = n_drawn > 0
    if not drawn.any():
        raise ValueError("bootstrap needs at least one stratum with a drawn sample")
    p_star = counts[drawn] / n_drawn[drawn, None]
    if aggregate == "AVG":
        # p*_k mu*_k reduces to sums_k / n_k, covering the zero-positive case.
        numer = (sums[drawn] / n_drawn[drawn, None]).sum(axis=0)
        denom = p_star.sum(axis=0)
        valid = denom > 0.0
        estimates = np.divide(numer, denom, out=np.zeros_like(numer), where=valid)
        return estimates, valid
    if sizes is None:
        raise ValueError("SUM/COUNT bootstrap needs per-stratum sizes")
    sizes = np.asarray(sizes, dtype=np.float64)
    valid = np.ones(counts.shape[1], dtype=bool)
    if aggregate == "COUNT":
        return (sizes[drawn, None] * p_star).sum(axis=0), valid
    if aggregate == "SUM":
        return (sizes[drawn, None] * sums[drawn] / n_drawn[drawn, None]).sum(axis=0), valid
    raise ValueError(f"unsupported aggregate {aggregate!r}")


def bootstrap_ci(
    per_stratum_samples,
    cfg: BootstrapConfig,
    aggregate: str = "AVG",
    sizes: Optional[Sequence[int]] = None,
    rng: Optional[np.random.Generator] = None,
) -> BootstrapResult:
    """Percentile bootstrap interval for the combined estimate.

    ``per_stratum_samples`` holds one sample per stratum, either as a
    ``(values, matched)`` array pair or as a sequence of
    ``(statistic, matched)`` tuples. Percentiles use linear interpolation
    between order statistics.
    """
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    strata = _normalize(per_stratum_samples)
    if not strata or all(len(v) == 0 for v, _ in strata):
        raise ValueError("bootstrap needs at least one stratum with a drawn sample")
    counts, sums = bootstrap_replicates(strata, cfg.trials, rng)
    n_drawn = np.array([len(v) for v, _ in strata])
    estimates, valid = replicate_estimates(counts, sums, n_drawn, aggregate, sizes)
    kept = estimates[valid]
    skipped = int(cfg.trials - valid.sum())
    degenerate = skipped > cfg.trials // 2
    if len(kept) == 0:
        return BootstrapResult(float("nan"), float("nan"), cfg.trials, skipped, True)
    low, high = np.percentile(kept, [100.0 * cfg.alpha / 2.0, 100.0 * (1.0 - cfg.alpha / 2.0)])
    return BootstrapResult(float(low), float(high), cfg.trials, skipped, degenerate)
