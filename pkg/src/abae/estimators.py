"""Plug-in estimators, optimal budget allocation, and predicted error.

Per stratum k we track the positive rate ``p_k`` (fraction of drawn records
matching the predicate), the mean ``mu_k`` and standard deviation
``sigma_k`` of the statistic over matching records. The variance-minimizing
share of sampling budget for stratum k is proportional to
``sqrt(p_k) * sigma_k``, and under that allocation the mean squared error
of the combined estimate has the closed form

    (sum_k sqrt(p_k) sigma_k)^2 / (N * p_all^2),      p_all = sum_k p_k.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "StratumStats",
    "AllocationPlan",
    "NoPositiveSamplesError",
    "stratum_stats",
    "optimal_allocation",
    "predicted_mse",
    "allocated_mse",
    "combine_estimate",
    "aggregate_estimate",
]


class NoPositiveSamplesError(RuntimeError):
    """No drawn record matched the predicate; the estimate is undefined.

    Usually means the budget is too small for the predicate's selectivity.
    """


@dataclass(frozen=True)
class StratumStats:
    """Plug-in statistics for the drawn sample of one stratum."""

    n_drawn: int
    positives: np.ndarray  # statistic values of records matching the predicate
    p_hat: float
    mu_hat: float
    sigma_hat: float


def stratum_stats(values, matched) -> StratumStats:
    """Compute per-stratum plug-in statistics from a drawn sample.

    ``mu_hat`` is 0 with no positives and ``sigma_hat`` is 0 with fewer
    than two, matching the estimator's convention for uninformative strata.
    The variance uses the unbiased (n-1) denominator.
    """
    values = np.asarray(values, dtype=np.float64)
    matched = np.asarray(matched, dtype=bool)
    if values.shape != matched.shape or values.ndim != 1:
        raise ValueError("values and matched must be parallel 1-D sequences")
    if len(values) == 0:
        raise ValueError("cannot compute stratum statistics from an empty sample")
    positives = values[matched]
    p_hat = len(positives) / len(values)
    mu_hat = float(positives.mean()) if len(positives) > 0 else 0.0
    sigma_hat = float(positives.std(ddof=1)) if len(positives) > 1 else 0.0
    return StratumStats(
        n_drawn=len(values),
        positives=positives,
        p_hat=p_hat,
        mu_hat=mu_hat,
        sigma_hat=sigma_hat,
    )


@dataclass(frozen=True)
class AllocationPlan:
    """Budget shares across strata: nonnegative, summing to one.

    ``uniform_fallback`` marks the degenerate case where every stratum had
    ``sqrt(p_k) * sigma_k = 0`` and the plan fell back to equal shares.
    """

    shares: np.ndarray
    uniform_fallback: bool = False

    def __post_init__(self):
        shares = np.asarray(self.shares, dtype=np.float64)
        if np.any(shares < 0.0) or abs(shares.sum() - 1.0) > 1e-9:
            raise ValueError("allocation shares must be nonnegative and sum to 1")
        object.__setattr__(self, "shares", shares)


def optimal_allocation(p, sigma) -> AllocationPlan:
    """Budget shares proportional to ``sqrt(p_k) * sigma_k``.

    Falls back to the uniform plan when every weight is zero (nothing
    learned in the pilot stage), which is the safe default.
    """
    p = np.asarray(p, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    if p.shape != sigma.shape or p.ndim != 1:
        raise ValueError("p and sigma must be parallel 1-D vectors")
    weights = np.sqrt(p) * sigma
    total = weights.sum()
    if total <= 0.0:
        k = len(p)
        return AllocationPlan(shares=np.full(k, 1.0 / k), uniform_fallback=True)
    return AllocationPlan(shares=weights / total)


def predicted_mse(p, sigma, n: int) -> float:
    """Closed-form MSE of the combined estimate under the optimal allocation."""
    p = np.asarray(p, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    if n <= 0:
        raise ValueError("sample budget must be positive")
    p_all = p.sum()
    if p_all <= 0.0:
        raise NoPositiveSamplesError("no stratum has a positive rate above zero")
    return float((np.sqrt(p) * sigma).sum() ** 2 / (n * p_all**2))


def allocated_mse(p, sigma, shares, n: int) -> float:
    """Predicted MSE under an arbitrary allocation.

    Computes ``sum_k w_k^2 sigma_k^2 / (p_k T_k n)`` with
    ``w_k = p_k / p_all``. Strata with zero weight or zero spread
    contribute nothing; a stratum with positive weight and spread but zero
    share makes the error infinite.
    """
    p = np.asarray(p, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    shares = np.asarray(shares, dtype=np.float64)
    p_all = p.sum()
    if p_all <= 0.0:
        raise NoPositiveSamplesError("no stratum has a positive rate above zero")
    w = p / p_all
    numer = w**2 * sigma**2
    denom = p * shares * n
    active = numer > 0.0
    if np.any(active & (denom <= 0.0)):
        return float("inf")
    return float((numer[active] / denom[active]).sum())


def combine_estimate(stats: list[StratumStats]) -> float:
    """Positive-rate-weighted mean across strata: sum p_k mu_k / sum p_k."""
    p = np.array([s.p_hat for s in stats])
    mu = np.array([s.mu_hat for s in stats])
    p_sum = p.sum()
    if p_sum <= 0.0:
        raise NoPositiveSamplesError(
            "no positive samples in any stratum; a larger budget may be needed"
        )
    return float((p * mu).sum() / p_sum)


def aggregate_estimate(aggregate: str, stats: list[StratumStats], sizes) -> float:
    """Point estimate for AVG, SUM, or COUNT from per-stratum statistics.

    SUM and COUNT rescale the per-stratum rates by the stratum sizes:
    COUNT estimates the number of matching records, SUM their statistic
    total.
    """
    sizes = np.asarray(sizes, dtype=np.float64)
    p = np.array([s.p_hat for s in stats])
    mu = np.array([s.mu_hat for s in stats])
    if aggregate == "AVG":
        return combine_estimate(stats)
    if aggregate == "COUNT":
        return float((sizes * p).sum())
    if aggregate == "SUM":
        return float((sizes * p * mu).sum())
    raise ValueError(f"unsupported aggregate {aggregate!r}")
