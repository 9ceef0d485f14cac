"""Synthetic datasets with controllable per-stratum structure.

Records are split into latent strata of near-equal size. Within stratum k,
the predicate fires with probability ``positive_rates[k]``, the statistic is
drawn from ``Normal(means[k], spreads[k])``, and the proxy score is the
stratum's positive rate plus truncated Gaussian noise. Negative records
carry a statistic value too, but estimators never see it without a positive
oracle result. Ground truth for every aggregate is computed exhaustively.
"""

from dataclasses import dataclass
from typing import Mapping, Optional, Union

import numpy as np

from .data import Dataset
from .predicates import PredicateExpr, base_names, eval_oracle_expr, parse_predicate

__all__ = [
    "SynthSpec",
    "MultiPredicateSynthSpec",
    "GroupSynthSpec",
    "GroundTruth",
    "generate",
    "generate_multipred",
    "generate_groups",
    "exhaustive_ground_truth",
]


@dataclass(frozen=True)
class GroundTruth:
    """Exact query answers from a full pass over the labels."""

    avg: float
    sum: float
    count: int

    def for_aggregate(self, aggregate: str) -> float:
        if aggregate == "AVG":
            return self.avg
        if aggregate == "SUM":
            return self.sum
        if aggregate == "COUNT":
            return float(self.count)
        raise ValueError(f"unsupported aggregate {aggregate!r}")


def exhaustive_ground_truth(
    dataset: Dataset, predicate: Union[PredicateExpr, str]
) -> GroundTruth:
    """Evaluate the predicate on every record (no budget involved)."""
    expr = parse_predicate(predicate) if isinstance(predicate, str) else predicate
    labels = {name: dataset.oracle_labels[name] for name in base_names(expr)}
    matched = np.asarray(eval_oracle_expr(expr, labels), dtype=bool)
    count = int(matched.sum())
    if count == 0:
        raise ValueError("no record satisfies the predicate; ground truth undefined")
    positives = dataset.statistics[matched]
    return GroundTruth(avg=float(positives.mean()), sum=float(positives.sum()), count=count)


def _latent_strata(n: int, k: int) -> np.ndarray:
    """Record index -> latent stratum, same floor-boundary rule as stratification."""
    bounds = [(j * n) // k for j in range(k + 1)]
    out = np.empty(n, dtype=np.int64)
    for j in range(k):
        out[bounds[j] : bounds[j + 1]] = j
    return out


def _resolve_rates(
    rates, beta_params, k: int, rng: np.random.Generator
) -> np.ndarray:
    if rates is not None:
        p = np.asarray(rates, dtype=np.float64)
        if p.shape != (k,):
            raise ValueError(f"expected {k} positive rates, got {p.shape}")
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("positive rates must lie in [0, 1]")
    else:
        if beta_params is None:
            raise ValueError("either positive_rates or beta_params must be given")
        a, b = beta_params
        p = rng.beta(a, b, size=k)
    if p.sum() <= 0.0:
        raise ValueError("at least one stratum must have a nonzero positive rate")
    return p


def _per_stratum(vec, default: float, k: int) -> np.ndarray:
    if vec is None:
        return np.full(k, default, dtype=np.float64)
    arr = np.asarray(vec, dtype=np.float64)
    if arr.shape != (k,):
        raise ValueError(f"expected a length-{k} vector, got {arr.shape}")
    return arr


@dataclass(frozen=True)
class SynthSpec:
    """Single-predicate synthetic dataset.

    ``positive_rates`` fixes the per-stratum rates explicitly; when omitted
    they are drawn once from ``Beta(*beta_params)``. Default statistic means
    spread across strata so stratification has something to gain.
    """

    n: int
    strata: int = 5
    positive_rates: Optional[tuple] = None
    beta_params: Optional[tuple] = (2.0, 8.0)
    means: Optional[tuple] = None
    spreads: Optional[tuple] = None
    proxy_noise: float = 0.0
    seed: int = 0
    predicate_name: str = "pred"

    def __post_init__(self):
        if self.n < self.strata:
            raise ValueError("need at least one record per latent stratum")
        if self.proxy_noise < 0.0:
            raise ValueError("proxy_noise must be nonnegative")


def generate(spec: SynthSpec) -> tuple[Dataset, GroundTruth]:
    """Generate a dataset and its exhaustively computed ground truth.

    The label and proxy columns share ``spec.predicate_name`` so queries can
    bind them without extra configuration.
    """
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    k = spec.strata
    p = _resolve_rates(spec.positive_rates, spec.beta_params, k, rng)
    means = _per_stratum(spec.means, 0.0, k)
    if spec.means is None:
        means = np.linspace(1.0, float(k), k)
    spreads = _per_stratum(spec.spreads, 1.0, k)
    if np.any(spreads < 0.0):
        raise ValueError("spreads must be nonnegative")

    stratum = _latent_strata(spec.n, k)
    labels = rng.random(spec.n) < p[stratum]
    values = means[stratum] + spreads[stratum] * rng.standard_normal(spec.n)
    proxies = p[stratum]
    if spec.proxy_noise > 0.0:
        proxies = proxies + spec.proxy_noise * rng.standard_normal(spec.n)
    proxies = np.clip(proxies, 0.0, 1.0)

    dataset = Dataset(
        statistics=values,
        oracle_labels={spec.predicate_name: labels},
        proxy_scores={spec.predicate_name: proxies},
        name=f"synth(seed={spec.seed})",
    )
    return dataset, exhaustive_ground_truth(dataset, spec.predicate_name)


@dataclass(frozen=True)
class MultiPredicateSynthSpec:
    """Several predicates over shared latent strata.

    Each predicate gets independent Bernoulli labels from its own
    per-stratum rate vector (explicit, or drawn from the Beta prior) and
    its own noisy proxy column named after it.
    """

    n: int
    strata: int = 5
    predicate_names: tuple = ("a", "b")
    positive_rates: Optional[Mapping[str, tuple]] = None
    beta_params: tuple = (2.0, 8.0)
    means: Optional[tuple] = None
    spreads: Optional[tuple] = None
    proxy_noise: float = 0.0
    seed: int = 0


def generate_multipred(spec: MultiPredicateSynthSpec) -> Dataset:
    """Generate a dataset with one label and proxy column per predicate."""
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    k = spec.strata
    rates = {}
    for name in spec.predicate_names:
        given = None if spec.positive_rates is None else spec.positive_rates.get(name)
        rates[name] = _resolve_rates(given, spec.beta_params, k, rng)
    means = _per_stratum(spec.means, 0.0, k)
    if spec.means is None:
        means = np.linspace(1.0, float(k), k)
    spreads = _per_stratum(spec.spreads, 1.0, k)

    stratum = _latent_strata(spec.n, k)
    labels = {}
    proxies = {}
    for name in spec.predicate_names:
        p = rates[name]
        labels[name] = rng.random(spec.n) < p[stratum]
        noisy = p[stratum]
        if spec.proxy_noise > 0.0:
            noisy = noisy + spec.proxy_noise * rng.standard_normal(spec.n)
        proxies[name] = np.clip(noisy, 0.0, 1.0)
    values = means[stratum] + spreads[stratum] * rng.standard_normal(spec.n)
    return Dataset(
        statistics=values,
        oracle_labels=labels,
        proxy_scores=proxies,
        name=f"synth-multipred(seed={spec.seed})",
    )


@dataclass(frozen=True)
class GroupSynthSpec:
    """Mutually exclusive group keys with noisy indicator proxies.

    Each record belongs to at most one group (drawn categorically from
    ``group_rates``; the leftover mass is background). The statistic is
    Normal with per-group location; each group's proxy is its membership
    indicator plus truncated Gaussian noise.
    """

    n: int
    group_rates: tuple
    group_names: Optional[tuple] = None
    means: Optional[tuple] = None
    spreads: Optional[tuple] = None
    background_mean: float = 0.0
    background_spread: float = 1.0
    proxy_noise: float = 0.25
    seed: int = 0

    def __post_init__(self):
        rates = np.asarray(self.group_rates, dtype=np.float64)
        if np.any(rates <= 0.0) or rates.sum() > 1.0:
            raise ValueError("group rates must be positive and sum to at most 1")


def generate_groups(spec: GroupSynthSpec) -> tuple[Dataset, dict[str, GroundTruth]]:
    """Generate a group-by dataset and per-group ground truths."""
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    rates = np.asarray(spec.group_rates, dtype=np.float64)
    g = len(rates)
    names = spec.group_names or tuple(f"g{i + 1}" for i in range(g))
    if len(names) != g:
        raise ValueError("group_names must match group_rates in length")
    means = _per_stratum(spec.means, 0.0, g)
    if spec.means is None:
        means = np.linspace(1.0, float(g), g)
    spreads = _per_stratum(spec.spreads, 1.0, g)

    # key == g means background (no group).
    key = np.searchsorted(np.cumsum(rates), rng.random(spec.n), side="right")
    mu_all = np.append(means, spec.background_mean)
    sd_all = np.append(spreads, spec.background_spread)
    values = mu_all[key] + sd_all[key] * rng.standard_normal(spec.n)

    labels = {}
    proxies = {}
    for i, name in enumerate(names):
        member = key == i
        labels[name] = member
        noisy = member.astype(np.float64)
        if spec.proxy_noise > 0.0:
            noisy = noisy + spec.proxy_noise * rng.standard_normal(spec.n)
        proxies[name] = np.clip(noisy, 0.0, 1.0)

    dataset = Dataset(
        statistics=values,
        oracle_labels=labels,
        proxy_scores=proxies,
        name=f"synth-groups(seed={spec.seed})",
    )
    truths = {name: exhaustive_ground_truth(dataset, name) for name in names}
    return dataset, truths
