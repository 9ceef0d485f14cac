"""Quantile stratification of records by proxy score.

Records are sorted by proxy score (ties broken by record id via a stable
sort) and split into K strata at positions ``floor(k * n / K)``, so sizes
differ by at most one.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from .data import Dataset

__all__ = ["Stratification", "stratify_by_quantile"]


@dataclass(frozen=True)
class Stratification:
    """A partition of record ids into K proxy-quantile strata.

    Ids within each stratum are stored in ascending order; the quantile
    structure lives in the partition, not the within-stratum order.
    """

    strata: tuple[np.ndarray, ...]
    proxy_name: str

    @property
    def num_strata(self) -> int:
        return len(self.strata)

    def sizes(self) -> np.ndarray:
        return np.array([len(s) for s in self.strata], dtype=np.int64)

    def stratum_of(self, n: int) -> np.ndarray:
        """Inverse map: record id -> stratum index."""
        out = np.empty(n, dtype=np.int64)
        for k, ids in enumerate(self.strata):
            out[ids] = k
        return out


def stratify_by_quantile(
    dataset: Dataset, proxy: Union[str, np.ndarray], num_strata: int
) -> Stratification:
    """Partition a dataset into equal-quantile strata of one proxy score.

    ``proxy`` is either the name of a proxy column or an explicit score
    vector (e.g. scores folded from a multi-predicate expression).
    """
    if isinstance(proxy, str):
        scores = dataset.proxy(proxy)
        name = proxy
    else:
        scores = np.asarray(proxy, dtype=np.float64)
        name = "<scores>"
    n = len(scores)
    if n != dataset.n:
        raise ValueError("score vector length does not match the dataset")
    if num_strata < 1:
        raise ValueError("number of strata must be at least 1")
    if num_strata > n:
        raise ValueError(f"cannot form {num_strata} strata from {n} records")
    order = np.argsort(scores, kind="stable")
    bounds = [(k * n) // num_strata for k in range(num_strata + 1)]
    strata = tuple(
        np.sort(order[bounds[k] : bounds[k + 1]]) for k in range(num_strata)
    )
    return Stratification(strata=strata, proxy_name=name)
