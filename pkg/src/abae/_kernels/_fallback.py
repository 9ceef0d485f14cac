"""Pure-NumPy twins of the compiled kernels in ``_core.pyx``."""

import numpy as np


def shuffle_draw(pool: np.ndarray, js: np.ndarray, start: int) -> None:
    """Apply partial Fisher-Yates swaps to ``pool`` in place.

    Swaps are inherently sequential, so this loop is the hot spot the
    compiled kernel exists for.
    """
    for i in range(len(js)):
        a = start + i
        j = js[i]
        pool[a], pool[j] = pool[j], pool[a]


def resample_stratum(
    values: np.ndarray,
    matched: np.ndarray,
    idx: np.ndarray,
    counts_out: np.ndarray,
    sums_out: np.ndarray,
) -> None:
    """Per-trial positive counts and positive-value sums for one stratum."""
    m = matched[idx]
    np.sum(m, axis=1, dtype=np.float64, out=counts_out)
    np.sum(values[idx] * m, axis=1, out=sums_out)
