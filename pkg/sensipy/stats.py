from typing import Callable, Optional, Tuple

import numpy as np
from scipy.special import logsumexp


def log_mean_exp(
    a: np.ndarray,
    weights: Optional[np.ndarray] = None,
    axis: Optional[int] = None) -> np.ndarray:
    """Computes log(E[exp(a)]) without overflow.
    That is: log of the (weighted) arithmetic mean of exp(a_1), ..., exp(a_n)

    Args:
        a: Input array
        weights: Probability weights summing to one.
            If None, uniform weights are used.
        axis: Axis along which the mean is computed.
            If None, compute over the whole array `a`.

    Returns:
        log of the mean of exp(a)

    Examples:
    >>> float(log_mean_exp(np.array([0.0, 0.0])))
    0.0
    >>> round(float(log_mean_exp(np.array([1000.0, 1000.0]))), 6)
    1000.0
    """
    a = np.asarray(a, dtype=float)
    if weights is None:
        n = a.size if axis is None else a.shape[axis]
        return logsumexp(a, axis=axis) - np.log(n)
    return logsumexp(a, b=np.asarray(weights, dtype=float), axis=axis)


def mean_and_stderr(a: np.ndarray) -> Tuple[float, float]:
    """Returns the sample mean of `a` and its standard error.

    Examples:
    >>> mean_and_stderr(np.array([1.0, 1.0, 1.0]))
    (1.0, 0.0)
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    if a.size < 2:
        return float(a.mean()), 0.0
    return float(a.mean()), float(a.std(ddof=1) / np.sqrt(a.size))


def jackknife_stderr(
    statistic: Callable[..., float],
    *samples: np.ndarray,
    groups: Optional[int] = 20) -> float:
    """Estimates the standard error of `statistic` by the grouped
    (delete-a-group) jackknife.
    All arrays in `samples` are indexed by sample along their first axis
    and are deleted jointly, so paired draws stay paired.

    Args:
        statistic: function of the arrays in `samples` returning a scalar
        samples: arrays of equal length along axis 0
        groups: number of contiguous groups. If None or not smaller than
            the sample count, the leave-one-out jackknife is used.

    Returns:
        jackknife standard error

    Examples:
    >>> x = np.arange(10.0)
    >>> se = jackknife_stderr(np.mean, x, groups=None)
    >>> bool(np.isclose(se, x.std(ddof=1) / np.sqrt(10)))
    True
    """
    n = len(samples[0])
    if any(len(s) != n for s in samples):
        raise ValueError("jackknife samples must have equal length")
    if n < 2:
        return 0.0
    if groups is None or groups >= n:
        groups = n
    edges = np.linspace(0, n, groups + 1).astype(int)
    replicates = np.empty(groups)
    index = np.arange(n)
    for g in range(groups):
        keep = (index < edges[g]) | (index >= edges[g + 1])
        replicates[g] = statistic(*[np.asarray(s)[keep] for s in samples])
    return float(np.sqrt((groups - 1) / groups
                         * np.sum((replicates - replicates.mean()) ** 2)))


def power_mean(a: np.ndarray, p: float) -> float:
    """Computes (mean of a^p)^(1/p) for nonnegative `a`.

    Examples:
    >>> power_mean(np.array([3.0, 4.0]), 1)
    3.5
    """
    a = np.asarray(a, dtype=float)
    if np.isinf(p):
        return float(np.max(a))
    return float(np.mean(a ** p) ** (1.0 / p))


if __name__ == "__main__":
    import doctest
    doctest.testmod()
