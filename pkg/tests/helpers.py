"""Shared helpers for the test suite: MCMC-aware standard errors and small
circular utilities."""

import numpy as np


def batch_means_se(x, n_batches: int = 50) -> float:
    """Standard error of the mean of a (possibly autocorrelated) sequence,
    estimated from non-overlapping batch means."""
    x = np.asarray(x, dtype=float)
    n = x.size - (x.size % n_batches)
    means = x[:n].reshape(n_batches, -1).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(n_batches))


def circ_mean(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.arctan2(np.sin(x).mean(), np.cos(x).mean()))
