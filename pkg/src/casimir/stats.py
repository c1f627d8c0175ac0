"""Blocked jackknife errors for loop ensembles."""

from typing import Tuple

import numpy as np


def jackknife(block_values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Jackknife mean and standard error over the leading (block) axis.

    Each block is one parent loop with its rotated duplicates already averaged in,
    so correlated duplicates never count as independent samples.

    Args:
        block_values: Array of shape ``(n_blocks, ...)``.

    Returns:
        ``(mean, std_error)`` with the trailing shape of ``block_values``.
    """
    values = np.asarray(block_values, dtype=float)
    n_blocks = values.shape[0]
    # np.sum reduces contiguous data pairwise, independent of worker count
    total = np.sum(values, axis=0)
    mean = total / n_blocks
    if n_blocks < 2:
        return mean, np.zeros_like(mean)
    leave_one_out = (total - values) / (n_blocks - 1)
    variance = np.sum((leave_one_out - mean) ** 2, axis=0) * ((n_blocks - 1) / n_blocks)
    return mean, np.sqrt(variance)
