"""
Class-balanced batch plans and last-wave swap augmentation of positives.

Each batch holds exactly half positives and half negatives, both drawn
uniformly with replacement from their class pools, so the minority class is
oversampled.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .diffcore import Rng
from .exceptions import AugmentationError, ParameterError, SamplingError
from .losses import as_binary_labels

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class BatchPlan:
    batches: List[np.ndarray] = field(default_factory=list)
    batch_size: int = 256
    n_batches: int = 20


def balanced_batches(labels, batch_size: int = 256, n_batches: int = 20, rng: Rng = None) -> BatchPlan:
    if batch_size < 2 or batch_size % 2:
        raise ParameterError(f"batch_size must be a positive even number, got {batch_size}")
    if n_batches < 1:
        raise ParameterError(f"n_batches must be positive, got {n_batches}")
    y = as_binary_labels(labels)
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == 0)
    if pos.size == 0 or neg.size == 0:
        raise SamplingError(f"both classes are needed, got {pos.size} positives and {neg.size} negatives")
    half = batch_size // 2
    batches = [
        np.concatenate([pos[rng.integers(pos.size, size=half)], neg[rng.integers(neg.size, size=half)]])
        for _ in range(n_batches)
    ]
    return BatchPlan(batches, batch_size, n_batches)


def swap_count(swap_frac: float, units: int) -> int:
    # tolerance keeps products like 0.05 * 20 from rounding up to 2
    return int(math.ceil(swap_frac * units - 1e-9))


def augment_depression(
    positives: np.ndarray,
    factor: int = 10,
    swap_frac: float = 0.05,
    rng: Rng = None,
    groups: Optional[Sequence[Tuple[int, int]]] = None,
) -> np.ndarray:
    """
    New positive samples built from ``positives`` (n x w x D, training positives only).

    Produces ``(factor - 1) * n`` samples so the positive pool grows by
    ``factor``. Each one copies a parent A and overwrites, in the last wave
    only, ceil(swap_frac * D) randomly chosen features with the values of a
    distinct donor B. When ``groups`` lists column ranges, whole groups are
    swapped instead and the count is taken over groups.
    """
    positives = np.asarray(positives, dtype=np.float64)
    n = positives.shape[0]
    if n < 2:
        raise AugmentationError(f"augmentation needs at least 2 positive samples, got {n}")
    if not 0.0 < swap_frac < 1.0:
        raise ParameterError(f"swap_frac must lie in (0, 1), got {swap_frac}")
    if factor < 1:
        raise ParameterError(f"factor must be at least 1, got {factor}")

    D = positives.shape[2]
    count = (factor - 1) * n
    out = np.empty((count,) + positives.shape[1:])
    units = len(groups) if groups else D
    k = swap_count(swap_frac, units)
    for s in range(count):
        a = rng.integers(n)
        b = rng.integers(n - 1)
        b += b >= a
        sample = positives[a].copy()
        chosen = rng.choice(units, size=k, replace=False)
        if groups:
            cols = np.concatenate([np.arange(*groups[g]) for g in chosen])
        else:
            cols = chosen
        sample[-1, cols] = positives[b, -1, cols]
        out[s] = sample
    logger.info("Augmented %d positives into %d new samples (%d %s swapped each)",
                n, count, k, "groups" if groups else "features")
    return out
