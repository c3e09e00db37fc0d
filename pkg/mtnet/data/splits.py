"""Stratified train/validation/test splitting and nested training subsamples."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from ..diffcore import Rng
from ..exceptions import ParameterError, StratificationError, SubsampleError
from ..losses import as_binary_labels

MIN_CLASS_SIZE = 3


@dataclass(eq=False)
class SplitIndices:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def to_dict(self) -> dict:
        return {name: getattr(self, name).tolist() for name in ("train", "val", "test")}

    @classmethod
    def from_dict(cls, doc: dict) -> "SplitIndices":
        return cls(*(np.asarray(doc[name], dtype=np.int64) for name in ("train", "val", "test")))


def largest_remainder(total: int, ratios: Sequence[float]) -> List[int]:
    """Integer sizes proportional to ``ratios`` summing to ``total``; ties go to the earlier share"""
    exact = [total * r for r in ratios]
    sizes = [int(np.floor(x)) for x in exact]
    order = sorted(range(len(ratios)), key=lambda k: -(exact[k] - sizes[k]))
    for k in order[: total - sum(sizes)]:
        sizes[k] += 1
    return sizes


def stratified_split(labels, ratios=(0.6, 0.2, 0.2), rng: Rng = None) -> SplitIndices:
    """
    Shuffle each class, then allocate split sizes by largest remainder:
    totals over all subjects first, positives next, negatives fill the rest.
    """
    y = as_binary_labels(labels)
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ParameterError(f"ratios must be three non-negative shares summing to 1, got {ratios}")
    if rng is None:
        raise ParameterError("stratified_split needs an Rng")
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == 0)
    for name, members in (("positive", pos), ("negative", neg)):
        if members.size < MIN_CLASS_SIZE:
            raise StratificationError(
                f"the {name} class has {members.size} members; at least {MIN_CLASS_SIZE} are needed"
            )

    totals = largest_remainder(y.size, ratios)
    pos_sizes = largest_remainder(pos.size, ratios)
    neg_sizes = [t - p for t, p in zip(totals, pos_sizes)]
    if any(n < 0 for n in neg_sizes):
        raise StratificationError(f"cannot fit {pos_sizes} positives into splits of size {totals}")

    pos = rng.permutation(pos)
    neg = rng.permutation(neg)
    parts, p0, n0 = [], 0, 0
    for p_size, n_size in zip(pos_sizes, neg_sizes):
        parts.append(np.sort(np.concatenate([pos[p0:p0 + p_size], neg[n0:n0 + n_size]])))
        p0 += p_size
        n0 += n_size
    return SplitIndices(*parts)


def stratified_subsample(labels, fraction: float, rng: Rng) -> np.ndarray:
    """
    Positions of a per-class ``fraction`` of ``labels``, sorted.

    Each class is permuted once and its prefix is taken, so generators seeded
    identically give nested subsets as ``fraction`` grows.
    """
    if not 0.0 < fraction <= 1.0:
        raise ParameterError(f"fraction must lie in (0, 1], got {fraction}")
    y = as_binary_labels(labels)
    chosen = []
    for cls in (1, 0):
        members = rng.permutation(np.flatnonzero(y == cls))
        keep = int(np.floor(fraction * members.size + 0.5))
        if keep == 0:
            raise SubsampleError(f"fraction {fraction} leaves class {cls} empty ({members.size} members)")
        chosen.append(members[:keep])
    return np.sort(np.concatenate(chosen))
