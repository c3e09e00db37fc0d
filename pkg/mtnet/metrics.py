"""
Ranking and threshold metrics, and their aggregation over seeds.

AUC-ROC is the Mann-Whitney statistic with ties counted as one half.
AUC-PR is step-wise average precision with equal scores grouped into a
single cut, which differs from trapezoidal interpolation of the PR curve.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from .exceptions import AggregationError, MetricError
from .losses import as_binary_labels

METRIC_NAMES = ("auc_roc", "auc_pr", "f_score", "precision", "recall")


@dataclass
class EvalResult:
    auc_roc: float
    auc_pr: float
    f_score: float
    precision: float
    recall: float
    threshold: float = 0.5
    n_pos: int = 0
    n_neg: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunReport:
    results: List[EvalResult] = field(default_factory=list)
    mean: Dict[str, float] = field(default_factory=dict)
    std: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "results": [r.to_dict() for r in self.results],
            "mean": dict(self.mean),
            "std": dict(self.std),
        }


def _prepare(scores, labels) -> Tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = as_binary_labels(np.asarray(labels).reshape(-1))
    if s.size != y.size:
        raise MetricError(f"{s.size} scores for {y.size} labels")
    return s, y


def auc_roc(scores, labels) -> float:
    s, y = _prepare(scores, labels)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC-ROC needs both classes")
    ranks = rankdata(s, method="average")
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def auc_roc_pairwise(scores, labels) -> float:
    """Quadratic reference: share of (positive, negative) pairs ranked correctly, ties as 1/2"""
    s, y = _prepare(scores, labels)
    pos, neg = s[y == 1], s[y == 0]
    if pos.size == 0 or neg.size == 0:
        raise MetricError("AUC-ROC needs both classes")
    diff = pos[:, np.newaxis] - neg[np.newaxis, :]
    wins = np.count_nonzero(diff > 0) + 0.5 * np.count_nonzero(diff == 0)
    return float(wins / (pos.size * neg.size))


def auc_pr(scores, labels) -> float:
    s, y = _prepare(scores, labels)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise MetricError("AUC-PR needs at least one positive")
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    # last index of every group of equal scores
    cuts = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tp = np.cumsum(y)[cuts]
    fp = (cuts + 1) - tp
    precision = tp / (tp + fp)
    # recall steps are new true positives over n_pos
    gains = np.diff(np.r_[0, tp])
    return float(np.sum(gains * precision) / n_pos)


def prf_at_threshold(scores, labels, threshold: float = 0.5) -> Tuple[float, float, float]:
    s, y = _prepare(scores, labels)
    predicted = s >= threshold
    tp = int(np.count_nonzero(predicted & (y == 1)))
    fp = int(np.count_nonzero(predicted & (y == 0)))
    fn = int(np.count_nonzero(~predicted & (y == 1)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f_score = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f_score


def evaluate(scores, labels, threshold: float = 0.5) -> EvalResult:
    s, y = _prepare(scores, labels)
    precision, recall, f_score = prf_at_threshold(s, y, threshold)
    n_pos = int(y.sum())
    return EvalResult(
        auc_roc=auc_roc(s, y),
        auc_pr=auc_pr(s, y),
        f_score=f_score,
        precision=precision,
        recall=recall,
        threshold=threshold,
        n_pos=n_pos,
        n_neg=int(y.size - n_pos),
    )


def aggregate_runs(results: Sequence[EvalResult]) -> RunReport:
    """Per-metric mean and population standard deviation"""
    results = list(results)
    if not results:
        raise AggregationError("no results to aggregate")
    table = np.array([[getattr(r, m) for m in METRIC_NAMES] for r in results], dtype=np.float64)
    mean = table.mean(axis=0)
    std = table.std(axis=0)
    return RunReport(
        results=results,
        mean={m: float(v) for m, v in zip(METRIC_NAMES, mean)},
        std={m: float(v) for m, v in zip(METRIC_NAMES, std)},
    )
