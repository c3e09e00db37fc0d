"""
Task losses and their weighted combination.

Every loss returns ``(value, gradient)`` where the gradient is taken with
respect to the network output it consumes (probability, anomaly score or
feature vector). All functions accept a single sample or a batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from .diffcore import Rng
from .exceptions import BatchError, LabelError, ParameterError, ShapeError

PROB_CLAMP = 1e-7
CENTER_INITS = ("half_gaussian", "gaussian", "uniform")


def as_binary_labels(y) -> np.ndarray:
    arr = np.asarray(y)
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        bad = np.unique(arr[(arr != 0) & (arr != 1)])[:5]
        raise LabelError(f"labels must be 0 or 1, found {bad.tolist()}")
    return arr.astype(np.int64)


@dataclass(frozen=True)
class LossConfig:
    alpha: float = 0.5
    beta: float = 2.0
    prior_mu: float = 0.0
    prior_sigma: float = 1.0
    a_margin: float = 5.0
    m_margin: float = 1.0
    center_init: str = "half_gaussian"
    center: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ParameterError(f"alpha and beta must be non-negative, got {self.alpha}, {self.beta}")
        if self.prior_sigma <= 0:
            raise ParameterError(f"prior_sigma must be positive, got {self.prior_sigma}")
        if self.a_margin <= 0 or self.m_margin <= 0:
            raise ParameterError(f"margins must be positive, got a={self.a_margin}, m={self.m_margin}")
        if self.center_init not in CENTER_INITS:
            raise ParameterError(f"center_init must be one of {CENTER_INITS}, got {self.center_init!r}")
        if self.center is not None:
            center = np.array(self.center, dtype=np.float64).reshape(-1)
            center.setflags(write=False)
            object.__setattr__(self, "center", center)

    def with_center(self, feature_dim: int, rng: Rng) -> "LossConfig":
        """
        Copy of this config with a freshly drawn, frozen one-class center.

        ``half_gaussian`` folds a standard Gaussian draw onto the non-negative
        orthant, the only region a relu feature vector can reach.
        """
        if self.center_init == "half_gaussian":
            center = np.abs(rng.standard_normal(feature_dim))
        elif self.center_init == "gaussian":
            center = rng.standard_normal(feature_dim)
        else:
            center = rng.random(feature_dim)
        return replace(self, center=center)

    def settings(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "prior_mu": self.prior_mu,
            "prior_sigma": self.prior_sigma,
            "a_margin": self.a_margin,
            "m_margin": self.m_margin,
            "center_init": self.center_init,
        }


@dataclass(eq=False)
class LossBundle:
    """Batch-mean loss terms and per-sample output gradients of the total"""
    l_e: float
    l_a: float
    l_o: float
    total: float
    d_p: np.ndarray
    d_score: np.ndarray
    d_q: np.ndarray
    dev: np.ndarray
    distance: np.ndarray


def bce(p, y) -> Tuple[np.ndarray, np.ndarray]:
    y = as_binary_labels(y)
    p = np.clip(np.asarray(p, dtype=np.float64), PROB_CLAMP, 1.0 - PROB_CLAMP)
    value = -(y * np.log(p) + (1 - y) * np.log1p(-p))
    d_p = -y / p + (1 - y) / (1.0 - p)
    return value, d_p


def deviation(score, cfg: LossConfig):
    return (np.asarray(score, dtype=np.float64) - cfg.prior_mu) / cfg.prior_sigma


def deviation_loss(score, y, cfg: LossConfig) -> Tuple[np.ndarray, np.ndarray]:
    y = as_binary_labels(y)
    dev = deviation(score, cfg)
    value = (1 - y) * np.abs(dev) + y * np.maximum(0.0, cfg.a_margin - dev)
    # subgradient 0 at |dev| == 0 for normals and at dev == a for positives
    d_dev = (1 - y) * np.sign(dev) - y * (dev < cfg.a_margin)
    return value, d_dev / cfg.prior_sigma


def oneclass_loss(q, y, cfg: LossConfig) -> Tuple[np.ndarray, np.ndarray]:
    if cfg.center is None:
        raise ParameterError("one-class loss needs a center; build the config with with_center()")
    y = as_binary_labels(y)
    q = np.asarray(q, dtype=np.float64)
    if q.shape[-1] != cfg.center.size:
        raise ShapeError(f"feature vector has {q.shape[-1]} entries, center has {cfg.center.size}")
    diff = q - cfg.center
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    safe = np.where(dist > 0.0, dist, 1.0)
    unit = np.where(np.expand_dims(dist > 0.0, -1), diff / np.expand_dims(safe, -1), 0.0)
    value = (1 - y) * dist + y * np.maximum(0.0, cfg.m_margin - dist)
    d_dist = (1 - y) - y * (dist < cfg.m_margin)
    return value, np.expand_dims(d_dist, -1) * unit


def total_batch_loss(outputs, labels, cfg: LossConfig) -> LossBundle:
    """
    Batch mean of l_e + alpha * l_a + beta * l_o.

    ``outputs`` is ``(q, p, score)`` with a leading batch axis. The returned
    gradients are already divided by the batch size.
    """
    q, p, score = outputs
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    p = np.atleast_1d(np.asarray(p, dtype=np.float64))
    score = np.atleast_1d(np.asarray(score, dtype=np.float64))
    y = as_binary_labels(np.atleast_1d(labels))
    n = y.size
    if n == 0:
        raise BatchError("cannot compute a loss over an empty batch")
    if p.size != n or score.size != n or q.shape[0] != n:
        raise BatchError(f"batch of {n} labels does not match outputs {q.shape}, {p.shape}, {score.shape}")

    l_e, d_p = bce(p, y)
    l_a, d_score = deviation_loss(score, y, cfg)
    l_o, d_q = oneclass_loss(q, y, cfg)
    dist = np.sqrt(np.sum((q - cfg.center) ** 2, axis=-1))

    per_sample = l_e + cfg.alpha * l_a + cfg.beta * l_o
    return LossBundle(
        l_e=float(l_e.mean()),
        l_a=float(l_a.mean()),
        l_o=float(l_o.mean()),
        total=float(per_sample.sum() / n),
        d_p=d_p / n,
        d_score=cfg.alpha * d_score / n,
        d_q=cfg.beta * d_q / n,
        dev=deviation(score, cfg),
        distance=dist,
    )
