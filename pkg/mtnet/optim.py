"""RMSprop updates applied in place to named parameter arrays."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

import numpy as np

from .exceptions import DivergenceError, ParameterError, ShapeError


@dataclass(frozen=True)
class RmsPropConfig:
    lr: float = 0.001
    rho: float = 0.9
    eps: float = 1e-7
    clip_norm: Optional[float] = None

    def __post_init__(self):
        if self.lr <= 0:
            raise ParameterError(f"lr must be positive, got {self.lr}")
        if not 0.0 <= self.rho < 1.0:
            raise ParameterError(f"rho must lie in [0, 1), got {self.rho}")
        if self.eps <= 0:
            raise ParameterError(f"eps must be positive, got {self.eps}")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ParameterError(f"clip_norm must be positive, got {self.clip_norm}")


@dataclass(eq=False)
class RmsPropState:
    """Running mean of squared gradients per parameter"""
    config: RmsPropConfig = field(default_factory=RmsPropConfig)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    steps: int = 0

    @classmethod
    def for_params(cls, params, config: Optional[RmsPropConfig] = None) -> "RmsPropState":
        arrays = _named_arrays(params)
        return cls(config or RmsPropConfig(), {name: np.zeros_like(a) for name, a in arrays.items()})


def _named_arrays(obj) -> Mapping[str, np.ndarray]:
    return obj.arrays() if hasattr(obj, "arrays") else obj


def step(params, grads, state: RmsPropState):
    """
    One update: v <- rho v + (1 - rho) g^2, theta <- theta - lr g / (sqrt(v) + eps).

    ``params`` and ``grads`` are NetworkParams or mappings of name -> array.
    Parameter arrays are modified in place; ``(params, state)`` is returned.
    """
    p_arrays = _named_arrays(params)
    g_arrays = _named_arrays(grads)
    if set(p_arrays) != set(g_arrays):
        raise ShapeError(f"gradient names {sorted(g_arrays)} do not match parameters {sorted(p_arrays)}")
    for name, theta in p_arrays.items():
        g = np.asarray(g_arrays[name])
        if g.shape != theta.shape:
            raise ShapeError(f"gradient for {name} has shape {g.shape}, parameter has {theta.shape}")
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite gradient for {name}")

    cfg = state.config
    scale = 1.0
    if cfg.clip_norm is not None:
        norm = np.sqrt(sum(float(np.sum(np.square(g))) for g in g_arrays.values()))
        if norm > cfg.clip_norm:
            scale = cfg.clip_norm / norm

    for name, theta in p_arrays.items():
        g = np.asarray(g_arrays[name], dtype=np.float64) * scale
        v = state.v.get(name)
        if v is None:
            v = state.v[name] = np.zeros_like(theta)
        v *= cfg.rho
        v += (1.0 - cfg.rho) * g * g
        theta -= cfg.lr * g / (np.sqrt(v) + cfg.eps)
    state.steps += 1
    return params, state
