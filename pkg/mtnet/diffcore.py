"""
Dense-matrix numeric layer shared by the network, the losses and the optimizer.

A Matrix is a float64 numpy array. Every public operation returns finite
values or raises. Randomness always comes from an explicit ``numpy.random.Generator``
built on PCG64 and seeded through ``SeedSequence``, so identical seeds give
identical draws on every platform.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from .exceptions import EvaluationError, ParameterError, ShapeError

Matrix = np.ndarray
Rng = np.random.Generator

ACTIVATIONS = ("sigmoid", "tanh", "relu")
MODES = ("train", "eval")


def make_rng(seed: int, *stream: int) -> Rng:
    """Deterministic PCG64 generator for ``seed``, optionally on a named sub-stream"""
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(seq))


def fork_rngs(seed: int, count: int) -> list:
    """Independent child generators, e.g. one per worker or per subject"""
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [np.random.Generator(np.random.PCG64(child)) for child in children]


def ensure_finite(x, what: str = "value") -> None:
    if not np.all(np.isfinite(x)):
        raise EvaluationError(f"{what} contains non-finite entries")


def matmul(a: Matrix, b: Matrix) -> Matrix:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    out = a @ b
    ensure_finite(out, "matmul result")
    return out


def activate(x: Matrix, kind: str) -> Matrix:
    x = np.asarray(x, dtype=np.float64)
    if kind == "sigmoid":
        return expit(x)
    if kind == "tanh":
        return np.tanh(x)
    if kind == "relu":
        return np.maximum(x, 0.0)
    raise ParameterError(f"unknown activation {kind!r}, expected one of {ACTIVATIONS}")


def activation_grad(y: Matrix, kind: str) -> Matrix:
    """Derivative of ``activate`` expressed through its output ``y``"""
    if kind == "sigmoid":
        return y * (1.0 - y)
    if kind == "tanh":
        return 1.0 - y * y
    if kind == "relu":
        return (y > 0.0).astype(np.float64)
    raise ParameterError(f"unknown activation {kind!r}, expected one of {ACTIVATIONS}")


def dropout_apply(x: Matrix, rate: float, rng: Optional[Rng], mode: str) -> Tuple[Matrix, Matrix]:
    """
    Inverted dropout. In train mode every entry is dropped with probability
    ``rate`` and survivors are scaled by 1/(1-rate); the returned mask carries
    that scale so ``x * mask`` is the output. Eval mode is a passthrough.
    """
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout rate must lie in [0, 1), got {rate}")
    if mode not in MODES:
        raise ParameterError(f"unknown mode {mode!r}, expected one of {MODES}")
    x = np.asarray(x, dtype=np.float64)
    if mode == "eval" or rate == 0.0:
        return x, np.ones_like(x)
    if rng is None:
        raise ParameterError("train-mode dropout needs an Rng")
    keep = rng.random(x.shape) >= rate
    mask = keep / (1.0 - rate)
    return x * mask, mask


def grad_check(
    f: Callable[[np.ndarray], Tuple[float, np.ndarray]],
    params: Matrix,
    eps: float = 1e-5,
    coords: Optional[Sequence[int]] = None,
) -> float:
    """
    Compare the analytic gradient of ``f`` with central differences.

    ``f(theta)`` returns ``(value, grad)`` where ``grad`` has the shape of
    ``theta``. The result is the largest
    |analytic - numeric| / max(1, |analytic|, |numeric|) over the checked
    coordinates (all of them unless ``coords`` lists flat indices).
    """
    if eps <= 0:
        raise ParameterError(f"eps must be positive, got {eps}")
    theta = np.array(params, dtype=np.float64, copy=True)
    value, analytic = f(theta.copy())
    if not np.isfinite(value):
        raise EvaluationError("function value is not finite at the base point")
    analytic = np.asarray(analytic, dtype=np.float64).reshape(-1)
    if analytic.size != theta.size:
        raise ShapeError(f"gradient has {analytic.size} entries for {theta.size} parameters")

    flat = theta.reshape(-1)
    indices = range(flat.size) if coords is None else coords
    worst = 0.0
    for i in indices:
        original = flat[i]
        flat[i] = original + eps
        plus = f(theta.copy())[0]
        flat[i] = original - eps
        minus = f(theta.copy())[0]
        flat[i] = original
        if not (np.isfinite(plus) and np.isfinite(minus)):
            raise EvaluationError(f"function value is not finite when perturbing coordinate {i}")
        numeric = (plus - minus) / (2.0 * eps)
        denom = max(1.0, abs(analytic[i]), abs(numeric))
        worst = max(worst, abs(analytic[i] - numeric) / denom)
    return float(worst)
