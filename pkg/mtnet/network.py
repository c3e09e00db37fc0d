"""
Shared recurrent encoder with its feature layer and two output heads.

    h     = LSTM(X)                         last hidden state over w waves
    q     = relu(W_s dropout(h) + b_s)      feature map, dropped out again before the heads
    p     = sigmoid(W_e q + b_e)            classification head (used at inference)
    score = W_a q + b_a                     anomaly-score head (training only)

The LSTM weights and the feature layer form the trunk that all three tasks
update. LSTM gate blocks are stacked row-wise in the order
input, forget, output, candidate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .diffcore import Matrix, Rng, activate, activation_grad, dropout_apply, ensure_finite
from .exceptions import ConsistencyError, ParameterError, ShapeError

GATES = ("input", "forget", "output", "candidate")
PARAM_NAMES = ("W_x", "W_h", "b", "W_s", "b_s", "W_e", "b_e", "W_a", "b_a")
TRUNK_NAMES = ("W_x", "W_h", "b", "W_s", "b_s")


@dataclass(frozen=True)
class NetworkConfig:
    input_dim: int = 762
    waves: int = 5
    lstm_units: int = 200
    feature_dim: int = 20
    dropout_rate: float = 0.5

    def __post_init__(self):
        for name in ("input_dim", "waves", "lstm_units", "feature_dim"):
            if int(getattr(self, name)) < 1:
                raise ParameterError(f"{name} must be a positive integer, got {getattr(self, name)}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ParameterError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        D, L, M = self.input_dim, self.lstm_units, self.feature_dim
        return {
            "W_x": (4 * L, D),
            "W_h": (4 * L, L),
            "b": (4 * L,),
            "W_s": (M, L),
            "b_s": (M,),
            "W_e": (1, M),
            "b_e": (1,),
            "W_a": (1, M),
            "b_a": (1,),
        }


@dataclass(eq=False)
class NetworkParams:
    """All learnable arrays, keyed by PARAM_NAMES. Gradient sets use the same type."""
    config: NetworkConfig
    W_x: Matrix
    W_h: Matrix
    b: Matrix
    W_s: Matrix
    b_s: Matrix
    W_e: Matrix
    b_e: Matrix
    W_a: Matrix
    b_a: Matrix

    def __post_init__(self):
        for name, shape in self.config.shapes().items():
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != shape:
                raise ShapeError(f"{name} has shape {arr.shape}, expected {shape}")
            setattr(self, name, arr)

    @classmethod
    def zeros(cls, config: NetworkConfig) -> "NetworkParams":
        return cls(config, **{name: np.zeros(shape) for name, shape in config.shapes().items()})

    @classmethod
    def from_flat(cls, config: NetworkConfig, vector: np.ndarray) -> "NetworkParams":
        vector = np.asarray(vector, dtype=np.float64)
        arrays, offset = {}, 0
        for name, shape in config.shapes().items():
            size = int(np.prod(shape))
            arrays[name] = vector[offset:offset + size].reshape(shape).copy()
            offset += size
        if offset != vector.size:
            raise ShapeError(f"flat vector has {vector.size} entries, expected {offset}")
        return cls(config, **arrays)

    def arrays(self) -> Dict[str, Matrix]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def flatten(self) -> np.ndarray:
        return np.concatenate([getattr(self, name).reshape(-1) for name in PARAM_NAMES])

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.config, **{k: v.copy() for k, v in self.arrays().items()})

    def zeros_like(self) -> "NetworkParams":
        return NetworkParams.zeros(self.config)

    def gate(self, gate: str, part: str = "input") -> Matrix:
        """View of one gate block: ``part`` is input (L x D), recurrent (L x L) or bias (L)"""
        L = self.config.lstm_units
        k = GATES.index(gate)
        rows = slice(k * L, (k + 1) * L)
        if part == "input":
            return self.W_x[rows]
        if part == "recurrent":
            return self.W_h[rows]
        if part == "bias":
            return self.b[rows]
        raise ParameterError(f"unknown gate part {part!r}")


@dataclass(eq=False)
class ForwardTrace:
    """Activations cached by ``forward`` for backpropagation through time"""
    config: NetworkConfig
    mode: str
    single: bool
    X: Matrix
    gates: list = field(default_factory=list)  # per wave: (i, f, o, g), each B x L
    cells: list = field(default_factory=list)  # c_0 .. c_w
    hidden: list = field(default_factory=list)  # h_0 .. h_w
    cell_tanh: list = field(default_factory=list)  # tanh(c_t), t = 1..w
    mask_h: Optional[Matrix] = None
    h_drop: Optional[Matrix] = None
    u: Optional[Matrix] = None
    mask_q: Optional[Matrix] = None
    q: Optional[Matrix] = None
    p: Optional[np.ndarray] = None
    score: Optional[np.ndarray] = None

    @property
    def batch_size(self) -> int:
        return self.X.shape[0]


def _glorot(rng: Rng, shape: Tuple[int, int]) -> Matrix:
    fan_out, fan_in = shape
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_params(config: NetworkConfig, rng: Rng) -> NetworkParams:
    """Glorot-uniform weights per gate block and per layer, zero biases, forget bias 1"""
    D, L, M = config.input_dim, config.lstm_units, config.feature_dim
    W_x = np.vstack([_glorot(rng, (L, D)) for _ in GATES])
    W_h = np.vstack([_glorot(rng, (L, L)) for _ in GATES])
    b = np.zeros(4 * L)
    b[L:2 * L] = 1.0
    return NetworkParams(
        config,
        W_x=W_x,
        W_h=W_h,
        b=b,
        W_s=_glorot(rng, (M, L)),
        b_s=np.zeros(M),
        W_e=_glorot(rng, (1, M)),
        b_e=np.zeros(1),
        W_a=_glorot(rng, (1, M)),
        b_a=np.zeros(1),
    )


def forward(X, params: NetworkParams, mode: str = "eval", rng: Optional[Rng] = None):
    """
    Run the network on one subject (``w x D``) or a batch (``B x w x D``).

    Returns ``(q, p, score, trace)``. For a single subject ``q`` has shape
    ``(M,)`` and ``p``/``score`` are floats; for a batch they are arrays with
    a leading batch axis.
    """
    cfg = params.config
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 2
    if single:
        X = X[np.newaxis]
    if X.ndim != 3 or X.shape[1:] != (cfg.waves, cfg.input_dim):
        raise ShapeError(f"input of shape {X.shape} does not match {cfg.waves} waves x {cfg.input_dim} features")
    ensure_finite(X, "network input")

    B, L = X.shape[0], cfg.lstm_units
    trace = ForwardTrace(config=cfg, mode=mode, single=single, X=X)
    h = np.zeros((B, L))
    c = np.zeros((B, L))
    trace.hidden.append(h)
    trace.cells.append(c)

    x_proj = X @ params.W_x.T + params.b
    for t in range(cfg.waves):
        z = x_proj[:, t, :] + h @ params.W_h.T
        i = activate(z[:, :L], "sigmoid")
        f = activate(z[:, L:2 * L], "sigmoid")
        o = activate(z[:, 2 * L:3 * L], "sigmoid")
        g = activate(z[:, 3 * L:], "tanh")
        c = f * c + i * g
        tc = activate(c, "tanh")
        h = o * tc
        trace.gates.append((i, f, o, g))
        trace.cells.append(c)
        trace.cell_tanh.append(tc)
        trace.hidden.append(h)

    trace.h_drop, trace.mask_h = dropout_apply(h, cfg.dropout_rate, rng, mode)
    trace.u = trace.h_drop @ params.W_s.T + params.b_s
    q_act = activate(trace.u, "relu")
    trace.q, trace.mask_q = dropout_apply(q_act, cfg.dropout_rate, rng, mode)
    trace.p = activate(trace.q @ params.W_e.T + params.b_e, "sigmoid")[:, 0]
    trace.score = (trace.q @ params.W_a.T + params.b_a)[:, 0]

    if single:
        return trace.q[0], float(trace.p[0]), float(trace.score[0]), trace
    return trace.q, trace.p, trace.score, trace


def backward(trace: ForwardTrace, dL_dp, dL_dscore, dL_dq, params: NetworkParams) -> NetworkParams:
    """
    Gradients of a loss with respect to every parameter, given the loss
    gradients at the three outputs of the matching ``forward`` call.
    Batch contributions are summed.
    """
    cfg = params.config
    if trace.config != cfg:
        raise ConsistencyError(f"trace was recorded for {trace.config}, parameters are for {cfg}")
    B, L, M = trace.batch_size, cfg.lstm_units, cfg.feature_dim
    d_p = np.asarray(dL_dp, dtype=np.float64).reshape(-1)
    d_score = np.asarray(dL_dscore, dtype=np.float64).reshape(-1)
    d_q = np.asarray(dL_dq, dtype=np.float64)
    if d_p.size != B or d_score.size != B or d_q.size != B * M:
        raise ConsistencyError(
            f"upstream gradients of sizes {d_p.size}, {d_score.size}, {d_q.size} "
            f"do not match a batch of {B} with {M} features"
        )
    d_q = d_q.reshape(B, M)

    grads = params.zeros_like()
    p = trace.p
    dz_e = d_p * activation_grad(p, "sigmoid")
    grads.W_e = dz_e[np.newaxis, :] @ trace.q
    grads.b_e = np.array([dz_e.sum()])
    grads.W_a = d_score[np.newaxis, :] @ trace.q
    grads.b_a = np.array([d_score.sum()])

    dq = (d_q + np.outer(dz_e, params.W_e[0]) + np.outer(d_score, params.W_a[0])) * trace.mask_q
    du = dq * (trace.u > 0.0)
    grads.W_s = du.T @ trace.h_drop
    grads.b_s = du.sum(axis=0)
    dh = (du @ params.W_s) * trace.mask_h

    dc = np.zeros((B, L))
    for t in reversed(range(cfg.waves)):
        i, f, o, g = trace.gates[t]
        tc = trace.cell_tanh[t]
        do = dh * tc
        dc = dc + dh * o * activation_grad(tc, "tanh")
        dz = np.concatenate(
            [
                dc * g * activation_grad(i, "sigmoid"),
                dc * trace.cells[t] * activation_grad(f, "sigmoid"),
                do * activation_grad(o, "sigmoid"),
                dc * i * activation_grad(g, "tanh"),
            ],
            axis=1,
        )
        grads.W_x += dz.T @ trace.X[:, t, :]
        grads.W_h += dz.T @ trace.hidden[t]
        grads.b += dz.sum(axis=0)
        dh = dz @ params.W_h
        dc = dc * f

    return grads
