"""
End-to-end training of the multi-task network, inference and checkpoints.

Training draws balanced batches, runs one shared forward pass per batch,
combines the toggled task losses, backpropagates and takes an RMSprop step.
Inference only reads the classification head.

Checkpoint layout: the 8-byte magic ``MTNETCKP``, a version byte, the JSON
metadata length as little-endian uint64, the JSON metadata (configs, seed,
history and the array table), then every parameter array followed by the
one-class center as little-endian float64 in the order of the array table.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List

import numpy as np

from .batching import augment_depression, balanced_batches
from .data.cohort import EncodedCohort
from .diffcore import make_rng
from .exceptions import CorruptCheckpointError, DivergenceError, ParameterError, SamplingError
from .losses import LossConfig, total_batch_loss
from .network import PARAM_NAMES, NetworkConfig, NetworkParams, backward, forward, init_params
from .optim import RmsPropConfig, RmsPropState, step
from .utils.helpers import read_container, write_container

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"MTNETCKP"
CHECKPOINT_VERSION = 1
PREDICT_CHUNK = 1024

# named sub-streams of the master seed
STREAM_INIT, STREAM_CENTER, STREAM_AUGMENT, STREAM_BATCHES, STREAM_DROPOUT = range(1, 6)

# (use_l_a, use_l_o, use_augmentation) per ablation row
ABLATIONS = {
    "LSTM": (False, False, False),
    "LSTM+l_a": (True, False, False),
    "LSTM+l_o": (False, True, False),
    "LSTM+l_a+l_o": (True, True, False),
    "LSTM+l_a+l_o+DA": (True, True, True),
}
FULL_MODEL = "LSTM+l_a+l_o+DA"
BASELINE = "LSTM"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 256
    batches_per_epoch: int = 20
    use_l_a: bool = True
    use_l_o: bool = True
    use_augmentation: bool = True
    augment_factor: int = 10
    swap_frac: float = 0.05
    group_atomic_swap: bool = False
    seed: int = 0
    network: NetworkConfig = field(default_factory=NetworkConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    optimizer: RmsPropConfig = field(default_factory=RmsPropConfig)

    def __post_init__(self):
        if self.epochs < 1 or self.batches_per_epoch < 1:
            raise ParameterError("epochs and batches_per_epoch must be positive")
        if self.batch_size < 2 or self.batch_size % 2:
            raise ParameterError(f"batch_size must be a positive even number, got {self.batch_size}")

    @property
    def alpha(self) -> float:
        return self.loss.alpha if self.use_l_a else 0.0

    @property
    def beta(self) -> float:
        return self.loss.beta if self.use_l_o else 0.0

    def ablation(self, name: str) -> "TrainConfig":
        try:
            use_l_a, use_l_o, use_aug = ABLATIONS[name]
        except KeyError:
            raise ParameterError(f"unknown ablation {name!r}, expected one of {list(ABLATIONS)}") from None
        return replace(self, use_l_a=use_l_a, use_l_o=use_l_o, use_augmentation=use_aug)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["loss"] = self.loss.settings()
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        doc = dict(doc)
        network = NetworkConfig(**doc.pop("network", {}))
        loss = LossConfig(**doc.pop("loss", {}))
        optimizer = RmsPropConfig(**doc.pop("optimizer", {}))
        return cls(network=network, loss=loss, optimizer=optimizer, **doc)


@dataclass
class EpochRecord:
    """Means over one epoch's batches"""
    epoch: int
    l_e: float
    l_a: float
    l_o: float
    total: float
    neg_distance: float
    dev_gap: float


@dataclass(eq=False)
class Checkpoint:
    params: NetworkParams
    loss: LossConfig
    train: TrainConfig
    seed: int
    history: List[EpochRecord] = field(default_factory=list)
    version: int = CHECKPOINT_VERSION

    @property
    def network(self) -> NetworkConfig:
        return self.params.config


def train(train_data: EncodedCohort, cfg: TrainConfig = TrainConfig()):
    """Fit a model on ``train_data``; returns ``(checkpoint, history)``"""
    y = train_data.labels
    n_pos = int(y.sum())
    if train_data.N == 0 or n_pos == 0 or n_pos == train_data.N:
        raise SamplingError(f"training data needs both classes, got {n_pos} positives out of {train_data.N}")

    seed = cfg.seed
    net_cfg = replace(cfg.network, input_dim=train_data.D, waves=train_data.w)
    if (net_cfg.input_dim, net_cfg.waves) != (cfg.network.input_dim, cfg.network.waves):
        logger.info("Network sized to the data: %d waves x %d features", net_cfg.waves, net_cfg.input_dim)
    params = init_params(net_cfg, make_rng(seed, STREAM_INIT))
    loss_cfg = cfg.loss.with_center(net_cfg.feature_dim, make_rng(seed, STREAM_CENTER))
    active = replace(loss_cfg, alpha=cfg.alpha, beta=cfg.beta)

    X = train_data.data
    if cfg.use_augmentation:
        groups = train_data.groups if cfg.group_atomic_swap else None
        extra = augment_depression(X[y == 1], cfg.augment_factor, cfg.swap_frac,
                                   make_rng(seed, STREAM_AUGMENT), groups)
        X = np.concatenate([X, extra])
        y = np.concatenate([y, np.ones(extra.shape[0], dtype=np.int64)])

    state = RmsPropState.for_params(params, cfg.optimizer)
    batch_rng = make_rng(seed, STREAM_BATCHES)
    dropout_rng = make_rng(seed, STREAM_DROPOUT)
    history = []
    for epoch in range(1, cfg.epochs + 1):
        plan = balanced_batches(y, cfg.batch_size, cfg.batches_per_epoch, batch_rng)
        sums = np.zeros(6)
        for b, idx in enumerate(plan.batches, start=1):
            yb = y[idx]
            q, p, score, trace = forward(X[idx], params, "train", dropout_rng)
            bundle = total_batch_loss((q, p, score), yb, active)
            if not np.isfinite(bundle.total):
                raise DivergenceError("non-finite training loss", epoch, b)
            grads = backward(trace, bundle.d_p, bundle.d_score, bundle.d_q, params)
            try:
                step(params, grads, state)
            except DivergenceError as e:
                raise DivergenceError(str(e), epoch, b) from e
            sums += (
                bundle.l_e,
                bundle.l_a if cfg.use_l_a else 0.0,
                bundle.l_o if cfg.use_l_o else 0.0,
                bundle.total,
                bundle.distance[yb == 0].mean(),
                bundle.dev[yb == 1].mean() - bundle.dev[yb == 0].mean(),
            )
        record = EpochRecord(epoch, *(float(v) for v in sums / len(plan.batches)))
        history.append(record)
        logger.info("Epoch %d/%d: total=%.4f l_e=%.4f l_a=%.4f l_o=%.4f |q-n|=%.3f dev gap=%.3f",
                    epoch, cfg.epochs, record.total, record.l_e, record.l_a, record.l_o,
                    record.neg_distance, record.dev_gap)

    model = Checkpoint(params=params, loss=loss_cfg, train=cfg, seed=seed, history=history)
    return model, history


def model_outputs(model: Checkpoint, X):
    """Eval-mode ``(q, p, score)`` for analysis of the auxiliary heads"""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        q, p, score, _ = forward(X, model.params, "eval")
        return q, p, score
    parts = [forward(X[i:i + PREDICT_CHUNK], model.params, "eval")[:3] for i in range(0, max(len(X), 1), PREDICT_CHUNK)]
    return tuple(np.concatenate(arrs) for arrs in zip(*parts))


def predict(model: Checkpoint, X):
    """Depression probability from the classification head only"""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        return forward(X, model.params, "eval")[1]
    return np.concatenate([
        forward(X[i:i + PREDICT_CHUNK], model.params, "eval")[1] for i in range(0, max(len(X), 1), PREDICT_CHUNK)
    ])


def save_checkpoint(model: Checkpoint, path):
    meta = {
        "network": asdict(model.network),
        "loss": model.loss.settings(),
        "train": model.train.to_dict(),
        "seed": model.seed,
        "history": [asdict(r) for r in model.history],
    }
    arrays: Dict[str, np.ndarray] = dict(model.params.arrays())
    arrays["center"] = model.loss.center
    write_container(path, CHECKPOINT_MAGIC, CHECKPOINT_VERSION, meta, arrays)
    logger.info("Saved checkpoint to %s", path)


def load_checkpoint(path) -> Checkpoint:
    meta, arrays = read_container(path, CHECKPOINT_MAGIC, CHECKPOINT_VERSION)
    missing = [name for name in (*PARAM_NAMES, "center") if name not in arrays]
    if missing:
        raise CorruptCheckpointError(f"{path} lacks arrays {missing}")
    try:
        network = NetworkConfig(**meta["network"])
        params = NetworkParams(network, **{name: arrays[name] for name in PARAM_NAMES})
        loss = LossConfig(**meta["loss"], center=arrays["center"])
        train_cfg = TrainConfig.from_dict(meta["train"])
        history = [EpochRecord(**r) for r in meta["history"]]
        seed = int(meta["seed"])
    except (KeyError, TypeError, ValueError) as e:
        raise CorruptCheckpointError(f"{path} has inconsistent metadata: {e}") from e
    return Checkpoint(params=params, loss=loss, train=train_cfg, seed=seed, history=history)
