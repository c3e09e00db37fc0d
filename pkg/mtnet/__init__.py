# Make the mtnet module a package
# This allows imports like: from mtnet import train, predict

from .metrics import EvalResult, RunReport, aggregate_runs, evaluate
from .network import NetworkConfig, NetworkParams, forward, init_params
from .trainer import Checkpoint, TrainConfig, load_checkpoint, predict, save_checkpoint, train

__all__ = [
    'Checkpoint', 'EvalResult', 'NetworkConfig', 'NetworkParams', 'RunReport', 'TrainConfig',
    'aggregate_runs', 'evaluate', 'forward', 'init_params', 'load_checkpoint', 'predict',
    'save_checkpoint', 'train',
]
