import numpy as np
import pytest

from mtnet.data import SynthConfig
from mtnet.data.cohort import EncodedCohort
from mtnet.diffcore import make_rng
from mtnet.losses import LossConfig
from mtnet.network import NetworkConfig, init_params
from mtnet.trainer import TrainConfig, train


@pytest.fixture
def rng():
    return make_rng(1234)


@pytest.fixture
def tiny_net():
    # dropout off so finite differences see a deterministic function
    return NetworkConfig(input_dim=4, waves=3, lstm_units=3, feature_dim=2, dropout_rate=0.0)


@pytest.fixture
def tiny_params(tiny_net, rng):
    return init_params(tiny_net, rng)


@pytest.fixture
def centered_loss():
    return LossConfig().with_center(2, make_rng(7))


def separable_cohort(n=120, positives=20, waves=3, dim=4, seed=0, shift=2.0):
    """Positives carry +shift on feature 0 in every wave; everything else is noise"""
    gen = make_rng(seed)
    data = gen.standard_normal((n, waves, dim)) * 0.5
    labels = np.zeros(n, dtype=np.int64)
    labels[:positives] = 1
    data[:positives, :, 0] += shift
    return EncodedCohort(data, labels, [f"f{j}" for j in range(dim)])


@pytest.fixture
def toy_cohort():
    return separable_cohort()


@pytest.fixture
def fast_train():
    net = NetworkConfig(lstm_units=6, feature_dim=4, dropout_rate=0.1)
    return TrainConfig(epochs=3, batch_size=16, batches_per_epoch=4, augment_factor=3, network=net, seed=3)


@pytest.fixture
def small_synth():
    return SynthConfig(n_subjects=60, waves=3, n_numeric=6, n_categorical=4, categories=3,
                       n_archetypes=2, positive_rate=0.2, relevant_fraction=0.2, seed=5)


@pytest.fixture(scope="module")
def separable_run():
    """The full model trained for 30 epochs on a cleanly separable cohort"""
    cohort = separable_cohort(n=200, positives=40, waves=2, dim=4, shift=3.0)
    cfg = TrainConfig(epochs=30, batch_size=64, batches_per_epoch=20, seed=1,
                      network=NetworkConfig(lstm_units=16, feature_dim=8))
    model, history = train(cohort, cfg)
    return cohort, model, history
