import numpy as np
import pytest

from mtnet.diffcore import grad_check, make_rng
from mtnet.exceptions import ConsistencyError, ShapeError
from mtnet.losses import LossConfig, total_batch_loss
from mtnet.network import GATES, NetworkConfig, NetworkParams, backward, forward, init_params


def test_init_is_deterministic_with_default_sized_gates():
    cfg = NetworkConfig()
    a = init_params(cfg, make_rng(1))
    b = init_params(cfg, make_rng(1))
    np.testing.assert_array_equal(a.flatten(), b.flatten())
    assert a.gate("input").shape == (200, 762)
    np.testing.assert_array_equal(a.gate("forget", "bias"), np.ones(200))
    np.testing.assert_array_equal(a.gate("candidate", "bias"), np.zeros(200))


def test_zero_params_fixed_point(tiny_net):
    params = NetworkParams.zeros(tiny_net)
    X = make_rng(0).standard_normal((tiny_net.waves, tiny_net.input_dim))
    q, p, score, trace = forward(X, params)
    np.testing.assert_array_equal(q, np.zeros(tiny_net.feature_dim))
    assert p == 0.5
    assert score == 0.0
    np.testing.assert_array_equal(trace.hidden[-1], 0.0)


def test_eval_forward_is_deterministic(tiny_params):
    X = make_rng(2).standard_normal((5, 3, 4))
    first = forward(X, tiny_params, "eval")
    second = forward(X, tiny_params, "eval")
    for a, b in zip(first[:3], second[:3]):
        np.testing.assert_array_equal(a, b)


def test_single_lstm_cell_matches_hand_computation():
    cfg = NetworkConfig(input_dim=1, waves=1, lstm_units=1, feature_dim=1, dropout_rate=0.0)
    params = NetworkParams.zeros(cfg)
    # rows: input, forget, output, candidate
    params.W_x[:, 0] = [0.5, -0.3, 0.8, 1.2]
    params.b[:] = [0.1, 0.2, -0.1, 0.05]
    x = 0.7
    sig = lambda v: 1.0 / (1.0 + np.exp(-v))
    i = sig(0.5 * x + 0.1)
    f = sig(-0.3 * x + 0.2)
    o = sig(0.8 * x - 0.1)
    g = np.tanh(1.2 * x + 0.05)
    c = f * 0.0 + i * g
    h = o * np.tanh(c)
    _, _, _, trace = forward(np.array([[x]]), params)
    assert abs(trace.hidden[-1][0, 0] - h) < 1e-12
    assert len(trace.gates) == cfg.waves


def test_forward_rejects_wrong_shape(tiny_params):
    with pytest.raises(ShapeError):
        forward(np.zeros((2, 4)), tiny_params)


def test_zero_upstream_gives_zero_gradients(tiny_params):
    X = make_rng(3).standard_normal((2, 3, 4))
    q, p, score, trace = forward(X, tiny_params)
    grads = backward(trace, np.zeros(2), np.zeros(2), np.zeros((2, 2)), tiny_params)
    np.testing.assert_array_equal(grads.flatten(), 0.0)


def test_backward_rejects_foreign_trace(tiny_params):
    other = init_params(NetworkConfig(input_dim=4, waves=3, lstm_units=5, feature_dim=2), make_rng(0))
    _, _, _, trace = forward(np.zeros((1, 3, 4)), other)
    with pytest.raises(ConsistencyError):
        backward(trace, np.zeros(1), np.zeros(1), np.zeros((1, 2)), tiny_params)


def test_backward_rejects_mismatched_upstream(tiny_params):
    _, _, _, trace = forward(np.zeros((2, 3, 4)), tiny_params)
    with pytest.raises(ConsistencyError):
        backward(trace, np.zeros(3), np.zeros(2), np.zeros((2, 2)), tiny_params)


def _loss_fn(cfg, X, y, loss_cfg):
    def f(theta):
        params = NetworkParams.from_flat(cfg, theta)
        q, p, score, trace = forward(X, params, "eval")
        bundle = total_batch_loss((q, p, score), y, loss_cfg)
        grads = backward(trace, bundle.d_p, bundle.d_score, bundle.d_q, params)
        return bundle.total, grads.flatten()
    return f


@pytest.mark.parametrize("alpha,beta", [(0.0, 0.0), (0.5, 0.0), (0.0, 2.0), (0.5, 2.0)])
@pytest.mark.parametrize("instance", range(5))
def test_total_loss_gradients_match_central_differences(tiny_net, alpha, beta, instance):
    gen = make_rng(40, instance)
    X = gen.standard_normal((4, tiny_net.waves, tiny_net.input_dim))
    y = gen.permutation([1, 1, 0, 0])
    loss_cfg = LossConfig(alpha=alpha, beta=beta).with_center(tiny_net.feature_dim, make_rng(9, instance))
    # bias the feature layer so relu units are active and away from the kink
    theta = init_params(tiny_net, make_rng(41, instance))
    theta.b_s[:] = 0.5
    err = grad_check(_loss_fn(tiny_net, X, y, loss_cfg), theta.flatten())
    assert err < 1e-4


def test_each_gate_block_receives_gradient(tiny_net, tiny_params):
    X = make_rng(5).standard_normal((3, tiny_net.waves, tiny_net.input_dim))
    tiny_params.b_s[:] = 0.5
    q, p, score, trace = forward(X, tiny_params)
    grads = backward(trace, np.ones(3), np.zeros(3), np.zeros((3, 2)), tiny_params)
    for gate in GATES:
        assert np.any(grads.gate(gate) != 0.0), gate


def test_train_mode_dropout_gradient_uses_recorded_masks():
    cfg = NetworkConfig(input_dim=3, waves=2, lstm_units=4, feature_dim=3, dropout_rate=0.3)
    params = init_params(cfg, make_rng(6))
    params.b_s[:] = 0.5
    X = make_rng(7).standard_normal((2, 2, 3))
    y = np.array([1, 0])
    loss_cfg = LossConfig().with_center(3, make_rng(8))

    def f(theta):
        p_ = NetworkParams.from_flat(cfg, theta)
        # identical masks on every call
        q, p, score, trace = forward(X, p_, "train", make_rng(99))
        bundle = total_batch_loss((q, p, score), y, loss_cfg)
        return bundle.total, backward(trace, bundle.d_p, bundle.d_score, bundle.d_q, p_).flatten()

    assert grad_check(f, params.flatten()) < 1e-5


def _nudged(params, name, amount=0.3):
    other = params.copy()
    getattr(other, name)[...] += amount
    return other


def test_heads_share_one_trunk(tiny_params):
    X = make_rng(14).standard_normal((6, 3, 4))
    tiny_params.b_s[:] = 0.5
    q, p, score, _ = forward(X, tiny_params)

    q_e, p_e, score_e, _ = forward(X, _nudged(tiny_params, "W_e"))
    np.testing.assert_array_equal(q_e, q)
    np.testing.assert_array_equal(score_e, score)
    assert not np.allclose(p_e, p)

    q_a, p_a, score_a, _ = forward(X, _nudged(tiny_params, "W_a"))
    np.testing.assert_array_equal(q_a, q)
    np.testing.assert_array_equal(p_a, p)
    assert not np.allclose(score_a, score)

    for name in ("W_x", "W_s"):
        q_t, p_t, score_t, _ = forward(X, _nudged(tiny_params, name))
        assert not np.allclose(q_t, q), name
        assert not np.allclose(p_t, p), name
        assert not np.allclose(score_t, score), name


def test_single_sample_matches_batched_forward(tiny_params):
    X = make_rng(15).standard_normal((7, 3, 4))
    q, p, score, _ = forward(X, tiny_params)
    for i in range(len(X)):
        q_i, p_i, score_i, _ = forward(X[i], tiny_params)
        np.testing.assert_allclose(q_i, q[i], rtol=0, atol=1e-9)
        assert abs(p_i - p[i]) < 1e-9
        assert abs(score_i - score[i]) < 1e-9
