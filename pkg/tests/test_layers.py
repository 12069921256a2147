import numpy as np
import pytest

from scengen.gradcheck import gradient_check
from scengen.layers import (
    Activation,
    DenseLayer,
    Reshape,
    TConv1dLayer,
    Truncate,
    backprop,
    backward,
    build_layer,
    dense_forward,
    forward,
    glorot_init,
    parameters,
    spawn_seeds,
    tconv1d_forward,
)


# ==================== Initialization ====================

def test_glorot_single_value_within_bound():
    value = glorot_init(1, 1, seed=5)
    assert value.shape == (1, 1)
    assert abs(value[0, 0]) <= np.sqrt(3.0)


def test_glorot_is_deterministic_per_seed():
    a = glorot_init(64, 32, seed=11)
    b = glorot_init(64, 32, seed=11)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, glorot_init(64, 32, seed=12))


def test_glorot_variance_matches_uniform_moments():
    draws = glorot_init(3, 3, seed=0, shape=(100_000,))
    assert draws.var() == pytest.approx(1.0 / 3.0, rel=0.05)


@pytest.mark.parametrize("dims", [(0, 3), (3, 0), (-1, 2)])
def test_glorot_rejects_non_positive_dims(dims):
    with pytest.raises(ValueError):
        glorot_init(*dims, seed=0)


def test_spawn_seeds_deterministic_and_distinct():
    assert spawn_seeds(3, 4) == spawn_seeds(3, 4)
    assert len(set(spawn_seeds(3, 4))) == 4


# ==================== Dense ====================

def test_dense_identity_returns_input():
    layer = DenseLayer(np.eye(3), np.zeros(3), Activation.IDENTITY)
    x = np.array([[1.0, -2.0, 3.5], [0.0, 4.0, -1.0]])
    np.testing.assert_array_equal(dense_forward(layer, x), x)


def test_dense_relu_clamps_negatives():
    layer = DenseLayer(np.eye(2), np.zeros(2), Activation.RELU)
    np.testing.assert_array_equal(dense_forward(layer, np.array([[-1.0, 2.0]])), [[0.0, 2.0]])


def test_dense_tanh_hand_arithmetic():
    layer = DenseLayer(np.array([[1.0], [1.0]]), np.array([0.5]), Activation.TANH)
    out = dense_forward(layer, np.array([[1.0, 1.0]]))
    assert out[0, 0] == pytest.approx(np.tanh(2.5), abs=1e-15)


def test_dense_rejects_wrong_input_width():
    layer = DenseLayer.create(4, 2, Activation.RELU, seed=0)
    with pytest.raises(ValueError, match="expects"):
        dense_forward(layer, np.zeros((2, 3)))


def test_dense_rejects_inconsistent_bias():
    with pytest.raises(ValueError):
        DenseLayer(np.zeros((3, 2)), np.zeros(3))


# ==================== Transposed convolution ====================

def test_tconv_single_impulse_copies_kernel():
    layer = TConv1dLayer(np.ones((1, 1, 3)), np.zeros(1), stride=1)
    out = tconv1d_forward(layer, np.array([[[1.0]]]))
    np.testing.assert_array_equal(out, [[[1.0, 1.0, 1.0]]])


def test_tconv_strided_placement():
    layer = TConv1dLayer(np.array([[[1.0, 2.0]]]), np.zeros(1), stride=2)
    out = tconv1d_forward(layer, np.array([[[1.0, 0.0]]]))
    np.testing.assert_array_equal(out, [[[1.0, 2.0, 0.0, 0.0]]])


def test_tconv_output_length_law():
    layer = TConv1dLayer.create(2, 2, kernel_len=4, stride=3, activation=Activation.RELU, seed=0)
    assert layer.output_length(4) == 13
    assert tconv1d_forward(layer, np.ones((1, 2, 4))).shape == (1, 2, 13)


def test_tconv_matches_direct_scatter(rng):
    layer = TConv1dLayer.create(2, 3, kernel_len=3, stride=2, activation=Activation.IDENTITY, seed=4)
    layer.bias = rng.normal(size=3)
    x = rng.normal(size=(2, 2, 5))

    expected = np.zeros((2, 3, layer.output_length(5)))
    for b in range(2):
        for c in range(2):
            for o in range(3):
                for i in range(5):
                    for k in range(3):
                        expected[b, o, i * 2 + k] += x[b, c, i] * layer.kernels[c, o, k]
    expected += layer.bias[None, :, None]

    np.testing.assert_allclose(tconv1d_forward(layer, x), expected, atol=1e-12)


def test_tconv_rejects_wrong_channel_count():
    layer = TConv1dLayer.create(2, 1, kernel_len=2, stride=1, activation=Activation.TANH, seed=0)
    with pytest.raises(ValueError, match="expects"):
        tconv1d_forward(layer, np.zeros((1, 3, 4)))


# ==================== Backprop ====================

def test_identity_dense_weight_gradient_is_input_transpose_times_grad(rng):
    layer = DenseLayer(rng.normal(size=(3, 2)), np.zeros(2), Activation.IDENTITY)
    x = rng.normal(size=(4, 3))
    g = rng.normal(size=(4, 2))

    grads = backprop([layer], x, g)
    np.testing.assert_allclose(grads.params[0]["weights"], x.T @ g, atol=1e-12)
    np.testing.assert_allclose(grads.params[0]["bias"], g.sum(axis=0), atol=1e-12)
    np.testing.assert_allclose(grads.input, g @ layer.weights.T, atol=1e-12)


def test_zero_upstream_gradient_gives_zero_parameter_gradients(rng):
    layers = [
        DenseLayer.create(6, 8, Activation.RELU, seed=1),
        Reshape((2, 4)),
        TConv1dLayer.create(2, 1, kernel_len=3, stride=2, activation=Activation.TANH, seed=2),
        Truncate(6),
    ]
    x = rng.normal(size=(3, 6))
    grads = backprop(layers, x, np.zeros((3, 6)))
    for layer_grads in grads.params:
        for value in layer_grads.values():
            assert not value.any()
    assert not grads.input.any()


def test_backprop_rejects_mismatched_loss_gradient(rng):
    layer = DenseLayer.create(3, 2, Activation.TANH, seed=0)
    with pytest.raises(ValueError, match="Loss gradient shape"):
        backprop([layer], rng.normal(size=(4, 3)), np.zeros((4, 3)))


def _half_square_check(layers, x, layer_index, name):
    """Gradient check of 0.5 * ||net(x)||^2 w.r.t. one parameter of one layer."""
    layer = layers[layer_index]

    def loss_fn(p):
        setattr(layer, name, p)
        out, caches = forward(layers, x)
        grads = backward(layers, caches, out)
        return 0.5 * float(np.sum(out ** 2)), grads.params[layer_index][name]

    return gradient_check(loss_fn, getattr(layer, name))


def test_dense_gradients_pass_finite_difference_check(rng):
    layers = [DenseLayer.create(3, 4, Activation.TANH, seed=3)]
    layers[0].bias = rng.normal(size=4)
    x = rng.normal(size=(5, 3))
    assert _half_square_check(layers, x, 0, "weights") < 1e-4
    assert _half_square_check(layers, x, 0, "bias") < 1e-4


def test_tconv_gradients_pass_finite_difference_check(rng):
    layers = [TConv1dLayer.create(2, 2, kernel_len=3, stride=2, activation=Activation.TANH, seed=6)]
    layers[0].bias = rng.normal(size=2)
    x = rng.normal(size=(3, 2, 4))
    assert _half_square_check(layers, x, 0, "kernels") < 1e-4
    assert _half_square_check(layers, x, 0, "bias") < 1e-4


def test_input_gradient_through_reshape_tconv_truncate(rng):
    layers = [
        Reshape((2, 3)),
        TConv1dLayer.create(2, 1, kernel_len=2, stride=2, activation=Activation.TANH, seed=8),
        Truncate(5),
    ]
    x = rng.normal(size=(2, 6))

    def loss_fn(p):
        out, caches = forward(layers, p)
        return 0.5 * float(np.sum(out ** 2)), backward(layers, caches, out).input

    assert gradient_check(loss_fn, x) < 1e-4


def test_truncate_keeps_leading_positions():
    x = np.arange(2 * 1 * 5, dtype=float).reshape(2, 1, 5)
    out, _ = Truncate(3).forward(x)
    np.testing.assert_array_equal(out, [[0, 1, 2], [5, 6, 7]])


# ==================== Parameters / rebuild ====================

def test_parameters_keys_follow_layer_order():
    layers = [DenseLayer.create(2, 3, Activation.RELU, 0), Reshape((3, 1)),
              TConv1dLayer.create(3, 1, 2, 1, Activation.TANH, 1)]
    assert list(parameters(layers, "net")) == [
        "net.0.weights", "net.0.bias", "net.2.kernels", "net.2.bias",
    ]


@pytest.mark.parametrize("layer", [
    DenseLayer.create(4, 2, Activation.TANH, seed=0),
    TConv1dLayer.create(2, 3, kernel_len=4, stride=3, activation=Activation.RELU, seed=1),
    Reshape((32, 4)),
    Truncate(72),
])
def test_build_layer_rebuilds_from_description(layer):
    params = {name: getattr(layer, name) for name in layer.param_names}
    rebuilt = build_layer(layer.describe(), params)
    assert rebuilt.describe() == layer.describe()
    for name in layer.param_names:
        assert getattr(rebuilt, name).tobytes() == getattr(layer, name).tobytes()


def test_build_layer_rejects_unknown_kind():
    with pytest.raises(ValueError, match="Unknown layer kind"):
        build_layer({"kind": "conv2d"}, {})
