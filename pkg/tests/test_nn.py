import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eventseg.nn import (MLP, ConfigError, Dense, GaussianHead,
                         MultiplicativeLayer, NumericError, ParamTensor,
                         beta_nll, elu_plus_one, gaussian_nll, retanh)

from fd import check_input_grad, check_param_grads

RNG = np.random.default_rng


def test_dense_zero_weights_returns_bias():
    layer = Dense("d", 3, 2, RNG(0))
    layer.w.values[...] = 0.0
    layer.b.values[...] = [1.5, -2.0]
    y, _ = layer.forward(np.array([[3.0, -1.0, 4.0]]))
    np.testing.assert_array_equal(y, [[1.5, -2.0]])


def test_dense_identity():
    layer = Dense("d", 3, 3, RNG(0))
    layer.w.values[...] = np.eye(3)
    layer.b.values[...] = 0.0
    x = np.array([[0.3, -0.7, 2.2]])
    y, _ = layer.forward(x)
    np.testing.assert_array_equal(y, x)


def test_dense_hand_matrix_multiply():
    layer = Dense("d", 2, 2, RNG(0))
    layer.w.values[...] = [[1.0, 2.0], [3.0, 4.0]]
    layer.b.values[...] = 0.0
    y, _ = layer.forward(np.array([[1.0, 1.0]]))
    np.testing.assert_array_equal(y, [[3.0, 7.0]])


def test_dense_shape_mismatch():
    layer = Dense("d", 3, 2, RNG(0))
    with pytest.raises(ConfigError):
        layer.forward(np.zeros((1, 4)))


def test_retanh_reference_values():
    np.testing.assert_allclose(retanh(np.array([0.0])), [0.0])
    np.testing.assert_allclose(retanh(np.array([-3.0])), [0.0])
    # reference evaluation of tanh(2)
    np.testing.assert_allclose(retanh(np.array([2.0])), [0.9640275800758169],
                               rtol=1e-12)


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=20))
def test_retanh_range(xs):
    y = retanh(np.array(xs))
    assert np.all(y >= 0.0) and np.all(y < 1.0)


def test_elu_plus_one_values():
    np.testing.assert_allclose(elu_plus_one(np.array([0.0])), [1.0])
    np.testing.assert_allclose(elu_plus_one(np.array([5.0])), [6.0])
    v = elu_plus_one(np.array([-20.0]))
    np.testing.assert_allclose(v, [np.exp(-20.0)], rtol=1e-12)
    assert v[0] > 0.0


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=20))
def test_elu_plus_one_positive(xs):
    assert np.all(elu_plus_one(np.array(xs)) > 0.0)


def test_multiplicative_annihilation_and_identity_factor():
    layer = MultiplicativeLayer("m", 2, 2, 2, RNG(0))
    layer.proj_b.w.values[...] = 0.0
    layer.proj_b.b.values[...] = 0.0
    y, _ = layer.forward(np.array([[1.0, 2.0]]), np.array([[3.0, 4.0]]))
    np.testing.assert_array_equal(y, [[0.0, 0.0]])
    # proj_a forced to ones: output equals proj_b's projection
    layer.proj_a.w.values[...] = 0.0
    layer.proj_a.b.values[...] = 1.0
    layer.proj_b.w.values[...] = np.eye(2)
    y, _ = layer.forward(np.array([[1.0, 2.0]]), np.array([[3.0, 4.0]]))
    np.testing.assert_array_equal(y, [[3.0, 4.0]])


def test_multiplicative_hand_product():
    layer = MultiplicativeLayer("m", 2, 2, 2, RNG(0))
    layer.proj_a.w.values[...] = np.eye(2)
    layer.proj_a.b.values[...] = 0.0
    layer.proj_b.w.values[...] = np.eye(2)
    layer.proj_b.b.values[...] = 0.0
    y, _ = layer.forward(np.array([[2.0, 3.0]]), np.array([[4.0, 5.0]]))
    np.testing.assert_array_equal(y, [[8.0, 15.0]])


def test_beta_nll_reference_value():
    loss, _, _ = beta_nll(np.zeros((1, 1)), np.ones((1, 1)), np.zeros((1, 1)), 0.5)
    np.testing.assert_allclose(loss, [0.5 * np.log(2 * np.pi)], rtol=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_beta_nll_beta0_equals_plain_nll(seed):
    rng = RNG(seed)
    mean = rng.normal(size=(3, 5))
    var = rng.uniform(0.1, 2.0, size=(3, 5))
    target = rng.normal(size=(3, 5))
    l0, dm0, dv0 = beta_nll(mean, var, target, 0.0)
    l1, dm1, dv1 = gaussian_nll(mean, var, target)
    np.testing.assert_array_equal(l0, l1)
    np.testing.assert_array_equal(dm0, dm1)
    np.testing.assert_array_equal(dv0, dv1)


def test_beta_nll_beta1_mean_grad_is_mse_grad():
    rng = RNG(3)
    mean = rng.normal(size=(4, 3))
    var = rng.uniform(0.2, 3.0, size=(4, 3))
    target = rng.normal(size=(4, 3))
    _, dmean, _ = beta_nll(mean, var, target, 1.0)
    np.testing.assert_allclose(dmean, mean - target, rtol=1e-12)


def test_beta_nll_rejects_nonpositive_variance():
    with pytest.raises(NumericError):
        beta_nll(np.zeros((1, 2)), np.array([[1.0, 0.0]]), np.zeros((1, 2)), 0.5)


def test_beta_nll_gradients_match_finite_differences():
    # the variance weighting is detached, so the finite-difference twin must
    # hold the scale factor fixed at the base point
    rng = RNG(7)
    mean = rng.normal(size=(2, 4))
    var = rng.uniform(0.3, 2.0, size=(2, 4))
    target = rng.normal(size=(2, 4))
    for beta in (0.0, 0.5, 1.0):
        scale0 = var ** beta
        _, dmean, dvar = beta_nll(mean, var, target, beta)
        frozen = lambda: beta_nll(mean, var, target, beta, scale=scale0)[0].sum()
        check_input_grad(frozen, mean, dmean, rng)
        check_input_grad(frozen, var, dvar, rng)


def test_mlp_gradients_all_heads():
    rng = RNG(11)
    for head in ("linear", "tanh", "elu_plus_one"):
        net = MLP("net", 5, [8, 6], 4, rng, head=head)
        x = rng.normal(size=(3, 5))
        target = rng.normal(size=(3, 4))

        def loss_fn():
            y, _ = net.forward(x)
            if head == "elu_plus_one":
                return float((0.5 * (y - target) ** 2).sum())
            return float((0.5 * (y - target) ** 2).sum())

        y, cache = net.forward(x)
        for p in net.params():
            p.zero_grad()
        dx = net.backward(y - target, cache)
        check_param_grads(loss_fn, net.params(), rng)
        check_input_grad(loss_fn, x, dx, rng)


def test_multiplicative_layer_gradients():
    rng = RNG(13)
    layer = MultiplicativeLayer("m", 4, 3, 5, rng)
    a = rng.normal(size=(2, 4))
    b = rng.normal(size=(2, 3))
    target = rng.normal(size=(2, 5))

    def loss_fn():
        y, _ = layer.forward(a, b)
        return float((0.5 * (y - target) ** 2).sum())

    y, cache = layer.forward(a, b)
    for p in layer.params():
        p.zero_grad()
    da, db = layer.backward(y - target, cache)
    check_param_grads(loss_fn, layer.params(), rng)
    check_input_grad(loss_fn, a, da, rng)
    check_input_grad(loss_fn, b, db, rng)


def test_gaussian_head_gradients_through_beta_nll():
    rng = RNG(17)
    head = GaussianHead("gh", 6, [8, 8, 4], 3, rng)
    x = rng.normal(size=(4, 6))
    target = rng.normal(size=(4, 3))
    beta = 0.5
    scale0 = head.forward(x)[1] ** beta

    def loss_fn():
        mu, var, _ = head.forward(x)
        return float(beta_nll(mu, var, target, beta, scale=scale0)[0].sum())

    mu, var, cache = head.forward(x)
    _, dmu, dvar = beta_nll(mu, var, target, beta)
    for p in head.params():
        p.zero_grad()
    dx = head.backward(dmu, dvar, cache)
    check_param_grads(loss_fn, head.params(), rng)
    check_input_grad(loss_fn, x, dx, rng)


def test_param_tensor_shapes_stay_aligned():
    p = ParamTensor("p", np.zeros((3, 2)))
    assert p.grad.shape == p.values.shape
    p.grad += 1.0
    p.zero_grad()
    assert np.all(p.grad == 0.0)
