import numpy as np

from eventseg.nn import ParamTensor
from eventseg.optim import Adam


def test_zero_gradient_is_identity():
    p = ParamTensor("p", np.array([1.0, -2.0, 3.0]))
    opt = Adam([p], lr=0.01)
    before = p.values.copy()
    opt.step()
    np.testing.assert_array_equal(p.values, before)
    assert opt.step_count == 1


def test_global_norm_clipping():
    p = ParamTensor("p", np.zeros(4))
    opt = Adam([p], lr=0.01, clip_norm=0.1)
    p.grad[...] = [0.6, 0.0, 0.8, 0.0]           # norm exactly 1.0
    norm = opt.global_grad_norm()
    assert abs(norm - 1.0) < 1e-12
    # reproduce the clipped first update by hand: g_eff = 0.1 * g
    g_eff = p.grad * 0.1
    m = 0.1 * g_eff
    v = 0.001 * g_eff ** 2
    expected = -0.01 * (m / 0.1) / (np.sqrt(v / 0.001) + 1e-4)
    opt.step()
    np.testing.assert_allclose(p.values, expected, rtol=1e-12)


def test_matches_hand_rolled_recurrence_two_steps():
    # independent scalar Adam recurrence
    lr, b1, b2, eps = 0.05, 0.9, 0.999, 1e-4
    g = 0.02                                      # below the clip threshold
    theta = 1.0
    m = v = 0.0
    for t in (1, 2):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        theta -= lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps)

    p = ParamTensor("p", np.array([1.0]))
    opt = Adam([p], lr=lr, beta1=b1, beta2=b2, eps=eps, clip_norm=0.1)
    for _ in range(2):
        p.grad[...] = g
        opt.step()
    np.testing.assert_allclose(p.values, [theta], rtol=1e-14)


def test_clip_only_when_norm_exceeds_threshold():
    p = ParamTensor("p", np.zeros(2))
    opt = Adam([p], lr=0.01, clip_norm=0.1)
    p.grad[...] = [0.03, 0.04]                    # norm 0.05 < 0.1, no clip
    m = 0.1 * p.grad
    v = 0.001 * p.grad ** 2
    expected = -0.01 * (m / 0.1) / (np.sqrt(v / 0.001) + 1e-4)
    opt.step()
    np.testing.assert_allclose(p.values, expected, rtol=1e-12)


def test_clip_is_global_across_tensors():
    a = ParamTensor("a", np.zeros(1))
    b = ParamTensor("b", np.zeros(1))
    opt = Adam([a, b], lr=0.01, clip_norm=0.1)
    a.grad[...] = 3.0
    b.grad[...] = 4.0
    assert abs(opt.global_grad_norm() - 5.0) < 1e-12
