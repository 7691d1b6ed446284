import numpy as np
import pytest

from eventseg.checkpoint import load_model, load_tensors, save_model, save_tensors
from eventseg.model import SensorimotorModel
from eventseg.optim import Adam

RNG = np.random.default_rng


def test_tensor_round_trip(tmp_path):
    path = tmp_path / "t.ckpt"
    tensors = {
        "a": np.arange(6.0).reshape(2, 3),
        "b": np.array(3.25),
        "nested.name.w": RNG(0).normal(size=(4, 5)),
    }
    save_tensors(path, tensors, {"note": 1})
    loaded, scalars = load_tensors(path)
    assert scalars == {"note": 1}
    assert set(loaded) == set(tensors)
    for k in tensors:
        np.testing.assert_array_equal(loaded[k], tensors[k])


def test_rejects_foreign_file(tmp_path):
    path = tmp_path / "bogus.ckpt"
    path.write_bytes(b"\x05\x00\x00\x00\x00\x00\x00\x00{}123")
    with pytest.raises(ValueError):
        load_tensors(path)


def test_model_round_trip_with_optimizer(tmp_path):
    model = SensorimotorModel(RNG(0))
    opt = Adam(model.params(), lr=1e-3)
    # take one real step so moments are non-trivial
    obs = RNG(1).normal(size=(2, 3, 11))
    act = RNG(2).uniform(-1, 1, size=(2, 3, 4))
    r = model.rollout(obs, act, keep_caches=True)
    model.backward(r, lam=1.0)
    opt.step()

    path = tmp_path / "m.ckpt"
    save_model(path, model, opt)

    model2 = SensorimotorModel(RNG(99))       # different init, same shapes
    opt2 = Adam(model2.params(), lr=5.0)
    load_model(path, model2, opt2)
    assert opt2.step_count == 1
    assert opt2.lr == 1e-3
    for p1, p2 in zip(model.params(), model2.params()):
        np.testing.assert_array_equal(p1.values, p2.values)
    for m1, m2 in zip(opt.m, opt2.m):
        np.testing.assert_array_equal(m1, m2)
    # restored model computes identically
    r1 = model.rollout(obs, act)
    r2 = model2.rollout(obs, act)
    np.testing.assert_array_equal(r1.obs_mean, r2.obs_mean)
    np.testing.assert_array_equal(r1.gates, r2.gates)


def test_missing_tensor_detected(tmp_path):
    model = SensorimotorModel(RNG(0))
    path = tmp_path / "m.ckpt"
    save_tensors(path, {"cell.r.0.w": np.zeros((64, 31))})
    with pytest.raises(KeyError):
        load_model(path, model)
