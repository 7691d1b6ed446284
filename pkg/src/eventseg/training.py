"""Training loops for the forward-inverse model and the skip network."""

from __future__ import annotations

import numpy as np

from .model import SensorimotorModel, rollout_metrics
from .nn import ConfigError, NumericError, beta_nll
from .optim import Adam
from .skipnet import SkipNetwork


def _check_finite(value: float, what: str) -> None:
    if not np.isfinite(value):
        raise NumericError(f"{what} became non-finite")


def iterate_batches(n: int, batch_size: int, rng: np.random.Generator):
    """Shuffled index batches covering all n samples (last one may be short)."""
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start:start + batch_size]


class EarlyStopper:
    """Plateau detection on a monitored loss (strict improvement resets)."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = np.inf
        self.stale = 0

    def update(self, value: float) -> bool:
        """Returns True when training should stop."""
        if value < self.best - 1e-12:
            self.best = value
            self.stale = 0
        else:
            self.stale += 1
        return self.stale >= self.patience


def train_fim(model: SensorimotorModel, train_obs, train_act, test_obs, test_act,
              train_att=None, test_att=None, lam: float = 1.0, beta: float = 0.5,
              lr: float = 5e-4, adam_eps: float = 1e-4, clip_norm: float = 0.1,
              batch_size: int = 192, max_epochs: int = 300, patience: int = 20,
              shuffle_rng: np.random.Generator = None,
              epoch_callback=None) -> tuple[Adam, list[dict]]:
    """Mini-batch BPTT on the combined prediction + sparsity loss.

    Returns the optimizer (for checkpointing) and the per-epoch curve rows:
    dicts with epoch, obs_mse, act_mse, gate_open_rate, nll_obs, nll_act
    measured on the held-out set. ``epoch_callback(epoch, model)`` runs
    after the metrics of each epoch (checkpoint hooks).
    """
    if train_obs.shape[0] == 0:
        raise ConfigError("training dataset is empty")
    if shuffle_rng is None:
        shuffle_rng = np.random.default_rng(0)
    effective_lam = lam if model.has_sparse_gates else 0.0
    opt = Adam(model.params(), lr=lr, eps=adam_eps, clip_norm=clip_norm)
    stopper = EarlyStopper(patience)
    curves = []
    if epoch_callback is not None:
        epoch_callback(0, model)
    for epoch in range(1, max_epochs + 1):
        for idx in iterate_batches(train_obs.shape[0], batch_size, shuffle_rng):
            r = model.rollout(train_obs[idx], train_act[idx],
                              None if train_att is None else train_att[idx],
                              beta=beta, keep_caches=True)
            opt.zero_grad()
            model.backward(r, effective_lam)
            opt.step()
        test_r = model.rollout(test_obs, test_act, test_att, beta=beta)
        m = rollout_metrics(test_r, test_obs, test_act)
        m["epoch"] = epoch
        _check_finite(m["nll_obs"] + m["nll_act"], "held-out loss")
        curves.append(m)
        if epoch_callback is not None:
            epoch_callback(epoch, model)
        monitored = (m["nll_obs"] + m["nll_act"]
                     + effective_lam * m["gate_open_rate"]
                     * test_r.gates.shape[1] * test_r.gates.shape[2])
        if stopper.update(monitored):
            break
    return opt, curves


def train_skip(net: SkipNetwork, train_x, train_y, test_x, test_y,
               beta: float = 0.5, lr: float = 1e-4, adam_eps: float = 1e-4,
               clip_norm: float = 0.1, batch_size: int = 192,
               max_epochs: int = 30, patience: int = 5,
               shuffle_rng: np.random.Generator = None,
               epoch_callback=None) -> tuple[Adam, list[dict]]:
    """Adam on the skip network's beta-NLL; returns optimizer and curves."""
    if train_x.shape[0] == 0:
        raise ConfigError("skip dataset is empty")
    if shuffle_rng is None:
        shuffle_rng = np.random.default_rng(0)
    opt = Adam(net.params(), lr=lr, eps=adam_eps, clip_norm=clip_norm)
    stopper = EarlyStopper(patience)
    curves = []
    for epoch in range(1, max_epochs + 1):
        for idx in iterate_batches(train_x.shape[0], batch_size, shuffle_rng):
            opt.zero_grad()
            net.loss_and_grads(train_x[idx], train_y[idx], beta)
            opt.step()
        mean, var, _ = net.forward(test_x)
        loss, _, _ = beta_nll(mean, var, test_y, beta)
        test_loss = float(loss.mean())
        _check_finite(test_loss, "skip held-out loss")
        row = {"epoch": epoch, "test_nll": test_loss,
               "test_mse": float(np.mean((mean - test_y) ** 2))}
        curves.append(row)
        if epoch_callback is not None:
            epoch_callback(epoch, net)
        if stopper.update(test_loss):
            break
    return opt, curves
