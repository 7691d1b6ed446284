"""Forward-inverse sensorimotor model around a recurrent cell.

The model consumes aligned (observation, action[, attention]) sequences,
maintains the cell latent, and emits per-step Gaussian predictions of the
next observation (as a residual on the current one) and of the next action.
Training is teacher-forced backpropagation through time on the summed
variance-weighted NLLs plus the latent-change penalty.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cells import SparseGatedCell, make_cell
from .nn import (MLP, ConfigError, GaussianHead, MultiplicativeLayer,
                 beta_nll)

OBS_DIM = 11
ACT_DIM = 4
ATT_DIM = 3


@dataclass
class Rollout:
    """Teacher-forced unroll of one batch of episodes."""
    latents: np.ndarray          # (B, T, H) latent after each step
    gates: np.ndarray            # (B, T, H) update-gate activations
    pre_gates: np.ndarray        # (B, T, H) gate pre-activations
    obs_mean: np.ndarray         # (B, T-1, 11) predicted next-observation mean
    obs_var: np.ndarray          # (B, T-1, 11)
    act_mean: np.ndarray         # (B, T-1, 4) predicted next-action mean
    act_var: np.ndarray          # (B, T-1, 4)
    nll_obs: np.ndarray          # (B,) summed over steps and dims
    nll_act: np.ndarray          # (B,)
    reg_hard: np.ndarray         # (B,) open-gate count over steps x dims
    reg_soft: np.ndarray         # (B,) sum of gate activations (surrogate's antiderivative)
    beta_scales: list = field(repr=False, default=None)   # per-step detached NLL scales
    caches: list = field(repr=False, default=None)


class SensorimotorModel:
    """Cell + initialization, forward and inverse heads, and BPTT."""

    def __init__(self, rng: np.random.Generator, cell_type: str = "gatel0rd",
                 gaze_mode: bool = False, obs_dim: int = OBS_DIM,
                 act_dim: int = ACT_DIM):
        self.obs_dim = obs_dim
        self.act_dim = act_dim
        self.gaze_mode = gaze_mode
        self.input_dim = obs_dim + act_dim + (ATT_DIM if gaze_mode else 0)
        self.cell = make_cell(cell_type, self.input_dim, rng)
        self.cell_type = cell_type
        h = self.cell.latent_dim
        self.f_init = MLP("init", act_dim + obs_dim, [64, 32], h, rng, head="tanh")
        self.fm = GaussianHead("fm", self.cell.out_dim, [64, 32, 16], obs_dim, rng)
        self.im_mult = MultiplicativeLayer("im.mult", obs_dim, h, 16, rng)
        self.im = GaussianHead("im", 16, [64, 32, 16], act_dim, rng)

    def params(self):
        return (self.cell.params() + self.f_init.params() + self.fm.params()
                + self.im_mult.params() + self.im.params())

    @property
    def has_sparse_gates(self) -> bool:
        return isinstance(self.cell, SparseGatedCell)

    # --- single-step pieces (also used by the gaze protocol) ---------------

    def init_latent(self, o1: np.ndarray, a1: np.ndarray):
        """h_0 from the first sensorimotor inputs; deterministic."""
        h0, cache = self.f_init.forward(np.concatenate([a1, o1], axis=-1))
        return h0, cache

    def predict_observation(self, y: np.ndarray, o_t: np.ndarray):
        """Gaussian over the next observation: residual mean on o_t."""
        mu_delta, var, cache = self.fm.forward(y)
        return o_t + mu_delta, var, cache

    def predict_action(self, o_next: np.ndarray, h: np.ndarray):
        """Gaussian over the next action from the next observation and latent."""
        m, mc = self.im_mult.forward(o_next, h)
        mu, var, hc = self.im.forward(m)
        return mu, var, (mc, hc)

    def step_input(self, obs, act, att=None):
        parts = [obs, act]
        if self.gaze_mode:
            if att is None:
                raise ConfigError("gaze-mode model requires attention input")
            parts.append(att)
        elif att is not None:
            raise ConfigError("attention input on a non-gaze model")
        return np.concatenate(parts, axis=-1)

    # --- sequence rollout ---------------------------------------------------

    def rollout(self, obs: np.ndarray, act: np.ndarray, att: np.ndarray = None,
                beta: float = 0.5, keep_caches: bool = False,
                frozen_scales: list = None) -> Rollout:
        """Teacher-forced unroll over a (B, T, ...) batch.

        Predictions exist for steps 1..T-1 (their targets are the next
        inputs); the cell itself is stepped through all T inputs so the
        gate sequence covers the whole episode.

        ``frozen_scales`` (per-step pairs from a base rollout's
        ``beta_scales``) evaluates the NLLs with fixed variance weighting,
        which finite-difference gradient checks require.
        """
        B, T = obs.shape[0], obs.shape[1]
        if T < 2:
            raise ConfigError("episodes must have at least 2 steps")
        x = self.step_input(obs, act, att)
        h, init_cache = self.init_latent(obs[:, 0], act[:, 0])
        H = self.cell.latent_dim
        latents = np.empty((B, T, H))
        gates = np.empty((B, T, H))
        pre_gates = np.empty((B, T, H))
        obs_mean = np.empty((B, T - 1, self.obs_dim))
        obs_var = np.empty((B, T - 1, self.obs_dim))
        act_mean = np.empty((B, T - 1, self.act_dim))
        act_var = np.empty((B, T - 1, self.act_dim))
        nll_obs = np.zeros(B)
        nll_act = np.zeros(B)
        scales = []
        caches = [] if keep_caches else None
        grads = [] if keep_caches else None

        for t in range(T):
            step = self.cell.step(x[:, t], h)
            h = step.h_new
            latents[:, t] = h
            gates[:, t] = step.gate
            pre_gates[:, t] = step.pre_gate
            entry = {"cell": step.cache}
            if t < T - 1:
                om, ov, fm_cache = self.predict_observation(step.y, obs[:, t])
                am, av, im_cache = self.predict_action(obs[:, t + 1], h)
                obs_mean[:, t], obs_var[:, t] = om, ov
                act_mean[:, t], act_var[:, t] = am, av
                sc_o = frozen_scales[t][0] if frozen_scales else ov ** beta
                sc_a = frozen_scales[t][1] if frozen_scales else av ** beta
                lo, dmo, dvo = beta_nll(om, ov, obs[:, t + 1], beta, scale=sc_o)
                la, dma, dva = beta_nll(am, av, act[:, t + 1], beta, scale=sc_a)
                nll_obs += lo
                nll_act += la
                scales.append((sc_o, sc_a))
                entry.update(fm=fm_cache, im=im_cache)
                if keep_caches:
                    grads.append((dmo, dvo, dma, dva))
            elif keep_caches:
                grads.append(None)
            if keep_caches:
                caches.append(entry)

        reg_hard = (gates > 0.0).sum(axis=(1, 2)).astype(np.float64)
        reg_soft = gates.sum(axis=(1, 2))
        r = Rollout(latents, gates, pre_gates, obs_mean, obs_var,
                    act_mean, act_var, nll_obs, nll_act, reg_hard, reg_soft,
                    beta_scales=scales)
        if keep_caches:
            r.caches = (caches, grads, init_cache)
        return r

    def backward(self, rollout: Rollout, lam: float) -> None:
        """Accumulate parameter gradients of the batch-mean training loss.

        The loss is mean_b [ nll_obs + nll_act + lam * penalty ]; the
        penalty's step function backpropagates through its straight-through
        surrogate. Call ``rollout`` with ``keep_caches=True`` first.
        """
        caches, grads, init_cache = rollout.caches
        B, T = rollout.latents.shape[0], rollout.latents.shape[1]
        inv_b = 1.0 / B
        reg_coeff = lam * inv_b
        dh = np.zeros((B, self.cell.latent_dim))
        for t in range(T - 1, -1, -1):
            entry = caches[t]
            dy = np.zeros((B, self.cell.out_dim))
            if t < T - 1:
                dmo, dvo, dma, dva = grads[t]
                dy = self.fm.backward(dmo * inv_b, dvo * inv_b, entry["fm"])
                dm = self.im.backward(dma * inv_b, dva * inv_b, entry["im"][1])
                _, dh_im = self.im_mult.backward(dm, entry["im"][0])
                dh += dh_im
            _, dh = self.cell.backward_step(dy, dh, entry["cell"], reg_coeff)
        self.f_init.backward(dh, init_cache)

    def loss_value(self, rollout: Rollout, lam: float, soft_reg: bool = False) -> float:
        """Batch-mean total loss matching ``backward``'s gradients.

        ``soft_reg`` swaps the step-function penalty for its surrogate
        antiderivative (the summed gate activations) so finite differences
        of this value agree with the surrogate gradient; training reports
        the hard value.
        """
        reg = rollout.reg_soft if soft_reg else rollout.reg_hard
        per = rollout.nll_obs + rollout.nll_act + lam * reg
        return float(per.mean())


def rollout_metrics(r: Rollout, obs: np.ndarray, act: np.ndarray) -> dict:
    """Held-out curve metrics: mean-prediction MSEs, gate rate, NLL terms."""
    obs_mse = float(np.mean((r.obs_mean - obs[:, 1:]) ** 2))
    act_mse = float(np.mean((r.act_mean - act[:, 1:]) ** 2))
    return {
        "obs_mse": obs_mse,
        "act_mse": act_mse,
        "gate_open_rate": float(np.mean(r.gates > 0.0)),
        "nll_obs": float(r.nll_obs.mean()),
        "nll_act": float(r.nll_act.mean()),
    }
