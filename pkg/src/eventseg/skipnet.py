"""The skip network: a deep MLP predicting the observation at the next
event boundary as a Gaussian, from the current observation and latent."""

from __future__ import annotations

import numpy as np

from .model import ATT_DIM, OBS_DIM
from .nn import GaussianHead, beta_nll


class SkipNetwork:
    """Five tanh feature layers with mean/variance read-outs over 11 dims."""

    WIDTHS = [512, 256, 128, 64, 32]

    def __init__(self, rng: np.random.Generator, latent_dim: int = 16,
                 gaze_mode: bool = False, obs_dim: int = OBS_DIM):
        self.obs_dim = obs_dim
        self.latent_dim = latent_dim
        self.gaze_mode = gaze_mode
        in_dim = obs_dim + latent_dim + (ATT_DIM if gaze_mode else 0)
        self.in_dim = in_dim
        self.head = GaussianHead("skip", in_dim, self.WIDTHS, obs_dim, rng)

    def params(self):
        return self.head.params()

    def forward(self, x: np.ndarray):
        """Gaussian over the boundary observation for stacked inputs x."""
        return self.head.forward(x)

    def predict(self, obs: np.ndarray, latent: np.ndarray, focus: np.ndarray = None):
        parts = [obs, latent]
        if self.gaze_mode:
            parts.append(focus)
        mean, var, _ = self.forward(np.concatenate(parts, axis=-1))
        return mean, var

    def loss_and_grads(self, x: np.ndarray, target: np.ndarray, beta: float):
        """Batch-mean beta-NLL; accumulates parameter gradients."""
        mean, var, cache = self.forward(x)
        loss, dmean, dvar = beta_nll(mean, var, target, beta)
        inv_b = 1.0 / x.shape[0]
        self.head.backward(dmean * inv_b, dvar * inv_b, cache)
        return float(loss.mean()), mean, var
