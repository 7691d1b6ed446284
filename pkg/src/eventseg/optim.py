"""Adam with global gradient-norm clipping."""

from __future__ import annotations

import numpy as np

from .nn import ParamTensor


class Adam:
    """Adam over a fixed parameter list, clipping the global grad norm first.

    Clipping rescales every gradient by clip_norm / ||g||_global when the
    global norm exceeds clip_norm, before the moment updates see them.
    """

    def __init__(self, params: list[ParamTensor], lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-4, clip_norm: float = 0.1):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.clip_norm = clip_norm
        self.step_count = 0
        self.m = [np.zeros_like(p.values) for p in self.params]
        self.v = [np.zeros_like(p.values) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def global_grad_norm(self) -> float:
        total = 0.0
        for p in self.params:
            total += float(np.sum(p.grad * p.grad))
        return float(np.sqrt(total))

    def step(self) -> None:
        scale = 1.0
        if self.clip_norm is not None:
            norm = self.global_grad_norm()
            if norm > self.clip_norm:
                scale = self.clip_norm / norm
        self.step_count += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.step_count
        bc2 = 1.0 - b2 ** self.step_count
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad if scale == 1.0 else p.grad * scale
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p.values -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    # --- checkpoint support -------------------------------------------------

    def state_scalars(self) -> dict:
        return {
            "lr": self.lr, "beta1": self.beta1, "beta2": self.beta2,
            "eps": self.eps, "clip_norm": self.clip_norm,
            "step_count": self.step_count,
        }

    def state_tensors(self) -> dict[str, np.ndarray]:
        out = {}
        for p, m, v in zip(self.params, self.m, self.v):
            out[f"adam.m.{p.name}"] = m
            out[f"adam.v.{p.name}"] = v
        return out

    def load_state(self, scalars: dict, tensors: dict[str, np.ndarray]) -> None:
        self.lr = float(scalars["lr"])
        self.beta1 = float(scalars["beta1"])
        self.beta2 = float(scalars["beta2"])
        self.eps = float(scalars["eps"])
        self.clip_norm = scalars["clip_norm"]
        self.step_count = int(scalars["step_count"])
        for i, p in enumerate(self.params):
            self.m[i][...] = tensors[f"adam.m.{p.name}"]
            self.v[i][...] = tensors[f"adam.v.{p.name}"]
