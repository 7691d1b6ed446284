"""Minimal dense-network toolkit with hand-written analytic gradients.

Everything here is float64 numpy. Layers are stateless with respect to
activations: ``forward`` returns ``(output, cache)`` and ``backward`` takes
the cache back, so one layer instance can be reused at every step of an
unrolled recurrence without clobbering intermediate values. Parameter
gradients accumulate into ``ParamTensor.grad`` until ``zero_grad``.
"""

from __future__ import annotations

import numpy as np


class NumericError(RuntimeError):
    """A numeric-domain failure (non-positive variance, non-finite loss)."""


class ConfigError(ValueError):
    """Invalid configuration or shape mismatch."""


class ParamTensor:
    """A named learnable array paired with its gradient accumulator."""

    __slots__ = ("name", "values", "grad")

    def __init__(self, name: str, values: np.ndarray):
        self.name = name
        self.values = np.asarray(values, dtype=np.float64)
        self.grad = np.zeros_like(self.values)

    @property
    def shape(self):
        return self.values.shape

    def zero_grad(self) -> None:
        self.grad.fill(0.0)

    def __repr__(self):
        return f"ParamTensor({self.name!r}, shape={self.values.shape})"


# ---------------------------------------------------------------------------
# activations
# ---------------------------------------------------------------------------

_BELOW_ONE = np.nextafter(1.0, 0.0)


def retanh(x: np.ndarray) -> np.ndarray:
    """Rectified tanh: max(0, tanh(x)), range [0, 1).

    tanh rounds to exactly 1.0 in float64 for x >= ~19; the output is
    clamped to the largest double below 1 so the open upper bound holds for
    every input.
    """
    return np.maximum(0.0, np.minimum(np.tanh(x), _BELOW_ONE))


def retanh_backward(dy: np.ndarray, x: np.ndarray) -> np.ndarray:
    """d retanh / dx = (1 - tanh^2) where x > 0, else 0."""
    t = np.tanh(x)
    return dy * (x > 0.0) * (1.0 - t * t)


def elu_plus_one(x: np.ndarray) -> np.ndarray:
    """ELU shifted by one: x+1 for x>0, exp(x) otherwise. Strictly positive."""
    return np.where(x > 0.0, x + 1.0, np.exp(np.minimum(x, 0.0)))


def elu_plus_one_backward(dy: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # For x <= 0 the derivative equals the output value exp(x).
    return dy * np.where(x > 0.0, 1.0, y)


def tanh_backward(dy: np.ndarray, y: np.ndarray) -> np.ndarray:
    return dy * (1.0 - y * y)


# ---------------------------------------------------------------------------
# layers
# ---------------------------------------------------------------------------

def _uniform_init(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Dense:
    """Affine map y = x W^T + b with weight shape (out, in)."""

    def __init__(self, name: str, in_dim: int, out_dim: int, rng: np.random.Generator):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.w = ParamTensor(f"{name}.w", _uniform_init(rng, in_dim, (out_dim, in_dim)))
        self.b = ParamTensor(f"{name}.b", _uniform_init(rng, in_dim, (out_dim,)))

    def params(self) -> list[ParamTensor]:
        return [self.w, self.b]

    def forward(self, x: np.ndarray):
        if x.shape[-1] != self.in_dim:
            raise ConfigError(
                f"dense {self.w.name}: input width {x.shape[-1]} != {self.in_dim}")
        return x @ self.w.values.T + self.b.values, x

    def backward(self, dy: np.ndarray, x: np.ndarray) -> np.ndarray:
        self.w.grad += dy.T @ x
        self.b.grad += dy.sum(axis=0)
        return dy @ self.w.values


class MLP:
    """Stack of Dense layers, tanh on hidden layers, configurable head.

    ``head`` is one of "linear", "tanh", "elu_plus_one" and applies to the
    final layer's output only.
    """

    def __init__(self, name, in_dim, hidden, out_dim, rng, head="linear"):
        if head not in ("linear", "tanh", "elu_plus_one"):
            raise ConfigError(f"unknown head activation {head!r}")
        widths = [in_dim, *hidden, out_dim]
        if any(w <= 0 for w in widths):
            raise ConfigError("layer widths must be positive")
        self.head = head
        self.layers = [
            Dense(f"{name}.{i}", widths[i], widths[i + 1], rng)
            for i in range(len(widths) - 1)
        ]

    def params(self) -> list[ParamTensor]:
        return [p for l in self.layers for p in l.params()]

    def forward(self, x: np.ndarray):
        caches = []
        h = x
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            z, cx = layer.forward(h)
            if i < last:
                h = np.tanh(z)
                caches.append((cx, h, None))
            else:
                if self.head == "tanh":
                    h = np.tanh(z)
                elif self.head == "elu_plus_one":
                    h = elu_plus_one(z)
                else:
                    h = z
                caches.append((cx, h, z))
        return h, caches

    def backward(self, dy: np.ndarray, caches) -> np.ndarray:
        last = len(self.layers) - 1
        d = dy
        for i in range(last, -1, -1):
            cx, out, z = caches[i]
            if i == last:
                if self.head == "tanh":
                    d = tanh_backward(d, out)
                elif self.head == "elu_plus_one":
                    d = elu_plus_one_backward(d, z, out)
            else:
                d = tanh_backward(d, out)
            d = self.layers[i].backward(d, cx)
        return d


class MultiplicativeLayer:
    """Two single-layer projections combined by elementwise product."""

    def __init__(self, name, in_a, in_b, width, rng):
        self.proj_a = Dense(f"{name}.a", in_a, width, rng)
        self.proj_b = Dense(f"{name}.b", in_b, width, rng)

    def params(self) -> list[ParamTensor]:
        return self.proj_a.params() + self.proj_b.params()

    def forward(self, a: np.ndarray, b: np.ndarray):
        u, ca = self.proj_a.forward(a)
        v, cb = self.proj_b.forward(b)
        return u * v, (ca, cb, u, v)

    def backward(self, dy: np.ndarray, cache):
        ca, cb, u, v = cache
        da = self.proj_a.backward(dy * v, ca)
        db = self.proj_b.backward(dy * u, cb)
        return da, db


class GaussianHead:
    """Tanh trunk with separate mean (linear) and variance (elu+1) read-outs."""

    def __init__(self, name, in_dim, hidden, out_dim, rng):
        self.trunk = MLP(f"{name}.trunk", in_dim, hidden[:-1], hidden[-1], rng,
                         head="tanh")
        self.mean = Dense(f"{name}.mean", hidden[-1], out_dim, rng)
        self.logv = Dense(f"{name}.var", hidden[-1], out_dim, rng)

    def params(self) -> list[ParamTensor]:
        return self.trunk.params() + self.mean.params() + self.logv.params()

    def forward(self, x: np.ndarray):
        feat, ct = self.trunk.forward(x)
        mu, cm = self.mean.forward(feat)
        zv, cv = self.logv.forward(feat)
        var = elu_plus_one(zv)
        return mu, var, (ct, cm, cv, zv, var)

    def backward(self, dmu: np.ndarray, dvar: np.ndarray, cache) -> np.ndarray:
        ct, cm, cv, zv, var = cache
        dfeat = self.mean.backward(dmu, cm)
        dfeat += self.logv.backward(elu_plus_one_backward(dvar, zv, var), cv)
        return self.trunk.backward(dfeat, ct)


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------

_LOG_2PI = np.log(2.0 * np.pi)


def beta_nll(mean: np.ndarray, var: np.ndarray, target: np.ndarray, beta: float,
             scale: np.ndarray = None):
    """Variance-weighted Gaussian negative log likelihood.

    Per-dimension NLL is scaled by a *detached* copy of var**beta and summed
    over the last axis. beta=0 is the plain NLL; beta=1 makes the mean
    gradient equal to the squared-error gradient.

    Because the scaling factor carries no gradient, finite differences of
    this function do not equal its gradients for beta > 0; pass ``scale``
    (the factor captured at a base point) to evaluate the frozen-scale loss
    that finite-difference checks must use.

    Returns ``(loss, dmean, dvar)`` where loss has the leading shape of the
    inputs and the gradients are with respect to the summed loss.
    """
    if not 0.0 <= beta <= 1.0:
        raise ConfigError(f"beta must be in [0, 1], got {beta}")
    if np.any(var <= 0.0):
        raise NumericError("beta_nll requires strictly positive variances")
    if scale is None:
        scale = var ** beta  # detached: no gradient flows through it
    diff = mean - target
    nll = 0.5 * (_LOG_2PI + np.log(var)) + diff * diff / (2.0 * var)
    loss = (scale * nll).sum(axis=-1)
    dmean = scale * diff / var
    dvar = scale * (0.5 / var - diff * diff / (2.0 * var * var))
    return loss, dmean, dvar


def gaussian_nll(mean: np.ndarray, var: np.ndarray, target: np.ndarray):
    """Plain diagonal-Gaussian NLL summed over the last axis (no weighting)."""
    return beta_nll(mean, var, target, beta=0.0)
