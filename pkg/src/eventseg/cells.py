"""Recurrent cells: the sparsely gated cell and a GRU ablation.

Both cells share one interface: ``step(x, h_prev) -> CellStep`` caching all
intermediates, and ``backward_step(dy, dh_new, cache, reg_coeff)`` returning
``(dx, dh_prev)`` while accumulating parameter gradients. ``reg_coeff`` is
the per-element weight of the latent-change penalty's surrogate gradient
(lambda / batch size); the GRU has no sparse gates and ignores it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import MLP, Dense, MultiplicativeLayer, retanh, tanh_backward


@dataclass
class CellStep:
    """One recurrence step: proposal, gate, new latent, output, cache."""
    h_prop: np.ndarray
    pre_gate: np.ndarray
    gate: np.ndarray
    h_new: np.ndarray
    y: np.ndarray
    cache: tuple


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


class SparseGatedCell:
    """Recurrent cell whose latent changes only where its update gate opens.

    A recommendation network proposes a latent, a gating network emits
    pre-activations whose rectified tanh in [0, 1) interpolates between the
    proposal and the previous latent, and a multiplicative output layer maps
    (input, latent) to the step output. Closed gates copy the previous
    latent bit for bit, so the latent is piecewise constant over time.
    """

    def __init__(self, input_dim: int, rng: np.random.Generator,
                 latent_dim: int = 16, hidden=(64, 32), out_width: int = 16):
        self.input_dim = input_dim
        self.latent_dim = latent_dim
        self.out_dim = out_width
        joint = input_dim + latent_dim
        self.recommend = MLP("cell.r", joint, list(hidden), latent_dim, rng, head="tanh")
        self.gating = MLP("cell.g", joint, list(hidden), latent_dim, rng, head="linear")
        self.output = MultiplicativeLayer("cell.o", input_dim, latent_dim, out_width, rng)

    def params(self):
        return self.recommend.params() + self.gating.params() + self.output.params()

    def step(self, x: np.ndarray, h_prev: np.ndarray) -> CellStep:
        u = np.concatenate([x, h_prev], axis=-1)
        h_prop, r_cache = self.recommend.forward(u)
        z, g_cache = self.gating.forward(u)
        gate = retanh(z)
        h_new = gate * h_prop + (1.0 - gate) * h_prev
        y, o_cache = self.output.forward(x, h_new)
        cache = (h_prev, h_prop, z, gate, r_cache, g_cache, o_cache)
        return CellStep(h_prop, z, gate, h_new, y, cache)

    def backward_step(self, dy, dh_new, cache, reg_coeff: float = 0.0):
        h_prev, h_prop, z, gate, r_cache, g_cache, o_cache = cache
        dx, dh_out = self.output.backward(dy, o_cache)
        dh = dh_new + dh_out
        dgate = dh * (h_prop - h_prev)
        dh_prop = dh * gate
        dh_prev = dh * (1.0 - gate)
        # retanh derivative: where z > 0, tanh(z) == gate, so 1 - tanh^2 is
        # 1 - gate^2. The penalty's straight-through surrogate adds a
        # constant reg_coeff to dgate over the same active region.
        active = (z > 0.0) * (1.0 - gate * gate)
        dz = (dgate + reg_coeff) * active
        du = self.gating.backward(dz, g_cache)
        du += self.recommend.backward(dh_prop, r_cache)
        dx = dx + du[:, :self.input_dim]
        dh_prev = dh_prev + du[:, self.input_dim:]
        return dx, dh_prev


class GRUCell:
    """Standard GRU with the same multiplicative output layer on (x, h_new).

    Update-gate convention pinned so that a saturated-closed gate carries
    the previous latent: h = (1-z) * h_prev + z * n.
    """

    def __init__(self, input_dim: int, rng: np.random.Generator,
                 latent_dim: int = 32, out_width: int = 16):
        self.input_dim = input_dim
        self.latent_dim = latent_dim
        self.out_dim = out_width
        joint = input_dim + latent_dim
        self.w_update = Dense("cell.wz", joint, latent_dim, rng)
        self.w_reset = Dense("cell.wr", joint, latent_dim, rng)
        self.w_cand = Dense("cell.wn", joint, latent_dim, rng)
        self.output = MultiplicativeLayer("cell.o", input_dim, latent_dim, out_width, rng)

    def params(self):
        return (self.w_update.params() + self.w_reset.params()
                + self.w_cand.params() + self.output.params())

    def step(self, x: np.ndarray, h_prev: np.ndarray) -> CellStep:
        u = np.concatenate([x, h_prev], axis=-1)
        az, cz = self.w_update.forward(u)
        ar, cr = self.w_reset.forward(u)
        z = _sigmoid(az)
        r = _sigmoid(ar)
        un = np.concatenate([x, r * h_prev], axis=-1)
        an, cn = self.w_cand.forward(un)
        n = np.tanh(an)
        h_new = (1.0 - z) * h_prev + z * n
        y, o_cache = self.output.forward(x, h_new)
        cache = (h_prev, z, r, n, cz, cr, cn, o_cache)
        return CellStep(n, az, z, h_new, y, cache)

    def backward_step(self, dy, dh_new, cache, reg_coeff: float = 0.0):
        h_prev, z, r, n, cz, cr, cn, o_cache = cache
        dx, dh_out = self.output.backward(dy, o_cache)
        dh = dh_new + dh_out
        dz = dh * (n - h_prev)
        dn = dh * z
        dh_prev = dh * (1.0 - z)
        dun = self.w_cand.backward(tanh_backward(dn, n), cn)
        dx = dx + dun[:, :self.input_dim]
        drh = dun[:, self.input_dim:]
        dr = drh * h_prev
        dh_prev = dh_prev + drh * r
        du = self.w_update.backward(dz * z * (1.0 - z), cz)
        du += self.w_reset.backward(dr * r * (1.0 - r), cr)
        dx = dx + du[:, :self.input_dim]
        dh_prev = dh_prev + du[:, self.input_dim:]
        return dx, dh_prev


# ---------------------------------------------------------------------------
# latent-change penalty
# ---------------------------------------------------------------------------

def gate_regularizer(gates: np.ndarray) -> float:
    """Count of strictly open gate entries (step function, open iff > 0)."""
    return float(np.count_nonzero(gates > 0.0))

def gate_open_rate(gates: np.ndarray) -> float:
    """Mean of the step function over all entries (steps x dims [x batch])."""
    return float(np.mean(gates > 0.0))


def gate_regularizer_backward(pre_gate: np.ndarray) -> np.ndarray:
    """Surrogate gradient of the open-gate count w.r.t. pre-activations.

    Straight-through with unit slope through the step function, chained
    through the rectified tanh: (1 - tanh^2(z)) on the active region z > 0,
    zero elsewhere.
    """
    t = np.tanh(pre_gate)
    return (pre_gate > 0.0) * (1.0 - t * t)


def make_cell(cell_type: str, input_dim: int, rng: np.random.Generator):
    """Build a cell by config name ("gatel0rd" or "gru")."""
    if cell_type == "gatel0rd":
        return SparseGatedCell(input_dim, rng)
    if cell_type == "gru":
        return GRUCell(input_dim, rng)
    raise ValueError(f"unknown cell type {cell_type!r}")
