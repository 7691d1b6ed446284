"""Uncertainty-minimizing attention selection and the gaze protocol.

The system watches a scripted observation sequence through a simulated
gaze: at every step it picks one of three entity foci (hand, object, goal),
sees the focused entity's dims cleanly and the rest through Gaussian noise,
and feeds the masked observation to the models. The focus is chosen to
minimize the predicted variance, summed over a configured set of relevant
observation dims, of the next-step forward prediction (intra-event), of the
skip network's boundary prediction (inter-event), or of both.

Only the first action of an episode is given; later action inputs come from
the inverse model's mean under each candidate's masking. First-attend times
per entity are measured against the episode's first ground-truth phase
switch, the same way infant eye-tracking studies measure gaze arrival
relative to hand-object contact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import SensorimotorModel
from .nn import ConfigError
from .scripted import ENTITIES, MASK_NOISE_SIGMA, unattended_mask
from .skipnet import SkipNetwork

MODES = ("intra_only", "inter_only", "combined")


@dataclass
class UncertaintyConfig:
    """Which observation dims to care about, and which uncertainty terms."""
    relevant_dims: tuple = (0, 1, 2)     # hand position
    mode: str = "combined"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        dims = tuple(int(i) for i in self.relevant_dims)
        if not dims or any(i < 0 or i >= 11 for i in dims):
            raise ConfigError(f"relevant_dims out of range: {dims}")
        self.relevant_dims = dims


def uncertainty(var_diag: np.ndarray, relevant_dims) -> np.ndarray:
    """Sum of predicted variances over the relevant dims (batched)."""
    idx = list(relevant_dims)
    if any(i < 0 or i >= var_diag.shape[-1] for i in idx):
        raise ConfigError(f"relevant dim out of range for width {var_diag.shape[-1]}")
    return var_diag[..., idx].sum(axis=-1)


@dataclass
class GazeTrace:
    """Per-episode record of the closed-attention-loop evaluation."""
    foci: np.ndarray                 # (T,) chosen entity index per step
    first_attend: dict               # entity -> 1-based step (T if never)
    t_eb_script: int                 # first ground-truth phase switch
    t_eb_model: int                  # first gate-opening step (T if none)


def select_attention(model: SensorimotorModel, skipnet: SkipNetwork,
                     o_t: np.ndarray, h_prev: np.ndarray, noise: np.ndarray,
                     cfg: UncertaintyConfig, a_t: np.ndarray = None,
                     init_latent: bool = False):
    """Argmin of summed predicted variance over the three one-hot foci.

    Per candidate focus: mask the observation with the shared ``noise`` draw
    (paired comparison), obtain the action (given ``a_t``, or the inverse
    model's clipped mean under that masking), step the cell, and sum the
    requested predicted variances over cfg.relevant_dims. Ties break in the
    fixed entity order hand, object, goal.

    With ``init_latent`` the pre-step latent itself comes from the
    initialization network on the candidate's masked first inputs.

    Returns (choice, h_new, gates) with the committed candidate's latent and
    gate activations per row.
    """
    B = o_t.shape[0]
    scores = np.empty((3, B))
    h_news = []
    gates_all = []
    for e in range(3):
        focus_row = np.zeros(3)
        focus_row[e] = 1.0
        o_masked = o_t + noise * unattended_mask(focus_row)
        if init_latent:
            if a_t is None:
                raise ConfigError("latent initialization needs the first action")
            h_e, _ = model.init_latent(o_masked, a_t)
        else:
            h_e = h_prev
        if a_t is not None:
            a_e = a_t
        else:
            mu_a, _, _ = model.predict_action(o_masked, h_e)
            a_e = np.clip(mu_a, -1.0, 1.0)
        att = np.tile(focus_row, (B, 1))
        step = model.cell.step(model.step_input(o_masked, a_e, att), h_e)
        score = np.zeros(B)
        if cfg.mode in ("intra_only", "combined"):
            _, var_o, _ = model.predict_observation(step.y, o_masked)
            score += uncertainty(var_o, cfg.relevant_dims)
        if cfg.mode in ("inter_only", "combined"):
            _, var_skip = skipnet.predict(o_masked, step.h_new, att)
            score += uncertainty(var_skip, cfg.relevant_dims)
        scores[e] = score
        h_news.append(step.h_new)
        gates_all.append(step.gate)
    choice = np.argmin(scores, axis=0)   # argmin takes the first on ties
    h_new = np.empty((B, model.cell.latent_dim))
    gates = np.empty((B, model.cell.latent_dim))
    for e in range(3):
        rows = choice == e
        h_new[rows] = h_news[e][rows]
        gates[rows] = gates_all[e][rows]
    return choice, h_new, gates


def run_gaze_episodes(model: SensorimotorModel, skipnet: SkipNetwork,
                      observations: np.ndarray, first_actions: np.ndarray,
                      phase_switches, cfg: UncertaintyConfig,
                      eval_seed, sigma: float = MASK_NOISE_SIGMA) -> list[GazeTrace]:
    """Closed attention loop over a batch of episodes (vectorized).

    ``observations`` is the clean (B, T, 11) stream; ``phase_switches`` the
    per-episode first ground-truth phase switch used as the event-boundary
    reference time.
    """
    if not (model.gaze_mode and skipnet.gaze_mode):
        raise ConfigError("gaze evaluation needs gaze-mode model and skip network")
    B, T = observations.shape[0], observations.shape[1]
    rng = np.random.default_rng(np.random.SeedSequence(eval_seed))
    noise_seq = rng.normal(0.0, sigma, size=(T, B, 11))

    foci = np.empty((B, T), dtype=np.int64)
    gates_any = np.zeros((B, T), dtype=bool)
    h = None
    for t in range(T):
        choice, h, gates = select_attention(
            model, skipnet, observations[:, t], h, noise_seq[t], cfg,
            a_t=first_actions if t == 0 else None, init_latent=(t == 0))
        foci[:, t] = choice
        gates_any[:, t] = (gates > 0.0).any(axis=1)

    traces = []
    for b in range(B):
        first = {}
        for e, entity in enumerate(ENTITIES):
            hits = np.nonzero(foci[b] == e)[0]
            first[entity] = int(hits[0]) + 1 if hits.size else T
        open_steps = np.nonzero(gates_any[b])[0]
        t_model = int(open_steps[0]) + 1 if open_steps.size else T
        traces.append(GazeTrace(foci[b].copy(), first, int(phase_switches[b]),
                                t_model))
    return traces


def relative_attend_times(traces: list[GazeTrace]) -> dict:
    """Mean and standard error of t_entity - t_EB per entity."""
    out = {}
    for entity in ENTITIES:
        rel = np.array([tr.first_attend[entity] - tr.t_eb_script for tr in traces],
                       dtype=np.float64)
        stderr = float(rel.std(ddof=1) / np.sqrt(len(rel))) if len(rel) > 1 else 0.0
        out[entity] = (float(rel.mean()), stderr)
    return out
