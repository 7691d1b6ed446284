"""Event boundaries from gate openings, and skip-training data construction.

A boundary is any step at which at least one update-gate activation is
strictly positive; the final step of a sequence always counts as a boundary
so every step has a next boundary to aim at.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import ConfigError


def extract_boundaries(gates: np.ndarray, length: int = None) -> list[int]:
    """Steps (1-based) where any gate opens, always including the last step.

    ``gates`` has shape (T, H); a gate exactly at zero is closed.
    """
    gates = np.asarray(gates)
    T = gates.shape[0] if length is None else length
    open_steps = np.nonzero((gates > 0.0).any(axis=1))[0] + 1
    times = set(int(t) for t in open_steps)
    times.add(T)
    return sorted(times)


def next_boundary(t: int, boundaries) -> int:
    """First boundary strictly after step t."""
    terminal = max(boundaries)
    if t >= terminal:
        raise ConfigError(f"step {t} has no following boundary (T={terminal})")
    return min(b for b in boundaries if b > t)


@dataclass
class SkipSample:
    """Input/target pair for the temporally abstract predictor."""
    episode_id: int
    t: int                      # query step, 1-based
    boundary_t: int             # the step the target observation comes from
    obs: np.ndarray             # observation at t (perceived stream)
    latent: np.ndarray          # cell latent after step t
    target: np.ndarray          # observation at boundary_t
    focus: np.ndarray = None    # one-hot attention at t, gaze datasets only


def build_skip_dataset(model, obs: np.ndarray, act: np.ndarray,
                       att: np.ndarray = None, episode_ids=None) -> list[SkipSample]:
    """Roll episodes through a frozen model and pair each step with the
    observation at its next gate-opening boundary.

    One sample per step t < T. Targets are ground-truth observations from
    the same episode (the perceived stream passed in), never model output.
    """
    B, T = obs.shape[0], obs.shape[1]
    if episode_ids is None:
        episode_ids = list(range(B))
    rollout = model.rollout(obs, act, att)
    samples = []
    for b in range(B):
        boundaries = extract_boundaries(rollout.gates[b], T)
        for t in range(1, T):
            bt = next_boundary(t, boundaries)
            samples.append(SkipSample(
                episode_id=episode_ids[b], t=t, boundary_t=bt,
                obs=obs[b, t - 1].copy(),
                latent=rollout.latents[b, t - 1].copy(),
                target=obs[b, bt - 1].copy(),
                focus=None if att is None else att[b, t - 1].copy(),
            ))
    return samples


def samples_to_arrays(samples: list[SkipSample], gaze_mode: bool):
    """Stack samples into (inputs, targets); inputs are [obs, latent(, focus)]."""
    obs = np.stack([s.obs for s in samples])
    lat = np.stack([s.latent for s in samples])
    parts = [obs, lat]
    if gaze_mode:
        parts.append(np.stack([s.focus for s in samples]))
    return np.concatenate(parts, axis=1), np.stack([s.target for s in samples])
