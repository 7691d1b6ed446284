"""File formats: JSON-lines episode and skip-sample datasets, metric CSVs."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .scripted import Episode, SceneConfig


def write_episodes(path, episodes: list[Episode]) -> None:
    """One episode per line; float lists round-trip exactly via repr."""
    with open(path, "w", encoding="utf-8") as fh:
        for ep in episodes:
            row = {
                "scene": ep.scene.to_json(),
                "observations": ep.observations.tolist(),
                "actions": ep.actions.tolist(),
                "phase_labels": ep.phase_labels.tolist(),
                "attention": None if ep.attention is None else ep.attention.tolist(),
            }
            fh.write(json.dumps(row) + "\n")


def read_episodes(path) -> list[Episode]:
    episodes = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            episodes.append(Episode(
                observations=np.asarray(row["observations"], dtype=np.float64),
                actions=np.asarray(row["actions"], dtype=np.float64),
                phase_labels=np.asarray(row["phase_labels"], dtype=np.int64),
                scene=SceneConfig.from_json(row["scene"]),
                attention=None if row.get("attention") is None
                else np.asarray(row["attention"], dtype=np.float64),
            ))
    return episodes


def write_skip_samples(path, samples) -> None:
    """Skip-training samples, each referencing its episode id and step."""
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(json.dumps({
                "episode": s.episode_id,
                "t": s.t,
                "boundary_t": s.boundary_t,
                "obs": s.obs.tolist(),
                "latent": s.latent.tolist(),
                "target": s.target.tolist(),
                "focus": None if s.focus is None else s.focus.tolist(),
            }) + "\n")


def read_skip_samples(path):
    from .events import SkipSample
    samples = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            samples.append(SkipSample(
                episode_id=row["episode"], t=row["t"], boundary_t=row["boundary_t"],
                obs=np.asarray(row["obs"]), latent=np.asarray(row["latent"]),
                target=np.asarray(row["target"]),
                focus=None if row.get("focus") is None else np.asarray(row["focus"]),
            ))
    return samples


def write_csv(path, header: list[str], rows) -> None:
    """Plain CSV with repr-formatted floats (deterministic, lossless)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    return rows[0], rows[1:]


def episodes_to_arrays(episodes: list[Episode]):
    """Stack a homogeneous episode list into (obs, act, labels) arrays."""
    obs = np.stack([ep.observations for ep in episodes])
    act = np.stack([ep.actions for ep in episodes])
    labels = np.stack([ep.phase_labels for ep in episodes])
    return obs, act, labels


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
