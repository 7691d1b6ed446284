"""Experiment configuration and named sub-seed derivation."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .nn import ConfigError

# every purpose draws from its own child of the root seed, so e.g. masking
# noise never shifts when the data size changes
_SEED_CHILDREN = ("data", "init", "shuffle", "mask", "eval", "skip_init", "skip_shuffle")


def derive_seeds(root_seed: int) -> dict[str, np.random.SeedSequence]:
    children = np.random.SeedSequence(root_seed).spawn(len(_SEED_CHILDREN))
    return dict(zip(_SEED_CHILDREN, children))


def rng_for(root_seed: int, purpose: str) -> np.random.Generator:
    return np.random.default_rng(derive_seeds(root_seed)[purpose])


@dataclass
class ExperimentConfig:
    """All pipeline hyperparameters; defaults follow the training recipe."""
    seeds: list = field(default_factory=lambda: [0])
    out_dir: str = "runs/default"

    # data
    n_episodes: int = 2000
    episode_len: int = 25
    type_mix: tuple = (1 / 3, 1 / 3, 1 / 3)
    gaze_mode: bool = False
    test_fraction: float = 0.1
    motor_noise_sigma: float = 0.05

    # model
    cell_type: str = "gatel0rd"          # or "gru"
    sparsity_lambda: float = 1.0
    beta: float = 0.5

    # optimization
    lr_model: float = 5e-4
    lr_skip: float = 1e-4
    adam_eps: float = 1e-4
    clip_norm: float = 0.1
    batch_size: int = 192
    max_epochs: int = 300
    patience: int = 20
    skip_max_epochs: int = 30
    skip_patience: int = 5
    checkpoint_every: int = 10

    # gaze protocol
    gaze_stages: int = 4                 # developmental checkpoints incl. stage 0
    gaze_eval_episodes: int = 50
    gaze_relevant_entity: str = "hand"   # uncertainty taken over this entity's position

    def __post_init__(self):
        if self.cell_type not in ("gatel0rd", "gru"):
            raise ConfigError(f"cell_type must be gatel0rd or gru, got {self.cell_type!r}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        self.type_mix = tuple(float(m) for m in self.type_mix)
        self.seeds = [int(s) for s in self.seeds]

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        d["type_mix"] = list(self.type_mix)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            return cls.from_json(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def content_hash(self) -> str:
        canon = json.dumps(self.to_json(), sort_keys=True)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]
