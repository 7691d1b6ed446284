"""Scripted 3-D manipulation episodes for a two-finger gripper.

A kinematic abstraction of a tabletop pick-and-place scene. The hand is
position-controlled by a 4-dim action (xyz velocity command plus gripper
open/close, all in [-1, 1]); the 11-dim observation stacks hand position,
object position, goal position, and the two finger openings.

Three episode types:

* ``reach_grasp_transport`` — move to the object, close the fingers around
  it, carry it to the goal, hold.
* ``pointing`` — move the hand to the goal position, hold.
* ``stretching`` — repeat a single random motor command for the whole
  episode (the arm drifts until it pins against the workspace box).

Goal-directed motion uses a proportional controller whose speed tapers off
near the target, and every executed action is perturbed by Gaussian motor
noise. Phase labels record the ground-truth event structure; they are for
evaluation only and are never model inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn import ConfigError

T_STEPS = 25
EPISODE_TYPES = ("reach_grasp_transport", "pointing", "stretching")

# observation layout: hand xyz, object xyz, goal xyz, two finger openings
HAND_DIMS = (0, 1, 2)
OBJECT_DIMS = (3, 4, 5)
GOAL_DIMS = (6, 7, 8)
FINGER_DIMS = (9, 10)
ENTITY_DIMS = {
    "hand": HAND_DIMS + FINGER_DIMS,  # fingers belong to the hand entity
    "object": OBJECT_DIMS,
    "goal": GOAL_DIMS,
}
ENTITIES = ("hand", "object", "goal")

# kinematics / controller constants
SPEED_SCALE = 0.08          # metres of hand travel per unit action per step
GRIP_SCALE = 0.012          # metres of finger travel per unit command per step
PROP_GAIN = 5.0             # proportional controller gain, 1/m
DECEL_RADIUS = 0.10         # linear speed taper inside this distance, m
ARRIVE_RADIUS = 0.02        # "at target" threshold, m
GRASP_RADIUS = 0.03         # object counts as between the fingers, m
FINGER_OPEN = 0.05          # fully open finger travel, m
OBJECT_HALF_WIDTH = 0.02    # grasp complete once each finger closes to this
MOTOR_NOISE_SIGMA = 0.05
MASK_NOISE_SIGMA = 0.05

# workspace: x/y extents, hand z band above the table
WORKSPACE_XY = (0.0, 0.6)
HAND_Z_RANGE = (0.02, 0.40)     # relative to table height
TABLE_HEIGHT_RANGE = (0.35, 0.45)
MIN_HAND_OBJECT_SEPARATION = 0.10

# ground-truth phase labels
PHASES = {
    "reach_grasp_transport": ("reach", "grasp", "transport", "hold"),
    "pointing": ("reach_goal", "hold"),
    "stretching": ("stretch",),
}


@dataclass
class SceneConfig:
    """Sampled initial geometry plus the episode type and its seed."""
    episode_type: str
    table_height: float
    hand_start: list
    object_start: list
    goal_pos: list
    seed: int

    def to_json(self) -> dict:
        return {
            "episode_type": self.episode_type,
            "table_height": self.table_height,
            "hand_start": list(self.hand_start),
            "object_start": list(self.object_start),
            "goal_pos": list(self.goal_pos),
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, d: dict) -> "SceneConfig":
        return cls(d["episode_type"], d["table_height"], d["hand_start"],
                   d["object_start"], d["goal_pos"], d["seed"])


@dataclass
class Episode:
    """One aligned (observation, action) sequence with ground truth."""
    observations: np.ndarray        # (T, 11)
    actions: np.ndarray             # (T, 4)
    phase_labels: np.ndarray        # (T,) ints, monotone non-decreasing
    scene: SceneConfig
    attention: np.ndarray = None    # (T, 3) one-hot rows, gaze datasets only

    @property
    def length(self) -> int:
        return self.observations.shape[0]

    def first_phase_switch(self) -> int:
        """1-based step of the first ground-truth phase change (T if none)."""
        labels = self.phase_labels
        changed = np.nonzero(labels[1:] != labels[:-1])[0]
        return int(changed[0]) + 2 if changed.size else self.length


def sample_scene(episode_type: str, seed: int) -> SceneConfig:
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    table = float(rng.uniform(*TABLE_HEIGHT_RANGE))
    lo, hi = WORKSPACE_XY

    def xy():
        return rng.uniform(lo + 0.05, hi - 0.05, size=2)

    obj = np.array([*xy(), table + OBJECT_HALF_WIDTH])
    goal = np.array([*xy(), table + rng.uniform(0.02, 0.25)])
    while True:
        hand = np.array([*xy(), table + rng.uniform(0.05, 0.30)])
        if np.linalg.norm(hand - obj) >= MIN_HAND_OBJECT_SEPARATION:
            break
    return SceneConfig(episode_type, table, hand.tolist(), obj.tolist(),
                       goal.tolist(), seed)


def _steer(hand: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Proportional xyz command with a linear speed taper near the target."""
    delta = target - hand
    dist = float(np.linalg.norm(delta))
    if dist < 1e-12:
        return np.zeros(3)
    cmd = PROP_GAIN * delta
    cap = min(1.0, dist / DECEL_RADIUS)
    speed = float(np.linalg.norm(cmd))
    if speed > cap:
        cmd *= cap / speed
    return cmd


def _clip_hand(hand: np.ndarray, table: float) -> np.ndarray:
    lo, hi = WORKSPACE_XY
    out = hand.copy()
    out[0] = np.clip(out[0], lo, hi)
    out[1] = np.clip(out[1], lo, hi)
    out[2] = np.clip(out[2], table + HAND_Z_RANGE[0], table + HAND_Z_RANGE[1])
    return out


class UnreachableTargetError(RuntimeError):
    """Scripted targets were not all reached within the episode length."""


def generate_episode(scene: SceneConfig, noise_sigma: float = MOTOR_NOISE_SIGMA,
                     length: int = T_STEPS) -> Episode:
    """Run the movement script for one scene.

    Raises UnreachableTargetError when the script does not complete all its
    phases in time (callers resample the scene).
    """
    if scene.episode_type not in EPISODE_TYPES:
        raise ConfigError(f"unknown episode type {scene.episode_type!r}")
    rng = np.random.default_rng(np.random.SeedSequence((scene.seed, 7)))
    hand = np.array(scene.hand_start, dtype=np.float64)
    obj = np.array(scene.object_start, dtype=np.float64)
    goal = np.array(scene.goal_pos, dtype=np.float64)
    fingers = np.full(2, FINGER_OPEN)
    grasped = False
    phase = 0
    stretch_cmd = rng.uniform(-1.0, 1.0, size=4) if scene.episode_type == "stretching" else None

    obs = np.empty((length, 11))
    act = np.empty((length, 4))
    labels = np.empty(length, dtype=np.int64)

    for t in range(length):
        obs[t] = np.concatenate([hand, obj, goal, fingers])
        labels[t] = phase

        if scene.episode_type == "stretching":
            cmd = stretch_cmd.copy()
        elif scene.episode_type == "pointing":
            if phase == 0:
                cmd = np.concatenate([_steer(hand, goal), [0.0]])
            else:
                cmd = np.zeros(4)
        else:  # reach_grasp_transport
            if phase == 0:
                cmd = np.concatenate([_steer(hand, obj), [0.0]])
            elif phase == 1:
                cmd = np.array([0.0, 0.0, 0.0, -1.0])
            elif phase == 2:
                cmd = np.concatenate([_steer(hand, goal), [-1.0]])
            else:
                cmd = np.array([0.0, 0.0, 0.0, -1.0])

        noisy = cmd + rng.normal(0.0, noise_sigma, size=4)
        noisy = np.clip(noisy, -1.0, 1.0)
        act[t] = noisy

        # integrate kinematics
        hand = _clip_hand(hand + SPEED_SCALE * noisy[:3], scene.table_height)
        fingers = np.clip(fingers + GRIP_SCALE * noisy[3], 0.0, FINGER_OPEN)
        if grasped:
            obj = hand.copy()

        # phase transitions, evaluated on the post-step state
        if scene.episode_type == "pointing":
            if phase == 0 and np.linalg.norm(hand - goal) <= ARRIVE_RADIUS:
                phase = 1
        elif scene.episode_type == "reach_grasp_transport":
            if phase == 0 and np.linalg.norm(hand - obj) <= GRASP_RADIUS:
                phase = 1
            elif phase == 1 and np.all(fingers <= OBJECT_HALF_WIDTH):
                grasped = True
                obj = hand.copy()
                phase = 2
            elif phase == 2 and np.linalg.norm(hand - goal) <= ARRIVE_RADIUS:
                phase = 3

    final_phase = len(PHASES[scene.episode_type]) - 1
    if labels[-1] != final_phase:
        raise UnreachableTargetError(
            f"{scene.episode_type} episode (seed {scene.seed}) ended in phase "
            f"{labels[-1]} of {final_phase}")
    return Episode(obs, act, labels, scene)


def generate_valid_episode(episode_type: str, seed_entropy,
                           noise_sigma: float = MOTOR_NOISE_SIGMA,
                           max_attempts: int = 64) -> Episode:
    """Sample scenes until the script completes; deterministic per entropy."""
    entropy = seed_entropy if isinstance(seed_entropy, tuple) else (seed_entropy,)
    for attempt in range(max_attempts):
        scene_seed = int(np.random.SeedSequence((*entropy, attempt)).generate_state(1)[0])
        scene = sample_scene(episode_type, scene_seed)
        try:
            return generate_episode(scene, noise_sigma)
        except UnreachableTargetError:
            continue
    raise UnreachableTargetError(
        f"no completable {episode_type} scene in {max_attempts} attempts")


# ---------------------------------------------------------------------------
# attention masking
# ---------------------------------------------------------------------------

def focus_onehot(entity: str) -> np.ndarray:
    v = np.zeros(3)
    v[ENTITIES.index(entity)] = 1.0
    return v


def unattended_mask(focus: np.ndarray) -> np.ndarray:
    """11-dim 0/1 vector: 1 where sensory noise applies (unattended dims)."""
    mask = np.ones(11)
    entity = ENTITIES[int(np.argmax(focus))]
    mask[list(ENTITY_DIMS[entity])] = 0.0
    return mask


def apply_attention_mask(obs: np.ndarray, focus: np.ndarray, seed,
                         sigma: float = MASK_NOISE_SIGMA) -> np.ndarray:
    """Add i.i.d. Gaussian noise to every dim not owned by the focused entity.

    The attended entity's dims pass through bit-identical. Deterministic per
    seed.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    noise = rng.normal(0.0, sigma, size=obs.shape)
    return obs + noise * unattended_mask(focus)


def sample_attention_sequence(rng: np.random.Generator, length: int = T_STEPS,
                              n_shifts: int = 5) -> np.ndarray:
    """Random one-hot focus sequence with ``n_shifts`` re-draws."""
    att = np.zeros((length, 3))
    focus = int(rng.integers(3))
    shift_times = np.sort(rng.choice(np.arange(1, length), size=n_shifts,
                                     replace=False))
    k = 0
    for t in range(length):
        if k < n_shifts and t == shift_times[k]:
            focus = int(rng.integers(3))
            k += 1
        att[t, focus] = 1.0
    return att


def masked_observations(episode: Episode, mask_seed_entropy,
                        sigma: float = MASK_NOISE_SIGMA) -> np.ndarray:
    """The perceived stream: per-step masking under the episode's attention."""
    if episode.attention is None:
        raise ConfigError("episode carries no attention sequence")
    rng = np.random.default_rng(np.random.SeedSequence(mask_seed_entropy))
    noise = rng.normal(0.0, sigma, size=episode.observations.shape)
    masks = np.stack([unattended_mask(f) for f in episode.attention])
    return episode.observations + noise * masks


# ---------------------------------------------------------------------------
# dataset generation
# ---------------------------------------------------------------------------

def allocate_types(n: int, mix) -> list[str]:
    """Exact largest-remainder allocation of episode types."""
    mix = np.asarray(mix, dtype=np.float64)
    if mix.shape != (3,) or np.any(mix < 0) or abs(mix.sum() - 1.0) > 1e-9:
        raise ConfigError(f"type mix must be 3 non-negative shares summing to 1, got {mix}")
    raw = mix * n
    counts = np.floor(raw).astype(int)
    order = np.argsort(-(raw - counts))
    for i in range(n - counts.sum()):
        counts[order[i % 3]] += 1
    types = []
    for name, c in zip(EPISODE_TYPES, counts):
        types.extend([name] * int(c))
    return types


def generate_dataset(n: int, mix=(1 / 3, 1 / 3, 1 / 3), gaze_mode: bool = False,
                     seed: int = 0, noise_sigma: float = MOTOR_NOISE_SIGMA) -> list[Episode]:
    """n scripted episodes with the given type mix, deterministic per seed."""
    if n < 1:
        raise ConfigError("dataset size must be >= 1")
    types = allocate_types(n, mix)
    order_rng = np.random.default_rng(np.random.SeedSequence((seed, 11)))
    order_rng.shuffle(types)
    episodes = []
    for i, etype in enumerate(types):
        ep = generate_valid_episode(etype, (seed, 13, i), noise_sigma)
        if gaze_mode:
            att_rng = np.random.default_rng(np.random.SeedSequence((seed, 17, i)))
            ep.attention = sample_attention_sequence(att_rng, ep.length)
        episodes.append(ep)
    return episodes
