"""Five-stage experiment pipeline with per-seed manifests.

Stages (per seed): generate-data, train-fim, build-skip-data, train-skip,
then the evaluations (segmentation + skip semantics, or the gaze protocol
in gaze mode). Every stage records its artifacts in ``manifest.json``;
completed stages are skipped on re-runs, and a failed stage stops the seed
with the failure point recorded.

All randomness flows from named sub-seeds of the per-seed root (data, init,
shuffle, mask, eval, ...), so a (config, seed) pair reproduces its artifacts
byte for byte.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import dataio
from .checkpoint import load_model, save_model
from .config import ExperimentConfig, derive_seeds, rng_for
from .events import build_skip_dataset, extract_boundaries, samples_to_arrays
from .gaze import MODES, UncertaintyConfig, relative_attend_times, run_gaze_episodes
from .model import SensorimotorModel
from .nn import ConfigError
from .scripted import (EPISODE_TYPES, generate_dataset, generate_valid_episode,
                       masked_observations)
from .skipnet import SkipNetwork
from .training import train_fim, train_skip

SEGMENTATION_TOLERANCE = 2          # steps; a boundary within +-2 hits a switch
SKIP_QUERY_STEP = 2                 # the standard early query step


def _seed_int(root_seed: int, purpose: str) -> int:
    return int(derive_seeds(root_seed)[purpose].generate_state(1)[0])


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

class Manifest:
    """Per-seed stage ledger; artifact paths are relative to the seed dir."""

    def __init__(self, path: Path, config_hash: str):
        self.path = Path(path)
        if self.path.exists():
            self.data = json.loads(self.path.read_text())
            if self.data.get("config_hash") != config_hash:
                raise ConfigError(
                    f"{path}: manifest belongs to a different config "
                    f"({self.data.get('config_hash')} != {config_hash})")
        else:
            self.data = {"config_hash": config_hash, "stages": {}}

    def save(self) -> None:
        self.path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")

    def is_done(self, stage: str) -> bool:
        entry = self.data["stages"].get(stage)
        if not entry or entry.get("status") != "done":
            return False
        base = self.path.parent
        return all((base / a).exists() for a in entry.get("artifacts", []))

    def mark_done(self, stage: str, artifacts: list[str]) -> None:
        self.data["stages"][stage] = {"status": "done", "artifacts": artifacts}
        self.save()

    def mark_failed(self, stage: str, error: str) -> None:
        self.data["stages"][stage] = {"status": "failed", "error": error}
        self.save()


# ---------------------------------------------------------------------------
# data plumbing
# ---------------------------------------------------------------------------

def seed_dir(run_dir, seed: int) -> Path:
    return Path(run_dir) / f"seed_{seed}"


def _load_split(cfg: ExperimentConfig, sdir: Path, seed: int):
    """Episodes plus stacked arrays, split 90/10 by generation order.

    In gaze mode the arrays carry the *perceived* (attention-masked) stream
    and the attention one-hots; masking noise is fixed per (seed, episode).
    """
    episodes = dataio.read_episodes(sdir / "dataset.jsonl")
    n_test = max(1, round(len(episodes) * cfg.test_fraction))
    train_eps, test_eps = episodes[:-n_test], episodes[-n_test:]
    mask_seed = _seed_int(seed, "mask")

    def arrays(eps, id_offset):
        obs = np.stack([e.observations for e in eps])
        act = np.stack([e.actions for e in eps])
        att = None
        if cfg.gaze_mode:
            obs = np.stack([
                masked_observations(e, (mask_seed, id_offset + i))
                for i, e in enumerate(eps)])
            att = np.stack([e.attention for e in eps])
        return obs, act, att

    tr = arrays(train_eps, 0)
    te = arrays(test_eps, len(train_eps))
    return episodes, train_eps, test_eps, tr, te


def _build_model(cfg: ExperimentConfig, seed: int) -> SensorimotorModel:
    return SensorimotorModel(rng_for(seed, "init"), cell_type=cfg.cell_type,
                             gaze_mode=cfg.gaze_mode)


def _build_skipnet(cfg: ExperimentConfig, seed: int, model) -> SkipNetwork:
    return SkipNetwork(rng_for(seed, "skip_init"), latent_dim=model.cell.latent_dim,
                       gaze_mode=cfg.gaze_mode)


def _episodes_by_type(episodes):
    by_type = {t: [] for t in EPISODE_TYPES}
    for i, ep in enumerate(episodes):
        by_type[ep.scene.episode_type].append((i, ep))
    return by_type


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------

def stage_generate_data(cfg: ExperimentConfig, seed: int, sdir: Path) -> list[str]:
    episodes = generate_dataset(cfg.n_episodes, cfg.type_mix, cfg.gaze_mode,
                                seed=_seed_int(seed, "data"),
                                noise_sigma=cfg.motor_noise_sigma)
    dataio.write_episodes(sdir / "dataset.jsonl", episodes)
    return ["dataset.jsonl"]


def _gaze_stage_epochs(cfg: ExperimentConfig) -> list[int]:
    """Developmental checkpoint epochs: 0 (untrained) through max_epochs."""
    if cfg.gaze_stages < 2:
        raise ConfigError("gaze_stages must be >= 2")
    marks = np.linspace(0, cfg.max_epochs, cfg.gaze_stages)
    return sorted(set(int(round(m)) for m in marks))


def stage_train_fim(cfg: ExperimentConfig, seed: int, sdir: Path) -> list[str]:
    _, _, _, (tr_obs, tr_act, tr_att), (te_obs, te_act, te_att) = \
        _load_split(cfg, sdir, seed)
    model = _build_model(cfg, seed)
    artifacts = []

    callback = None
    if cfg.gaze_mode:
        stage_epochs = set(_gaze_stage_epochs(cfg))

        def callback(epoch, m):
            if epoch in stage_epochs:
                name = f"fim_epoch_{epoch:04d}.ckpt"
                save_model(sdir / name, m)
                artifacts.append(name)

    # gaze mode trains for the full budget so the developmental stages are
    # comparable across seeds; otherwise stop on the held-out plateau
    patience = cfg.max_epochs if cfg.gaze_mode else cfg.patience
    opt, curves = train_fim(
        model, tr_obs, tr_act, te_obs, te_act, tr_att, te_att,
        lam=cfg.sparsity_lambda, beta=cfg.beta, lr=cfg.lr_model,
        adam_eps=cfg.adam_eps, clip_norm=cfg.clip_norm,
        batch_size=cfg.batch_size, max_epochs=cfg.max_epochs,
        patience=patience, shuffle_rng=rng_for(seed, "shuffle"),
        epoch_callback=callback)

    save_model(sdir / "fim.ckpt", model, opt)
    artifacts.append("fim.ckpt")
    dataio.write_csv(sdir / "curves.csv",
                     ["epoch", "obs_mse", "act_mse", "gate_open_rate",
                      "nll_obs", "nll_act"],
                     [[c["epoch"], c["obs_mse"], c["act_mse"],
                       c["gate_open_rate"], c["nll_obs"], c["nll_act"]]
                      for c in curves])
    artifacts.append("curves.csv")
    return artifacts


def stage_build_skip_data(cfg: ExperimentConfig, seed: int, sdir: Path) -> list[str]:
    episodes, train_eps, _, (tr_obs, tr_act, tr_att), _ = _load_split(cfg, sdir, seed)
    model = _build_model(cfg, seed)
    load_model(sdir / "fim.ckpt", model)
    samples = build_skip_dataset(model, tr_obs, tr_act, tr_att,
                                 episode_ids=list(range(len(train_eps))))
    dataio.write_skip_samples(sdir / "skip_data.jsonl", samples)
    return ["skip_data.jsonl"]


def _skip_eval_sets(cfg, test_eps, te_arrays):
    """Per-type test arrays for distance evaluations."""
    te_obs, te_act, te_att = te_arrays
    by_type = _episodes_by_type(test_eps)
    sets = {}
    for etype, pairs in by_type.items():
        if not pairs:
            continue
        idx = np.array([i for i, _ in pairs])
        sets[etype] = {
            "obs": te_obs[idx], "act": te_act[idx],
            "att": None if te_att is None else te_att[idx],
            "episodes": [ep for _, ep in pairs],
        }
    return sets


def skip_distance_rows(model, skipnet, eval_sets, query_t: int = SKIP_QUERY_STEP):
    """Mean distance of the skip-predicted hand position to each entity's
    current position at the query step, per episode type."""
    rows = {}
    for etype, data in eval_sets.items():
        r = model.rollout(data["obs"], data["act"], data["att"])
        o_q = data["obs"][:, query_t - 1]
        h_q = r.latents[:, query_t - 1]
        focus = None if data["att"] is None else data["att"][:, query_t - 1]
        mean, _ = skipnet.predict(o_q, h_q, focus)
        pred_hand = mean[:, 0:3]
        dists = {}
        for entity, sl in (("hand", slice(0, 3)), ("object", slice(3, 6)),
                           ("goal", slice(6, 9))):
            dists[entity] = float(np.linalg.norm(pred_hand - o_q[:, sl], axis=1).mean())
        rows[etype] = dists
    return rows


def skip_transport_check(model, skipnet, eval_sets):
    """Query at each reach episode's grasp-complete step: distance of the
    skip-predicted *object* position to the goal vs. to where the object is."""
    data = eval_sets.get("reach_grasp_transport")
    if data is None:
        return None
    labels = np.stack([ep.phase_labels for ep in data["episodes"]])
    r = model.rollout(data["obs"], data["act"], data["att"])
    d_goal, d_current = [], []
    for b in range(labels.shape[0]):
        steps = np.nonzero(labels[b] == 2)[0]
        if steps.size == 0 or steps[0] + 1 >= labels.shape[1]:
            continue
        t = int(steps[0]) + 1            # 1-based grasp-complete step
        o_q = data["obs"][b, t - 1]
        focus = None if data["att"] is None else data["att"][b, t - 1]
        mean, _ = skipnet.predict(o_q[None], r.latents[b, t - 1][None],
                                  None if focus is None else focus[None])
        pred_obj = mean[0, 3:6]
        d_goal.append(np.linalg.norm(pred_obj - o_q[6:9]))
        d_current.append(np.linalg.norm(pred_obj - o_q[3:6]))
    if not d_goal:
        return None
    return float(np.mean(d_goal)), float(np.mean(d_current))


def stage_train_skip(cfg: ExperimentConfig, seed: int, sdir: Path) -> list[str]:
    episodes, train_eps, test_eps, tr_arrays, te_arrays = _load_split(cfg, sdir, seed)
    model = _build_model(cfg, seed)
    load_model(sdir / "fim.ckpt", model)
    skipnet = _build_skipnet(cfg, seed, model)

    samples = dataio.read_skip_samples(sdir / "skip_data.jsonl")
    x, y = samples_to_arrays(samples, cfg.gaze_mode)
    test_samples = build_skip_dataset(model, *te_arrays,
                                      episode_ids=list(range(len(test_eps))))
    tx, ty = samples_to_arrays(test_samples, cfg.gaze_mode)

    eval_sets = _skip_eval_sets(cfg, test_eps, te_arrays)
    distance_rows = []

    def callback(epoch, net):
        for etype, dists in skip_distance_rows(model, net, eval_sets).items():
            distance_rows.append([epoch, etype, dists["hand"], dists["object"],
                                  dists["goal"]])

    opt, curves = train_skip(
        skipnet, x, y, tx, ty, beta=cfg.beta, lr=cfg.lr_skip,
        adam_eps=cfg.adam_eps, clip_norm=cfg.clip_norm,
        batch_size=cfg.batch_size, max_epochs=cfg.skip_max_epochs,
        patience=cfg.skip_patience, shuffle_rng=rng_for(seed, "skip_shuffle"),
        epoch_callback=callback)

    save_model(sdir / "skip.ckpt", skipnet, opt)
    dataio.write_csv(sdir / "skip_curves.csv", ["epoch", "test_nll", "test_mse"],
                     [[c["epoch"], c["test_nll"], c["test_mse"]] for c in curves])
    dataio.write_csv(sdir / "skip_eval.csv",
                     ["epoch", "episode_type", "d_hand", "d_object", "d_goal"],
                     distance_rows)
    return ["skip.ckpt", "skip_curves.csv", "skip_eval.csv"]


def segmentation_report(gates: np.ndarray, labels: np.ndarray,
                        tolerance: int = SEGMENTATION_TOLERANCE) -> dict:
    """Align gate-opening steps with ground-truth phase switches.

    A switch is hit when some opening lies within ``tolerance`` steps; an
    opening is precise when it lies near some switch. The terminal-step
    bookkeeping boundary is not counted — only real openings.
    """
    B, T = labels.shape
    n_switches = 0
    n_hits = 0
    n_bounds = 0
    n_precise = 0
    switch_hits = {}
    interior_counts = []
    for b in range(B):
        openings = np.nonzero((gates[b] > 0.0).any(axis=1))[0] + 1
        interior_counts.append(len(openings))
        switches = np.nonzero(labels[b, 1:] != labels[b, :-1])[0] + 2
        n_switches += len(switches)
        n_bounds += len(openings)
        for k, s in enumerate(switches):
            hit = bool(len(openings) and np.min(np.abs(openings - s)) <= tolerance)
            n_hits += hit
            stat = switch_hits.setdefault(k + 1, [0, 0])
            stat[0] += hit
            stat[1] += 1
        for o in openings:
            if len(switches) and np.min(np.abs(switches - o)) <= tolerance:
                n_precise += 1
    report = {
        "n_episodes": float(B),
        "recall": n_hits / n_switches if n_switches else 0.0,
        "precision": n_precise / n_bounds if n_bounds else 0.0,
        "mean_interior_boundaries": float(np.mean(interior_counts)),
    }
    for k, (h, n) in sorted(switch_hits.items()):
        report[f"hit_rate_switch_{k}"] = h / n
    return report


def stage_eval_segmentation(cfg: ExperimentConfig, seed: int, sdir: Path) -> list[str]:
    episodes, train_eps, test_eps, _, te_arrays = _load_split(cfg, sdir, seed)
    model = _build_model(cfg, seed)
    load_model(sdir / "fim.ckpt", model)
    eval_sets = _skip_eval_sets(cfg, test_eps, te_arrays)
    rows = []
    for etype in EPISODE_TYPES:
        data = eval_sets.get(etype)
        if data is None:
            continue
        r = model.rollout(data["obs"], data["act"], data["att"])
        labels = np.stack([ep.phase_labels for ep in data["episodes"]])
        for metric, value in segmentation_report(r.gates, labels).items():
            rows.append([etype, metric, float(value)])
    dataio.write_csv(sdir / "segmentation.csv", ["episode_type", "metric", "value"], rows)
    return ["segmentation.csv"]


def stage_eval_skip(cfg: ExperimentConfig, seed: int, sdir: Path) -> list[str]:
    episodes, train_eps, test_eps, _, te_arrays = _load_split(cfg, sdir, seed)
    model = _build_model(cfg, seed)
    load_model(sdir / "fim.ckpt", model)
    skipnet = _build_skipnet(cfg, seed, model)
    load_model(sdir / "skip.ckpt", skipnet)
    eval_sets = _skip_eval_sets(cfg, test_eps, te_arrays)

    rows = []
    for etype, dists in skip_distance_rows(model, skipnet, eval_sets).items():
        for entity in ("hand", "object", "goal"):
            rows.append([etype, f"d_{entity}", dists[entity]])
    transport = skip_transport_check(model, skipnet, eval_sets)
    if transport is not None:
        rows.append(["reach_grasp_transport", "transport_pred_object_to_goal", transport[0]])
        rows.append(["reach_grasp_transport", "transport_pred_object_to_current", transport[1]])
    dataio.write_csv(sdir / "skip_summary.csv", ["episode_type", "metric", "value"], rows)

    # per-episode dump of the skip prediction at the standard query step
    dump = []
    for etype, data in eval_sets.items():
        r = model.rollout(data["obs"], data["act"], data["att"])
        o_q = data["obs"][:, SKIP_QUERY_STEP - 1]
        h_q = r.latents[:, SKIP_QUERY_STEP - 1]
        focus = None if data["att"] is None else data["att"][:, SKIP_QUERY_STEP - 1]
        mean, var = skipnet.predict(o_q, h_q, focus)
        for b in range(o_q.shape[0]):
            dump.append([etype, b, SKIP_QUERY_STEP,
                         *[float(v) for v in mean[b]],
                         *[float(v) for v in o_q[b]]])
    dataio.write_csv(
        sdir / "skip_predictions.csv",
        ["episode_type", "episode", "query_t",
         *[f"pred_{i}" for i in range(11)], *[f"obs_{i}" for i in range(11)]],
        dump)
    return ["skip_summary.csv", "skip_predictions.csv"]


# --- gaze mode -------------------------------------------------------------

def _gaze_eval_episodes(cfg: ExperimentConfig, seed: int, etype: str):
    eval_seed = _seed_int(seed, "eval")
    eps = [generate_valid_episode(etype, (eval_seed, 101, i), cfg.motor_noise_sigma)
           for i in range(cfg.gaze_eval_episodes)]
    obs = np.stack([e.observations for e in eps])
    first_actions = np.stack([e.actions[0] for e in eps])
    switches = np.array([e.first_phase_switch() for e in eps])
    return obs, first_actions, switches


def stage_train_skip_gaze(cfg: ExperimentConfig, seed: int, sdir: Path) -> list[str]:
    """Train one skip network per developmental stage on its frozen model.

    Skip training experience scales with the stage (stage 0 is untrained),
    so each stage pairs a model and a skip network with matched experience.
    """
    episodes, train_eps, test_eps, tr_arrays, te_arrays = _load_split(cfg, sdir, seed)
    stage_epochs = _gaze_stage_epochs(cfg)
    artifacts = []
    n_stages = len(stage_epochs)
    for k, epoch in enumerate(stage_epochs):
        model = _build_model(cfg, seed)
        load_model(sdir / f"fim_epoch_{epoch:04d}.ckpt", model)
        skipnet = _build_skipnet(cfg, seed, model)
        n_epochs = round(cfg.skip_max_epochs * k / (n_stages - 1))
        if n_epochs > 0:
            samples = build_skip_dataset(model, *tr_arrays)
            x, y = samples_to_arrays(samples, cfg.gaze_mode)
            test_samples = build_skip_dataset(model, *te_arrays)
            tx, ty = samples_to_arrays(test_samples, cfg.gaze_mode)
            train_skip(skipnet, x, y, tx, ty, beta=cfg.beta, lr=cfg.lr_skip,
                       adam_eps=cfg.adam_eps, clip_norm=cfg.clip_norm,
                       batch_size=cfg.batch_size, max_epochs=n_epochs,
                       patience=n_epochs, shuffle_rng=rng_for(seed, "skip_shuffle"))
        name = f"skip_epoch_{epoch:04d}.ckpt"
        save_model(sdir / name, skipnet)
        artifacts.append(name)
    return artifacts


GAZE_EVAL_TYPES = ("reach_grasp_transport", "pointing")


def stage_eval_gaze(cfg: ExperimentConfig, seed: int, sdir: Path) -> list[str]:
    stage_epochs = _gaze_stage_epochs(cfg)
    eval_seed = _seed_int(seed, "eval")
    dims = {"hand": (0, 1, 2), "object": (3, 4, 5), "goal": (6, 7, 8)}
    relevant = dims[cfg.gaze_relevant_entity]
    artifacts = []
    per_file_rows = {(mode, etype): [] for mode in MODES for etype in GAZE_EVAL_TYPES}
    eval_data = {etype: _gaze_eval_episodes(cfg, seed, etype)
                 for etype in GAZE_EVAL_TYPES}
    for epoch in stage_epochs:
        model = _build_model(cfg, seed)
        load_model(sdir / f"fim_epoch_{epoch:04d}.ckpt", model)
        skipnet = _build_skipnet(cfg, seed, model)
        load_model(sdir / f"skip_epoch_{epoch:04d}.ckpt", skipnet)
        for mode in MODES:
            ucfg = UncertaintyConfig(relevant_dims=relevant, mode=mode)
            for etype in GAZE_EVAL_TYPES:
                obs, first_actions, switches = eval_data[etype]
                traces = run_gaze_episodes(model, skipnet, obs, first_actions,
                                           switches, ucfg, (eval_seed, 211, epoch))
                for entity, (mean, stderr) in relative_attend_times(traces).items():
                    per_file_rows[(mode, etype)].append([epoch, entity, mean, stderr])
    for (mode, etype), rows in per_file_rows.items():
        name = f"gaze_{mode}_{etype}.csv"
        dataio.write_csv(sdir / name,
                         ["checkpoint", "entity", "mean_rel_attend_time", "stderr"],
                         rows)
        artifacts.append(name)
    return artifacts


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------

def stage_list(cfg: ExperimentConfig) -> list[tuple[str, callable]]:
    if cfg.gaze_mode:
        return [
            ("generate-data", stage_generate_data),
            ("train-fim", stage_train_fim),
            ("train-skip", stage_train_skip_gaze),
            ("eval-gaze", stage_eval_gaze),
        ]
    return [
        ("generate-data", stage_generate_data),
        ("train-fim", stage_train_fim),
        ("build-skip-data", stage_build_skip_data),
        ("train-skip", stage_train_skip),
        ("eval-segmentation", stage_eval_segmentation),
        ("eval-skip", stage_eval_skip),
    ]


def run_seed(cfg: ExperimentConfig, seed: int) -> Manifest:
    sdir = dataio.ensure_dir(seed_dir(cfg.out_dir, seed))
    manifest = Manifest(sdir / "manifest.json", cfg.content_hash())
    for name, fn in stage_list(cfg):
        if manifest.is_done(name):
            continue
        try:
            artifacts = fn(cfg, seed, sdir)
        except Exception as exc:
            manifest.mark_failed(name, f"{type(exc).__name__}: {exc}")
            raise
        manifest.mark_done(name, artifacts)
    return manifest


def run_pipeline(cfg: ExperimentConfig, jobs: int = 1) -> list[Manifest]:
    """Run every stage for every seed, then aggregate across seeds."""
    run_dir = dataio.ensure_dir(cfg.out_dir)
    config_path = run_dir / "config.json"
    if config_path.exists():
        existing = ExperimentConfig.load(config_path)
        if existing.content_hash() != cfg.content_hash():
            raise ConfigError(f"{config_path} holds a different config; "
                              "use a fresh output directory")
    else:
        cfg.save(config_path)
    if jobs > 1 and len(cfg.seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run_seed, cfg, s) for s in cfg.seeds]
            manifests = [f.result() for f in futures]
    else:
        manifests = [run_seed(cfg, s) for s in cfg.seeds]
    export_metrics(cfg.out_dir)
    return manifests


# ---------------------------------------------------------------------------
# cross-seed export
# ---------------------------------------------------------------------------

_KEY_COLUMNS = {
    "curves.csv": ["epoch"],
    "skip_curves.csv": ["epoch"],
    "skip_eval.csv": ["epoch", "episode_type"],
    "segmentation.csv": ["episode_type", "metric"],
    "skip_summary.csv": ["episode_type", "metric"],
}


def _key_columns_for(name: str) -> list[str]:
    if name.startswith("gaze_"):
        return ["checkpoint", "entity"]
    return _KEY_COLUMNS.get(name)


def export_metrics(run_dir) -> list[Path]:
    """Merge per-seed metric CSVs and add mean/std aggregate files."""
    run_dir = Path(run_dir)
    seed_dirs = sorted(run_dir.glob("seed_*"),
                       key=lambda p: int(p.name.split("_")[1]))
    if not seed_dirs:
        raise ConfigError(f"{run_dir}: no seed directories to export")
    names = sorted({p.name for d in seed_dirs for p in d.glob("*.csv")})
    export_dir = dataio.ensure_dir(run_dir / "export")
    written = []
    for name in names:
        keys = _key_columns_for(name)
        if keys is None:
            continue
        header = None
        merged = []
        missing = []
        for d in seed_dirs:
            path = d / name
            if not path.exists():
                missing.append(d.name)
                continue
            h, rows = dataio.read_csv(path)
            header = h
            seed = int(d.name.split("_")[1])
            merged.extend([[seed, *row] for row in rows])
        if header is None:
            continue
        if missing:
            print(f"export-metrics: {name} missing for {missing}, partial export")
        merged_path = export_dir / name.replace(".csv", "_by_seed.csv")
        dataio.write_csv(merged_path, ["seed", *header], merged)
        written.append(merged_path)

        value_cols = [c for c in header if c not in keys]
        key_idx = [header.index(k) for k in keys]
        val_idx = [header.index(c) for c in value_cols]
        groups = {}
        order = []
        for row in merged:
            key = tuple(row[1 + i] for i in key_idx)
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append([float(row[1 + i]) for i in val_idx])
        agg_rows = []
        for key in order:
            vals = np.array(groups[key])
            agg_rows.append([
                *key, vals.shape[0],
                *[x for j in range(vals.shape[1])
                  for x in (float(vals[:, j].mean()),
                            float(vals[:, j].std(ddof=0)))],
            ])
        agg_header = [*keys, "n_seeds",
                      *[f"{c}_{s}" for c in value_cols for s in ("mean", "std")]]
        agg_path = export_dir / name.replace(".csv", "_agg.csv")
        dataio.write_csv(agg_path, agg_header, agg_rows)
        written.append(agg_path)
    return written
