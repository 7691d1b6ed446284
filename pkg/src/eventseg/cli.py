"""Command-line entry points for the experiment pipeline.

Every subcommand maps to one pipeline stage (plus ``run-all`` covering the
whole workflow); exit codes are 0 on success, 1 for input or configuration
errors, 2 for numeric failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import dataio, pipeline
from .config import ExperimentConfig
from .nn import ConfigError, NumericError
from .scripted import generate_dataset


def _load_config(args) -> ExperimentConfig:
    return ExperimentConfig.load(args.config)


def cmd_generate_data(args) -> None:
    mix = tuple(float(m) for m in args.mix.split(","))
    episodes = generate_dataset(args.n, mix, args.gaze, seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    dataio.write_episodes(out, episodes)
    print(f"wrote {len(episodes)} episodes to {out}")


def _run_stage(args, stage_name: str) -> None:
    cfg = _load_config(args)
    for seed in cfg.seeds:
        sdir = dataio.ensure_dir(pipeline.seed_dir(cfg.out_dir, seed))
        manifest = pipeline.Manifest(sdir / "manifest.json", cfg.content_hash())
        stages = dict(pipeline.stage_list(cfg))
        if stage_name not in stages:
            raise ConfigError(
                f"stage {stage_name!r} does not apply to this config "
                f"(gaze_mode={cfg.gaze_mode})")
        if manifest.is_done(stage_name) and not args.force:
            print(f"seed {seed}: {stage_name} already done")
            continue
        artifacts = stages[stage_name](cfg, seed, sdir)
        manifest.mark_done(stage_name, artifacts)
        print(f"seed {seed}: {stage_name} -> {', '.join(artifacts)}")


def cmd_run_all(args) -> None:
    cfg = _load_config(args)
    manifests = pipeline.run_pipeline(cfg, jobs=args.jobs)
    for m in manifests:
        print(f"{m.path.parent.name}: {len(m.data['stages'])} stages done")


def cmd_export_metrics(args) -> None:
    written = pipeline.export_metrics(args.run_dir)
    for p in written:
        print(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eventseg",
        description="Event-segmenting sensorimotor prediction experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-data", help="write a scripted episode dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mix", default="0.3333333333333333,0.3333333333333333,0.3333333333333334",
                   help="comma-separated type shares (reach,point,stretch)")
    p.add_argument("--gaze", action="store_true", help="attach attention sequences")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate_data)

    stage_commands = ["train-fim", "build-skip-data", "train-skip",
                      "eval-segmentation", "eval-skip", "eval-gaze"]
    for name in stage_commands:
        p = sub.add_parser(name, help=f"run the {name} stage for every seed")
        p.add_argument("--config", required=True, help="experiment config JSON")
        p.add_argument("--force", action="store_true",
                       help="re-run even if the manifest marks it done")
        p.set_defaults(func=_make_stage_cmd(name))

    p = sub.add_parser("run-all", help="run every stage for every seed, then export")
    p.add_argument("--config", required=True)
    p.add_argument("--jobs", type=int, default=1, help="parallel seed workers")
    p.set_defaults(func=cmd_run_all)

    p = sub.add_parser("export-metrics", help="aggregate per-seed CSVs")
    p.add_argument("--run-dir", required=True)
    p.set_defaults(func=cmd_export_metrics)
    return parser


def _make_stage_cmd(name):
    def cmd(args):
        _run_stage(args, name)
    return cmd


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
