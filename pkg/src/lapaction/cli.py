"""Command-line pipeline: validate, extract-clips, balance, train, evaluate, infer, report.

Every subcommand reads one JSON experiment config (plus optional dotted-path
overrides), writes its artifacts under ``<output_dir>/<subcommand>/``, and
echoes the fully resolved config into that directory so any run can be
reproduced from its own artifacts.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .actions import ActionLabel, parse_action
from .augment import materialize, plan_balance, write_plan
from .dataset import ClipDataset, build_one_vs_rest, clip_from_json, clip_to_json, extract_clips, load_manifest
from .errors import (
    ClipTooShortError,
    ConfigurationError,
    EmptyClassError,
    EmptyEvaluationError,
    FrameStoreError,
    InvertedImbalanceError,
    LapActionError,
    ManifestError,
    ReportSchemaError,
    UnassignedVideoError,
    VideoTooShortError,
)
from .evaluator import (
    ReportRow,
    evaluate_clips,
    read_metrics_csv,
    render_report,
    sliding_window_infer,
    write_metrics_csv,
    write_timelines,
)
from .experiment import ExperimentConfig, load_experiment
from .frames import build_stores, validate_frame_store
from .network.checkpoint import load_checkpoint
from .trainer import train_all
from .seeding import derive_seed

SUBCOMMANDS = ("validate", "extract-clips", "balance", "train", "evaluate", "infer", "report")

_ERROR_CATEGORIES = {
    ManifestError: "dataset",
    FrameStoreError: "dataset",
    EmptyClassError: "dataset",
    UnassignedVideoError: "dataset",
    InvertedImbalanceError: "augment",
    ClipTooShortError: "sampler",
    EmptyEvaluationError: "evaluator",
    ReportSchemaError: "evaluator",
    VideoTooShortError: "evaluator",
    ConfigurationError: "config",
}


def _category(exc: LapActionError) -> str:
    for klass, name in _ERROR_CATEGORIES.items():
        if isinstance(exc, klass):
            return name
    return "pipeline"


def _run_dir(config: ExperimentConfig, subcommand: str) -> Path:
    run_dir = config.output_dir / subcommand
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "resolved_config.json").write_text(
        json.dumps(config.to_json(), indent=2, sort_keys=True) + "\n"
    )
    return run_dir


def _load_manifests(config: ExperimentConfig):
    return [load_manifest(path) for path in config.dataset.manifests]


def _dataset_dir(config: ExperimentConfig, action: ActionLabel) -> Path:
    return config.output_dir / "balance" / action.value


def _write_dataset(path: Path, dataset: ClipDataset) -> None:
    payload = {
        "target_action": dataset.target_action.value,
        "clips": [
            {**clip_to_json(clip), "split": dataset.split[clip.clip_id], "binary": binary}
            for pool, binary in ((dataset.target_clips, 1), (dataset.rest_clips, 0))
            for clip in pool
        ],
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _read_dataset(path: Path) -> ClipDataset:
    if not path.is_file():
        raise FrameStoreError(f"dataset file not found: {path}; run the balance step first")
    payload = json.loads(path.read_text())
    dataset = ClipDataset(target_action=parse_action(payload["target_action"]))
    for entry in payload["clips"]:
        clip = clip_from_json(entry)
        (dataset.target_clips if entry["binary"] == 1 else dataset.rest_clips).append(clip)
        dataset.split[clip.clip_id] = entry["split"]
    return dataset


def cmd_validate(config: ExperimentConfig) -> int:
    _run_dir(config, "validate")
    manifests = _load_manifests(config)
    for manifest in manifests:
        validate_frame_store(manifest, frame_size=config.dataset.frame_size)
    known = {m.video_id for m in manifests}
    declared = set(config.dataset.train_videos) | set(config.dataset.test_videos)
    missing = declared - known
    if missing:
        raise ConfigurationError(f"dataset.train_videos/test_videos: unknown videos {sorted(missing)}")
    print(f"validate: {len(manifests)} manifests ok, frame stores complete")
    return 0


def cmd_extract_clips(config: ExperimentConfig) -> int:
    run_dir = _run_dir(config, "extract-clips")
    manifests = _load_manifests(config)
    clips = []
    for manifest in manifests:
        clips.extend(
            extract_clips(
                manifest,
                clip_len=config.dataset.clip_len,
                min_clip_frames=config.dataset.min_clip_frames,
                max_clip_frames=config.dataset.max_clip_frames,
            )
        )
    out_path = run_dir / "clips.json"
    out_path.write_text(
        json.dumps({"clips": [clip_to_json(c) for c in clips]}, indent=2, sort_keys=True) + "\n"
    )
    by_label = {}
    for clip in clips:
        by_label[clip.label.value] = by_label.get(clip.label.value, 0) + 1
    print(f"extract-clips: {len(clips)} clips -> {out_path}")
    for label in sorted(by_label):
        print(f"  {label}: {by_label[label]}")
    return 0


def _load_clips(config: ExperimentConfig):
    clips_path = config.output_dir / "extract-clips" / "clips.json"
    if not clips_path.is_file():
        raise FrameStoreError(f"clips file not found: {clips_path}; run extract-clips first")
    payload = json.loads(clips_path.read_text())
    return [clip_from_json(entry) for entry in payload["clips"]]


def cmd_balance(config: ExperimentConfig) -> int:
    _run_dir(config, "balance")
    clips = _load_clips(config)
    manifests = _load_manifests(config)
    stores = build_stores(manifests)
    for action in config.actions:
        dataset = build_one_vs_rest(
            clips,
            action,
            train_videos=set(config.dataset.train_videos),
            test_videos=set(config.dataset.test_videos),
            validation_fraction=config.dataset.validation_fraction,
            rng_seed=config.seed,
        )
        train_pairs = dataset.clips_in("train")
        target_train = [c for c, y in train_pairs if y == 1]
        rest_count = sum(1 for _, y in train_pairs if y == 0)
        plan = plan_balance(
            target_train,
            rest_count,
            spec=config.augmentation,
            rng_seed=derive_seed(config.seed, "balance", action.value),
        )
        augmented = materialize(plan, stores)
        dataset.add_augmented(augmented)
        action_dir = _dataset_dir(config, action)
        action_dir.mkdir(parents=True, exist_ok=True)
        write_plan(plan, action_dir / "plan.jsonl")
        _write_dataset(action_dir / "dataset.json", dataset)
        print(
            f"balance[{action.value}]: {len(target_train)} target + {len(plan.entries)} "
            f"augmented = {rest_count} rest"
        )
    return 0


def cmd_train(config: ExperimentConfig) -> int:
    run_dir = _run_dir(config, "train")
    manifests = _load_manifests(config)
    stores = build_stores(manifests)
    datasets = {
        action: _read_dataset(_dataset_dir(config, action) / "dataset.json")
        for action in config.actions
    }
    exit_code = 0
    for kind in config.heads:
        head = config.head_config(kind)
        result = train_all(
            datasets,
            stores,
            config.backbone,
            head,
            config.train,
            sequence_length=config.sequence_length,
            out_dir=run_dir / kind,
        )
        for action, res in result.results.items():
            print(
                f"train[{kind}/{action.value}]: best epoch {res.best_epoch}, "
                f"val loss {res.best_val_loss:.4f} -> {res.checkpoint_path}"
            )
        for action, message in result.failures.items():
            print(f"train[{kind}/{action.value}] FAILED: {message}", file=sys.stderr)
            exit_code = 1
    return exit_code


def cmd_evaluate(config: ExperimentConfig) -> int:
    run_dir = _run_dir(config, "evaluate")
    manifests = _load_manifests(config)
    stores = build_stores(manifests)
    rows = []
    for kind in config.heads:
        for action in config.actions:
            dataset = _read_dataset(_dataset_dir(config, action) / "dataset.json")
            checkpoint_path = config.output_dir / "train" / kind / action.value / "checkpoint.npz"
            checkpoint = load_checkpoint(checkpoint_path)
            counts, metrics = evaluate_clips(
                dataset.clips_in("test"),
                stores,
                checkpoint.backbone,
                checkpoint.head,
                checkpoint.params,
                sequence_length=config.sequence_length,
            )
            rows.append(ReportRow(config.backbone.kind, kind, action, metrics))
            print(
                f"evaluate[{kind}/{action.value}]: accuracy {metrics.accuracy:.4f} "
                f"f1 {metrics.f1:.4f} (tp={counts.tp} fp={counts.fp} fn={counts.fn} tn={counts.tn})"
            )
    out_path = run_dir / "metrics.csv"
    write_metrics_csv(out_path, rows)
    print(f"evaluate: wrote {out_path}")
    return 0


def cmd_infer(config: ExperimentConfig) -> int:
    run_dir = _run_dir(config, "infer")
    manifests = _load_manifests(config)
    stores = build_stores(manifests)
    kind = config.infer.head or config.heads[0]
    models = {}
    for action in config.actions:
        checkpoint = load_checkpoint(
            config.output_dir / "train" / kind / action.value / "checkpoint.npz"
        )
        models[action] = (checkpoint.params, checkpoint.backbone, checkpoint.head)
    video_ids = config.infer.videos or config.dataset.test_videos
    timelines = []
    for manifest in manifests:
        if manifest.video_id not in video_ids:
            continue
        timelines.extend(
            sliding_window_infer(
                manifest,
                models,
                stores,
                window_len=config.infer.window_len,
                stride=config.infer.stride,
                sequence_length=config.sequence_length,
            )
        )
    out_path = run_dir / "timelines.csv"
    write_timelines(out_path, timelines)
    print(f"infer: {len(timelines)} timelines -> {out_path}")
    return 0


def cmd_report(config: ExperimentConfig) -> int:
    run_dir = _run_dir(config, "report")
    inputs = config.report_inputs or [config.output_dir / "evaluate" / "metrics.csv"]
    rows = []
    for path in inputs:
        if not path.is_file():
            raise ReportSchemaError(f"metrics file not found: {path}; run evaluate first")
        rows.extend(read_metrics_csv(path))
    outputs = render_report(rows, run_dir)
    for name, path in outputs.items():
        print(f"report: {name} -> {path}")
    return 0


_HANDLERS = {
    "validate": cmd_validate,
    "extract-clips": cmd_extract_clips,
    "balance": cmd_balance,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "infer": cmd_infer,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lapaction",
        description="Surgical action recognition pipeline over per-frame video stores.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        cmd = sub.add_parser(name, help=f"run the {name} stage")
        cmd.add_argument("--config", required=True, help="experiment config JSON")
        cmd.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY.PATH=VALUE",
            help="override a config value (repeatable)",
        )
        cmd.add_argument("--actions", help="comma-separated subset of target actions")
        cmd.add_argument("--seed", type=int, help="override the experiment seed")
        cmd.add_argument("--out", help="override the output directory")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_experiment(
            args.config,
            overrides=args.set,
            actions=args.actions,
            seed=args.seed,
            out=args.out,
        )
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        return _HANDLERS[args.subcommand](config)
    except LapActionError as exc:
        print(f"{args.subcommand} error [{_category(exc)}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
