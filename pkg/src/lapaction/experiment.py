"""Experiment configuration: one JSON file drives every CLI subcommand.

A config names the dataset (manifests plus the train/test video split), the
action list, augmentation and sampler parameters, the architecture grid, and
the training settings. The seed is mandatory; nothing in a run draws entropy
from anywhere else. Dotted-path overrides (``--set train.batch_size=4``)
patch the raw document before validation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from .actions import ActionLabel, parse_action
from .augment import AugmentationSpec
from .errors import ConfigurationError, LapActionError
from .network import HEAD_KINDS, BackboneConfig, HeadConfig
from .trainer import TrainConfig


@dataclass
class DatasetSection:
    manifests: list[Path]
    train_videos: list[str]
    test_videos: list[str]
    validation_fraction: float = 0.2
    clip_len: int = 50
    min_clip_frames: int = 50
    max_clip_frames: int = 75
    frame_size: int | None = 224


@dataclass
class InferSection:
    window_len: int = 50
    stride: int = 25
    head: str | None = None  # defaults to the first head in the grid
    videos: list[str] | None = None  # defaults to the test videos


@dataclass
class ExperimentConfig:
    seed: int
    output_dir: Path
    dataset: DatasetSection
    actions: list[ActionLabel]
    augmentation: AugmentationSpec
    backbone: BackboneConfig
    heads: list[str]
    head_settings: dict[str, Any]
    train: TrainConfig
    infer: InferSection
    sequence_length: int = 20
    report_inputs: list[Path] | None = None

    def head_config(self, kind: str) -> HeadConfig:
        return HeadConfig(kind=kind, **self.head_settings)

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "output_dir": str(self.output_dir),
            "dataset": {
                "manifests": [str(p) for p in self.dataset.manifests],
                "train_videos": self.dataset.train_videos,
                "test_videos": self.dataset.test_videos,
                "validation_fraction": self.dataset.validation_fraction,
                "clip_len": self.dataset.clip_len,
                "min_clip_frames": self.dataset.min_clip_frames,
                "max_clip_frames": self.dataset.max_clip_frames,
                "frame_size": self.dataset.frame_size,
            },
            "actions": [a.value for a in self.actions],
            "augmentation": {
                "gamma": self.augmentation.gamma,
                "blur_sigma": self.augmentation.blur_sigma,
                "brightness_delta": self.augmentation.brightness_delta,
                "saturation_factor": self.augmentation.saturation_factor,
                "flip_probability": self.augmentation.flip_probability,
            },
            "sampler": {"sequence_length": self.sequence_length},
            "backbone": {
                "kind": self.backbone.kind,
                "feature_dim": self.backbone.feature_dim,
                "stages": [list(s) for s in self.backbone.stages],
            },
            "heads": list(self.heads),
            "head": dict(self.head_settings),
            "train": {
                "learning_rate": self.train.learning_rate,
                "adam_beta1": self.train.adam_beta1,
                "adam_beta2": self.train.adam_beta2,
                "adam_epsilon": self.train.adam_epsilon,
                "batch_size": self.train.batch_size,
                "max_epochs": self.train.max_epochs,
                "early_stop_patience": self.train.early_stop_patience,
            },
            "infer": {
                "window_len": self.infer.window_len,
                "stride": self.infer.stride,
                "head": self.infer.head,
                "videos": self.infer.videos,
            },
            "report_inputs": [str(p) for p in self.report_inputs] if self.report_inputs else None,
        }


def apply_overrides(raw: dict, assignments: Sequence[str]) -> dict:
    """Patch the raw config with dotted-path key=value assignments.

    Values parse as JSON when possible (numbers, booleans, lists) and fall
    back to plain strings.
    """
    for assignment in assignments:
        if "=" not in assignment:
            raise ConfigurationError(f"override {assignment!r} is not of the form key.path=value")
        dotted, text = assignment.split("=", 1)
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        node = raw
        keys = dotted.strip().split(".")
        for key in keys[:-1]:
            if not isinstance(node.get(key), dict):
                node[key] = {}
            node = node[key]
        node[keys[-1]] = value
    return raw


def _section(raw: dict, name: str) -> dict:
    value = raw.get(name, {})
    if not isinstance(value, dict):
        raise ConfigurationError(f"{name}: expected an object, got {type(value).__name__}")
    return dict(value)


def resolve_config(raw: dict, base_dir: Path) -> ExperimentConfig:
    """Validate a raw config document; paths resolve relative to ``base_dir``."""

    def fail(path, message):
        raise ConfigurationError(f"{path}: {message}")

    if "seed" not in raw:
        fail("seed", "missing; every run must pin its seed explicitly")
    if not isinstance(raw["seed"], int):
        fail("seed", f"expected an integer, got {raw['seed']!r}")

    if "output_dir" not in raw:
        fail("output_dir", "missing")
    output_dir = Path(raw["output_dir"])
    if not output_dir.is_absolute():
        output_dir = base_dir / output_dir

    ds = _section(raw, "dataset")
    manifests = ds.get("manifests")
    if not manifests:
        fail("dataset.manifests", "at least one manifest is required")
    manifest_paths = []
    for i, entry in enumerate(manifests):
        path = Path(entry)
        if not path.is_absolute():
            path = base_dir / path
        if not path.is_file():
            fail(f"dataset.manifests[{i}]", f"file not found: {path}")
        manifest_paths.append(path)
    for key in ("train_videos", "test_videos"):
        if not isinstance(ds.get(key, None), list):
            fail(f"dataset.{key}", "expected a list of video ids")
    dataset = DatasetSection(
        manifests=manifest_paths,
        train_videos=list(ds["train_videos"]),
        test_videos=list(ds["test_videos"]),
        validation_fraction=float(ds.get("validation_fraction", 0.2)),
        clip_len=int(ds.get("clip_len", 50)),
        min_clip_frames=int(ds.get("min_clip_frames", 50)),
        max_clip_frames=int(ds.get("max_clip_frames", 75)),
        frame_size=ds.get("frame_size", 224),
    )

    raw_actions = raw.get("actions")
    if not raw_actions:
        fail("actions", "at least one target action is required")
    try:
        actions = [parse_action(a) for a in raw_actions]
    except ValueError as exc:
        fail("actions", str(exc))
    if ActionLabel.OTHER in actions:
        fail("actions", "'other' is the rest pool and cannot be a target")

    try:
        augmentation = AugmentationSpec(**_section(raw, "augmentation"))
    except (TypeError, LapActionError) as exc:
        fail("augmentation", str(exc))

    sampler = _section(raw, "sampler")
    sequence_length = int(sampler.get("sequence_length", 20))

    bb = _section(raw, "backbone")
    if "stages" in bb:
        bb["stages"] = tuple(tuple(s) for s in bb["stages"])
    try:
        backbone = BackboneConfig(**bb)
    except (TypeError, LapActionError) as exc:
        fail("backbone", str(exc))

    heads = raw.get("heads", ["lstm"])
    if not heads:
        fail("heads", "the head grid cannot be empty")
    for kind in heads:
        if kind not in HEAD_KINDS:
            fail("heads", f"unknown head kind {kind!r}; expected one of {HEAD_KINDS}")
    head_settings = _section(raw, "head")
    try:
        for kind in heads:
            HeadConfig(kind=kind, **head_settings)
    except (TypeError, LapActionError) as exc:
        fail("head", str(exc))

    tr = _section(raw, "train")
    tr.pop("rng_seed", None)
    try:
        train = TrainConfig(rng_seed=raw["seed"], **tr)
    except (TypeError, LapActionError) as exc:
        fail("train", str(exc))

    inf = _section(raw, "infer")
    infer = InferSection(
        window_len=int(inf.get("window_len", 50)),
        stride=int(inf.get("stride", 25)),
        head=inf.get("head"),
        videos=inf.get("videos"),
    )
    if infer.head is not None and infer.head not in heads:
        fail("infer.head", f"{infer.head!r} is not in the head grid {heads}")

    report_inputs = None
    if raw.get("report_inputs"):
        report_inputs = []
        for entry in raw["report_inputs"]:
            path = Path(entry)
            if not path.is_absolute():
                path = base_dir / path
            report_inputs.append(path)

    return ExperimentConfig(
        seed=raw["seed"],
        output_dir=output_dir,
        dataset=dataset,
        actions=actions,
        augmentation=augmentation,
        backbone=backbone,
        heads=list(heads),
        head_settings=head_settings,
        train=train,
        infer=infer,
        sequence_length=sequence_length,
        report_inputs=report_inputs,
    )


def load_experiment(
    config_path: str | Path,
    overrides: Sequence[str] = (),
    actions: str | None = None,
    seed: int | None = None,
    out: str | None = None,
) -> ExperimentConfig:
    """Read, patch, and validate an experiment config file."""
    config_path = Path(config_path)
    try:
        raw = json.loads(config_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {config_path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError(f"config {config_path} must be a JSON object")
    raw = apply_overrides(raw, list(overrides))
    if actions:
        raw["actions"] = [a.strip() for a in actions.split(",") if a.strip()]
    if seed is not None:
        raw["seed"] = seed
    if out is not None:
        raw["output_dir"] = str(Path(out).resolve())
    return resolve_config(raw, config_path.parent.resolve())
