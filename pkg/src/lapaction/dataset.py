"""Video manifests, temporal annotations, clip extraction, and one-vs-rest splits.

A manifest describes one surgery video as a directory of per-frame images plus
a list of expert-annotated action intervals. Clips are fixed-length windows
tiled inside a single interval; they never straddle annotation boundaries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .actions import ActionLabel, parse_action
from .errors import (
    EmptyClassError,
    FrameStoreError,
    IntervalOverlapError,
    ManifestError,
    ParameterError,
    UnassignedVideoError,
)
from .seeding import derive_seed

if TYPE_CHECKING:
    from .augment import AugmentationRecord

# 2-3 s at 25 fps
MIN_CLIP_FRAMES = 50
MAX_CLIP_FRAMES = 75
DEFAULT_FPS = 25.0

SPLITS = ("train", "validation", "test")


@dataclass(frozen=True)
class AnnotatedInterval:
    """Half-open frame range [start_frame, end_frame) with a single label."""

    label: ActionLabel
    start_frame: int
    end_frame: int

    def __post_init__(self):
        if self.start_frame < 0:
            raise ManifestError(f"interval {self.label}: start_frame {self.start_frame} < 0")
        if self.end_frame - self.start_frame < 1:
            raise ManifestError(
                f"interval {self.label}: end_frame {self.end_frame} must exceed "
                f"start_frame {self.start_frame}"
            )

    @property
    def length(self) -> int:
        return self.end_frame - self.start_frame


@dataclass(frozen=True)
class VideoManifest:
    video_id: str
    fps: float
    frame_count: int
    frame_dir: Path
    intervals: tuple[AnnotatedInterval, ...]

    def __post_init__(self):
        if self.fps <= 0:
            raise ManifestError(f"video {self.video_id}: fps must be positive, got {self.fps}")
        if self.frame_count < 0:
            raise ManifestError(f"video {self.video_id}: negative frame_count {self.frame_count}")
        prev = None
        for iv in self.intervals:
            if iv.end_frame > self.frame_count:
                raise ManifestError(
                    f"video {self.video_id}: interval {iv.label} ends at frame "
                    f"{iv.end_frame}, beyond frame_count {self.frame_count}"
                )
            if prev is not None:
                if iv.start_frame < prev.start_frame:
                    raise ManifestError(
                        f"video {self.video_id}: intervals not sorted by start_frame"
                    )
                if iv.start_frame < prev.end_frame:
                    lo, hi = iv.start_frame, min(prev.end_frame, iv.end_frame)
                    raise IntervalOverlapError(
                        f"video {self.video_id}: intervals {prev.label} and {iv.label} "
                        f"overlap on frames {lo}-{hi}"
                    )
            prev = iv


@dataclass(frozen=True)
class Clip:
    """A contiguous single-label window of frames, with augmentation provenance."""

    video_id: str
    label: ActionLabel
    start_frame: int
    length: int
    augmentation: "AugmentationRecord | None" = None

    @property
    def clip_id(self) -> str:
        base = f"{self.video_id}_{self.label.value}_{self.start_frame:06d}_{self.length:03d}"
        if self.augmentation is not None:
            rec = self.augmentation
            base += f"_aug_{rec.technique}_{rec.rng_seed:016x}"
        return base

    @property
    def end_frame(self) -> int:
        return self.start_frame + self.length


def clip_to_json(clip: Clip) -> dict:
    out = {
        "video_id": clip.video_id,
        "label": clip.label.value,
        "start_frame": clip.start_frame,
        "length": clip.length,
    }
    if clip.augmentation is not None:
        rec = clip.augmentation
        out["augmentation"] = {
            "technique": rec.technique,
            "resolved_parameters": dict(rec.resolved_parameters),
            "rng_seed": rec.rng_seed,
        }
    return out


def clip_from_json(obj: dict) -> Clip:
    from .augment import AugmentationRecord

    aug = None
    if obj.get("augmentation") is not None:
        raw = obj["augmentation"]
        aug = AugmentationRecord(
            technique=raw["technique"],
            resolved_parameters=dict(raw["resolved_parameters"]),
            rng_seed=int(raw["rng_seed"]),
        )
    return Clip(
        video_id=obj["video_id"],
        label=parse_action(obj["label"]),
        start_frame=int(obj["start_frame"]),
        length=int(obj["length"]),
        augmentation=aug,
    )


def load_manifest(path: str | Path) -> VideoManifest:
    """Parse and validate a JSON video manifest.

    ``frame_dir`` is resolved relative to the manifest's own directory and
    must exist. Intervals are sorted by start frame, then checked for overlap.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot parse manifest {path}: {exc}") from exc

    def _require(key, kind):
        if key not in raw:
            raise ManifestError(f"manifest {path}: missing field {key!r}")
        value = raw[key]
        if not isinstance(value, kind):
            raise ManifestError(
                f"manifest {path}: field {key!r} has type {type(value).__name__}"
            )
        return value

    video_id = _require("video_id", str)
    fps = float(_require("fps", (int, float)))
    frame_count = _require("frame_count", int)
    frame_dir = Path(_require("frame_dir", str))
    if not frame_dir.is_absolute():
        frame_dir = path.parent / frame_dir
    raw_intervals = _require("intervals", list)

    intervals = []
    for idx, item in enumerate(raw_intervals):
        if not isinstance(item, dict):
            raise ManifestError(f"manifest {path}: intervals[{idx}] is not an object")
        try:
            label = parse_action(item["label"])
            iv = AnnotatedInterval(label, int(item["start_frame"]), int(item["end_frame"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"manifest {path}: intervals[{idx}]: {exc}") from exc
        intervals.append(iv)
    intervals.sort(key=lambda iv: iv.start_frame)

    manifest = VideoManifest(
        video_id=video_id,
        fps=fps,
        frame_count=frame_count,
        frame_dir=frame_dir,
        intervals=tuple(intervals),
    )
    if not manifest.frame_dir.is_dir():
        raise FrameStoreError(
            f"video {video_id}: frame_dir does not exist: {manifest.frame_dir}"
        )
    return manifest


def extract_clips(
    manifest: VideoManifest,
    clip_len: int = MIN_CLIP_FRAMES,
    min_clip_frames: int = MIN_CLIP_FRAMES,
    max_clip_frames: int = MAX_CLIP_FRAMES,
) -> list[Clip]:
    """Tile each annotated interval with non-overlapping clips of ``clip_len`` frames.

    Each interval of length L yields floor(L / clip_len) clips starting at the
    interval start; the trailing remainder is discarded so no clip ever mixes
    frames from two annotations.
    """
    if not min_clip_frames <= clip_len <= max_clip_frames:
        raise ParameterError(
            f"clip_len {clip_len} outside allowed range "
            f"[{min_clip_frames}, {max_clip_frames}]"
        )
    clips = []
    for iv in manifest.intervals:
        for k in range(iv.length // clip_len):
            clips.append(
                Clip(
                    video_id=manifest.video_id,
                    label=iv.label,
                    start_frame=iv.start_frame + k * clip_len,
                    length=clip_len,
                )
            )
    return clips


@dataclass
class ClipDataset:
    """Clips partitioned for one binary target-vs-rest task."""

    target_action: ActionLabel
    target_clips: list[Clip] = field(default_factory=list)
    rest_clips: list[Clip] = field(default_factory=list)
    split: dict[str, str] = field(default_factory=dict)  # clip_id -> split name

    def clips_in(self, split_name: str) -> list[tuple[Clip, int]]:
        """All (clip, binary label) pairs assigned to a split; target maps to 1."""
        if split_name not in SPLITS:
            raise ParameterError(f"unknown split {split_name!r}")
        pairs = [(c, 1) for c in self.target_clips if self.split.get(c.clip_id) == split_name]
        pairs += [(c, 0) for c in self.rest_clips if self.split.get(c.clip_id) == split_name]
        return pairs

    def counts(self) -> dict[str, dict[str, int]]:
        out = {}
        for name in SPLITS:
            pairs = self.clips_in(name)
            out[name] = {
                "target": sum(1 for _, y in pairs if y == 1),
                "rest": sum(1 for _, y in pairs if y == 0),
            }
        return out

    def add_augmented(self, clips: Iterable[Clip]) -> None:
        """Attach augmented target clips to the training split."""
        for clip in clips:
            if clip.label is not self.target_action:
                raise ParameterError(
                    f"augmented clip {clip.clip_id} has label {clip.label}, "
                    f"expected target {self.target_action}"
                )
            self.target_clips.append(clip)
            self.split[clip.clip_id] = "train"


def build_one_vs_rest(
    clips: Sequence[Clip],
    target: ActionLabel,
    train_videos: set[str] | frozenset[str],
    test_videos: set[str] | frozenset[str],
    validation_fraction: float = 0.2,
    rng_seed: int = 0,
) -> ClipDataset:
    """Partition clips into a binary target-vs-rest dataset.

    Clips from test videos form the test split (no video ever contributes to
    both training and testing). Clips from train videos are split into
    train/validation with per-class stratification: round(fraction * count)
    clips of each binary class are held out, chosen by a seeded shuffle.
    """
    if target is ActionLabel.OTHER:
        raise ParameterError("target action cannot be the rest catch-all 'other'")
    train_videos, test_videos = set(train_videos), set(test_videos)
    shared = train_videos & test_videos
    if shared:
        raise ParameterError(f"videos assigned to both train and test: {sorted(shared)}")
    if not 0 < validation_fraction < 0.5:
        raise ParameterError(
            f"validation_fraction must lie in (0, 0.5), got {validation_fraction}"
        )

    dataset = ClipDataset(target_action=target)
    for clip in clips:
        if clip.video_id in train_videos:
            pass
        elif clip.video_id in test_videos:
            dataset.split[clip.clip_id] = "test"
        else:
            raise UnassignedVideoError(
                f"clip {clip.clip_id}: video {clip.video_id!r} is in neither the "
                f"train nor the test video set"
            )
        if clip.label is target:
            dataset.target_clips.append(clip)
        else:
            dataset.rest_clips.append(clip)

    for class_name, pool in (("target", dataset.target_clips), ("rest", dataset.rest_clips)):
        train_pool = sorted(
            (c for c in pool if c.video_id in train_videos), key=lambda c: c.clip_id
        )
        if not train_pool:
            raise EmptyClassError(
                f"no {class_name} clips for action {target} in the training videos"
            )
        rng = np.random.default_rng(derive_seed(rng_seed, "split", target, class_name))
        order = rng.permutation(len(train_pool))
        n_val = round(validation_fraction * len(train_pool))
        if len(train_pool) - n_val < 1:
            raise EmptyClassError(
                f"{class_name} class for action {target} has too few clips "
                f"({len(train_pool)}) to hold out a validation set"
            )
        for rank, idx in enumerate(order):
            split_name = "validation" if rank < n_val else "train"
            dataset.split[train_pool[idx].clip_id] = split_name

    return dataset
