"""Synthetic moving-dot fixture videos with known action intervals.

Each action maps to a distinct dot motion over a graded background; the
gradient makes the dot's position visible to globally pooled convolutional
features, so motion direction is learnable at desk scale. The generator
writes the same manifest/frame-store layout as real data, letting the whole
pipeline run without any clinical recordings.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .actions import ActionLabel
from .dataset import ClipDataset, VideoManifest, build_one_vs_rest, extract_clips, load_manifest
from .frames import FRAME_NAME, FrameStore, build_stores, save_frame
from .seeding import derive_seed

# Unit motion direction per action; OTHER holds still.
MOTIONS = {
    ActionLabel.ABDOMINAL_ACCESS: (0.0, -1.0),
    ActionLabel.GRASPING_ANATOMY: (0.0, 1.0),
    ActionLabel.KNOT_PUSHING: (-1.0, 0.0),
    ActionLabel.NEEDLE_PULLING: (1.0, 0.0),
    ActionLabel.NEEDLE_PUSHING: (0.7, 0.7),
    ActionLabel.SUCTION: (0.7, -0.7),
    ActionLabel.OTHER: (0.0, 0.0),
}


def _background(size: int) -> np.ndarray:
    ramp = (
        0.10
        + 0.55 * np.linspace(0.0, 1.0, size)[None, :]
        + 0.20 * np.linspace(0.0, 1.0, size)[:, None]
    )
    return np.stack([ramp, 0.9 * ramp, 0.8 * ramp], axis=-1)


def _dot_track(label: ActionLabel, length: int, size: int, dot: int, rng) -> np.ndarray:
    """Per-frame top-left dot positions; the whole track stays in frame."""
    usable = size - dot
    dx, dy = MOTIONS[label]
    track = np.zeros((length, 2))
    for axis, lam in enumerate((dx, dy)):
        if lam > 0:
            start, speed = 0.0, lam * usable / max(length - 1, 1)
        elif lam < 0:
            start, speed = float(usable), lam * usable / max(length - 1, 1)
        else:
            start, speed = float(rng.integers(0, usable + 1)), 0.0
        track[:, axis] = start + speed * np.arange(length)
    return np.clip(np.round(track), 0, usable).astype(int)


def write_video(
    root: str | Path,
    video_id: str,
    interval_specs: Sequence[tuple[ActionLabel, int]],
    size: int = 32,
    fps: float = 25.0,
    seed: int = 0,
) -> Path:
    """Render one synthetic video and its manifest; returns the manifest path."""
    root = Path(root)
    frame_dir = root / video_id
    frame_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(derive_seed(seed, "fixture", video_id))
    background = _background(size)
    dot = max(3, size // 6)

    cursor = 0
    intervals = []
    for label, length in interval_specs:
        track = _dot_track(label, length, size, dot, rng)
        for i in range(length):
            frame = background.copy()
            x, y = track[i]
            frame[y : y + dot, x : x + dot, :] = 1.0
            save_frame(frame_dir / FRAME_NAME.format(cursor + i), frame)
        intervals.append(
            {"label": label.value, "start_frame": cursor, "end_frame": cursor + length}
        )
        cursor += length

    manifest_path = root / f"{video_id}.json"
    manifest_path.write_text(
        json.dumps(
            {
                "video_id": video_id,
                "fps": fps,
                "frame_count": cursor,
                "frame_dir": video_id,
                "intervals": intervals,
            },
            indent=2,
        )
        + "\n"
    )
    return manifest_path


def make_fixture(
    root: str | Path,
    actions: Sequence[ActionLabel] = (ActionLabel.NEEDLE_PULLING, ActionLabel.KNOT_PUSHING),
    n_train_videos: int = 4,
    n_test_videos: int = 2,
    interval_len: int = 100,
    size: int = 32,
    seed: int = 0,
) -> dict:
    """Write a multi-video fixture plus a ready-to-run experiment config.

    Every video interleaves one interval per requested action with 'other'
    intervals, so each one-vs-rest task has both classes in train and test.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    train_videos = [f"vid_train_{i}" for i in range(n_train_videos)]
    test_videos = [f"vid_test_{i}" for i in range(n_test_videos)]
    manifest_paths = []
    for video_id in train_videos + test_videos:
        specs = []
        for action in actions:
            specs.append((action, interval_len))
            specs.append((ActionLabel.OTHER, interval_len))
        manifest_paths.append(write_video(root, video_id, specs, size=size, seed=seed))

    config = {
        "seed": seed,
        "output_dir": "runs/fixture",
        "dataset": {
            "manifests": [p.name for p in manifest_paths],
            "train_videos": train_videos,
            "test_videos": test_videos,
            "validation_fraction": 0.25,
            "clip_len": 50,
            "frame_size": size,
        },
        "actions": [a.value for a in actions],
        "augmentation": {
            "gamma": 0.5,
            "blur_sigma": 2.0,
            "brightness_delta": 0.2,
            "saturation_factor": 1.5,
            "flip_probability": 0.5,
        },
        "sampler": {"sequence_length": 20},
        "backbone": {"kind": "small_conv", "feature_dim": 16, "stages": [[8, 3, 2], [16, 3, 2]]},
        "heads": ["lstm"],
        "head": {"rnn_units_1": 16, "rnn_units_2": 8, "fc_units_1": 32, "fc_units_2": 16},
        "train": {
            "learning_rate": 0.001,
            "batch_size": 4,
            "max_epochs": 5,
            "early_stop_patience": 5,
        },
        "infer": {"window_len": 50, "stride": 25},
    }
    config_path = root / "config.json"
    config_path.write_text(json.dumps(config, indent=2) + "\n")
    return {
        "root": root,
        "manifests": manifest_paths,
        "config": config_path,
        "train_videos": train_videos,
        "test_videos": test_videos,
    }


def make_overfit_fixture(
    root: str | Path,
    n_per_class: int = 5,
    clip_len: int = 50,
    size: int = 16,
    seed: int = 0,
) -> tuple[ClipDataset, dict[str, FrameStore], VideoManifest]:
    """One video of alternating rightward/leftward clips for overfit sanity runs.

    Target = rightward motion (needle pulling), rest = leftward (knot
    pushing). With the default five intervals per class and a 0.2 validation
    fraction this yields a balanced 4+4 train split and 1+1 validation.
    """
    specs = []
    for _ in range(n_per_class):
        specs.append((ActionLabel.NEEDLE_PULLING, clip_len))
        specs.append((ActionLabel.KNOT_PUSHING, clip_len))
    manifest_path = write_video(root, "vid_overfit", specs, size=size, seed=seed)
    manifest = load_manifest(manifest_path)
    clips = extract_clips(manifest, clip_len=clip_len)
    dataset = build_one_vs_rest(
        clips,
        ActionLabel.NEEDLE_PULLING,
        train_videos={"vid_overfit"},
        test_videos=set(),
        validation_fraction=0.2,
        rng_seed=seed,
    )
    return dataset, build_stores([manifest]), manifest
