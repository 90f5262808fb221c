"""Deterministic, temporally consistent clip transforms and offline class balancing.

Five photometric/geometric techniques are available; an augmented clip
receives exactly one of them, with the same resolved parameters applied to
every frame. Balancing plans enough augmented copies of target-class clips to
match the rest-class count exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.ndimage import correlate1d

from .dataset import Clip, clip_from_json, clip_to_json
from .errors import FrameStoreError, InvertedImbalanceError, ParameterError
from .frames import FRAME_NAME, FrameStore, save_frame
from .seeding import derive_seed

# Technique cycle order for balancing plans.
TECHNIQUES = ("gamma_contrast", "gaussian_blur", "brightness", "saturation", "horizontal_flip")

# BT.601 luma weights for the saturation transform.
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class AugmentationSpec:
    """Transform parameters used when planning offline balancing."""

    gamma: float = 0.5
    blur_sigma: float = 10.0
    brightness_delta: float = 0.2  # magnitude; sign resolved per augmented clip
    saturation_factor: float = 1.5
    flip_probability: float = 0.5

    def __post_init__(self):
        if self.gamma <= 0:
            raise ParameterError(f"gamma must be positive, got {self.gamma}")
        if self.blur_sigma <= 0:
            raise ParameterError(f"blur_sigma must be positive, got {self.blur_sigma}")
        if not 0 <= self.flip_probability <= 1:
            raise ParameterError(f"flip_probability must lie in [0, 1], got {self.flip_probability}")
        if self.saturation_factor < 0:
            raise ParameterError(f"saturation_factor must be >= 0, got {self.saturation_factor}")
        if not 0 <= self.brightness_delta <= 1:
            raise ParameterError(f"brightness_delta must lie in [0, 1], got {self.brightness_delta}")


@dataclass(eq=True)
class AugmentationRecord:
    """Provenance of one augmented clip; re-applying reproduces identical pixels."""

    technique: str
    resolved_parameters: dict
    rng_seed: int


@dataclass
class BalancePlan:
    """Ordered augmentation jobs that bring the target count up to the rest count."""

    entries: list[tuple[Clip, AugmentationRecord]]
    resulting_target_count: int


def _check_pixels(frames: np.ndarray) -> np.ndarray:
    frames = np.asarray(frames, dtype=np.float64)
    if frames.size and (frames.min() < 0.0 or frames.max() > 1.0):
        raise ParameterError("pixel values must be normalized to [0, 1]")
    return frames


def apply_gamma(frames: np.ndarray, gamma: float) -> np.ndarray:
    """out = in**gamma, elementwise; 0 and 1 are fixed points."""
    if gamma <= 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    return _check_pixels(frames) ** gamma


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian with radius ceil(3*sigma); weights sum to 1."""
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (x / sigma) ** 2)
    return kernel / kernel.sum()


def apply_gaussian_blur(frames: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur per frame and channel, reflect padding at borders."""
    frames = _check_pixels(frames)
    kernel = gaussian_kernel(sigma)
    # (T, H, W, C): rows then columns; scipy's "mirror" matches np.pad reflect.
    out = correlate1d(frames, kernel, axis=-3, mode="mirror")
    out = correlate1d(out, kernel, axis=-2, mode="mirror")
    return np.clip(out, 0.0, 1.0)


def apply_brightness(frames: np.ndarray, delta: float) -> np.ndarray:
    """out = clamp(in + delta, 0, 1)."""
    if abs(delta) > 1:
        raise ParameterError(f"brightness delta must satisfy |delta| <= 1, got {delta}")
    return np.clip(_check_pixels(frames) + delta, 0.0, 1.0)


def apply_saturation(frames: np.ndarray, factor: float) -> np.ndarray:
    """Scale chroma about the BT.601 gray value of each pixel; clamp to [0, 1]."""
    if factor < 0:
        raise ParameterError(f"saturation factor must be >= 0, got {factor}")
    frames = _check_pixels(frames)
    gray = frames @ _LUMA
    out = gray[..., None] + factor * (frames - gray[..., None])
    return np.clip(out, 0.0, 1.0)


def apply_horizontal_flip(frames: np.ndarray) -> np.ndarray:
    """Reverse the column order of every frame."""
    frames = np.asarray(frames, dtype=np.float64)
    return frames[..., ::-1, :].copy()


def apply_record(frames: np.ndarray, record: AugmentationRecord) -> np.ndarray:
    """Replay a recorded transform; the record's parameters fully determine it."""
    params = record.resolved_parameters
    if record.technique == "gamma_contrast":
        return apply_gamma(frames, params["gamma"])
    if record.technique == "gaussian_blur":
        return apply_gaussian_blur(frames, params["sigma"])
    if record.technique == "brightness":
        return apply_brightness(frames, params["delta"])
    if record.technique == "saturation":
        return apply_saturation(frames, params["factor"])
    if record.technique == "horizontal_flip":
        return apply_horizontal_flip(frames) if params["applied"] else _check_pixels(frames).copy()
    raise ParameterError(f"unknown augmentation technique {record.technique!r}")


def plan_balance(
    target_clips: Sequence[Clip],
    rest_count: int,
    spec: AugmentationSpec | None = None,
    rng_seed: int = 0,
) -> BalancePlan:
    """Plan exactly ``rest_count - len(target_clips)`` augmentation jobs.

    Source clips are taken round-robin; techniques cycle in the fixed order
    gamma, blur, brightness, saturation, flip. Brightness sign and flip
    application are resolved here from the seeded generator and recorded, so
    plans with the same seed are identical and materialization needs no RNG.
    A flip entry may resolve to identity; it still counts toward the balance.
    """
    if not target_clips:
        raise ParameterError("plan_balance requires at least one target clip")
    deficit = rest_count - len(target_clips)
    if deficit < 0:
        raise InvertedImbalanceError(
            f"rest count {rest_count} is below target count {len(target_clips)}; "
            f"refusing to augment the majority class"
        )
    spec = spec or AugmentationSpec()
    rng = np.random.default_rng(derive_seed(rng_seed, "balance-plan"))
    entries: list[tuple[Clip, AugmentationRecord]] = []
    for k in range(deficit):
        source = target_clips[k % len(target_clips)]
        technique = TECHNIQUES[k % len(TECHNIQUES)]
        if technique == "gamma_contrast":
            params = {"gamma": spec.gamma}
        elif technique == "gaussian_blur":
            params = {"sigma": spec.blur_sigma}
        elif technique == "brightness":
            sign = 1.0 if rng.random() < 0.5 else -1.0
            params = {"delta": sign * spec.brightness_delta}
        elif technique == "saturation":
            params = {"factor": spec.saturation_factor}
        else:
            params = {"applied": bool(rng.random() < spec.flip_probability)}
        record = AugmentationRecord(
            technique=technique,
            resolved_parameters=params,
            rng_seed=derive_seed(rng_seed, "balance-entry", k),
        )
        entries.append((source, record))
    return BalancePlan(entries=entries, resulting_target_count=len(target_clips) + deficit)


def materialize(plan: BalancePlan, stores: Mapping[str, FrameStore]) -> list[Clip]:
    """Write every planned augmented clip to its derived frame store.

    Outputs are 8-bit PNGs under ``<frame_dir>_aug/<clip_id>/``; re-running
    the same plan overwrites byte-identical files. Returns the new clip
    records with augmentation provenance attached.
    """
    new_clips = []
    for source, record in plan.entries:
        store = stores[source.video_id]
        try:
            frames = store.load_clip(source)
        except FrameStoreError as exc:
            raise FrameStoreError(f"clip {source.clip_id}: {exc}") from exc
        out = apply_record(frames, record)
        clip = replace(source, augmentation=record)
        clip_dir = store.aug_clip_dir(clip)
        clip_dir.mkdir(parents=True, exist_ok=True)
        for i in range(out.shape[0]):
            save_frame(clip_dir / FRAME_NAME.format(i), out[i])
        new_clips.append(clip)
    return new_clips


def write_plan(plan: BalancePlan, path: str | Path) -> None:
    """Serialize a plan as JSON lines, one augmentation record per line."""
    with open(path, "w") as fh:
        for source, record in plan.entries:
            fh.write(
                json.dumps(
                    {
                        "source": clip_to_json(source),
                        "technique": record.technique,
                        "resolved_parameters": record.resolved_parameters,
                        "rng_seed": record.rng_seed,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def read_plan(path: str | Path, resulting_target_count: int | None = None) -> BalancePlan:
    entries = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            entries.append(
                (
                    clip_from_json(obj["source"]),
                    AugmentationRecord(
                        technique=obj["technique"],
                        resolved_parameters=dict(obj["resolved_parameters"]),
                        rng_seed=int(obj["rng_seed"]),
                    ),
                )
            )
    if resulting_target_count is None:
        resulting_target_count = len(entries)
    return BalancePlan(entries=entries, resulting_target_count=resulting_target_count)
