"""PNG frame stores: the on-disk layout for original and augmented clip frames.

Original layout: ``<frame_dir>/frame_%06d.png``, 0-indexed over the whole
video. Augmented clips live in a sibling store, one directory per clip:
``<frame_dir>_aug/<clip_id>/frame_%06d.png``, 0-indexed within the clip.
Frames are lossless 8-bit RGB; in memory they are float64 arrays in [0, 1].
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from PIL import Image

from .dataset import Clip, VideoManifest
from .errors import FrameStoreError

FRAME_NAME = "frame_{:06d}.png"
AUG_DIR_SUFFIX = "_aug"


def load_frame(path: str | Path) -> np.ndarray:
    """Read one RGB frame as a (H, W, 3) float64 array in [0, 1]."""
    try:
        with Image.open(path) as img:
            arr = np.asarray(img.convert("RGB"), dtype=np.float64)
    except OSError as exc:
        raise FrameStoreError(f"cannot read frame {path}: {exc}") from exc
    return arr / 255.0


def save_frame(path: str | Path, frame: np.ndarray) -> None:
    """Write a float [0, 1] frame as 8-bit RGB PNG (round-to-nearest)."""
    data = np.round(np.clip(frame, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(data, mode="RGB").save(path)


class FrameStore:
    """Resolves clip-relative frame indices to files for one video."""

    def __init__(self, frame_dir: str | Path, aug_dir: str | Path | None = None):
        self.frame_dir = Path(frame_dir)
        self.aug_dir = Path(aug_dir) if aug_dir else Path(str(self.frame_dir) + AUG_DIR_SUFFIX)

    def frame_path(self, clip: Clip, index: int) -> Path:
        """Path of frame ``index`` (0-based within the clip)."""
        if not 0 <= index < clip.length:
            raise FrameStoreError(
                f"frame index {index} outside clip {clip.clip_id} of length {clip.length}"
            )
        if clip.augmentation is None:
            return self.frame_dir / FRAME_NAME.format(clip.start_frame + index)
        return self.aug_dir / clip.clip_id / FRAME_NAME.format(index)

    def aug_clip_dir(self, clip: Clip) -> Path:
        return self.aug_dir / clip.clip_id

    def load_frames(self, clip: Clip, indices: Sequence[int]) -> np.ndarray:
        """Stack the selected clip frames into a (len(indices), H, W, 3) array."""
        frames = [load_frame(self.frame_path(clip, int(i))) for i in indices]
        return np.stack(frames)

    def load_clip(self, clip: Clip) -> np.ndarray:
        return self.load_frames(clip, range(clip.length))

    def load_absolute(self, indices: Sequence[int]) -> np.ndarray:
        """Load frames by absolute video frame index (used by window inference)."""
        frames = [load_frame(self.frame_dir / FRAME_NAME.format(int(i))) for i in indices]
        return np.stack(frames)


def build_stores(manifests: Iterable[VideoManifest]) -> dict[str, FrameStore]:
    return {m.video_id: FrameStore(m.frame_dir) for m in manifests}


def load_clip_frames(stores: Mapping[str, FrameStore], clip: Clip, indices: Sequence[int]) -> np.ndarray:
    try:
        store = stores[clip.video_id]
    except KeyError:
        raise FrameStoreError(f"no frame store for video {clip.video_id!r}") from None
    return store.load_frames(clip, indices)


def validate_frame_store(manifest: VideoManifest, frame_size: int | None = None) -> int:
    """Check that every frame file exists and is RGB with the expected geometry.

    Only image headers are read, so this is cheap even for long videos.
    Returns the number of frames validated.
    """
    if not manifest.frame_dir.is_dir():
        raise FrameStoreError(
            f"video {manifest.video_id}: frame_dir does not exist: {manifest.frame_dir}"
        )
    for i in range(manifest.frame_count):
        path = manifest.frame_dir / FRAME_NAME.format(i)
        if not path.is_file():
            raise FrameStoreError(f"video {manifest.video_id}: missing frame file {path}")
        with Image.open(path) as img:
            if img.mode not in ("RGB", "P", "L"):
                raise FrameStoreError(
                    f"video {manifest.video_id}: frame {path} has mode {img.mode}, not RGB"
                )
            if frame_size is not None and img.size != (frame_size, frame_size):
                raise FrameStoreError(
                    f"video {manifest.video_id}: frame {path} is {img.size[0]}x{img.size[1]}, "
                    f"expected {frame_size}x{frame_size}"
                )
    return manifest.frame_count
