"""Segment-random frame sampling: variable-length clips to fixed-length inputs.

A clip of N frames is split into S non-overlapping segments whose sizes
differ by at most one; one frame is drawn per segment. Random mode draws
uniformly inside each segment (training diversity), center mode takes the
segment midpoint (deterministic inference).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dataset import Clip
from .errors import ClipTooShortError, ParameterError
from .frames import FrameStore

DEFAULT_SEQUENCE_LENGTH = 20


@dataclass(frozen=True)
class SamplerConfig:
    sequence_length: int = DEFAULT_SEQUENCE_LENGTH
    mode: str = "random"  # "random" | "center"
    rng_seed: int = 0

    def __post_init__(self):
        if self.sequence_length < 1:
            raise ParameterError(f"sequence_length must be >= 1, got {self.sequence_length}")
        if self.mode not in ("random", "center"):
            raise ParameterError(f"sampler mode must be 'random' or 'center', got {self.mode!r}")


@dataclass
class FrameSequence:
    """Fixed-length ordered model input, with sampling provenance."""

    frames: np.ndarray  # (S, H, W, 3) float64 in [0, 1]
    source_indices: np.ndarray  # clip-relative, strictly increasing
    clip: Clip


def segment_bounds(clip_length: int, sequence_length: int) -> list[tuple[int, int]]:
    """Half-open segment boundaries [floor(i*N/S), floor((i+1)*N/S))."""
    n, s = clip_length, sequence_length
    return [(i * n // s, (i + 1) * n // s) for i in range(s)]


def sample_indices(clip_length: int, config: SamplerConfig) -> np.ndarray:
    """Draw one frame index per segment; strictly increasing by construction."""
    s = config.sequence_length
    if clip_length < s:
        raise ClipTooShortError(
            f"clip of {clip_length} frames is shorter than sequence length {s}"
        )
    bounds = segment_bounds(clip_length, s)
    if config.mode == "center":
        indices = [(lo + hi - 1) // 2 for lo, hi in bounds]
    else:
        rng = np.random.default_rng(config.rng_seed)
        indices = [int(rng.integers(lo, hi)) for lo, hi in bounds]
    return np.asarray(indices, dtype=np.int64)


def load_sequence(
    clip: Clip, indices: Sequence[int], stores: Mapping[str, FrameStore]
) -> FrameSequence:
    """Load the sampled frames, normalized to [0, 1], in temporal order."""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= clip.length):
        raise ParameterError(
            f"sample indices outside clip {clip.clip_id} of length {clip.length}"
        )
    store = stores[clip.video_id]
    frames = store.load_frames(clip, indices)
    return FrameSequence(frames=frames, source_indices=indices, clip=clip)
