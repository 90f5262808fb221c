import numpy as np
import pytest

from lapaction.actions import ActionLabel
from lapaction.dataset import Clip, VideoManifest, AnnotatedInterval
from lapaction.frames import FRAME_NAME, FrameStore, save_frame
from lapaction.network import BackboneConfig, HeadConfig

TINY_BACKBONE = BackboneConfig(kind="small_conv", feature_dim=8, stages=((4, 3, 2), (8, 3, 2)))


def tiny_head(kind):
    return HeadConfig(kind=kind, rnn_units_1=8, rnn_units_2=4, fc_units_1=16, fc_units_2=8)


@pytest.fixture
def tiny_backbone():
    return TINY_BACKBONE


def write_random_store(root, video_id, n_frames, size=16, seed=0):
    """A frame dir of deterministic random frames; returns (manifest, stores)."""
    frame_dir = root / video_id
    frame_dir.mkdir(parents=True)
    rng = np.random.default_rng(seed)
    for i in range(n_frames):
        save_frame(frame_dir / FRAME_NAME.format(i), rng.random((size, size, 3)))
    manifest = VideoManifest(
        video_id=video_id,
        fps=25.0,
        frame_count=n_frames,
        frame_dir=frame_dir,
        intervals=(AnnotatedInterval(ActionLabel.OTHER, 0, n_frames),),
    )
    return manifest, {video_id: FrameStore(frame_dir)}


def make_clips(video_id, label, starts, length=50):
    return [Clip(video_id=video_id, label=label, start_frame=s, length=length) for s in starts]
