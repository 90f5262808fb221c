from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import BACKBONE_KINDS, HEAD_KINDS, RECURRENT_KINDS, BackboneConfig, HeadConfig
from .model import (
    ForwardPass,
    aggregate_frame_probabilities,
    backbone_forward,
    init_parameters,
    model_backward,
    model_forward,
    recurrent_head_forward,
    static_head_forward,
)

__all__ = [
    "BACKBONE_KINDS",
    "HEAD_KINDS",
    "RECURRENT_KINDS",
    "BackboneConfig",
    "Checkpoint",
    "ForwardPass",
    "HeadConfig",
    "aggregate_frame_probabilities",
    "backbone_forward",
    "init_parameters",
    "load_checkpoint",
    "model_backward",
    "model_forward",
    "recurrent_head_forward",
    "save_checkpoint",
    "static_head_forward",
]
