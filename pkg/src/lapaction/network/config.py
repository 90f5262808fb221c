"""Architecture configuration for the backbone/head classifier family."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigurationError

BACKBONE_KINDS = ("small_conv", "vgg16", "resnet50", "efficientnet_b2", "densenet121")
HEAD_KINDS = ("fully_connected", "lstm", "gru", "bilstm", "bigru")
RECURRENT_KINDS = ("lstm", "gru", "bilstm", "bigru")

# Desk-scale default: four stride-2 conv stages ending in a 128-d descriptor.
DEFAULT_STAGES = ((16, 3, 2), (32, 3, 2), (64, 3, 2), (128, 3, 2))


@dataclass(frozen=True)
class BackboneConfig:
    """Per-frame feature extractor: conv stages followed by global average pooling.

    ``stages`` is a sequence of (channels, kernel, stride) triples and applies
    only to the ``small_conv`` kind. The named large backbones are interface
    stubs: constructing parameters for them fails unless pretrained weights
    are supplied externally, which this build does not ship.
    """

    kind: str = "small_conv"
    feature_dim: int = 128
    stages: tuple[tuple[int, int, int], ...] = DEFAULT_STAGES

    def __post_init__(self):
        if self.kind not in BACKBONE_KINDS:
            raise ConfigurationError(f"unknown backbone kind {self.kind!r}")
        if self.feature_dim <= 0:
            raise ConfigurationError(f"feature_dim must be positive, got {self.feature_dim}")
        object.__setattr__(self, "stages", tuple(tuple(s) for s in self.stages))
        if self.kind == "small_conv":
            if not self.stages:
                raise ConfigurationError("small_conv backbone needs at least one stage")
            for ch, k, stride in self.stages:
                if ch <= 0 or k <= 0 or stride <= 0:
                    raise ConfigurationError(f"invalid conv stage ({ch}, {k}, {stride})")
            if self.stages[-1][0] != self.feature_dim:
                raise ConfigurationError(
                    f"feature_dim {self.feature_dim} must equal the last stage's "
                    f"channel count {self.stages[-1][0]}"
                )


@dataclass(frozen=True)
class HeadConfig:
    """Classifier head: static fully-connected baseline or two stacked recurrent layers.

    Recurrent unit counts are per direction; bidirectional kinds concatenate
    both directions. ``readout`` selects the final-state representation
    (default) or mean pooling over per-step outputs, for ablations.
    """

    kind: str = "lstm"
    rnn_units_1: int = 128
    rnn_units_2: int = 64
    inter_layer_dropout: float = 0.5
    fc_units_1: int = 256
    fc_dropout: float = 0.5
    fc_units_2: int = 64
    num_classes: int = 2
    readout: str = "last"  # "last" | "mean"

    def __post_init__(self):
        if self.kind not in HEAD_KINDS:
            raise ConfigurationError(f"unknown head kind {self.kind!r}")
        for name in ("rnn_units_1", "rnn_units_2", "fc_units_1", "fc_units_2", "num_classes"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("inter_layer_dropout", "fc_dropout"):
            rate = getattr(self, name)
            if not 0 <= rate < 1:
                raise ConfigurationError(f"{name} must lie in [0, 1), got {rate}")
        if self.num_classes != 2:
            raise ConfigurationError("one-vs-rest heads are binary; num_classes must be 2")
        if self.readout not in ("last", "mean"):
            raise ConfigurationError(f"readout must be 'last' or 'mean', got {self.readout!r}")

    @property
    def is_recurrent(self) -> bool:
        return self.kind in RECURRENT_KINDS

    @property
    def bidirectional(self) -> bool:
        return self.kind in ("bilstm", "bigru")
