"""Exception taxonomy shared across the pipeline."""


class LapActionError(Exception):
    """Base class for all pipeline errors."""


class ManifestError(LapActionError):
    """Malformed or inconsistent video manifest."""


class IntervalOverlapError(ManifestError):
    """Two annotated intervals overlap."""


class FrameStoreError(LapActionError):
    """Frame store missing, incomplete, or unreadable."""


class EmptyClassError(LapActionError):
    """A split ended up with no clips for one of the two classes."""


class UnassignedVideoError(LapActionError):
    """A clip's source video is in neither the train nor the test set."""


class ClipTooShortError(LapActionError):
    """Clip has fewer frames than the requested sequence length."""


class ParameterError(LapActionError):
    """An argument violates an operation's contract."""


class GeometryError(LapActionError):
    """Input tensor shape does not match the expected geometry."""


class InvertedImbalanceError(LapActionError):
    """Balancing was asked to augment the majority class."""


class UnavailableBackboneError(LapActionError):
    """Named pretrained backbone requested but no weights are available."""


class ConfigurationError(LapActionError):
    """Invalid model or experiment configuration."""


class StaleActivationError(LapActionError):
    """Backward pass invoked with activations from a different forward pass."""


class EmptyEvaluationError(LapActionError):
    """Evaluation requested on an empty clip set."""


class CheckpointMismatchError(LapActionError):
    """Checkpoint contents do not match the configuration stored with it."""


class ReportSchemaError(LapActionError):
    """Report rows are missing or carry inconsistent action sets."""


class VideoTooShortError(LapActionError):
    """Video shorter than a single inference window."""
