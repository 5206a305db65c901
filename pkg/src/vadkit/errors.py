"""Exception hierarchy shared across the toolkit.

Every error the library raises deliberately derives from ``VadkitError`` so
callers (and the CLI) can separate our failures from genuine bugs.
"""


class VadkitError(Exception):
    """Base class for all toolkit errors."""


# --- registry / configuration -------------------------------------------------

class DuplicateRegistration(VadkitError):
    """A (kind, name) pair was registered twice."""


class UnknownComponent(VadkitError):
    """A referenced component name is not in the registry."""


class ConfigError(VadkitError):
    """Base class for run-configuration problems (CLI exit code 2)."""


class ConfigParseError(ConfigError):
    """Config file is missing, malformed, or contains unknown keys."""


class MissingField(ConfigError):
    """A required config key is absent."""


# --- datasets -------------------------------------------------------------------

class LayoutError(VadkitError):
    """On-disk dataset directory does not follow the expected layout."""


class MaskMismatch(VadkitError):
    """An anomalous test image lacks a mask, or mask dimensions differ."""


# --- scenarios -------------------------------------------------------------------

class PoolExhausted(VadkitError):
    """Not enough anomalous records to reach the requested contamination."""


class InsufficientData(VadkitError):
    """Requested more samples than are available."""


class DuplicateTask(VadkitError):
    """A task id was inserted twice into a replay buffer or task stream."""


# --- backbones / methods ---------------------------------------------------------

class UnknownLayer(VadkitError):
    """A hook refers to a layer the extractor does not expose."""


class ShapeMismatch(VadkitError):
    """Array dimensions are inconsistent with the fitted model."""


class DegenerateInput(VadkitError):
    """Fit was called with no usable data."""


# --- trainers --------------------------------------------------------------------

class EmptyDataset(VadkitError):
    """Training requires at least one record."""


class NonFiniteLoss(VadkitError):
    """Training loss became NaN or infinite; carries the diagnostic state."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


# --- evaluation --------------------------------------------------------------------

class SingleClass(VadkitError):
    """Metric needs both classes but only one is present."""


class NoPositives(VadkitError):
    """Metric needs at least one positive label."""


class NoRegions(VadkitError):
    """PRO needs at least one ground-truth defect region."""


# --- compression / wire format -------------------------------------------------

class NonFiniteInput(VadkitError):
    """Quantization calibration received NaN or infinite values."""


class UnsupportedArray(VadkitError):
    """Array dtype cannot be quantized."""


class BadMagic(VadkitError):
    """Encoded feature message does not start with the expected magic bytes."""


class VersionMismatch(VadkitError):
    """Encoded feature message has an unsupported version."""


class TruncatedPayload(VadkitError):
    """Encoded feature message payload is shorter than the header promises."""


class DecodeError(VadkitError):
    """Checkpoint or message container is structurally invalid."""


class TransportError(VadkitError):
    """A byte-stream channel failed; carries the offending image id if known."""

    def __init__(self, message, image_id=None):
        super().__init__(message)
        self.image_id = image_id


# --- postprocessing / profiling -------------------------------------------------

class ImageTooSmall(VadkitError):
    """Image cannot host the smallest allowed augmentation patch."""


class UnknownLayerKind(VadkitError):
    """Profiler met a layer kind it has no FLOPs formula for."""
