"""Exception types shared across tikzforge modules."""


class TikzforgeError(Exception):
    """Base class for all tikzforge errors."""


class ConfigError(TikzforgeError):
    """Invalid or unresolvable configuration."""


class ToolchainMissing(TikzforgeError):
    """A required external binary (TeX engine or PDF converter) is absent."""


class RenderUnavailable(TikzforgeError):
    """The render oracle cannot run at all (infrastructure, not per-sample)."""


class ImageTooSmall(TikzforgeError):
    """Input raster is below the minimum size an operation supports."""


class NoForeground(TikzforgeError):
    """Content detection found no foreground pixels."""


class ShapeMismatch(TikzforgeError):
    """Two images have incompatible dimensions and resizing is disabled."""


class ZeroVector(TikzforgeError):
    """An embedding with zero norm cannot be compared by cosine."""


class TooFewSamples(TikzforgeError):
    """A set-level statistic needs more samples than were provided."""


class NonFiniteInput(TikzforgeError):
    """Input contains NaN or infinity where finite values are required."""


class EmptyBatch(TikzforgeError):
    """A batch aggregate was requested over zero results."""


class TooFewStatements(TikzforgeError):
    """A document has too few deletable statements to transform."""


class ScorerTimeout(TikzforgeError):
    """The embedding sidecar did not answer within the deadline."""


class ScorerCrashed(TikzforgeError):
    """The embedding sidecar process died while requests were in flight."""


class ProtocolError(TikzforgeError):
    """The sidecar sent a message that violates the wire protocol."""


class ClientError(TikzforgeError):
    """An inference client call failed."""


class MissingParentManifest(TikzforgeError):
    """An iteration step references a manifest that does not exist."""


class IterationLimitExceeded(TikzforgeError):
    """Attempted to advance past the configured maximum iteration."""
