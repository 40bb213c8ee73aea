"""Exception and warning types shared across the pipeline."""


class PipelineError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(PipelineError):
    """Invalid or missing configuration (bad key, bad value, missing path)."""


class DataError(PipelineError):
    """Invalid input data (unparseable log, unknown id, bad layout)."""


class NumericError(PipelineError):
    """Numerical failure during training (divergence, non-finite loss)."""


class IsolatedNodeError(DataError):
    """A graph node without edges cannot be given a valid transition row."""


class DisconnectedGraphWarning(UserWarning):
    """The accessibility graph has more than one connected component."""


class IsolatedNodeWarning(UserWarning):
    """A node without edges was forced to a self-loop probability of 1."""


class UnvisitedNodeWarning(UserWarning):
    """A node never appeared in any random walk; it keeps its initial vector."""


class AnnotationWarning(UserWarning):
    """A begin/end annotation could not be matched to a span."""
