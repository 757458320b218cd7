"""Exception hierarchy. Every error the library raises derives from RectiDistillError."""


class RectiDistillError(Exception):
    """Base class for all rectidistill errors."""


class InvalidInputError(RectiDistillError, ValueError):
    """Non-finite, malformed, or out-of-domain input."""


class InvalidParameterError(RectiDistillError, ValueError):
    """A scalar knob (temperature, spread, counts, ...) is out of range."""


class DivergenceInfiniteError(RectiDistillError, ValueError):
    """A KL/CE term is infinite (zero probability where mass is required)."""


class OracleFailureError(RectiDistillError, RuntimeError):
    """A verification oracle (finite differences) hit a non-finite evaluation."""


class InvalidBatchError(RectiDistillError, ValueError):
    """Batch-shaped inputs disagree in size."""


class RectifyNotApplicableError(RectiDistillError, ValueError):
    """Rectification requested for a sample the teacher already predicts correctly."""


class InvalidPartnerError(RectiDistillError, ValueError):
    """The rectification partner index b is not the teacher argmax."""


class DegeneratePairError(RectiDistillError, ValueError):
    """Rectification pair carries zero total mass; the step-c scale would zero class a."""


class InvalidSubsetError(RectiDistillError, ValueError):
    """A bias subset contains a correctly-predicted sample (partition contract violated)."""


class InvalidScheduleError(RectiDistillError, ValueError):
    """Epoch schedule outside 0 <= e < E."""


class InvalidArchitectureError(RectiDistillError, ValueError):
    """MLP layer widths are empty or non-positive."""


class TrainingDivergedError(RectiDistillError, RuntimeError):
    """Non-finite gradients or parameters during optimization."""


class CheckpointParseError(RectiDistillError, ValueError):
    """Malformed checkpoint file; message carries the offending line number."""


class InvalidSetupError(RectiDistillError, ValueError):
    """Degenerate two-class analysis setup (e.g. both loss weights zero)."""


class DataParseError(RectiDistillError, ValueError):
    """Malformed dataset CSV; message carries the offending row number."""


class ConfigError(RectiDistillError, ValueError):
    """Invalid or inconsistent run configuration."""
