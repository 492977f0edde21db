"""Exception hierarchy shared by every fusevote module.

Two broad groups matter to callers: configuration mistakes (bad keys,
impossible settings) and data problems (malformed files, inconsistent
inputs). The CLI maps them to exit codes 2 and 3 respectively.
"""


class FusevoteError(Exception):
    """Base class for all package errors."""


class ConfigError(FusevoteError):
    """Invalid configuration: unknown key, bad value, impossible setting."""


class DataError(FusevoteError):
    """Content of an input is unusable (non-finite values, bad labels)."""


class FormatError(DataError):
    """A file does not match its declared on-disk format."""


class ConsistencyError(DataError):
    """Two inputs that must agree do not (e.g. row/label counts)."""


class AlignmentError(DataError):
    """Datasets that must share labels and sample order differ."""


class ShapeError(FusevoteError):
    """Array dimensions do not match what an operation requires."""


class SplitError(FusevoteError):
    """A train/test partition cannot be formed as requested."""


class FoldError(FusevoteError):
    """A cross-validation fold assignment cannot be formed."""


class CropError(FusevoteError):
    """No foreground found; callers fall back to whole-image resize."""


class FitError(FusevoteError):
    """A model cannot be fitted on the given data."""


class TrainingError(FitError):
    """Iterative training diverged (e.g. loss became NaN)."""


class ConvergenceError(FitError):
    """An iterative solver hit its cap before reaching tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class GridSizeError(ConfigError):
    """A hyperparameter grid exceeds the configured expansion cap."""


class SelectionError(FusevoteError):
    """Top-k selection is impossible (not enough distinct families)."""


class ParseError(DataError):
    """A text input could not be parsed; carries a line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
