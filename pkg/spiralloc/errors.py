# spiralloc/errors.py


class SpiralLocError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(SpiralLocError):
    """Scenario configuration is invalid or cannot be realised."""


class ParameterError(SpiralLocError):
    """An operation received parameters outside its contract."""


class GridParseError(SpiralLocError):
    """A grid map file is malformed."""

    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DegenerateInputError(SpiralLocError):
    """Input is geometrically or numerically degenerate."""


class NumericalError(SpiralLocError):
    """A numerical routine hit a singular system."""


class TrainingDivergedError(SpiralLocError):
    """Training produced non-finite losses or failed to improve."""


class UsageError(SpiralLocError):
    """A component was used in a way its contract forbids."""


class BatchError(SpiralLocError):
    """A run inside a batch failed; completed results were saved."""

    def __init__(self, run_index, cause):
        super().__init__(f"run {run_index} failed: {cause}")
        self.run_index = run_index
        self.cause = cause


class ReportError(SpiralLocError):
    """Result files are missing or unreadable."""

    def __init__(self, message, paths=()):
        listing = ", ".join(str(p) for p in paths)
        super().__init__(f"{message}: {listing}" if listing else message)
        self.paths = list(paths)
