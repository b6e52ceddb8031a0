"""Exception hierarchy shared by the library and the CLI."""

from src.utils.constants import ExitCodeConst


class SpecFuseError(Exception):
    """Base error; ``exit_code`` is what the CLI returns when it escapes a command."""
    exit_code: int = ExitCodeConst.USER_ERROR

    def __init__(self, message: str):
        self.message = message
        super().__init__(self.message)


class ConfigurationError(SpecFuseError):
    pass


class ShapeError(SpecFuseError):
    pass


class CubeFormatError(SpecFuseError):
    pass


class DegenerateSrfError(SpecFuseError):
    def __init__(self, band: int, message: str = None):
        self.band = band
        super().__init__(message or f"SRF weights for MSI band {band} are all zero (degenerate SRF)")


class DivergenceError(SpecFuseError):
    """Raised when the loss or a gradient stops being finite during training."""
    exit_code = ExitCodeConst.DIVERGENCE

    def __init__(self, iteration: int, what: str, message: str = None):
        self.iteration = iteration
        self.what = what
        super().__init__(message or f"Non-finite {what} at iteration {iteration}")
