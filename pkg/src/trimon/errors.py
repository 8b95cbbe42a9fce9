"""Exception and warning types raised across the package."""


class TrimonError(Exception):
    """Base class for all package errors."""


class InvalidInputError(TrimonError, ValueError):
    """A physical input is outside its allowed domain."""


class ResonanceError(TrimonError, ZeroDivisionError):
    """A detuning entering a perturbative formula vanishes."""

    def __init__(self, name: str, value: float):
        self.name = name
        self.value = value
        super().__init__(f"detuning {name} = {value!r} Hz is zero; dispersive formula is singular")


class TruncationWarning(UserWarning):
    """Fock-space truncation has not converged."""


class StepSizeError(TrimonError):
    """Time step too coarse for the drive bandwidth."""


class CalibrationError(TrimonError):
    """Requested rotation cannot be reached within the amplitude bounds."""


class InsufficientStatisticsError(TrimonError):
    """Every shot of a tomography setting was discarded."""


class DegenerateParameterError(TrimonError, ValueError):
    """Cholesky parameters are all zero."""


class ConvergenceError(TrimonError):
    """An optimizer did not converge; ``best`` carries the best-so-far result."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class InvalidStateError(TrimonError, ValueError):
    """A matrix is not a valid density matrix."""


class FitError(TrimonError):
    """Least-squares fit failed or the data cannot constrain the model."""

    def __init__(self, message: str, residual_rms: float | None = None):
        super().__init__(message)
        self.residual_rms = residual_rms
