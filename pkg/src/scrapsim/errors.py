"""Exception and warning types shared across the package."""


class ScrapSimError(Exception):
    """Base class for all package errors."""


class NoWellFound(ScrapSimError):
    """The potential profile has no metastable minimum/barrier pair."""


class InsufficientLevels(ScrapSimError):
    """Fewer bound states below the barrier than requested."""


class ConvergenceFailure(ScrapSimError):
    """Grid refinement changed the spectrum more than the tolerance allows."""


class DegenerateMixingAngle(ScrapSimError):
    """Mixing angle undefined because both drive rate and detuning vanish."""


class DegenerateGap(ScrapSimError):
    """Adiabaticity margin undefined where the energy gap is exactly zero."""


class StepFailure(ScrapSimError):
    """Propagator could not meet the norm-drift budget even after halving."""


class FrameMismatch(ScrapSimError):
    """An oscillatory Hamiltonian term has no matching carrier offset."""


class OffResonantPump(ScrapSimError):
    """Schedule carrier does not match the targeted transition frequency."""


class CalibrationFailure(ScrapSimError):
    """No amplitude factor in the search range reaches the target transfer."""


class NoCoupling(ScrapSimError):
    """Coupling capacitance is zero; the effective coupling is undefined."""


class WindowTooShort(ScrapSimError):
    """Sweep window ends before the detuning dominates the coupling."""


class MissingMatrixElement(ScrapSimError):
    """Level data lacks a dipole or momentum element the model needs."""


class ConfigError(ScrapSimError):
    """Base class for configuration problems (exit code 2)."""


class ConfigParseError(ConfigError):
    """Config file is not parseable; carries line/column when known."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class ConfigValidationError(ConfigError):
    """Config content violates the schema; names the offending field."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class UnknownUnit(ConfigError):
    """Quantity string carries a unit the loader does not know."""


class DegeneracyWarning(UserWarning):
    """Eigenvector continuity tracking is unreliable near a degeneracy."""
