"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """A configuration value is missing, unknown, or inconsistent."""


class DegenerateError(ValueError):
    """Inputs are degenerate (ties, all-zero coefficients) and the result is undefined."""


class ClampWarning(UserWarning):
    """A literal-formula evaluation left [0, 1] and was clamped.

    Emitted only by the reproduction (`paper`) evaluation modes; the default
    exact modes never clamp. The CLI escalates these under --strict.
    """


class ModelWarning(UserWarning):
    """The analytic decomposition left its nominal probability envelope.

    Emitted when companion coefficients imply a spectral radius above 1
    (negative effective capacity) or when the coefficient mass at theta=0
    deviates from 1 beyond tolerance.
    """
