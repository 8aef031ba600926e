"""Exception hierarchy shared across the package."""


class SharpBoundsError(Exception):
    """Base class for all package-specific errors."""


class InvalidBandError(SharpBoundsError):
    """Sensitivity band violates 0 <= w_lower <= 1 <= w_upper (or is non-constant within a cell)."""


class InfiniteCapError(SharpBoundsError):
    """Operation requires a finite upper likelihood-ratio cap."""


class InfeasibleCellError(SharpBoundsError):
    """No weight vector in the box attains a probability-weighted mean of one."""


class InconsistentQuantileError(SharpBoundsError):
    """Supplied value is not a valid balancing quantile of the cell."""


class SeparationError(SharpBoundsError):
    """Logistic likelihood is unbounded (perfectly separated or single-class labels)."""


class SingularDesignError(SharpBoundsError):
    """Design matrix is rank deficient (collinear columns or too few rows)."""


class EmptySideError(SharpBoundsError):
    """No observations on one side of the cutoff within the bandwidth window."""


class UndefinedEstimandError(SharpBoundsError):
    """Estimand is undefined at the estimated manipulation share."""


class PropensityRangeError(SharpBoundsError):
    """Estimated propensity fell outside the open interval (0, 1)."""


class BootstrapUnstableError(SharpBoundsError):
    """Too many bootstrap draws failed to produce an estimate."""


class ConfigError(SharpBoundsError):
    """Invalid run configuration."""


class SchemaError(SharpBoundsError):
    """Input data file does not match the expected column schema."""
