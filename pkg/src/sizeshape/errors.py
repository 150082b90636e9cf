"""Exception hierarchy shared across the package."""


class SizeShapeError(Exception):
    """Base class for all errors raised by this package."""


class GridMismatchError(SizeShapeError):
    """Two grid-valued objects do not live on the same abscissa grid."""


class DomainError(SizeShapeError, ValueError):
    """An argument lies outside its mathematical domain."""


class ConstraintError(SizeShapeError, ValueError):
    """Data violates its declared shape constraint."""


class InvalidDensityError(SizeShapeError, ValueError):
    """A density is not normalizable (integral <= 0)."""


class DegenerateDistributionError(SizeShapeError, ValueError):
    """A quantile function is too flat to define a distribution."""


class DegenerateSizeError(SizeShapeError, ValueError):
    """An estimated size component collapsed to (near) zero."""


class NearConstantError(SizeShapeError, ValueError):
    """A monotone trajectory has (near) zero range."""


class InsufficientDataError(SizeShapeError, ValueError):
    """Not enough observations to carry out an estimate."""


class IllConditionedDesignError(SizeShapeError, ValueError):
    """The covariate design matrix is singular or nearly so."""


class DegenerateDesignError(SizeShapeError, ValueError):
    """The covariate design carries no usable variation."""


class EmptyNeighborhoodError(SizeShapeError, ValueError):
    """No observations receive positive kernel weight at the target point."""


class UnderflowError(SizeShapeError, ValueError):
    """A normalizing constant underflowed to numerically zero."""


class ConfigError(SizeShapeError, ValueError):
    """A simulation or command configuration is invalid."""


class CsvFormatError(SizeShapeError, ValueError):
    """An input CSV file does not match the documented schema."""
