"""Exception types shared across the package."""


class SphereWarpError(Exception):
    """Base class for all package-specific errors."""


class DataError(SphereWarpError):
    """Invalid, missing, or malformed input data."""


class DataFormatError(DataError):
    """A data file does not match any accepted schema."""


class EmptyDataError(DataError):
    """An operation that needs observations received none."""


class DegenerateDataError(DataError):
    """Data too degenerate to determine a transformation (rank-deficient)."""


class LengthMismatchError(DataError):
    """Paired sequences have different lengths."""


class ModelFormatError(DataError):
    """A serialized model file is malformed or inconsistent."""


class NumericalError(SphereWarpError):
    """A numerical precondition failed."""


class AntipodalError(NumericalError):
    """Inverse exponential map requested between (near-)antipodal points."""


class PoleError(NumericalError):
    """Polar-coordinate operation at a chart singularity (theta in {0, pi})."""


class SingularBaseError(NumericalError):
    """Roughness of the current map is infinite; gradient is undefined."""
