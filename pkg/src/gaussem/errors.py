"""Exception types shared across the package."""


class GaussemError(Exception):
    """Base class for package-specific failures."""


class DimensionMismatch(GaussemError, ValueError):
    """Operands live on configuration spaces of different sizes."""


class ResourceCapExceeded(GaussemError, ValueError):
    """Requested size is beyond an enumeration or matrix cap."""


class ValidationError(GaussemError, ValueError):
    """Structurally invalid input: bad weights, asymmetric matrix, bad tree, ..."""


class UnsupportedModel(GaussemError, ValueError):
    """The operation is undefined for this covariance kind."""


class MissingData(GaussemError, ValueError):
    """Required auxiliary data (e.g. custom sub-matrices) was not supplied."""
