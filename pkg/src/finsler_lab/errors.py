"""Exception hierarchy shared by every module."""


class FinslerError(Exception):
    """Base class for all library errors."""


class DomainError(FinslerError, ValueError):
    """A point lies outside the validity domain of a metric or field."""


class SlitBundleError(DomainError):
    """The tangent vector is zero; only the slit tangent bundle is allowed."""


class ConvexityError(FinslerError, ValueError):
    """The fundamental tensor failed to be positive definite."""


class FlagError(FinslerError, ValueError):
    """A flag is degenerate (transverse edge parallel to the flagpole)."""


class JetOrderError(FinslerError, ValueError):
    """A computation needs more derivative orders than the jets carry."""


class SeriesError(FinslerError, ValueError):
    """A time series is too short for the requested differencing."""
