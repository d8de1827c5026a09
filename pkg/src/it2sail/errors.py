"""Exception types raised across the package."""


class AllRulesSilent(ValueError):
    """Every rule has a zero upper firing grade; no output can be inferred."""


class UnknownLabel(ValueError):
    """Wind configuration label outside A..I."""


class EmptyLog(ValueError):
    """A log or series needed for statistics has no samples."""


class EmptySeries(ValueError):
    pass


class InvalidOffset(ValueError):
    """Course vertical offset not one of the supported values."""


class CoincidentPoint(ValueError):
    """Bearing requested between two identical points."""


class ZeroDenominator(ArithmeticError):
    """Relative performance undefined because UM x BD is zero."""
