"""Exception types shared across the package."""


class HierlabError(Exception):
    """Base class for all package errors."""


class GridMismatchError(HierlabError, ValueError):
    """Operands live on different periodic grids."""


class ToleranceError(HierlabError, ArithmeticError):
    """A numerical identity that must hold analytically failed its tolerance."""


class BlowUpError(HierlabError, ArithmeticError):
    """Time integration produced nonfinite or runaway values."""
