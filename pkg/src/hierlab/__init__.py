"""Conserved quantities of the cubic NLS hierarchy and their numerical checks."""
from .errors import BlowUpError, GridMismatchError, HierlabError, ToleranceError
from .grid import GridFunction, PeriodicGrid

__version__ = "0.1.0"

__all__ = [
    "BlowUpError",
    "GridMismatchError",
    "HierlabError",
    "ToleranceError",
    "GridFunction",
    "PeriodicGrid",
]
