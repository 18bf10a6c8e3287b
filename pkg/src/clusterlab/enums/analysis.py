from enum import auto, unique

from ._base import PartialEnum

__all__ = ("BlockMode", "GMode", "GradientKind", "SignResolution", "ZneModel")


@unique
class BlockMode(int, PartialEnum):
    """How rotation angles of an ansatz block depend on the site."""

    UNIFORM = auto()
    POWERLAW = auto()


@unique
class GMode(int, PartialEnum):
    """Where the overlaps entering the g-function come from."""

    EXACT = auto()
    PROTOCOL = auto()


@unique
class SignResolution(int, PartialEnum):
    """How relative signs of protocol brackets are obtained."""

    SIMULATION = auto()
    ASSUME_POSITIVE = auto()


@unique
class ZneModel(int, PartialEnum):
    LINEAR = auto()
    EXPONENTIAL = auto()


@unique
class GradientKind(int, PartialEnum):
    ANALYTIC = auto()
    FINITE_DIFFERENCE = auto()
