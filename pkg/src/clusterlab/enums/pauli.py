from enum import unique
from typing_extensions import Self

from ._base import PartialEnum

__all__ = ("Pauli",)


@unique
class Pauli(int, PartialEnum):
    """Single-site Pauli operators."""

    # fmt: off
    I = 0
    X = 1
    Y = 2
    Z = 3
    # fmt: on

    @property
    def flips(self) -> bool:
        """Whether the operator flips the computational basis state (X or Y)."""
        return self is Pauli.X or self is Pauli.Y

    @property
    def phases(self) -> bool:
        """Whether the operator carries a Z-type sign (Y or Z)."""
        return self is Pauli.Y or self is Pauli.Z

    @classmethod
    def of_symbol(cls, symbol: str, /) -> Self:
        return cls.of_name(symbol.strip())
