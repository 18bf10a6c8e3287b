from enum import auto, unique

from ._base import PartialEnum

__all__ = ("Boundary", "CutKind")


@unique
class Boundary(int, PartialEnum):
    """Boundary condition of the chain."""

    PBC = auto()
    OBC = auto()


@unique
class CutKind(int, PartialEnum):
    """What happens at a cut site pair."""

    # fmt: off
    NONE = auto()
    UP   = auto()
    DOWN = auto()
    FREE = auto()
    # fmt: on

    @property
    def is_cut(self) -> bool:
        return self is not CutKind.NONE

    @property
    def pins(self) -> bool:
        """Whether the pair sites are pinned to a product state."""
        return self is CutKind.UP or self is CutKind.DOWN

    @property
    def sign(self) -> int:
        """Z eigenvalue imposed on pinned sites; 0 when nothing is pinned."""
        return {CutKind.UP: 1, CutKind.DOWN: -1}.get(self, 0)

    @property
    def letter(self) -> str:
        """One-letter code used in state labels such as ``u0`` or ``dd``."""
        return {CutKind.NONE: "0", CutKind.UP: "u", CutKind.DOWN: "d", CutKind.FREE: "f"}[self]
