"""Site- and block-dependent rotation angles of the variational ansatz."""

from __future__ import annotations

from collections import abc
from typing import Final
from typing_extensions import Self

import numpy as np
from attrs import Attribute, evolve, field, frozen, validators

from .enums.analysis import BlockMode
from .typeshed import FloatArray

__all__ = ("NUM_BLOCKS", "BlockParams", "ParamSchedule")

NUM_BLOCKS: Final = 5


@frozen(kw_only=True)
class BlockParams:
    """Angle model of one rotation layer: c, or a (D+1)^b + c."""

    mode: Final[BlockMode] = field(validator=validators.in_(BlockMode))
    a: Final[float] = field(default=0.0, converter=float)
    b: Final[float] = field(default=-1.0, converter=float)
    c: Final[float] = field(default=0.0, converter=float)

    @b.validator  # pyright: ignore[reportAttributeAccessIssue, reportUntypedFunctionDecorator]
    def _check_decay(self, _: object, value: float) -> None:
        if self.mode is BlockMode.POWERLAW and not value < 0:
            msg = f"Power-law exponent must be negative, got {value}"
            raise ValueError(msg)

    def angles(self, distances: abc.Sequence[int], /, epsilon: float = 0.0) -> FloatArray:
        """Angles for sites at the given boundary distances; epsilon shifts a up and c down."""
        if self.mode is BlockMode.UNIFORM:
            return np.full(len(distances), self.c)

        d = np.asarray(distances, dtype=np.float64)
        return (self.a + epsilon) * (d + 1) ** self.b + (self.c - epsilon)


def _check_per_block(
    instance: object, attribute: Attribute[tuple[object, ...]], value: tuple[object, ...]
) -> None:
    """One entry for every block."""
    if len(value) != NUM_BLOCKS:
        msg = f"Schedule needs {NUM_BLOCKS} {attribute.name}, got {len(value)}"
        raise ValueError(msg)


def _to_epsilons(value: abc.Iterable[float]) -> tuple[float, ...]:
    return tuple(float(v) for v in value)


@frozen(kw_only=True)
class ParamSchedule:
    """Rotation-angle model for all five blocks."""

    blocks: Final[tuple[BlockParams, ...]] = field(converter=tuple, validator=_check_per_block)
    epsilons: Final[tuple[float, ...]] = field(
        default=(0.0,) * NUM_BLOCKS,
        converter=_to_epsilons,
        validator=_check_per_block,
    )
    """Per-block shifts a -> a + eps, c -> c - eps; only meaningful for power-law blocks."""

    @classmethod
    def uniform(cls, offsets: abc.Iterable[float], /) -> Self:
        return cls(blocks=[BlockParams(mode=BlockMode.UNIFORM, c=c) for c in offsets])

    @classmethod
    def powerlaw(
        cls,
        amplitudes: abc.Iterable[float],
        exponents: abc.Iterable[float],
        offsets: abc.Iterable[float],
        /,
    ) -> Self:
        return cls(
            blocks=[
                BlockParams(mode=BlockMode.POWERLAW, a=a, b=b, c=c)
                for a, b, c in zip(amplitudes, exponents, offsets, strict=True)
            ]
        )

    @classmethod
    def zero(cls, mode: BlockMode = BlockMode.UNIFORM) -> Self:
        return cls(blocks=[BlockParams(mode=mode)] * NUM_BLOCKS)

    @property
    def is_uniform(self) -> bool:
        return all(block.mode is BlockMode.UNIFORM for block in self.blocks)

    @property
    def offsets(self) -> tuple[float, ...]:
        return tuple(block.c for block in self.blocks)

    def angles(self, distances: abc.Sequence[int], /) -> FloatArray:
        """Array of shape (5, L) with the angle of every site in every block."""
        return np.stack(
            [
                block.angles(distances, eps)
                for block, eps in zip(self.blocks, self.epsilons, strict=True)
            ]
        )

    def with_epsilons(self, epsilons: abc.Iterable[float], /) -> Self:
        return evolve(self, epsilons=epsilons)

    def with_offsets(self, offsets: abc.Iterable[float], /) -> Self:
        blocks = [evolve(block, c=c) for block, c in zip(self.blocks, offsets, strict=True)]
        return evolve(self, blocks=blocks)

    def absorbed(self) -> Self:
        """Fold the epsilon shifts into a and c."""
        blocks = [
            evolve(block, a=block.a + eps, c=block.c - eps)
            if block.mode is BlockMode.POWERLAW
            else block
            for block, eps in zip(self.blocks, self.epsilons, strict=True)
        ]
        return type(self)(blocks=blocks)
