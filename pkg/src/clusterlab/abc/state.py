import typing
from collections import abc
from typing import Protocol
from typing_extensions import Self

if typing.TYPE_CHECKING:
    from clusterlab.enums.pauli import Pauli
    from clusterlab.pauli import PauliSum
    from clusterlab.typeshed import FloatArray

__all__ = ("MeasurableState", "QuantumState")


class QuantumState(Protocol):
    """Interface shared by dense statevectors and matrix product states."""

    @property
    def num_sites(self) -> int: ...

    def expect(self, op: "PauliSum", /) -> complex:
        """<psi|op|psi> without any reality check."""
        ...

    def inner(self, other: Self, /) -> complex:
        """<self|other>."""
        ...

    def flipped(self) -> Self:
        """O_X |psi>, the global spin flip."""
        ...

    def entropy_profile(self) -> "FloatArray":
        """Von Neumann entropy of the first l sites, for l = 1..L-1."""
        ...


class MeasurableState(Protocol):
    """Anything a simulator returns: pure, mixed or an ensemble of trajectories."""

    @property
    def num_sites(self) -> int: ...

    def expect(self, op: "PauliSum", /) -> complex: ...

    def probabilities(self) -> "FloatArray":
        """Born probabilities of the computational basis states."""
        ...

    def rotated(self, bases: abc.Sequence["Pauli"], /) -> Self:
        """State after rotating each site so that its given basis is read out as Z."""
        ...
