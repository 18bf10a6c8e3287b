from collections import abc

from attrs import define

from .typeshed import SitePair

__all__ = (
    "BoundaryError",
    "CircuitShapeError",
    "ConvergenceError",
    "DegenerateConfigurationError",
    "FitError",
    "InvalidCutError",
    "InvalidLayerError",
    "LabException",
    "NegativeValueError",
    "NonHermitianError",
    "SiteCountError",
    "SizeLimitError",
)


class LabException(Exception):
    """Base class for library exceptions."""

    __slots__ = ()


@define(auto_exc=True)
class NegativeValueError(LabException, ValueError):
    """Number cannot be negative."""

    number: float

    def __str__(self) -> str:
        return f"Number cannot be negative, got {self.number}"


@define(auto_exc=True)
class SiteCountError(LabException, ValueError):
    """Operation received an unsupported or mismatched number of sites."""

    received: int
    expected: str

    def __str__(self) -> str:
        return f"Expected {self.expected} sites, got {self.received}"


@define(auto_exc=True)
class BoundaryError(LabException, ValueError):
    """Operation does not support the given boundary condition."""

    msg: str

    def __str__(self) -> str:
        return self.msg


@define(auto_exc=True)
class InvalidCutError(LabException, ValueError):
    """Cut configuration cannot be realised on this chain."""

    msg: str

    def __str__(self) -> str:
        return self.msg


@define(auto_exc=True)
class InvalidLayerError(LabException, ValueError):
    """CZ layer with overlapping or malformed pairs."""

    pairs: abc.Sequence[SitePair]

    def __str__(self) -> str:
        return f"CZ pairs must be disjoint pairs of distinct sites, got {list(self.pairs)}"


@define(auto_exc=True)
class CircuitShapeError(LabException, ValueError):
    """Circuit does not have the structure an operation requires."""

    msg: str

    def __str__(self) -> str:
        return self.msg


@define(auto_exc=True)
class SizeLimitError(LabException, ValueError):
    """Problem is larger than the configured limit of a backend."""

    what: str
    size: int
    limit: int

    def __str__(self) -> str:
        return f"{self.what} of size {self.size} exceeds the limit of {self.limit}"


@define(auto_exc=True)
class NonHermitianError(LabException, ValueError):
    """Operator expected to be Hermitian is not."""

    residue: float

    def __str__(self) -> str:
        return f"Operator is not Hermitian: imaginary residue {self.residue:.3e}"


@define(auto_exc=True)
class DegenerateConfigurationError(LabException, ArithmeticError):
    """A quantity that must be bounded away from zero vanished."""

    quantity: str
    value: float

    def __str__(self) -> str:
        return f"Degenerate configuration: {self.quantity} = {self.value:.3e}"


@define(auto_exc=True)
class ConvergenceError(LabException, RuntimeError):
    """Iterative procedure failed to produce a usable result."""

    msg: str
    traces: abc.Sequence[abc.Sequence[float]] = ()

    def __str__(self) -> str:
        return self.msg


@define(auto_exc=True)
class FitError(LabException, ValueError):
    """Least-squares fit cannot be performed."""

    msg: str

    def __str__(self) -> str:
        return self.msg
