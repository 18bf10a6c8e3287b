"""Errors raised while reading configuration files, records and result documents.

Readers never stop at the first problem: they gather every :class:`DataError` of a document
in an :class:`ErrorCollector` and raise them together as one exception group.
"""

import types
import typing
from collections import abc
from enum import Enum

from attrs import define, field

from ._compat import DataErrorGroup

from clusterlab.exceptions import LabException

if typing.TYPE_CHECKING:
    import sys

    if sys.version_info < (3, 11):
        from exceptiongroup import ExceptionGroup

__all__ = (
    "DataError",
    "DataErrorType",
    "DataKeyError",
    "DataPath",
    "DataTypeError",
    "DataValueError",
    "DataVersionError",
    "ErrorCollector",
    "UnknownKeyError",
    "describe_type",
    "iter_leaves",
)

DataPath: typing.TypeAlias = abc.Sequence[str | int]
"""Source, then table keys, list indices or ``line N`` markers."""
Typeish: typing.TypeAlias = type[object] | None
DataErrorType: typing.TypeAlias = "DataError | ExceptionGroup[DataErrorType]"

_TYPE_NAMES: abc.Mapping[type, str] = {
    bool: "a boolean",
    int: "an integer",
    float: "a number",
    str: "a string",
    list: "an array",
    dict: "a table",
}


def describe_type(type_: Typeish, /) -> str:
    """How a value of this type is written in TOML or JSON."""
    if type_ is None:
        return "nothing"

    if issubclass(type_, Enum):
        choices = ", ".join(repr(member.name.lower()) for member in type_)
        return f"one of {choices}"

    return _TYPE_NAMES.get(type_, type_.__name__)


def iter_leaves(exc: "DataErrorType", /) -> abc.Iterator["DataError"]:
    """Every individual error of a possibly nested group, depth first."""
    if isinstance(exc, DataError):
        yield exc
        return

    for inner in exc.exceptions:
        yield from iter_leaves(inner)


@define
class ErrorCollector:
    """Context manager swallowing data errors until :meth:`raise_if_any` is called."""

    found: list[DataErrorType] = field(factory=list)

    def add(self, exc: DataErrorType, /) -> None:
        self.found.append(exc)

    def raise_if_any(self, msg: str = "") -> None:
        if self.found:
            raise DataErrorGroup(msg, self.found) from None

    def __enter__(self) -> None:
        pass

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc_value: BaseException | None,
        tb: types.TracebackType | None,
        /,
    ) -> bool:
        if isinstance(exc_value, DataError | DataErrorGroup):
            self.add(exc_value)
            return True

        return False


def _render(at: DataPath, /) -> str:
    if not at:
        return ""

    first, *rest = at
    out = str(first)
    for part in rest:
        if isinstance(part, int):
            out += f"[{part}]"
        elif " " in part:
            out += f", {part}"
        else:
            out += f".{part}"
    return out


@define
class DataError(LabException):
    """Base of every problem found in input data."""

    at: DataPath = field(default=(), kw_only=True)
    msg: str = field(default="", init=False)

    @property
    def location(self) -> str:
        """``model.L``, ``circuit.layers[2]`` or ``records.csv, line 7``."""
        return _render(self.at)

    def __str__(self) -> str:
        return f"{self.location}: {self.msg}" if self.at else self.msg


@define
class DataValueError(DataError):
    msg: str


@define
class DataTypeError(DataError):
    received: Typeish | str
    expected: Typeish

    def __attrs_post_init__(self) -> None:
        got = (
            repr(self.received) if isinstance(self.received, str) else describe_type(self.received)
        )
        self.msg = f"Expected {describe_type(self.expected)}, got {got}"


@define
class DataKeyError(DataError):
    key: object

    def __attrs_post_init__(self) -> None:
        self.msg = f"Missing required key {self.key!r}"


@define
class UnknownKeyError(DataError):
    key: object

    def __attrs_post_init__(self) -> None:
        self.msg = f"Unknown key {self.key!r}"


@define
class DataVersionError(DataError):
    """Document of another kind, or written by a newer schema."""

    received: object
    expected: object | None = None

    def __attrs_post_init__(self) -> None:
        self.msg = f"Unsupported schema {self.received!r}"
        if self.expected is not None:
            self.msg += f", this version reads up to {self.expected!r}"
