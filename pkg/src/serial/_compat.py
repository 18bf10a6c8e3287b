# pyright: reportImportCycles=false
import sys
import typing

if sys.version_info < (3, 11):
    import tomli as tomllib
    from exceptiongroup import ExceptionGroup

else:
    import tomllib

if typing.TYPE_CHECKING:
    from .exceptions import DataErrorType

__all__ = ("DataErrorGroup", "tomllib")

DataErrorGroup: typing.Final[type[ExceptionGroup["DataErrorType"]]] = ExceptionGroup
"""`ExceptionGroup` as seen by the type checker when it holds parse errors.

A parametrized generic cannot appear in an `except` clause, so readers catch this alias
and still get typed leaves. Kept apart from `exceptions` so pyright uses the annotation.
"""
