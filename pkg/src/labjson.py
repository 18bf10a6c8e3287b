"""JSON codec for artifacts.

orjson is used when importable, the standard library otherwise. Both paths sort keys and
convert numpy scalars and arrays, so equal results always serialize to equal bytes.
"""

import re
from collections import abc
from typing import Any

import numpy as np

__all__ = ("dumps", "loads")

# numbers that the indenting encoders put one per line
_NUMBER_ON_OWN_LINE = re.compile(rb",\n\s+(-?[\d.eE+-]+)")


def _numpy_to_builtin(obj: object, /) -> object:
    if isinstance(obj, np.ndarray):
        return obj.tolist()

    if isinstance(obj, np.generic):
        return obj.item()

    msg = f"Object of type {type(obj).__name__} is not JSON serializable"
    raise TypeError(msg)


def _join_number_runs(data: bytes, /) -> bytes:
    return _NUMBER_ON_OWN_LINE.sub(lambda match: b", " + match[1], data)


try:
    import orjson

except ImportError:
    import json

    def _encode(obj: object, indent: bool) -> bytes:
        text = json.dumps(
            obj, default=_numpy_to_builtin, sort_keys=True, indent=2 if indent else None
        )
        return text.encode()

    _decode: abc.Callable[[str | bytes], Any] = json.loads

else:
    _OPTIONS = orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_SORT_KEYS

    def _encode(obj: object, indent: bool) -> bytes:
        option = _OPTIONS | orjson.OPT_INDENT_2 if indent else _OPTIONS
        return orjson.dumps(obj, default=_numpy_to_builtin, option=option)

    _decode = orjson.loads


def dumps(obj: object, /, *, indent: bool = False) -> bytes:
    """Serialize with sorted keys; indented output keeps numeric arrays on one line."""
    data = _encode(obj, indent)
    return _join_number_runs(data) if indent else data


def loads(data: str | bytes, /) -> Any:
    return _decode(data)
