"""Binary MPS checkpoints for the oracle cache.

Layout: the magic bytes ``CLMPS``, a little-endian uint16 format version, then an ``.npz``
archive holding the site tensors ``t0 .. t{L-1}`` and a JSON metadata blob.
"""

import io
import struct
import typing
from collections import abc

import labjson
import numpy as np

from .exceptions import DataValueError, DataVersionError

from clusterlab.mps import MPSState

__all__ = ("CHECKPOINT_VERSION", "MAGIC", "dump_mps", "to_mps")

MAGIC: typing.Final = b"CLMPS"
CHECKPOINT_VERSION: typing.Final = 1
_HEADER: typing.Final = struct.Struct("<5sH")


def dump_mps(state: MPSState, /, metadata: abc.Mapping[str, object] | None = None) -> bytes:
    buffer = io.BytesIO()
    buffer.write(_HEADER.pack(MAGIC, CHECKPOINT_VERSION))
    arrays = {f"t{i}": tensor for i, tensor in enumerate(state.tensors)}
    meta = {"num_sites": state.num_sites, "center": state.center, **(metadata or {})}
    blob = np.frombuffer(labjson.dumps(meta), dtype=np.uint8)
    np.savez(buffer, meta=blob, **arrays)
    return buffer.getvalue()


def to_mps(
    data: bytes, /, *, source: str = "<checkpoint>"
) -> tuple[MPSState, dict[str, typing.Any]]:
    """Read a checkpoint back; returns the state and its metadata."""
    if len(data) < _HEADER.size:
        raise DataValueError("Truncated checkpoint", at=(source,))

    magic, version = _HEADER.unpack_from(data)
    if magic != MAGIC:
        msg = f"Not an MPS checkpoint (magic {magic!r})"
        raise DataValueError(msg, at=(source,))

    if version > CHECKPOINT_VERSION:
        raise DataVersionError(version, CHECKPOINT_VERSION, at=(source,))

    with np.load(io.BytesIO(data[_HEADER.size :]), allow_pickle=False) as archive:
        meta: dict[str, typing.Any] = labjson.loads(archive["meta"].tobytes())
        num_sites = meta["num_sites"]
        missing = [f"t{i}" for i in range(num_sites) if f"t{i}" not in archive]
        if missing:
            msg = f"Checkpoint lacks site tensors {', '.join(missing)}"
            raise DataValueError(msg, at=(source,))

        tensors = [np.asarray(archive[f"t{i}"], dtype=np.complex128) for i in range(num_sites)]

    return MPSState(tensors=tensors, center=meta["center"]), meta
