"""Measurement records as CSV: ``setting_id, basis_string, bitstring, count``."""

import csv
import io
import typing
from collections import abc

from .exceptions import DataValueError, ErrorCollector
from .utils import assert_keys

from clusterlab.eht import MeasurementDataset
from clusterlab.enums.pauli import Pauli
from clusterlab.sim import Counts

__all__ = ("RECORD_COLUMNS", "dump_records", "to_dataset")

RECORD_COLUMNS: typing.Final = ("setting_id", "basis_string", "bitstring", "count")


def dump_records(dataset: MeasurementDataset, /) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(RECORD_COLUMNS)

    for setting, (bases, counts) in enumerate(zip(dataset.bases, dataset.counts, strict=True)):
        basis_string = "".join(pauli.name for pauli in bases)
        for bitstring in sorted(counts):
            writer.writerow((setting, basis_string, bitstring, counts[bitstring]))

    return buffer.getvalue()


def _int_field(value: str, /) -> int:
    if not value.strip().isdigit():
        msg = f"Expected a non-negative integer, got {value!r}"
        raise ValueError(msg)
    return int(value)


def to_dataset(
    text: str | abc.Iterable[str], /, *, source: str = "<records>"
) -> MeasurementDataset:
    """Rebuild a dataset from its CSV records; settings must be numbered 0, 1, ... in order."""
    lines = io.StringIO(text) if isinstance(text, str) else text
    reader = csv.DictReader(lines)
    errors = ErrorCollector()

    if tuple(reader.fieldnames or ()) != RECORD_COLUMNS:
        msg = f"Expected columns {', '.join(RECORD_COLUMNS)}, got {reader.fieldnames}"
        errors.add(DataValueError(msg, at=(source,)))
        errors.raise_if_any("Problems while reading measurement records:")

    bases: list[tuple[Pauli, ...]] = []
    counts: list[Counts] = []
    for number, row in enumerate(reader, 2):
        at = (source, f"line {number}")
        with errors:
            setting_raw, basis_string, bitstring, count_raw = assert_keys(
                tuple[str, str, str, str], row, *RECORD_COLUMNS, at=at
            )
            try:
                setting = _int_field(setting_raw)
                count = _int_field(count_raw)
                basis = tuple(Pauli.of_symbol(symbol) for symbol in basis_string)

            except (ValueError, KeyError) as exc:
                raise DataValueError(str(exc), at=at) from None

            if setting == len(bases):
                bases.append(basis)
                counts.append({})

            elif setting != len(bases) - 1 or basis != bases[-1]:
                msg = f"Setting {setting} out of order or with a changed basis"
                raise DataValueError(msg, at=at)

            if len(bitstring) != len(basis) or set(bitstring) - {"0", "1"}:
                msg = f"Bitstring {bitstring!r} does not match basis {basis_string!r}"
                raise DataValueError(msg, at=at)

            counts[-1][bitstring] = counts[-1].get(bitstring, 0) + count

    errors.raise_if_any("Problems while reading measurement records:")
    if not bases:
        raise DataValueError("No measurement records", at=(source,))

    shots = sum(counts[0].values())
    try:
        return MeasurementDataset(
            num_sites=len(bases[0]), bases=tuple(bases), counts=tuple(counts), shots=shots
        )

    except ValueError as exc:
        raise DataValueError(str(exc), at=(source,)) from None
