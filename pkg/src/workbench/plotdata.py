"""Tidy CSV tables for plotting, derived from the JSON results of earlier commands."""

import csv
import io
import logging
import typing
from collections import abc
from pathlib import Path

import numpy as np
from attrs import define, frozen

import labjson
from serial.reports import (
    EHT_SCHEMA,
    G_NOISE_SCHEMA,
    GFUNCTION_SCHEMA,
    PREP_SCHEMA,
    ZNE_SCHEMA,
    load_document,
)

from .manifest import ArtifactWriter

from clusterlab.exceptions import LabException

__all__ = ("PLOT_TARGETS", "MissingInputsError", "PlotTarget", "emit_plotdata", "to_csv")

logger = logging.getLogger(__name__)

AnyDict: typing.TypeAlias = abc.Mapping[str, typing.Any]
Row: typing.TypeAlias = tuple[object, ...]


@define(auto_exc=True)
class MissingInputsError(LabException, FileNotFoundError):
    missing: list[tuple[str, Path]]
    """(target, expected input) pairs."""

    def __str__(self) -> str:
        lines = (f"  {target}: {path}" for target, path in self.missing)
        return "Missing inputs for plot data:\n" + "\n".join(lines)


@frozen
class PlotTarget:
    columns: tuple[str, ...]
    source: tuple[str, str]
    """Command directory and file name of the input document."""
    schema: tuple[str, int]
    rows: abc.Callable[[AnyDict], abc.Iterable[Row]]


def _energy_distance_rows(doc: AnyDict, /) -> abc.Iterator[Row]:
    for record in doc["records"]:
        yield record["L"], record["boundary"], record["energy_distance"]


def _overlap_rows(doc: AnyDict, /) -> abc.Iterator[Row]:
    for record in doc["records"]:
        for level, value in enumerate(record["overlaps"]):
            yield record["L"], record["boundary"], level, value


def _g_rows(doc: AnyDict, /) -> abc.Iterator[Row]:
    for result in doc["results"]:
        yield result["L"], result["g"], result["g_err"]


def _level_rows(doc: AnyDict, /) -> abc.Iterator[Row]:
    size = doc["window_size"]
    for source, key in (("eht", "levels"), ("oracle", "oracle_levels")):
        levels = [w[key] for w in doc["windows"]]
        if not levels:
            continue

        depth = min(len(row) for row in levels)
        table = np.array([row[:depth] for row in levels], dtype=np.float64)
        for index in range(depth):
            column = table[:, index]
            yield size, index, float(column.mean()), float(column.std()), source


def _zne_rows(doc: AnyDict, /) -> abc.Iterator[Row]:
    for point in doc["points"]:
        yield point["F"], point["value"], point["sigma"]


def _noise_rows(doc: AnyDict, /) -> abc.Iterator[Row]:
    for row in doc["rows"]:
        yield row["L"], row["p_cz"], row["g"], row["raw_overlap"]


PLOT_TARGETS: typing.Final[abc.Mapping[str, PlotTarget]] = {
    "energy-distance": PlotTarget(
        ("L", "boundary", "epsilon_E"),
        ("prepare", "prep-report.json"),
        PREP_SCHEMA,
        _energy_distance_rows,
    ),
    "overlaps": PlotTarget(
        ("L", "boundary", "level", "overlap"),
        ("prepare", "prep-report.json"),
        PREP_SCHEMA,
        _overlap_rows,
    ),
    "g-scaling": PlotTarget(
        ("L", "g", "g_err"), ("gfunction", "gfunction.json"), GFUNCTION_SCHEMA, _g_rows
    ),
    "entanglement-levels": PlotTarget(
        ("window_size", "level_index", "xi_mean", "xi_std", "source"),
        ("eht", "eht.json"),
        EHT_SCHEMA,
        _level_rows,
    ),
    "zne": PlotTarget(("F", "value", "sigma"), ("zne", "zne.json"), ZNE_SCHEMA, _zne_rows),
    "noise-robustness": PlotTarget(
        ("L", "p_cz", "g", "raw_overlap"),
        ("gfunction", "g-noise.json"),
        G_NOISE_SCHEMA,
        _noise_rows,
    ),
}


def to_csv(columns: abc.Sequence[str], rows: abc.Iterable[Row], /) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(dict(zip(columns, row, strict=True)))
    return buffer.getvalue()


def emit_plotdata(
    results: Path, writer: ArtifactWriter, /, targets: abc.Iterable[str] = PLOT_TARGETS
) -> list[Path]:
    """Write ``<target>.csv`` for every target whose input exists below ``results``.

    Targets with a missing input are collected and reported together after the others are
    written.
    """
    missing: list[tuple[str, Path]] = []
    written: list[Path] = []
    for name in targets:
        target = PLOT_TARGETS[name]
        path = results.joinpath(*target.source)
        if not path.is_file():
            missing.append((name, path))
            continue

        doc = load_document(labjson.loads(path.read_bytes()), target.schema, source=str(path))
        text = to_csv(target.columns, target.rows(doc))
        written.append(writer.write_text(f"{name}.csv", text, stage="plotdata"))
        logger.debug("Plot data %s from %s", name, path)

    if missing:
        raise MissingInputsError(missing)

    return written
