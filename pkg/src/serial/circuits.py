import typing
from collections import abc

from .exceptions import DataError, DataPath, DataValueError, ErrorCollector
from .utils import assert_key, assert_keys, assert_type, check_schema, schema_tag

from clusterlab.circuit import CircuitIR, CZLayer, Layer, PauliLayer, XLayer, YLayer
from clusterlab.enums.analysis import BlockMode
from clusterlab.enums.model import Boundary
from clusterlab.enums.pauli import Pauli
from clusterlab.exceptions import LabException
from clusterlab.schedule import BlockParams, ParamSchedule

__all__ = (
    "CIRCUIT_SCHEMA",
    "dump_circuit",
    "dump_layer",
    "dump_schedule",
    "to_circuit",
    "to_layer",
    "to_schedule",
)

CIRCUIT_SCHEMA: typing.Final = ("circuit", 1)

AnyDict: typing.TypeAlias = abc.Mapping[str, typing.Any]


def dump_layer(layer: Layer, /) -> dict[str, typing.Any]:
    match layer:
        case YLayer(angles=angles):
            return {"kind": "y", "angles": list(angles)}

        case CZLayer(pairs=pairs):
            return {"kind": "cz", "pairs": [list(pair) for pair in pairs]}

        case XLayer(sites=sites):
            return {"kind": "x", "sites": list(sites)}

        case PauliLayer(paulis=paulis):
            return {"kind": "pauli", "paulis": [[site, p.name] for site, p in paulis]}


def dump_circuit(c: CircuitIR, /) -> dict[str, typing.Any]:
    return {
        "schema": schema_tag(*CIRCUIT_SCHEMA),
        "num_sites": c.num_sites,
        "boundary": c.boundary.name.lower(),
        "layers": [dump_layer(layer) for layer in c.layers],
    }


def _to_pair(value: object, /, *, at: DataPath) -> tuple[int, int]:
    pair = assert_type(list[int], value, at=at)
    if len(pair) != 2:
        msg = f"Expected a pair [a, b] of sites, got {pair}"
        raise DataValueError(msg, at=at)

    return pair[0], pair[1]


def _to_factor(value: object, /, *, at: DataPath) -> tuple[int, Pauli]:
    pair = assert_type(list[typing.Any], value, at=at)
    if len(pair) != 2:
        msg = f"Expected a factor [site, symbol], got {pair}"
        raise DataValueError(msg, at=at)

    site = assert_type(int, pair[0], at=(*at, 0))
    return site, assert_type(Pauli, pair[1], at=(*at, 1))


def _build_layer(kind: str, data: AnyDict, /, *, at: DataPath) -> Layer:
    match kind:
        case "y":
            return YLayer(assert_key(list[float], data, "angles", at=at))

        case "cz":
            raw = assert_key(list[typing.Any], data, "pairs", at=at)
            return CZLayer([_to_pair(v, at=(*at, "pairs", i)) for i, v in enumerate(raw)])

        case "x":
            return XLayer(assert_key(list[int], data, "sites", at=at))

        case "pauli":
            raw = assert_key(list[typing.Any], data, "paulis", at=at)
            return PauliLayer(_to_factor(v, at=(*at, "paulis", i)) for i, v in enumerate(raw))

        case _:
            msg = f"Unknown layer kind {kind!r}; expected one of y, cz, x, pauli"
            raise DataValueError(msg, at=(*at, "kind"))


def to_layer(data: AnyDict, /, *, at: DataPath = ()) -> Layer:
    kind = assert_key(str, data, "kind", at=at)
    try:
        return _build_layer(kind, data, at=at)

    except DataError:
        raise

    except (LabException, ValueError) as exc:
        raise DataValueError(str(exc), at=at) from None


def to_circuit(data: AnyDict, /, *, at: DataPath = ()) -> CircuitIR:
    """Construct a CircuitIR from its JSON form."""
    check_schema(data, *CIRCUIT_SCHEMA, at=at)
    num_sites, boundary, raw_layers = assert_keys(
        tuple[int, Boundary, list[dict[str, typing.Any]]],
        data,
        "num_sites",
        "boundary",
        "layers",
        at=at,
    )
    errors = ErrorCollector()
    layers: list[Layer] = []
    for i, raw in enumerate(raw_layers):
        with errors:
            layers.append(to_layer(raw, at=(*at, "layers", i)))

    errors.raise_if_any("Problems while parsing circuit:")
    try:
        return CircuitIR(num_sites=num_sites, layers=layers, boundary=boundary)

    except LabException as exc:
        raise DataValueError(str(exc), at=at) from None


def dump_schedule(sched: ParamSchedule, /) -> dict[str, typing.Any]:
    return {
        "blocks": [
            {"mode": block.mode.name.lower(), "a": block.a, "b": block.b, "c": block.c}
            for block in sched.blocks
        ],
        "epsilons": list(sched.epsilons),
    }


def to_schedule(data: AnyDict, /, *, at: DataPath = ()) -> ParamSchedule:
    raw_blocks = assert_key(list[dict[str, typing.Any]], data, "blocks", at=at)
    errors = ErrorCollector()
    blocks: list[BlockParams] = []

    for i, raw in enumerate(raw_blocks):
        with errors:
            block_at = (*at, "blocks", i)
            mode, a, b, c = assert_keys(
                tuple[BlockMode, float, float, float], raw, "mode", "a", "b", "c", at=block_at
            )
            try:
                blocks.append(BlockParams(mode=mode, a=a, b=b, c=c))

            except ValueError as exc:
                raise DataValueError(str(exc), at=block_at) from None

    errors.raise_if_any("Problems while parsing schedule:")
    epsilons = data.get("epsilons", [0.0] * len(blocks))
    try:
        return ParamSchedule(blocks=blocks, epsilons=epsilons)

    except (ValueError, TypeError) as exc:
        raise DataValueError(str(exc), at=at) from None
