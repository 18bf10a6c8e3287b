"""JSON documents for analysis results.

Every document carries ``"schema": "<kind>/<version>"``. Complex numbers are stored as
``[re, im]`` pairs.
"""

import typing
from collections import abc

from .circuits import dump_schedule, to_schedule
from .exceptions import DataPath, DataValueError, ErrorCollector
from .utils import assert_key, assert_keys, check_schema, schema_tag

from clusterlab.entanglement import CentralChargeFit
from clusterlab.enums.analysis import BlockMode
from clusterlab.enums.model import Boundary
from clusterlab.model import CutConfig, ModelParams
from clusterlab.prep import ExtrapolationFit, PrepReport, ScheduleExtrapolation, SizeRecord
from clusterlab.schedule import ParamSchedule

if typing.TYPE_CHECKING:
    from clusterlab.eht import NoiseComparison, WindowResult
    from clusterlab.gfunction import GFunctionResult, GScalingRow
    from clusterlab.mitigation import ZneStudy
    from clusterlab.oracle import LowLying

__all__ = (
    "EHT_SCHEMA",
    "ENTROPY_SCHEMA",
    "GFUNCTION_SCHEMA",
    "G_NOISE_SCHEMA",
    "ORACLE_SCHEMA",
    "PREP_SCHEMA",
    "ZNE_SCHEMA",
    "dump_entropy",
    "dump_g_noise",
    "dump_g_results",
    "dump_model",
    "dump_oracle",
    "dump_prep_report",
    "dump_window_results",
    "dump_zne_study",
    "load_document",
    "to_model",
    "to_prep_report",
)

AnyDict: typing.TypeAlias = abc.Mapping[str, typing.Any]
JsonDict: typing.TypeAlias = dict[str, typing.Any]

PREP_SCHEMA: typing.Final = ("prep-report", 1)
ORACLE_SCHEMA: typing.Final = ("oracle", 1)
GFUNCTION_SCHEMA: typing.Final = ("gfunction", 1)
G_NOISE_SCHEMA: typing.Final = ("g-noise", 1)
EHT_SCHEMA: typing.Final = ("eht", 1)
ZNE_SCHEMA: typing.Final = ("zne", 1)
ENTROPY_SCHEMA: typing.Final = ("entropy", 1)


def _complex(value: complex, /) -> list[float]:
    return [value.real, value.imag]


def _floats(values: abc.Iterable[float], /) -> list[float]:
    return [float(v) for v in values]


def load_document(data: AnyDict, schema: tuple[str, int], /, *, source: str = "") -> AnyDict:
    """Check the schema tag of a parsed document and hand it back."""
    check_schema(data, *schema, at=(source,) if source else ())
    return data


# model ------------------------------------------------------------------------------------


def dump_model(p: ModelParams, c: CutConfig | None = None, /) -> JsonDict:
    out: JsonDict = {
        "L": p.L,
        "J": p.J,
        "g": p.g,
        "h": p.h,
        "boundary": p.boundary.name.lower(),
    }
    if c is not None:
        out["cut_a"] = c.cut_a.name.lower()
        out["cut_b"] = c.cut_b.name.lower()
    return out


def to_model(data: AnyDict, /, *, at: DataPath = ()) -> ModelParams:
    L, J, g, h, boundary = assert_keys(
        tuple[int, float, float, float, Boundary], data, "L", "J", "g", "h", "boundary", at=at
    )
    try:
        return ModelParams(L=L, J=J, g=g, h=h, boundary=boundary)

    except ValueError as exc:
        raise DataValueError(str(exc), at=at) from None


# prep -------------------------------------------------------------------------------------


def _dump_fit(fit: ExtrapolationFit, /) -> JsonDict:
    return {"a": fit.a, "b": fit.b, "c": fit.c, "d": fit.d, "residual": fit.residual}


def _to_fit(data: AnyDict, /, *, at: DataPath) -> ExtrapolationFit:
    a, b, c, d, residual = assert_keys(
        tuple[float, float, float, float, float], data, "a", "b", "c", "d", "residual", at=at
    )
    return ExtrapolationFit(a=a, b=b, c=c, d=d, residual=residual)


def _to_fits(data: AnyDict, key: str, /, *, at: DataPath) -> tuple[ExtrapolationFit, ...]:
    raw = assert_key(list[dict[str, typing.Any]], data, key, at=at)
    errors = ErrorCollector()
    fits: list[ExtrapolationFit] = []
    for i, item in enumerate(raw):
        with errors:
            fits.append(_to_fit(item, at=(*at, key, i)))

    errors.raise_if_any()
    return tuple(fits)


def _dump_record(record: SizeRecord, /) -> JsonDict:
    return {
        "L": record.L,
        "boundary": record.boundary.name.lower(),
        "schedule": dump_schedule(record.schedule),
        "energy_distance": record.energy_distance,
        "overlaps": _floats(record.overlaps),
        "trace": _floats(record.trace),
        "extrapolated": record.extrapolated,
    }


def _to_record(data: AnyDict, /, *, at: DataPath) -> SizeRecord:
    L, boundary, energy_distance, overlaps = assert_keys(
        tuple[int, Boundary, float, list[float]],
        data,
        "L",
        "boundary",
        "energy_distance",
        "overlaps",
        at=at,
    )
    raw_schedule = assert_key(dict[str, typing.Any], data, "schedule", at=at)
    schedule = to_schedule(raw_schedule, at=(*at, "schedule"))
    return SizeRecord(
        L=L,
        boundary=boundary,
        schedule=schedule,
        energy_distance=energy_distance,
        overlaps=tuple(overlaps),
        trace=tuple(data.get("trace", ())),
        extrapolated=bool(data.get("extrapolated", False)),
    )


def dump_prep_report(report: PrepReport, /) -> JsonDict:
    extrapolation = report.extrapolation
    return {
        "schema": schema_tag(*PREP_SCHEMA),
        "boundary": report.boundary.name.lower(),
        "base": dump_schedule(report.base),
        "records": [_dump_record(r) for r in report.records],
        "extrapolation": None
        if extrapolation is None
        else {
            "mode": extrapolation.mode.name.lower(),
            "offsets": [_dump_fit(f) for f in extrapolation.offsets],
            "amplitudes": [_dump_fit(f) for f in extrapolation.amplitudes],
            "exponents": _floats(extrapolation.exponents),
        },
    }


def to_prep_report(data: AnyDict, /, *, at: DataPath = ()) -> PrepReport:
    """Rebuild a prep report, including the extrapolation used for unoptimized sizes."""
    check_schema(data, *PREP_SCHEMA, at=at)
    errors = ErrorCollector()
    boundary: Boundary | None = None
    base: ParamSchedule | None = None
    with errors:
        boundary = assert_key(Boundary, data, "boundary", at=at)
    with errors:
        raw_base = assert_key(dict[str, typing.Any], data, "base", at=at)
        base = to_schedule(raw_base, at=(*at, "base"))

    records: list[SizeRecord] = []
    for i, raw in enumerate(assert_key(list[dict[str, typing.Any]], data, "records", at=at)):
        with errors:
            records.append(_to_record(raw, at=(*at, "records", i)))

    extrapolation: ScheduleExtrapolation | None = None
    if (raw_fit := data.get("extrapolation")) is not None:
        fit_at = (*at, "extrapolation")
        with errors:
            extrapolation = ScheduleExtrapolation(
                mode=assert_key(BlockMode, raw_fit, "mode", at=fit_at),
                offsets=_to_fits(raw_fit, "offsets", at=fit_at),
                amplitudes=_to_fits(raw_fit, "amplitudes", at=fit_at),
                exponents=tuple(assert_key(list[float], raw_fit, "exponents", at=fit_at)),
            )

    errors.raise_if_any("Problems while reading prep report:")
    assert boundary is not None
    assert base is not None
    return PrepReport(
        boundary=boundary,
        base=base,
        records=records,
        extrapolation=extrapolation,
    )


# oracle -----------------------------------------------------------------------------------


def dump_oracle(p: ModelParams, c: CutConfig, levels: "LowLying", /, **extra: object) -> JsonDict:
    return {
        "schema": schema_tag(*ORACLE_SCHEMA),
        "model": dump_model(p, c),
        "energies": _floats(levels.energies),
        "exact": levels.exact,
        "converged": levels.converged,
        **extra,
    }


# g-function -------------------------------------------------------------------------------


def _dump_g(L: int, result: "GFunctionResult", /) -> JsonDict:
    return {
        "L": L,
        "g": result.g,
        "g_err": result.g_err,
        "valid": result.valid,
        "mode": result.mode.name.lower(),
        "sign_resolution": None
        if result.sign_resolution is None
        else result.sign_resolution.name.lower(),
        "contributions": dict(result.contributions),
        "plain": {k: _complex(v) for k, v in result.plain.items()},
        "flipped": {k: _complex(v) for k, v in result.flipped.items()},
        "denominators": dict(result.denominators),
        "projector_norm": result.projector_norm,
        "symmetry_defect": result.symmetry_defect,
    }


def dump_g_results(
    results: abc.Mapping[int, "GFunctionResult"],
    /,
    *,
    model: AnyDict,
    boundaries: abc.Sequence[str],
) -> JsonDict:
    return {
        "schema": schema_tag(*GFUNCTION_SCHEMA),
        "model": dict(model),
        "boundaries": list(boundaries),
        "results": [_dump_g(L, results[L]) for L in sorted(results)],
    }


def dump_g_noise(rows: abc.Sequence["GScalingRow"], /, *, model: AnyDict) -> JsonDict:
    return {
        "schema": schema_tag(*G_NOISE_SCHEMA),
        "model": dict(model),
        "rows": [
            {
                "L": row.L,
                "p_cz": row.p_cz,
                "g": row.g,
                "g_err": row.g_err,
                "raw_overlap": row.raw_overlap,
            }
            for row in rows
        ],
    }


# eht --------------------------------------------------------------------------------------


def dump_window_results(
    results: abc.Sequence["WindowResult"],
    /,
    *,
    model: AnyDict,
    window_size: int,
    noise: abc.Sequence["NoiseComparison"] = (),
) -> JsonDict:
    return {
        "schema": schema_tag(*EHT_SCHEMA),
        "model": dict(model),
        "window_size": window_size,
        "windows": [
            {
                "sites": list(r.window),
                "zz": _floats(r.coeffs.zz),
                "zxz": _floats(r.coeffs.zxz),
                "x": _floats(r.coeffs.x),
                "levels": _floats(r.levels),
                "oracle_levels": _floats(r.oracle_levels),
                "fidelity": r.fidelity,
                "loss": r.loss,
            }
            for r in results
        ],
        "noise_robustness": [
            {"p": n.p, "reconstructed": n.reconstructed, "raw": n.raw} for n in noise
        ],
    }


# zne --------------------------------------------------------------------------------------


def dump_zne_study(study: "ZneStudy", /, *, model: AnyDict, noise: AnyDict) -> JsonDict:
    estimate = study.estimate
    return {
        "schema": schema_tag(*ZNE_SCHEMA),
        "model": dict(model),
        "noise": dict(noise),
        "points": [{"F": p.factor, "value": p.value, "sigma": p.sigma} for p in study.points],
        "rows": [{"F": f, "twirl": t, "value": v} for f, t, v in study.rows],
        "estimate": None
        if estimate is None
        else {
            "value": estimate.value,
            "sigma": estimate.sigma,
            "model": estimate.model.name.lower(),
            "parameters": _floats(estimate.parameters),
        },
        "bootstrap_sigma": study.bootstrap_sigma,
        "unmitigated": study.unmitigated,
        "noiseless": study.noiseless,
    }


# entropy ----------------------------------------------------------------------------------


def dump_entropy(
    profile: abc.Sequence[float], fit: CentralChargeFit | None, /, *, model: AnyDict
) -> JsonDict:
    return {
        "schema": schema_tag(*ENTROPY_SCHEMA),
        "model": dict(model),
        "profile": [{"l": cut, "S": s} for cut, s in enumerate(_floats(profile), 1)],
        "fit": None
        if fit is None
        else {
            "central_charge": fit.central_charge,
            "offset": fit.offset,
            "residual": fit.residual,
            "window": list(fit.window),
        },
    }
