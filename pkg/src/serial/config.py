"""TOML run configuration.

Sections ``[run] [model] [dmrg] [prep] [noise] [eht] [zne] [gfunction]``; every key is
optional and falls back to the default of the record it configures. Unknown sections and
keys are errors. Problems are collected and reported together, anchored to the line of the
offending key.
"""

import re
import typing
from collections import abc
from typing import Any, Final

import attrs
from attrs import frozen

from ._compat import tomllib
from .exceptions import DataError, DataPath, DataValueError, ErrorCollector, UnknownKeyError
from .utils import assert_type, reject_unknown_keys

from clusterlab.circuit import PatternOrder
from clusterlab.dmrg import DmrgConfig
from clusterlab.eht import EhtConfig
from clusterlab.enums._base import PartialEnum
from clusterlab.enums.analysis import GMode, GradientKind, SignResolution, ZneModel
from clusterlab.enums.model import Boundary, CutKind
from clusterlab.exceptions import LabException
from clusterlab.gfunction import FREE_BOUNDARIES, PINNED_BOUNDARIES, ProtocolConfig
from clusterlab.mitigation import ZneConfig
from clusterlab.model import CutConfig, ModelParams
from clusterlab.prep import PrepConfig
from clusterlab.sim import NoiseSpec

__all__ = (
    "EhtSection",
    "GFunctionSection",
    "LabConfig",
    "ModelSection",
    "PrepSection",
    "RunSection",
    "config_reference",
    "key_lines",
    "line_of",
    "merged_tables",
    "to_lab_config",
)

Table: typing.TypeAlias = abc.Mapping[str, Any]


# sections ---------------------------------------------------------------------------------


@frozen(kw_only=True)
class RunSection:
    seed: Final[int] = 0
    """Root seed; every job derives its own stream from it."""
    workers: Final[int] = attrs.field(default=1, validator=attrs.validators.ge(1))
    """Size of the process pool; 1 runs jobs in-process."""
    out_dir: Final[str] = "results"
    log_level: Final[str] = "INFO"
    pipelines: Final[tuple[str, ...]] = ()
    """Commands executed by ``run``, in order."""


@frozen(kw_only=True)
class ModelSection:
    params: Final[ModelParams]
    cut: Final[CutConfig] = CutConfig()
    pattern_order: Final[PatternOrder] = "ab"


@frozen(kw_only=True)
class PrepSection:
    config: Final[PrepConfig] = PrepConfig()
    sizes: Final[tuple[int, ...]] = (8, 10, 12, 14, 16, 18, 20)
    validate: Final[tuple[int, ...]] = (24, 32, 48)
    """Sizes reached by extrapolated schedules only."""
    base_size: Final[int] = 8


@frozen(kw_only=True)
class EhtSection:
    config: Final[EhtConfig] = EhtConfig()
    window_size: Final[int] = 8
    windows: Final[int] = 10
    noise_levels: Final[tuple[float, ...]] = ()
    """Global depolarizing strengths for the noise-robustness comparison."""


@frozen(kw_only=True)
class GFunctionSection:
    protocol: Final[ProtocolConfig] = ProtocolConfig()
    mode: Final[GMode] = GMode.EXACT
    sizes: Final[tuple[int, ...]] = (8, 12, 16)
    boundaries: Final[tuple[str, ...]] = PINNED_BOUNDARIES
    noise_rates: Final[tuple[float, ...]] = (0.0, 0.002, 0.005, 0.01)
    """CZ depolarizing rates of the noise-robustness sweep."""


@frozen(kw_only=True)
class LabConfig:
    run: Final[RunSection] = RunSection()
    model: Final[ModelSection] = ModelSection(params=ModelParams(L=12))
    dmrg: Final[DmrgConfig] = DmrgConfig()
    prep: Final[PrepSection] = PrepSection()
    noise: Final[NoiseSpec] = NoiseSpec()
    eht: Final[EhtSection] = EhtSection()
    zne: Final[ZneConfig] = ZneConfig()
    gfunction: Final[GFunctionSection] = GFunctionSection()


# key tables -------------------------------------------------------------------------------


def _default_of(cls: type, name: str, /) -> object:
    default = attrs.fields_dict(cls)[name].default
    if isinstance(default, attrs.Factory):  # pyright: ignore[reportUnnecessaryIsInstance]
        return default.factory()  # pyright: ignore[reportCallIssue]
    return default


@frozen
class _Key:
    name: str
    type: Any
    default: object
    doc: str


def _keys_of(cls: type, *specs: tuple[str, Any, str]) -> tuple[_Key, ...]:
    return tuple(_Key(name, type_, _default_of(cls, name), doc) for name, type_, doc in specs)


_RUN_KEYS = _keys_of(
    RunSection,
    ("seed", int, "root seed of every random stream"),
    ("workers", int, "worker processes for independent jobs"),
    ("out_dir", str, "directory receiving artifacts and the manifest"),
    ("log_level", str, "DEBUG, INFO, WARNING or ERROR"),
    ("pipelines", list[str], "commands executed by `run`, in order"),
)
_MODEL_KEYS = (
    _Key("L", int, 12, "number of sites"),
    *_keys_of(
        ModelParams,
        ("J", float, "cluster coupling"),
        ("g", float, "Ising coupling"),
        ("h", float, "transverse field"),
        ("boundary", Boundary, "pbc or obc"),
    ),
    _Key("cut_a", CutKind, CutKind.NONE, "cut at sites (0, L-1): none, up, down or free"),
    _Key("cut_b", CutKind, CutKind.NONE, "cut at sites (L/2-1, L/2)"),
    _Key("cz_pattern_order", str, "ab", "entangler order of the ansatz, ab or ba"),
)
_DMRG_KEYS = _keys_of(
    DmrgConfig,
    ("chi_max", int, "largest bond dimension"),
    ("max_sweeps", int, "sweep limit"),
    ("min_sweeps", int, "sweeps done before checking convergence"),
    ("energy_tolerance", float, "energy change that ends the sweeps"),
    ("penalty", float, "penalty on previously found states"),
    ("svd_cutoff", float, "discarded singular weight per split"),
    ("initial_chi", int, "bond dimension of the random starting state"),
)
_PREP_KEYS = (
    *_keys_of(
        PrepConfig,
        ("restarts", int, "random restarts of the energy phase"),
        ("init_range", float, "half-width of random starting angles"),
        ("fd_step", float, "finite-difference step of gradients"),
        ("exponent_bounds", list[float], "allowed range of power-law exponents"),
        ("shift_bounds", list[float], "allowed range of the extrapolation shift d"),
        ("fit_residual_threshold", float, "extrapolation residual that triggers a warning"),
        ("max_iterations", int, "optimizer iteration limit"),
        ("chi_max", int, "bond dimension of MPS circuit simulation"),
    ),
    *_keys_of(
        PrepSection,
        ("sizes", list[int], "sizes optimized directly"),
        ("validate", list[int], "sizes reached by extrapolated schedules only"),
        ("base_size", int, "size of the energy phase"),
    ),
)
_NOISE_KEYS = _keys_of(
    NoiseSpec,
    ("cz_depolarizing", float, "two-qubit depolarizing rate after every CZ"),
    ("global_depolarizing", float, "state-level depolarizing strength"),
    ("cz_overrotation", float, "coherent ZZ angle after every CZ"),
    ("trajectories", int, "trajectories when the chain is too long for density matrices"),
)
_EHT_KEYS = (
    *_keys_of(
        EhtConfig,
        ("settings", int, "random measurement settings"),
        ("shots", int, "shots per setting"),
        ("restarts", int, "random restarts of the fit"),
        ("init_range", list[float], "range of random starting weights"),
        ("gradient", GradientKind, "analytic or finite_difference"),
        ("eigenpairs", int, "eigenpairs kept for windows above full_diagonalization"),
        ("full_diagonalization", int, "largest window diagonalized in full"),
        ("fd_step", float, "finite-difference step"),
        ("max_iterations", int, "optimizer iteration limit"),
        ("snapshot_every", int, "iterations between recorded learning stages"),
    ),
    *_keys_of(
        EhtSection,
        ("window_size", int, "sites per subsystem window"),
        ("windows", int, "number of windows, spaced uniformly around the chain"),
        ("noise_levels", list[float], "depolarizing strengths for the robustness check"),
    ),
)
_ZNE_KEYS = (
    *_keys_of(
        ZneConfig,
        ("factors", list[float], "noise scale factors"),
        ("twirls", int, "Pauli-twirled instances per factor"),
        ("model", ZneModel, "linear or exponential"),
        ("resamples", int, "bootstrap resamples"),
    ),
    _Key("shots", int, None, "shots per measurement group; unset for exact expectations"),
)
_GFUNCTION_KEYS = (
    *_keys_of(
        GFunctionSection,
        ("mode", GMode, "exact or protocol"),
        ("sizes", list[int], "chain lengths"),
        ("noise_rates", list[float], "CZ depolarizing rates of the robustness sweep"),
    ),
    _Key("boundaries", str, "pinned", "pinned (u, d) or free (f) cuts"),
    _Key("shots", int, None, "shots per overlap circuit; unset for exact probabilities"),
    *_keys_of(
        ProtocolConfig,
        ("sign_resolution", SignResolution, "simulation or assume_positive"),
        ("resamples", int, "bootstrap resamples for g_err"),
    ),
)

_SECTIONS: Final[abc.Mapping[str, tuple[_Key, ...]]] = {
    "run": _RUN_KEYS,
    "model": _MODEL_KEYS,
    "dmrg": _DMRG_KEYS,
    "prep": _PREP_KEYS,
    "noise": _NOISE_KEYS,
    "eht": _EHT_KEYS,
    "zne": _ZNE_KEYS,
    "gfunction": _GFUNCTION_KEYS,
}


# parsing ----------------------------------------------------------------------------------


def _read_section(name: str, table: Table, /) -> dict[str, Any]:
    """Validated values of one section, defaults filled in."""
    keys = _SECTIONS[name]
    reject_unknown_keys(table, [key.name for key in keys], at=(name,))
    errors = ErrorCollector()
    values: dict[str, Any] = {}

    for key in keys:
        if key.name not in table:
            values[key.name] = key.default
            continue

        with errors:
            value = assert_type(key.type, table[key.name], at=(name, key.name))
            values[key.name] = tuple(value) if isinstance(value, list) else value

    errors.raise_if_any()
    return values


def _pair(value: tuple[float, ...], /, *, at: DataPath) -> tuple[float, float]:
    if len(value) != 2:
        msg = f"Expected [low, high], got {list(value)}"
        raise DataValueError(msg, at=at)
    return value[0], value[1]


_CONSTRUCTION_ERRORS = (LabException, ValueError, TypeError)


def _build(name: str, factory: abc.Callable[[], object], /) -> Any:
    try:
        return factory()

    except DataError:
        raise

    except _CONSTRUCTION_ERRORS as exc:
        raise DataValueError(str(exc), at=(name,)) from None


def _to_model(v: dict[str, Any]) -> ModelSection:
    if v["cz_pattern_order"] not in ("ab", "ba"):
        msg = f"Expected 'ab' or 'ba', got {v['cz_pattern_order']!r}"
        raise DataValueError(msg, at=("model", "cz_pattern_order"))

    return ModelSection(
        params=ModelParams(L=v["L"], J=v["J"], g=v["g"], h=v["h"], boundary=v["boundary"]),
        cut=CutConfig(cut_a=v["cut_a"], cut_b=v["cut_b"]),
        pattern_order=v["cz_pattern_order"],
    )


def _to_prep(v: dict[str, Any], seed: int) -> PrepSection:
    config = PrepConfig(
        restarts=v["restarts"],
        init_range=v["init_range"],
        fd_step=v["fd_step"],
        exponent_bounds=_pair(v["exponent_bounds"], at=("prep", "exponent_bounds")),
        shift_bounds=_pair(v["shift_bounds"], at=("prep", "shift_bounds")),
        fit_residual_threshold=v["fit_residual_threshold"],
        max_iterations=v["max_iterations"],
        chi_max=v["chi_max"],
        seed=seed,
    )
    return PrepSection(
        config=config, sizes=v["sizes"], validate=v["validate"], base_size=v["base_size"]
    )


def _to_eht(v: dict[str, Any], seed: int) -> EhtSection:
    config = EhtConfig(
        settings=v["settings"],
        shots=v["shots"],
        restarts=v["restarts"],
        init_range=_pair(v["init_range"], at=("eht", "init_range")),
        gradient=v["gradient"],
        eigenpairs=v["eigenpairs"],
        full_diagonalization=v["full_diagonalization"],
        fd_step=v["fd_step"],
        max_iterations=v["max_iterations"],
        snapshot_every=v["snapshot_every"],
        seed=seed,
    )
    return EhtSection(
        config=config,
        window_size=v["window_size"],
        windows=v["windows"],
        noise_levels=v["noise_levels"],
    )


def _to_gfunction(v: dict[str, Any], seed: int) -> GFunctionSection:
    boundaries = {"pinned": PINNED_BOUNDARIES, "free": FREE_BOUNDARIES}.get(v["boundaries"])
    if boundaries is None:
        msg = f"Expected 'pinned' or 'free', got {v['boundaries']!r}"
        raise DataValueError(msg, at=("gfunction", "boundaries"))

    protocol = ProtocolConfig(
        shots=v["shots"],
        sign_resolution=v["sign_resolution"],
        resamples=v["resamples"],
        seed=seed,
    )
    return GFunctionSection(
        protocol=protocol,
        mode=v["mode"],
        sizes=v["sizes"],
        boundaries=boundaries,
        noise_rates=v["noise_rates"],
    )


def _parse(text: str, /, *, source: str) -> Table:
    try:
        return tomllib.loads(text)

    except tomllib.TOMLDecodeError as exc:
        errors = ErrorCollector([DataValueError(str(exc), at=(source,))])
        errors.raise_if_any(f"Problems while reading {source}:")
        raise


def merged_tables(
    text: str, /, *, source: str = "<config>", overrides: Table | None = None
) -> dict[str, Any]:
    """Raw TOML tables with command-line ``overrides`` laid over them, section by section."""
    data = dict(_parse(text, source=source))
    for section, values in (overrides or {}).items():
        existing = data.get(section)
        data[section] = {**existing, **values} if isinstance(existing, dict) else dict(values)
    return data


def to_lab_config(
    text: str, /, *, source: str = "<config>", overrides: Table | None = None
) -> LabConfig:
    """Parse and validate a TOML configuration; every problem is reported at once."""
    data = merged_tables(text, source=source, overrides=overrides)
    errors = ErrorCollector()

    for name, value in data.items():
        if name not in _SECTIONS:
            errors.add(UnknownKeyError(name))

        elif not isinstance(value, dict):
            errors.add(DataValueError("Expected a [section] table", at=(name,)))

    errors.raise_if_any(f"Problems while reading {source}:")

    values: dict[str, dict[str, Any]] = {}
    for name in _SECTIONS:
        with errors:
            values[name] = _read_section(name, data.get(name, {}))

    errors.raise_if_any(f"Problems while reading {source}:")

    run = values["run"]
    seed = run["seed"]
    dmrg = values["dmrg"]
    noise = values["noise"]
    zne = values["zne"]
    builders: dict[str, abc.Callable[[], object]] = {
        "run": lambda: RunSection(**run),
        "model": lambda: _to_model(values["model"]),
        "dmrg": lambda: DmrgConfig(**dmrg, seed=seed),
        "prep": lambda: _to_prep(values["prep"], seed),
        "noise": lambda: NoiseSpec(**noise),
        "eht": lambda: _to_eht(values["eht"], seed),
        "zne": lambda: ZneConfig(**zne, seed=seed),
        "gfunction": lambda: _to_gfunction(values["gfunction"], seed),
    }
    built: dict[str, Any] = {}
    for name, factory in builders.items():
        with errors:
            built[name] = _build(name, factory)

    errors.raise_if_any(f"Problems while reading {source}:")
    return LabConfig(**built)


# diagnostics ------------------------------------------------------------------------------

_SECTION_LINE = re.compile(r"^\s*\[\s*([A-Za-z0-9_-]+)\s*\]")
_KEY_LINE = re.compile(r"^\s*([A-Za-z0-9_-]+)\s*=")


def key_lines(text: str, /) -> dict[tuple[str, ...], int]:
    """Line numbers of section headers ``(section,)`` and keys ``(section, key)``."""
    lines: dict[tuple[str, ...], int] = {}
    section = ""
    for number, line in enumerate(text.splitlines(), 1):
        if match := _SECTION_LINE.match(line):
            section = match[1]
            lines.setdefault((section,), number)

        elif (match := _KEY_LINE.match(line)) and section:
            lines.setdefault((section, match[1]), number)

    return lines


def line_of(error: DataError, lines: abc.Mapping[tuple[str, ...], int], /) -> int | None:
    """Line a config error points at: the key when known, else its section."""
    at = [part for part in error.at if isinstance(part, str)]
    if isinstance(error, UnknownKeyError) and isinstance(error.key, str):
        at.append(error.key)

    for depth in (2, 1):
        if len(at) >= depth and (line := lines.get(tuple(at[:depth]))) is not None:
            return line

    return None


# reference --------------------------------------------------------------------------------


def _toml_value(value: object, /) -> str:
    if isinstance(value, bool):
        return str(value).lower()

    if isinstance(value, PartialEnum):
        return f'"{value.name.lower()}"'

    if isinstance(value, str):
        return f'"{value}"'

    if isinstance(value, tuple | list):
        items = typing.cast(abc.Iterable[object], value)
        return "[" + ", ".join(map(_toml_value, items)) + "]"

    return repr(value)


def config_reference() -> str:
    """A TOML file listing every key with its default; unset-by-default keys are commented."""
    lines = ["# clusterlab configuration reference", "# Every key is optional.", ""]
    for section, keys in _SECTIONS.items():
        lines.append(f"[{section}]")
        for key in keys:
            lines.append(f"# {key.doc}")
            if key.default is None:
                lines.append(f"# {key.name} = ...")
            else:
                lines.append(f"{key.name} = {_toml_value(key.default)}")
        lines.append("")

    return "\n".join(lines)
