"""``clusterlab`` command line.

Every command reads an optional TOML configuration, applies the command-line overrides on
top and writes its artifacts with a manifest below ``<out-dir>/<command>/``.
"""

import argparse
import logging
import sys
import typing
from collections import abc
from pathlib import Path

import labjson
from serial._compat import DataErrorGroup
from serial.config import (
    LabConfig,
    config_reference,
    key_lines,
    line_of,
    merged_tables,
    to_lab_config,
)
from serial.exceptions import DataErrorType, iter_leaves
from serial.reports import to_prep_report

from .cache import OracleCache
from .manifest import ArtifactWriter, RunManifest, discard_previous
from .pipelines import COMMANDS, PipelineContext
from .plotdata import PLOT_TARGETS, emit_plotdata

from clusterlab import __version__
from clusterlab.enums.analysis import GMode
from clusterlab.enums.model import Boundary
from clusterlab.exceptions import LabException
from clusterlab.model import CutConfig
from clusterlab.prep import PrepReport

if typing.TYPE_CHECKING:
    if sys.version_info < (3, 11):
        from exceptiongroup import ExceptionGroup

__all__ = ("build_parser", "main")

logger = logging.getLogger(__name__)

EXIT_FAILURE: typing.Final = 1
EXIT_BAD_INPUT: typing.Final = 2

Overrides: typing.TypeAlias = dict[str, dict[str, typing.Any]]


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("common options")
    group.add_argument("--config", type=Path, help="TOML configuration file.")
    group.add_argument("--seed", type=int, help="Root seed; overrides [run] seed.")
    group.add_argument("--workers", type=int, help="Worker processes for independent jobs.")
    group.add_argument("--out-dir", type=Path, help="Directory receiving the artifacts.")
    group.add_argument("--chi-max", type=int, help="Bond dimension cap for DMRG and MPS.")
    group.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR.")
    group.add_argument(
        "--cache-dir",
        type=Path,
        default=Path(".clusterlab-cache"),
        help="Oracle state cache (default: %(default)s).",
    )
    group.add_argument("--no-cache", action="store_true", help="Always recompute oracle states.")
    return common


def _model_flags(parser: argparse.ArgumentParser, /) -> None:
    parser.add_argument("--L", type=int, dest="L", help="Number of sites.")
    parser.add_argument("--boundary", choices=Boundary.names())


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="clusterlab",
        description="Critical cluster-Ising chain: state preparation, boundary g-function, "
        "entanglement Hamiltonian tomography and error mitigation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    prepare = commands.add_parser(
        "prepare", parents=[common], help="Optimize and extrapolate ansatz schedules."
    )
    _model_flags(prepare)
    prepare.add_argument(
        "--dry-run", action="store_true", help="Only write the circuit for --L; no simulation."
    )
    prepare.add_argument(
        "--from-report", type=Path, help="Reuse schedules from an earlier prep-report.json."
    )

    oracle = commands.add_parser(
        "oracle", parents=[common], help="Low-lying states by exact diagonalization or DMRG."
    )
    _model_flags(oracle)
    oracle.add_argument(
        "--cut", type=CutConfig.of_label, help="Cut label such as 00, u0 or ud."
    )
    oracle.add_argument("--levels", type=int, default=2, help="Number of levels.")

    gfunction = commands.add_parser(
        "gfunction", parents=[common], help="Boundary g-function from overlaps."
    )
    gfunction.add_argument(
        "--L", type=int, dest="sizes", action="append", help="Chain size; may be repeated."
    )
    gfunction.add_argument("--mode", choices=GMode.names())
    gfunction.add_argument("--noise", type=float, help="CZ depolarizing rate.")
    gfunction.add_argument(
        "--noise-sweep", action="store_true", help="Also sweep [gfunction] noise_rates."
    )
    gfunction.add_argument(
        "--free", action="store_true", help="Free cuts (transverse-field Ising control)."
    )

    eht = commands.add_parser(
        "eht", parents=[common], help="Entanglement Hamiltonian tomography on windows."
    )
    _model_flags(eht)
    eht.add_argument("--window-size", type=int)
    eht.add_argument("--windows", type=int)
    eht.add_argument(
        "--exact-probabilities",
        action="store_true",
        help="Fit noise-free window probabilities instead of sampled shots.",
    )

    zne = commands.add_parser(
        "zne", parents=[common], help="Zero-noise extrapolation of a prepared state's energy."
    )
    _model_flags(zne)
    zne.add_argument("--from-report", type=Path, help="Schedule from a prep-report.json.")

    entropy = commands.add_parser(
        "entropy", parents=[common], help="Entanglement entropy profile and central charge."
    )
    _model_flags(entropy)

    plotdata = commands.add_parser(
        "emit-plotdata", parents=[common], help="Tidy CSV tables from earlier results."
    )
    plotdata.add_argument(
        "--target",
        dest="targets",
        action="append",
        choices=list(PLOT_TARGETS),
        help="Table to emit; may be repeated (default: all).",
    )

    reference = commands.add_parser(
        "config-reference", parents=[common], help="Print every configuration key."
    )
    reference.add_argument("--output", type=Path, help="Write to a file instead of stdout.")

    commands.add_parser("run", parents=[common], help="Run the [run] pipelines in order.")
    return parser


def _overrides(args: argparse.Namespace, /) -> Overrides:
    out: Overrides = {}

    def put(section: str, key: str, value: object) -> None:
        if value is not None:
            out.setdefault(section, {})[key] = value

    put("run", "seed", args.seed)
    put("run", "workers", args.workers)
    put("run", "out_dir", None if args.out_dir is None else str(args.out_dir))
    put("run", "log_level", args.log_level)
    put("dmrg", "chi_max", args.chi_max)
    put("prep", "chi_max", args.chi_max)
    put("model", "L", getattr(args, "L", None))
    put("model", "boundary", getattr(args, "boundary", None))

    if (cut := getattr(args, "cut", None)) is not None:
        put("model", "cut_a", cut.cut_a.name.lower())
        put("model", "cut_b", cut.cut_b.name.lower())

    put("gfunction", "sizes", getattr(args, "sizes", None))
    put("gfunction", "mode", getattr(args, "mode", None))
    if getattr(args, "free", False):
        put("gfunction", "boundaries", "free")
    put("noise", "cz_depolarizing", getattr(args, "noise", None))
    put("eht", "window_size", getattr(args, "window_size", None))
    put("eht", "windows", getattr(args, "windows", None))
    return out


def _report_errors(exc: "ExceptionGroup[DataErrorType]", /, source: str, text: str = "") -> None:
    lines = key_lines(text) if text else {}
    print(f"{source}: {exc.message}", file=sys.stderr)
    for error in iter_leaves(exc):
        line = line_of(error, lines)
        where = f"{source}:{line}" if line is not None else source
        print(f"{where}: {error}", file=sys.stderr)


def _load_config(args: argparse.Namespace, /) -> tuple[LabConfig, dict[str, typing.Any]]:
    path: Path | None = args.config
    text = "" if path is None else path.read_text(encoding="utf-8")
    source = "<defaults>" if path is None else str(path)
    overrides = _overrides(args)
    try:
        config = to_lab_config(text, source=source, overrides=overrides)

    except DataErrorGroup as exc:
        _report_errors(exc, source, text)
        raise SystemExit(EXIT_BAD_INPUT) from None

    return config, merged_tables(text, source=source, overrides=overrides)


def _load_report(path: Path | None, /) -> PrepReport | None:
    if path is None:
        return None

    try:
        return to_prep_report(labjson.loads(path.read_bytes()), at=(str(path),))

    except DataErrorGroup as exc:
        _report_errors(exc, str(path))
        raise SystemExit(EXIT_BAD_INPUT) from None


def _writer(
    command: str, config: LabConfig, tables: abc.Mapping[str, typing.Any], /
) -> ArtifactWriter:
    root = Path(config.run.out_dir) / command
    discard_previous(root)
    manifest = RunManifest(command=command, config=tables, seed=config.run.seed)
    return ArtifactWriter(root, manifest)


def _run_command(
    command: str,
    args: argparse.Namespace,
    config: LabConfig,
    tables: abc.Mapping[str, typing.Any],
    /,
) -> int:
    writer = _writer(command, config, tables)
    status = 0
    try:
        if command == "emit-plotdata":
            with writer.stage("plotdata"):
                targets = getattr(args, "targets", None) or list(PLOT_TARGETS)
                emit_plotdata(Path(config.run.out_dir), writer, targets)

        else:
            cache = None if args.no_cache else OracleCache(args.cache_dir)
            ctx = PipelineContext(
                config=config,
                writer=writer,
                cache=cache,
                dry_run=getattr(args, "dry_run", False),
                from_report=_load_report(getattr(args, "from_report", None)),
                noise_sweep=getattr(args, "noise_sweep", False),
                exact_probabilities=getattr(args, "exact_probabilities", False),
                levels=getattr(args, "levels", 2),
            )
            COMMANDS[command](ctx)

    except LabException as exc:
        logger.error("%s failed: %s", command, exc)
        status = EXIT_FAILURE

    finally:
        path = writer.finish()
        logger.info("Manifest %s (%s)", path, "complete" if status == 0 else "incomplete")

    return status


def main(argv: abc.Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config, tables = _load_config(args)

    logging.basicConfig(
        level=config.run.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    if args.command == "config-reference":
        text = config_reference()
        if args.output is None:
            sys.stdout.write(text)
        else:
            args.output.write_text(text, encoding="utf-8")
        return 0

    if args.command != "run":
        return _run_command(args.command, args, config, tables)

    pipelines = config.run.pipelines
    if not pipelines:
        logger.error("Nothing to run: [run] pipelines is empty")
        return EXIT_BAD_INPUT

    for command in pipelines:
        if command not in COMMANDS and command != "emit-plotdata":
            logger.error("Unknown pipeline %r in [run] pipelines", command)
            return EXIT_BAD_INPUT

    for command in pipelines:
        logger.info("Running %s", command)
        if (status := _run_command(command, args, config, tables)) != 0:
            return status

    return 0
