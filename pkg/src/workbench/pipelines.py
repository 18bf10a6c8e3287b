"""Experiment pipelines behind the command-line subcommands.

Independent jobs (one size, one window, one noise level) run on a bounded process pool.
Every job gets its own seed spawned from the run seed, so results do not depend on the
number of workers.
"""

import logging
import typing
from collections import abc
from concurrent.futures import ProcessPoolExecutor
from typing import Final

import numpy as np
from attrs import evolve, frozen

from serial.circuits import dump_circuit
from serial.config import LabConfig
from serial.records import dump_records
from serial.reports import (
    dump_entropy,
    dump_g_noise,
    dump_g_results,
    dump_model,
    dump_oracle,
    dump_prep_report,
    dump_window_results,
    dump_zne_study,
)

from .cache import OracleCache, cached_low_lying
from .manifest import ArtifactWriter

from clusterlab.circuit import CircuitIR, build_ansatz
from clusterlab.eht import (
    NoiseComparison,
    WindowResult,
    collect_dataset,
    exact_window_data,
    noise_robustness,
    run_window,
    subsystem_windows,
    window_data,
)
from clusterlab.entanglement import entropy_profile, fit_central_charge
from clusterlab.enums.analysis import BlockMode, GMode
from clusterlab.enums.model import Boundary
from clusterlab.exceptions import FitError
from clusterlab.gfunction import (
    GFunctionResult,
    compute_g,
    compute_g_protocol,
    exact_states,
    g_scaling_study,
    variational_circuits,
    variational_schedules,
)
from clusterlab.mitigation import zne_study
from clusterlab.model import ModelParams, symmetry_projector
from clusterlab.mps import MPSState
from clusterlab.oracle import State, hamiltonian_for
from clusterlab.pauli import expectation
from clusterlab.prep import (
    PrepReport,
    SizeRecord,
    evaluate_schedule,
    extrapolate_schedule,
    optimize_energy_phase,
    optimize_size,
)
from clusterlab.schedule import ParamSchedule
from clusterlab.sim import DenseState, random_bases
from clusterlab.utils import spawn_seeds

__all__ = (
    "COMMANDS",
    "Pipeline",
    "PipelineContext",
    "map_jobs",
    "run_entropy",
    "run_eht",
    "run_gfunction",
    "run_oracle",
    "run_prepare",
    "run_zne",
)

logger = logging.getLogger(__name__)

T = typing.TypeVar("T")


@frozen(kw_only=True)
class PipelineContext:
    config: LabConfig
    writer: ArtifactWriter
    cache: OracleCache | None = None
    dry_run: bool = False
    from_report: PrepReport | None = None
    noise_sweep: bool = False
    exact_probabilities: bool = False
    """EHT from noise-free window probabilities instead of sampled shots."""
    levels: int = 2


Pipeline: typing.TypeAlias = abc.Callable[[PipelineContext], None]


def map_jobs(
    func: abc.Callable[..., T], jobs: abc.Sequence[tuple[object, ...]], /, workers: int = 1
) -> list[T]:
    """Run ``func(*job)`` for every job, in a process pool when ``workers > 1``.

    Results come back in job order.
    """
    if workers <= 1 or len(jobs) <= 1:
        return [func(*job) for job in jobs]

    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        futures = [pool.submit(func, *job) for job in jobs]
        return [future.result() for future in futures]


def _job_seeds(seed: int, count: int, /) -> list[int]:
    return [int(child.generate_state(1)[0]) for child in spawn_seeds(seed, count)]


def _model_at(p: ModelParams, L: int, /, boundary: Boundary | None = None) -> ModelParams:
    return evolve(p, L=L, boundary=boundary or p.boundary)


def _as_dense(state: State, /) -> DenseState:
    if isinstance(state, MPSState):
        return DenseState.from_vector(state.to_dense())
    return state


# prepare ----------------------------------------------------------------------------------


def _report_schedule(report: PrepReport | None, L: int, /) -> ParamSchedule | None:
    if report is None:
        return None

    if (sched := report.schedules.get(L)) is not None:
        return sched

    if report.extrapolation is not None:
        return report.extrapolation.schedule(L)

    return None


def _prepare_dry_run(ctx: PipelineContext, /) -> None:
    cfg = ctx.config
    p = cfg.model.params
    sched = _report_schedule(ctx.from_report, p.L)
    if sched is None:
        mode = BlockMode.UNIFORM if p.is_periodic else BlockMode.POWERLAW
        sched = ParamSchedule.zero(mode)

    c = build_ansatz(p, sched, cfg.model.cut, pattern_order=cfg.model.pattern_order)
    with ctx.writer.stage("circuit"):
        ctx.writer.write_json(f"circuit-L{p.L}.json", dump_circuit(c), stage="circuit")


def _overlap_job(
    p: ModelParams, base: ParamSchedule, ctx_cfg: LabConfig, seed: int
) -> SizeRecord:
    cfg = evolve(ctx_cfg.prep.config, seed=seed)
    return optimize_size(p, base, cfg, ctx_cfg.dmrg)


def _validate_job(p: ModelParams, sched: ParamSchedule, ctx_cfg: LabConfig) -> SizeRecord:
    return evaluate_schedule(p, sched, ctx_cfg.prep.config, ctx_cfg.dmrg, extrapolated=True)


def run_prepare(ctx: PipelineContext, /) -> None:
    """Energy phase, overlap phase per size, then schedule extrapolation to larger chains."""
    if ctx.dry_run:
        _prepare_dry_run(ctx)
        return

    cfg = ctx.config
    p = cfg.model.params
    section = cfg.prep
    writer = ctx.writer

    if ctx.from_report is not None:
        report = ctx.from_report
        logger.info("Reusing %d optimized sizes from report", len(report.schedules))

    else:
        with writer.stage("energy"):
            base_p = _model_at(p, section.base_size)
            base = optimize_energy_phase(base_p, None, section.config).schedule

        report = PrepReport(boundary=p.boundary, base=base)
        with writer.stage("overlap"):
            seeds = _job_seeds(cfg.run.seed, len(section.sizes))
            jobs = [
                (_model_at(p, L), base, cfg, seed)
                for L, seed in zip(section.sizes, seeds, strict=True)
            ]
            report.records.extend(map_jobs(_overlap_job, jobs, cfg.run.workers))

    if len(report.schedules) >= 4 and section.validate:
        with writer.stage("extrapolate"):
            fit = report.extrapolation or extrapolate_schedule(report.schedules, section.config)
            report.extrapolation = fit
            done = {r.L for r in report.records if r.extrapolated}
            pending = [L for L in section.validate if L not in done]
            jobs = [(_model_at(p, L), fit.schedule(L), cfg) for L in pending]
            report.records.extend(map_jobs(_validate_job, jobs, cfg.run.workers))

    for record in report.records:
        level = record.overlaps[0] if record.overlaps else float("nan")
        logger.info(
            "L=%d %s: eps_E=%.4f |<0|psi>|=%.4f",
            record.L,
            "extrapolated" if record.extrapolated else "optimized",
            record.energy_distance,
            level,
        )

    with writer.stage("write"):
        writer.write_json("prep-report.json", dump_prep_report(report), stage="write")
        for record in report.records:
            c = build_ansatz(
                _model_at(p, record.L), record.schedule, pattern_order=cfg.model.pattern_order
            )
            writer.write_json(f"circuits/L{record.L}.json", dump_circuit(c), stage="write")


# oracle -----------------------------------------------------------------------------------


def run_oracle(ctx: PipelineContext, /) -> None:
    cfg = ctx.config
    p = cfg.model.params
    cut = cfg.model.cut
    with ctx.writer.stage("oracle"):
        levels, keys = cached_low_lying(
            p, cut, ctx.levels, dmrg=cfg.dmrg, cache=ctx.cache
        )
        ctx.writer.manifest.cache_keys.extend(keys)
        projector = symmetry_projector(p.L)
        parities = [expectation(state, projector) for state in levels.states]
        document = dump_oracle(p, cut, levels, projector_weights=parities)
        ctx.writer.write_json("oracle.json", document, stage="oracle")


# g-function -------------------------------------------------------------------------------


def _g_exact_job(
    p: ModelParams, boundaries: tuple[str, ...], cfg: LabConfig
) -> GFunctionResult:
    return compute_g(exact_states(p, boundaries, dmrg=cfg.dmrg), boundaries)


def _g_circuits_job(
    p: ModelParams, boundaries: tuple[str, ...], cfg: LabConfig, seed: int
) -> dict[str, CircuitIR]:
    prep_cfg = evolve(cfg.prep.config, seed=seed)
    schedules = variational_schedules(p, boundaries, prep_cfg, dmrg=cfg.dmrg)
    return variational_circuits(p, schedules)


def _g_protocol_job(
    circuits: dict[str, CircuitIR], boundaries: tuple[str, ...], cfg: LabConfig, seed: int
) -> GFunctionResult:
    section = cfg.gfunction
    noise = None if cfg.noise.is_noiseless else cfg.noise
    protocol = evolve(section.protocol, seed=seed)
    return compute_g_protocol(circuits, boundaries, protocol, noise=noise)


def run_gfunction(ctx: PipelineContext, /) -> None:
    """Boundary g-function at every configured size, exact or through overlap circuits."""
    cfg = ctx.config
    section = cfg.gfunction
    boundaries = section.boundaries
    workers = cfg.run.workers
    sizes = section.sizes
    models = [_model_at(cfg.model.params, L, Boundary.PBC) for L in sizes]
    seeds = _job_seeds(cfg.run.seed, 2 * len(sizes))
    circuits: list[dict[str, CircuitIR]] = []

    if section.mode is GMode.PROTOCOL or ctx.noise_sweep:
        with ctx.writer.stage("circuits"):
            jobs = [
                (p, boundaries, cfg, seed)
                for p, seed in zip(models, seeds[: len(sizes)], strict=True)
            ]
            circuits = map_jobs(_g_circuits_job, jobs, workers)

    with ctx.writer.stage("gfunction"):
        if section.mode is GMode.EXACT:
            results = map_jobs(_g_exact_job, [(p, boundaries, cfg) for p in models], workers)

        else:
            jobs = [
                (c, boundaries, cfg, seed)
                for c, seed in zip(circuits, seeds[len(sizes) :], strict=True)
            ]
            results = map_jobs(_g_protocol_job, jobs, workers)

        for L, result in zip(sizes, results, strict=True):
            logger.info("L=%d: g=%.6f +- %.6f (%s)", L, result.g, result.g_err, result.mode.name)

        document = dump_g_results(
            dict(zip(sizes, results, strict=True)),
            model=dump_model(cfg.model.params),
            boundaries=boundaries,
        )
        ctx.writer.write_json("gfunction.json", document, stage="gfunction")

    if ctx.noise_sweep:
        with ctx.writer.stage("noise-sweep"):
            rows = g_scaling_study(
                dict(zip(sizes, circuits, strict=True)),
                section.noise_rates,
                boundaries,
                section.protocol,
                trajectories=cfg.noise.trajectories,
                seed=cfg.run.seed,
            )
            document = dump_g_noise(rows, model=dump_model(cfg.model.params))
            ctx.writer.write_json("g-noise.json", document, stage="noise-sweep")


# eht --------------------------------------------------------------------------------------


def _eht_window_job(
    data: typing.Any, rho: np.ndarray[typing.Any, typing.Any], cfg: LabConfig, seed: int
) -> WindowResult:
    return run_window(data, rho, evolve(cfg.eht.config, seed=seed))


def _eht_noise_job(
    rho: np.ndarray[typing.Any, typing.Any], p: float, cfg: LabConfig, seed: int
) -> NoiseComparison:
    return noise_robustness(rho, p, evolve(cfg.eht.config, seed=seed))


def run_eht(ctx: PipelineContext, /) -> None:
    """Randomized measurements on the oracle ground state, then one fit per window."""
    cfg = ctx.config
    section = cfg.eht
    p = cfg.model.params
    writer = ctx.writer
    seeds = _job_seeds(cfg.run.seed, 1 + section.windows + len(section.noise_levels))

    with writer.stage("oracle"):
        levels, keys = cached_low_lying(p, cfg.model.cut, 1, dmrg=cfg.dmrg, cache=ctx.cache)
        writer.manifest.cache_keys.extend(keys)
        state = _as_dense(levels.states[0])

    windows = subsystem_windows(p.L, section.window_size, section.windows)
    rhos = [state.reduced_density(window) for window in windows]

    with writer.stage("measure"):
        if ctx.exact_probabilities:
            bases = random_bases(section.window_size, section.config.settings, seeds[0])
            data = [
                exact_window_data(rho, bases, window)
                for rho, window in zip(rhos, windows, strict=True)
            ]

        else:
            dataset = collect_dataset(
                state, section.config.settings, section.config.shots, seed=seeds[0]
            )
            writer.write_text("measurements.csv", dump_records(dataset), stage="measure")
            data = [window_data(dataset, window) for window in windows]

    with writer.stage("fit"):
        jobs = [
            (d, rho, cfg, seed)
            for d, rho, seed in zip(data, rhos, seeds[1 : 1 + len(windows)], strict=True)
        ]
        results = map_jobs(_eht_window_job, jobs, cfg.run.workers)

    noise: list[NoiseComparison] = []
    if section.noise_levels:
        with writer.stage("noise-robustness"):
            jobs = [
                (rhos[0], level, cfg, seed)
                for level, seed in zip(
                    section.noise_levels, seeds[1 + len(windows) :], strict=True
                )
            ]
            noise = map_jobs(_eht_noise_job, jobs, cfg.run.workers)

    with writer.stage("write"):
        document = dump_window_results(
            results, model=dump_model(p), window_size=section.window_size, noise=noise
        )
        writer.write_json("eht.json", document, stage="write")


# zne --------------------------------------------------------------------------------------


def run_zne(ctx: PipelineContext, /) -> None:
    """Folding, twirling and extrapolation of the energy of a prepared state."""
    cfg = ctx.config
    p = cfg.model.params
    writer = ctx.writer
    if cfg.noise.is_noiseless:
        logger.warning("ZNE without a noise model; every scale factor gives the same value")

    with writer.stage("prepare"):
        sched = _report_schedule(ctx.from_report, p.L)
        if sched is None:
            sched = optimize_energy_phase(p, None, cfg.prep.config).schedule
        c = build_ansatz(p, sched, pattern_order=cfg.model.pattern_order)
        writer.write_json(f"circuit-L{p.L}.json", dump_circuit(c), stage="prepare")

    with writer.stage("zne"):
        study = zne_study(c, hamiltonian_for(p), cfg.noise, cfg.zne)
        noise = {
            "cz_depolarizing": cfg.noise.cz_depolarizing,
            "global_depolarizing": cfg.noise.global_depolarizing,
            "cz_overrotation": cfg.noise.cz_overrotation,
        }
        document = dump_zne_study(study, model=dump_model(p), noise=noise)
        writer.write_json("zne.json", document, stage="zne")


# entropy ----------------------------------------------------------------------------------


def run_entropy(ctx: PipelineContext, /) -> None:
    """Entanglement entropy profile of the ground state and its central-charge fit."""
    cfg = ctx.config
    p = cfg.model.params
    with ctx.writer.stage("entropy"):
        levels, keys = cached_low_lying(p, None, 1, dmrg=cfg.dmrg, cache=ctx.cache)
        ctx.writer.manifest.cache_keys.extend(keys)
        profile = entropy_profile(levels.states[0])
        try:
            fit = fit_central_charge(profile, p.L, p.boundary)
            logger.info("L=%d: c=%.4f", p.L, fit.central_charge)

        except FitError as exc:
            logger.warning("No central-charge fit for L=%d: %s", p.L, exc)
            fit = None

        document = dump_entropy(profile.tolist(), fit, model=dump_model(p))
        ctx.writer.write_json("entropy.json", document, stage="entropy")


COMMANDS: Final[abc.Mapping[str, Pipeline]] = {
    "prepare": run_prepare,
    "oracle": run_oracle,
    "gfunction": run_gfunction,
    "eht": run_eht,
    "zne": run_zne,
    "entropy": run_entropy,
}
