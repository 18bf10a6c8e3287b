"""Classical optimization of ansatz schedules and their extrapolation to large chains.

Optimization runs in two phases. The energy phase fits every schedule parameter by minimizing
<H> on a small chain; for open segments this fixes the power-law exponents. The overlap phase
then maximizes the overlap with oracle eigenstates at each size, varying only the epsilon
shifts (open segments) or the uniform offsets (rings).
"""

from __future__ import annotations

import enum
import logging
import typing
import warnings
from collections import abc
from typing import Final, TypeAlias

import numpy as np
import scipy.optimize
from attrs import define, field, frozen, validators

from .circuit import build_ansatz
from .enums.analysis import BlockMode
from .enums.model import Boundary
from .exact import energy_distance
from .exceptions import ConvergenceError, FitError
from .model import CutConfig, ModelParams, cut_layout, site_distances
from .oracle import hamiltonian_for, low_lying_states, overlap, prepared_state, spectral_range
from .pauli import expectation
from .schedule import NUM_BLOCKS, ParamSchedule
from .utils import make_rng

if typing.TYPE_CHECKING:
    from .dmrg import DmrgConfig
    from .oracle import State
    from .typeshed import FloatArray

__all__ = (
    "ExtrapolationFit",
    "PrepConfig",
    "PrepReport",
    "PrepResult",
    "ScheduleExtrapolation",
    "SizeRecord",
    "evaluate_schedule",
    "extrapolate_schedule",
    "fit_extrapolation",
    "optimize_energy_phase",
    "optimize_overlap_phase",
    "optimize_size",
    "overlap_loss",
    "run_prep_study",
    "schedule_symmetry_defect",
)

logger = logging.getLogger(__name__)


@frozen(kw_only=True)
class PrepConfig:
    restarts: Final[int] = field(default=3, validator=validators.ge(0))
    """Random restarts of the energy phase, on top of the zero-angle start."""
    init_range: Final[float] = field(default=np.pi / 4, validator=validators.gt(0))
    """Random starting angles are uniform in [-init_range, init_range]."""
    fd_step: Final[float] = field(default=1e-5, validator=validators.gt(0))
    exponent_bounds: Final[tuple[float, float]] = (-6.0, -0.01)
    shift_bounds: Final[tuple[float, float]] = (-8.0, 50.0)
    """Bounds on d in the extrapolation a (L + d)^b + c."""
    fit_residual_threshold: Final[float] = field(default=1e-2, validator=validators.gt(0))
    max_iterations: Final[int] = field(default=500, validator=validators.ge(1))
    chi_max: Final[int] = field(default=256, validator=validators.ge(1))
    seed: Final[int | None] = 0


def _uses_powerlaw(p: ModelParams, c: CutConfig | None) -> bool:
    return p.boundary is Boundary.OBC or (c is not None and not c.is_uncut)


@frozen(kw_only=True)
class PrepResult:
    schedule: Final[ParamSchedule]
    loss: Final[float]
    trace: Final[tuple[float, ...]]
    """Loss after every accepted optimizer step."""
    converged: Final[bool]


class _Free(enum.Enum):
    ALL = enum.auto()
    EPSILON = enum.auto()
    OFFSET = enum.auto()


def _to_vector(sched: ParamSchedule, free: _Free) -> FloatArray:
    if free is _Free.EPSILON:
        return np.array(sched.epsilons)

    if free is _Free.OFFSET or sched.is_uniform:
        return np.array(sched.offsets)

    blocks = sched.blocks
    return np.array([b.a for b in blocks] + [b.b for b in blocks] + [b.c for b in blocks])


def _from_vector(base: ParamSchedule, free: _Free, x: FloatArray) -> ParamSchedule:
    if free is _Free.EPSILON:
        return base.with_epsilons(x)

    if free is _Free.OFFSET or base.is_uniform:
        return base.with_offsets(x)

    a, b, c = np.split(np.asarray(x), 3)
    return ParamSchedule.powerlaw(a, b, c).with_epsilons(base.epsilons)


Bounds: TypeAlias = list[tuple[float | None, float | None]]


def _bounds(base: ParamSchedule, free: _Free, cfg: PrepConfig) -> Bounds:
    free_range: Bounds = [(None, None)] * NUM_BLOCKS
    if free is not _Free.ALL or base.is_uniform:
        return free_range

    return free_range + [cfg.exponent_bounds] * NUM_BLOCKS + free_range


def _central_gradient(
    fun: abc.Callable[[FloatArray], float], step: float
) -> abc.Callable[[FloatArray], FloatArray]:
    def gradient(x: FloatArray) -> FloatArray:
        grad = np.empty_like(x)
        for k in range(x.size):
            shift = np.zeros_like(x)
            shift[k] = step
            grad[k] = (fun(x + shift) - fun(x - shift)) / (2 * step)
        return grad

    return gradient


def _minimize(
    fun: abc.Callable[[FloatArray], float],
    x0: FloatArray,
    bounds: Bounds,
    cfg: PrepConfig,
) -> tuple[FloatArray, float, list[float], bool]:
    trace: list[float] = [fun(x0)]

    def record(xk: FloatArray) -> None:
        trace.append(fun(xk))

    result = scipy.optimize.minimize(
        fun,
        x0,
        jac=_central_gradient(fun, cfg.fd_step),
        method="L-BFGS-B",
        bounds=bounds,
        callback=record,
        options={"maxiter": cfg.max_iterations},
    )
    return np.asarray(result.x), float(result.fun), trace, bool(result.success)


def _best_of(
    fun: abc.Callable[[FloatArray], float],
    starts: abc.Sequence[FloatArray],
    bounds: Bounds,
    cfg: PrepConfig,
) -> tuple[FloatArray, float, list[float], bool]:
    best: tuple[FloatArray, float, list[float], bool] | None = None
    for index, x0 in enumerate(starts):
        x, loss, trace, success = _minimize(fun, x0, bounds, cfg)
        logger.debug("Start %d: loss %.8f after %d steps", index, loss, len(trace) - 1)
        if not np.isfinite(loss):
            continue
        if best is None or loss < best[1]:
            best = (x, loss, trace, success)

    if best is None:
        msg = "Every optimizer start diverged"
        raise ConvergenceError(msg)

    if not best[3]:
        logger.warning("Best optimizer run stopped before convergence (loss %.6g)", best[1])
    return best


def _energy_objective(
    p: ModelParams, c: CutConfig | None, base: ParamSchedule, free: _Free
) -> abc.Callable[[FloatArray], float]:
    H = hamiltonian_for(p, c)

    def energy(x: FloatArray) -> float:
        sched = _from_vector(base, free, x)
        return expectation(prepared_state(build_ansatz(p, sched, c)), H)

    return energy


def _random_start(base: ParamSchedule, rng: np.random.Generator, cfg: PrepConfig) -> FloatArray:
    angles = rng.uniform(-cfg.init_range, cfg.init_range, size=2 * NUM_BLOCKS)
    if base.is_uniform:
        return angles[:NUM_BLOCKS]

    exponents = np.full(NUM_BLOCKS, -1.0)
    return np.concatenate([angles[:NUM_BLOCKS], exponents, angles[NUM_BLOCKS:]])


def optimize_energy_phase(
    p: ModelParams,
    c: CutConfig | None = None,
    /,
    cfg: PrepConfig | None = None,
) -> PrepResult:
    """Minimize <H> over all schedule parameters, best of a zero start and random restarts."""
    cfg = cfg or PrepConfig()
    mode = BlockMode.POWERLAW if _uses_powerlaw(p, c) else BlockMode.UNIFORM
    base = ParamSchedule.zero(mode)
    fun = _energy_objective(p, c, base, _Free.ALL)

    rng = make_rng(cfg.seed)
    starts = [_to_vector(base, _Free.ALL)]
    starts += [_random_start(base, rng, cfg) for _ in range(cfg.restarts)]
    x, loss, trace, success = _best_of(fun, starts, _bounds(base, _Free.ALL, cfg), cfg)

    logger.info("Energy phase L=%d %s: E=%.8f", p.L, p.boundary.name, loss)
    return PrepResult(
        schedule=_from_vector(base, _Free.ALL, x), loss=loss, trace=tuple(trace), converged=success
    )


def overlap_loss(prepared: State, targets: abc.Sequence[State], /) -> float:
    """1 - |<gs|psi>| for one target, 1 - sqrt(sum |<k|psi>|^2) for several."""
    weights = [abs(overlap(target, prepared)) ** 2 for target in targets]
    return 1.0 - float(np.sqrt(sum(weights)))


def optimize_overlap_phase(
    p: ModelParams,
    base: ParamSchedule,
    c: CutConfig | None = None,
    /,
    cfg: PrepConfig | None = None,
    *,
    targets: abc.Sequence[State] | None = None,
    dmrg: DmrgConfig | None = None,
) -> PrepResult:
    """Maximize the overlap with the oracle ground state (open segments) or with the two
    lowest states (rings), varying only epsilon or the uniform offsets.
    """
    cfg = cfg or PrepConfig()
    powerlaw = _uses_powerlaw(p, c)
    if targets is None:
        count = 1 if powerlaw else 2
        targets = low_lying_states(p, c, count, dmrg=dmrg).states

    free = _Free.EPSILON if powerlaw else _Free.OFFSET

    def loss(x: FloatArray) -> float:
        sched = _from_vector(base, free, x)
        return overlap_loss(prepared_state(build_ansatz(p, sched, c), chi_max=cfg.chi_max), targets)

    x, value, trace, success = _best_of(
        loss, [_to_vector(base, free)], _bounds(base, free, cfg), cfg
    )
    logger.info("Overlap phase L=%d %s: loss=%.6f", p.L, p.boundary.name, value)
    return PrepResult(
        schedule=_from_vector(base, free, x), loss=value, trace=tuple(trace), converged=success
    )


# extrapolation ----------------------------------------------------------------------------


@frozen(kw_only=True)
class ExtrapolationFit:
    """f(L) = a (L + d)^b + c."""

    a: Final[float]
    b: Final[float]
    c: Final[float]
    d: Final[float]
    residual: Final[float]
    """Root mean square deviation at the fitted sizes."""

    def __call__(self, L: float, /) -> float:
        return self.a * (L + self.d) ** self.b + self.c


def _model(L: FloatArray, a: float, b: float, c: float, d: float) -> FloatArray:
    return a * (L + d) ** b + c


def fit_extrapolation(
    sizes: abc.Sequence[int], values: abc.Sequence[float], /, cfg: PrepConfig | None = None
) -> ExtrapolationFit:
    cfg = cfg or PrepConfig()
    if len(sizes) < 4:
        msg = f"Extrapolation needs at least 4 sizes, got {len(sizes)}"
        raise FitError(msg)

    x = np.asarray(sizes, dtype=np.float64)
    y = np.asarray(values, dtype=np.float64)
    if np.ptp(y) < 1e-12:
        return ExtrapolationFit(a=0.0, b=-1.0, c=float(y.mean()), d=0.0, residual=0.0)

    order = np.argsort(x)
    p0 = (y[order[0]] - y[order[-1]], -1.0, y[order[-1]], 0.0)
    lower_d, upper_d = cfg.shift_bounds
    lower_d = max(lower_d, -float(x.min()) + 1e-3)
    bounds = ([-np.inf, -10.0, -np.inf, lower_d], [np.inf, 10.0, np.inf, upper_d])

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.optimize.OptimizeWarning)
        try:
            params, _ = scipy.optimize.curve_fit(_model, x, y, p0=p0, bounds=bounds, maxfev=20000)

        except RuntimeError as exc:
            raise FitError(str(exc)) from None

    a, b, c, d = (float(v) for v in params)
    residual = float(np.sqrt(np.mean((_model(x, a, b, c, d) - y) ** 2)))
    return ExtrapolationFit(a=a, b=b, c=c, d=d, residual=residual)


@frozen(kw_only=True)
class ScheduleExtrapolation:
    """Per-parameter size fits that generate a schedule for any chain length."""

    mode: Final[BlockMode]
    offsets: Final[tuple[ExtrapolationFit, ...]]
    amplitudes: Final[tuple[ExtrapolationFit, ...]] = ()
    exponents: Final[tuple[float, ...]] = ()
    """Power-law exponents, fixed by the energy phase."""

    def schedule(self, L: int, /) -> ParamSchedule:
        if self.mode is BlockMode.UNIFORM:
            return ParamSchedule.uniform(fit(L) for fit in self.offsets)

        return ParamSchedule.powerlaw(
            [fit(L) for fit in self.amplitudes], self.exponents, [fit(L) for fit in self.offsets]
        )

    @property
    def worst_residual(self) -> float:
        return max(fit.residual for fit in (*self.offsets, *self.amplitudes))


def extrapolate_schedule(
    schedules: abc.Mapping[int, ParamSchedule], /, cfg: PrepConfig | None = None
) -> ScheduleExtrapolation:
    """Fit a (L + d)^b + c to every varying parameter of the optimized schedules."""
    cfg = cfg or PrepConfig()
    sizes = sorted(schedules)
    if len(sizes) < 4:
        msg = f"Extrapolation needs at least 4 sizes, got {len(sizes)}"
        raise FitError(msg)

    absorbed = [schedules[L].absorbed() for L in sizes]
    mode = BlockMode.UNIFORM if absorbed[0].is_uniform else BlockMode.POWERLAW

    def fits(attr: str) -> tuple[ExtrapolationFit, ...]:
        return tuple(
            fit_extrapolation(sizes, [getattr(s.blocks[j], attr) for s in absorbed], cfg)
            for j in range(NUM_BLOCKS)
        )

    if mode is BlockMode.UNIFORM:
        result = ScheduleExtrapolation(mode=mode, offsets=fits("c"))

    else:
        result = ScheduleExtrapolation(
            mode=mode,
            offsets=fits("c"),
            amplitudes=fits("a"),
            exponents=tuple(block.b for block in absorbed[0].blocks),
        )

    if result.worst_residual > cfg.fit_residual_threshold:
        logger.warning(
            "Schedule extrapolation residual %.3e exceeds %.1e",
            result.worst_residual,
            cfg.fit_residual_threshold,
        )
    return result


# study ------------------------------------------------------------------------------------


@frozen(kw_only=True)
class SizeRecord:
    L: Final[int]
    boundary: Final[Boundary]
    schedule: Final[ParamSchedule]
    energy_distance: Final[float]
    overlaps: Final[tuple[float, ...]]
    """|<k|psi>| for the oracle levels k = 0, 1, ..."""
    trace: Final[tuple[float, ...]] = ()
    extrapolated: Final[bool] = False


def evaluate_schedule(
    p: ModelParams,
    sched: ParamSchedule,
    /,
    cfg: PrepConfig | None = None,
    dmrg: DmrgConfig | None = None,
    *,
    trace: abc.Sequence[float] = (),
    extrapolated: bool = False,
) -> SizeRecord:
    """Energy distance and oracle overlaps of the state a schedule prepares."""
    cfg = cfg or PrepConfig()
    H = hamiltonian_for(p)
    state = prepared_state(build_ansatz(p, sched), chi_max=cfg.chi_max)
    levels = low_lying_states(p, count=2, dmrg=dmrg)
    e_min, e_max = spectral_range(H, dmrg=dmrg)
    return SizeRecord(
        L=p.L,
        boundary=p.boundary,
        schedule=sched,
        energy_distance=energy_distance(expectation(state, H), e_min, e_max),
        overlaps=tuple(abs(overlap(target, state)) for target in levels.states),
        trace=tuple(trace),
        extrapolated=extrapolated,
    )


def optimize_size(
    p: ModelParams,
    base: ParamSchedule,
    /,
    cfg: PrepConfig | None = None,
    dmrg: DmrgConfig | None = None,
) -> SizeRecord:
    """Overlap phase at one size followed by its quality metrics; independent per size."""
    cfg = cfg or PrepConfig()
    result = optimize_overlap_phase(p, base, None, cfg, dmrg=dmrg)
    return evaluate_schedule(p, result.schedule, cfg, dmrg, trace=result.trace)


@define(kw_only=True)
class PrepReport:
    boundary: Boundary
    base: ParamSchedule
    """Energy-phase schedule the overlap phase started from."""
    records: list[SizeRecord] = field(factory=list)
    extrapolation: ScheduleExtrapolation | None = None

    @property
    def schedules(self) -> dict[int, ParamSchedule]:
        return {r.L: r.schedule for r in self.records if not r.extrapolated}


def run_prep_study(
    sizes: abc.Sequence[int],
    boundary: Boundary,
    /,
    cfg: PrepConfig | None = None,
    *,
    base_size: int = 8,
    validate: abc.Sequence[int] = (),
    dmrg: DmrgConfig | None = None,
    J: float = 1.0,
) -> PrepReport:
    """Energy phase at ``base_size``, overlap phase at every size, then extrapolation checked
    at the ``validate`` sizes.
    """
    cfg = cfg or PrepConfig()
    base = optimize_energy_phase(ModelParams(L=base_size, J=J, boundary=boundary), None, cfg)
    report = PrepReport(boundary=boundary, base=base.schedule)

    for L in sizes:
        p = ModelParams(L=L, J=J, boundary=boundary)
        report.records.append(optimize_size(p, base.schedule, cfg, dmrg))

    if len(sizes) >= 4:
        report.extrapolation = extrapolate_schedule(report.schedules, cfg)
        for L in validate:
            p = ModelParams(L=L, J=J, boundary=boundary)
            sched = report.extrapolation.schedule(L)
            report.records.append(evaluate_schedule(p, sched, cfg, dmrg, extrapolated=True))

    return report


def schedule_symmetry_defect(
    p: ModelParams, sched: ParamSchedule, c: CutConfig | None = None, /
) -> float:
    """Largest |theta_i - theta_mirror(i)| of an open-chain ansatz."""
    layout = cut_layout(p, c or CutConfig())

    angles = sched.angles(site_distances(p.L, p.boundary, layout))
    return float(np.max(np.abs(angles - angles[:, ::-1])))
