"""Boundary g-function from overlaps of cut and uncut chain states.

g = sum_a |<a0|P|00>| / (sqrt(<00|P|00>) |<a0|aa>|), with P = (1 + O_X)/2 projecting the ring
state onto the spin-flip-even sector.
"""

from __future__ import annotations

import logging
import typing
from collections import abc
from typing import Final

import numpy as np
from attrs import evolve, field, frozen, validators

from .circuit import build_ansatz
from .enums.analysis import GMode, SignResolution
from .exceptions import DegenerateConfigurationError, SiteCountError
from .model import CutConfig, ModelParams
from .oracle import low_lying_states, overlap
from .prep import PrepConfig, optimize_energy_phase, optimize_overlap_phase
from .rules import DEFAULT_LAB_RULES, LabRules
from .sim import NoiseSpec, overlap_amplitude, overlap_protocol
from .utils import make_rng, spawn_seeds

if typing.TYPE_CHECKING:
    from .circuit import CircuitIR
    from .dmrg import DmrgConfig
    from .oracle import State
    from .schedule import ParamSchedule
    from .typeshed import SeedLike

__all__ = (
    "FREE_BOUNDARIES",
    "PINNED_BOUNDARIES",
    "GFunctionResult",
    "GScalingRow",
    "ProtocolConfig",
    "compute_g",
    "compute_g_protocol",
    "exact_states",
    "g_scaling_study",
    "required_labels",
    "variational_circuits",
    "variational_schedules",
)

logger = logging.getLogger(__name__)

PINNED_BOUNDARIES: Final = ("u", "d")
FREE_BOUNDARIES: Final = ("f",)


def required_labels(boundaries: abc.Iterable[str] = PINNED_BOUNDARIES, /) -> tuple[str, ...]:
    """The ring state followed by the a0 and aa states of every boundary letter."""
    labels = ["00"]
    for a in boundaries:
        labels += [a + "0", a + a]
    return tuple(labels)


@frozen(kw_only=True)
class GFunctionResult:
    g: Final[float]
    contributions: Final[dict[str, float]]
    """Term of every boundary letter a."""
    plain: Final[dict[str, complex]]
    """<a0|00>."""
    flipped: Final[dict[str, complex]]
    """<a0|O_X|00>."""
    denominators: Final[dict[str, float]]
    """|<a0|aa>|."""
    projector_norm: Final[float]
    """<00|P|00>."""
    mode: Final[GMode]
    g_err: Final[float] = 0.0
    """Bootstrap standard deviation; 0 for exact states."""
    valid: Final[bool] = True
    """False when the cut states cannot be told apart from the ring state."""
    sign_resolution: Final[SignResolution | None] = None

    @property
    def symmetry_defect(self) -> float:
        """Spread between the boundary contributions, 0 for spin-flip-related pinnings."""
        values = list(self.contributions.values())
        return max(values) - min(values)


def _assemble(
    plain: abc.Mapping[str, complex],
    flipped: abc.Mapping[str, complex],
    denominators: abc.Mapping[str, float],
    ring_flip: complex,
    rules: LabRules,
    *,
    strict: bool = True,
) -> tuple[float, dict[str, float], float]:
    """g, its boundary terms and <00|P|00>.

    Degenerate denominators raise when ``strict``; otherwise their terms, and g, become NaN.
    """
    projector_norm = (1 + ring_flip.real) / 2
    threshold = rules.numeric.DEGENERATE_OVERLAP
    if projector_norm < threshold:
        if strict:
            raise DegenerateConfigurationError("<00|P|00>", projector_norm)

        return float("nan"), dict.fromkeys(denominators, float("nan")), projector_norm

    contributions: dict[str, float] = {}
    for a, denominator in denominators.items():
        if denominator < threshold:
            if strict:
                raise DegenerateConfigurationError(f"|<{a}0|{a}{a}>|", denominator)

            contributions[a] = float("nan")
            continue

        projected = abs(plain[a] + flipped[a]) / 2
        contributions[a] = projected / np.sqrt(projector_norm) / denominator

    return sum(contributions.values()), contributions, projector_norm


def _distinguishable(plain: abc.Mapping[str, complex], /) -> bool:
    return all(abs(amplitude) < 1 - 1e-9 for amplitude in plain.values())


def _check_states(states: abc.Mapping[str, State], labels: abc.Sequence[str]) -> None:
    missing = [label for label in labels if label not in states]
    if missing:
        msg = f"Missing states for {', '.join(missing)}"
        raise KeyError(msg)

    L = states["00"].num_sites
    for label in labels:
        if states[label].num_sites != L:
            raise SiteCountError(states[label].num_sites, f"{L} (state {label})")


def compute_g(
    states: abc.Mapping[str, State],
    /,
    boundaries: abc.Sequence[str] = PINNED_BOUNDARIES,
    *,
    rules: LabRules = DEFAULT_LAB_RULES,
) -> GFunctionResult:
    """g from exact (or otherwise classically known) states keyed by cut label."""
    _check_states(states, required_labels(boundaries))
    ring = states["00"]
    ring_flipped = ring.flipped()

    plain = {a: overlap(states[a + "0"], ring) for a in boundaries}
    flipped = {a: overlap(states[a + "0"], ring_flipped) for a in boundaries}
    denominators = {a: abs(overlap(states[a + "0"], states[a + a])) for a in boundaries}
    g, contributions, norm = _assemble(
        plain, flipped, denominators, overlap(ring, ring_flipped), rules
    )

    valid = _distinguishable(plain)
    if not valid:
        logger.warning("Cut states coincide with the ring state; g=%.6f is meaningless", g)

    return GFunctionResult(
        g=g,
        contributions=contributions,
        plain=plain,
        flipped=flipped,
        denominators=denominators,
        projector_norm=norm,
        mode=GMode.EXACT,
        valid=valid,
    )


def exact_states(
    p: ModelParams,
    /,
    boundaries: abc.Sequence[str] = PINNED_BOUNDARIES,
    *,
    dmrg: DmrgConfig | None = None,
    rules: LabRules = DEFAULT_LAB_RULES,
) -> dict[str, State]:
    """Oracle ground states of the ring and every cut configuration g needs."""
    states: dict[str, State] = {}
    for label in required_labels(boundaries):
        c = CutConfig.of_label(label)
        states[label] = low_lying_states(p, c, 1, dmrg=dmrg, rules=rules).states[0]
        logger.debug("Oracle state %s ready (L=%d)", label, p.L)
    return states


# circuit protocol -------------------------------------------------------------------------


@frozen(kw_only=True)
class ProtocolConfig:
    shots: Final[int | None] = field(default=None, validator=validators.optional(validators.ge(1)))
    """Shots per overlap run; exact probabilities when None."""
    sign_resolution: Final[SignResolution] = SignResolution.SIMULATION
    resamples: Final[int] = field(default=100, validator=validators.ge(0))
    """Bootstrap resamples of the estimated probabilities, used only with shots."""
    seed: Final[int | None] = 0


def variational_schedules(
    p: ModelParams,
    /,
    boundaries: abc.Sequence[str] = PINNED_BOUNDARIES,
    cfg: PrepConfig | None = None,
    *,
    dmrg: DmrgConfig | None = None,
) -> dict[str, ParamSchedule]:
    """Schedules optimized separately for every configuration label."""
    schedules: dict[str, ParamSchedule] = {}
    for label in required_labels(boundaries):
        c = CutConfig.of_label(label)
        base = optimize_energy_phase(p, c, cfg).schedule
        schedules[label] = optimize_overlap_phase(p, base, c, cfg, dmrg=dmrg).schedule
    return schedules


def variational_circuits(
    p: ModelParams, schedules: abc.Mapping[str, ParamSchedule], /
) -> dict[str, CircuitIR]:
    return {
        label: build_ansatz(p, sched, CutConfig.of_label(label))
        for label, sched in schedules.items()
    }


def _phase(amplitude: complex) -> complex:
    size = abs(amplitude)
    return amplitude / size if size > 1e-12 else 1.0


@frozen
class _Bracket:
    prep: str
    ref: str
    project: bool


def _brackets(boundaries: abc.Sequence[str]) -> list[_Bracket]:
    out = [_Bracket("00", "00", project=True)]
    for a in boundaries:
        out += [
            _Bracket("00", a + "0", project=False),
            _Bracket("00", a + "0", project=True),
            _Bracket(a + a, a + "0", project=False),
        ]
    return out


def _g_from_probabilities(
    probabilities: abc.Mapping[_Bracket, float],
    phases: abc.Mapping[_Bracket, complex],
    boundaries: abc.Sequence[str],
    rules: LabRules,
    *,
    strict: bool = True,
) -> GFunctionResult:
    def amplitude(bracket: _Bracket) -> complex:
        return np.sqrt(max(probabilities[bracket], 0.0)) * phases[bracket]

    plain = {a: amplitude(_Bracket("00", a + "0", project=False)) for a in boundaries}
    flipped = {a: amplitude(_Bracket("00", a + "0", project=True)) for a in boundaries}
    denominators = {a: abs(amplitude(_Bracket(a + a, a + "0", project=False))) for a in boundaries}
    ring_flip = amplitude(_Bracket("00", "00", project=True))
    g, contributions, norm = _assemble(
        plain, flipped, denominators, ring_flip, rules, strict=strict
    )
    return GFunctionResult(
        g=g,
        contributions=contributions,
        plain=plain,
        flipped=flipped,
        denominators=denominators,
        projector_norm=norm,
        mode=GMode.PROTOCOL,
        valid=bool(np.isfinite(g)) and _distinguishable(plain),
    )


def compute_g_protocol(
    circuits: abc.Mapping[str, CircuitIR],
    /,
    boundaries: abc.Sequence[str] = PINNED_BOUNDARIES,
    cfg: ProtocolConfig | None = None,
    *,
    noise: NoiseSpec | None = None,
    rules: LabRules = DEFAULT_LAB_RULES,
) -> GFunctionResult:
    """g with every bracket estimated as P(0^L) of an overlap circuit.

    The protocol only sees magnitudes. Relative phases of the two brackets entering a
    projected overlap come from noiseless simulation or are assumed positive, depending on
    ``cfg.sign_resolution``.
    """
    cfg = cfg or ProtocolConfig()
    labels = required_labels(boundaries)
    missing = [label for label in labels if label not in circuits]
    if missing:
        msg = f"Missing circuits for {', '.join(missing)}"
        raise KeyError(msg)

    brackets = _brackets(boundaries)
    seeds = spawn_seeds(cfg.seed, len(brackets))
    probabilities = {
        b: overlap_protocol(
            circuits[b.prep],
            circuits[b.ref],
            b.project,
            noise=noise,
            shots=cfg.shots,
            seed=seed,
            rules=rules,
        )
        for b, seed in zip(brackets, seeds, strict=True)
    }

    if cfg.sign_resolution is SignResolution.SIMULATION:
        phases = {
            b: _phase(overlap_amplitude(circuits[b.prep], circuits[b.ref], b.project, rules))
            for b in brackets
        }
    else:
        phases = {b: complex(1.0) for b in brackets}

    # sampled zeros are shot noise, not a degenerate configuration
    result = _g_from_probabilities(
        probabilities, phases, boundaries, rules, strict=cfg.shots is None
    )
    if not result.valid:
        logger.warning("Protocol g=%.6f is not usable (L=%d)", result.g, circuits["00"].num_sites)

    g_err = 0.0
    if cfg.shots is not None and cfg.resamples > 1:
        g_err = _bootstrap(probabilities, phases, boundaries, cfg, rules)

    logger.info("Protocol g=%.6f +- %.6f (L=%d)", result.g, g_err, circuits["00"].num_sites)
    return evolve(result, g_err=g_err, sign_resolution=cfg.sign_resolution)


def _bootstrap(
    probabilities: abc.Mapping[_Bracket, float],
    phases: abc.Mapping[_Bracket, complex],
    boundaries: abc.Sequence[str],
    cfg: ProtocolConfig,
    rules: LabRules,
) -> float:
    assert cfg.shots is not None
    rng = make_rng(cfg.seed)
    samples: list[float] = []
    for _ in range(cfg.resamples):
        resampled = {b: rng.binomial(cfg.shots, p) / cfg.shots for b, p in probabilities.items()}
        try:
            samples.append(_g_from_probabilities(resampled, phases, boundaries, rules).g)

        except DegenerateConfigurationError:
            continue

    if len(samples) < 2:
        logger.warning("Too few usable bootstrap resamples (%d)", len(samples))
        return float("nan")

    return float(np.std(samples, ddof=1))


# noise study ------------------------------------------------------------------------------


@frozen(kw_only=True)
class GScalingRow:
    L: Final[int]
    p_cz: Final[float]
    g: Final[float]
    g_err: Final[float]
    raw_overlap: Final[float]
    """|<a0|00>| for the first boundary letter, as measured under noise."""


def g_scaling_study(
    circuits_by_size: abc.Mapping[int, abc.Mapping[str, CircuitIR]],
    rates: abc.Sequence[float],
    /,
    boundaries: abc.Sequence[str] = PINNED_BOUNDARIES,
    cfg: ProtocolConfig | None = None,
    *,
    trajectories: int = 200,
    seed: SeedLike = None,
    rules: LabRules = DEFAULT_LAB_RULES,
) -> list[GScalingRow]:
    """Protocol g and the raw cut-ring overlap for every size and CZ depolarizing rate."""
    cfg = cfg or ProtocolConfig()
    rows: list[GScalingRow] = []
    seeds = iter(spawn_seeds(seed, len(circuits_by_size) * len(rates)))
    for L, circuits in sorted(circuits_by_size.items()):
        for rate in rates:
            noise = NoiseSpec(cz_depolarizing=rate, trajectories=trajectories)
            job_seed = next(seeds)
            result = compute_g_protocol(
                circuits,
                boundaries,
                ProtocolConfig(
                    shots=cfg.shots,
                    sign_resolution=cfg.sign_resolution,
                    resamples=cfg.resamples,
                    seed=int(job_seed.generate_state(1)[0]),
                ),
                noise=noise,
                rules=rules,
            )
            a = boundaries[0]
            rows.append(
                GScalingRow(
                    L=L,
                    p_cz=rate,
                    g=result.g,
                    g_err=result.g_err,
                    raw_overlap=abs(result.plain[a]),
                )
            )
            logger.info("L=%d p_cz=%.4f: g=%.6f raw=%.6f", L, rate, result.g, rows[-1].raw_overlap)

    return rows
