"""Zero-noise extrapolation with layer folding and Pauli twirling."""

from __future__ import annotations

import logging
import typing
import warnings
from collections import abc
from typing import Final

import numpy as np
import scipy.optimize
from attrs import define, field, frozen, validators

from .circuit import SINGLE_QUBIT_LAYERS, CZLayer, Layer, PauliLayer, invert
from .enums.analysis import ZneModel
from .enums.pauli import Pauli
from .exceptions import FitError
from .pauli import PauliTerm, conjugate_by_cz_layer, expectation
from .sim import NoiseSpec, run
from .tools.estimators import estimate_energy, group_qubit_wise, group_shot_values, sample_groups
from .utils import make_rng, spawn_seeds

if typing.TYPE_CHECKING:
    from .circuit import CircuitIR
    from .pauli import PauliSum
    from .typeshed import FloatArray, SeedLike

__all__ = (
    "FoldedCircuit",
    "ZneConfig",
    "ZneEstimate",
    "ZnePoint",
    "ZneStudy",
    "bootstrap_zne",
    "extrapolate_zne",
    "fold_circuit",
    "pauli_twirl",
    "twirl_layer",
    "zne_study",
)

logger = logging.getLogger(__name__)

_TWIRL_PAULIS: Final = (Pauli.I, Pauli.X, Pauli.Y, Pauli.Z)


def _check_factors(instance: object, _: object, factors: tuple[float, ...]) -> None:
    if not factors:
        msg = "At least one noise scale factor is needed"
        raise ValueError(msg)

    if any(f < 1 for f in factors):
        msg = f"Noise scale factors must be at least 1, got {factors}"
        raise ValueError(msg)


@frozen(kw_only=True)
class ZneConfig:
    factors: Final[tuple[float, ...]] = field(
        default=(1.0, 1.5, 2.0, 2.5, 3.0),
        converter=lambda v: tuple(float(f) for f in v),
        validator=_check_factors,
    )
    twirls: Final[int] = field(default=25, validator=validators.ge(1))
    """Pauli-twirled instances per scale factor."""
    model: Final[ZneModel] = ZneModel.LINEAR
    shots: Final[int | None] = field(default=None, validator=validators.optional(validators.ge(1)))
    """Shots per measurement group and twirl; exact expectations when None."""
    resamples: Final[int] = field(default=100, validator=validators.ge(0))
    seed: Final[int | None] = 0


# folding ----------------------------------------------------------------------------------


@frozen(kw_only=True)
class FoldedCircuit:
    circuit: Final[CircuitIR]
    requested: Final[float]
    achieved: Final[float]
    """CZ-layer count of the folded circuit over that of the original."""
    folds: Final[tuple[int, ...]]
    """Number of times every CZ layer was folded."""


def _fold_units(c: CircuitIR) -> list[tuple[int, int]]:
    # (start, stop) slices of each CZ layer together with the rotation layer before it
    units: list[tuple[int, int]] = []
    for index, layer in enumerate(c.layers):
        if not isinstance(layer, CZLayer):
            continue
        start = index
        if index > 0 and isinstance(c.layers[index - 1], SINGLE_QUBIT_LAYERS):
            start = index - 1
        units.append((start, index + 1))
    return units


def fold_circuit(c: CircuitIR, scale: float, /, seed: SeedLike = None) -> FoldedCircuit:
    """Replace randomly chosen units U (a CZ layer and its preceding rotation layer) by
    U U^dagger U until the CZ depth has grown by ``scale``.

    Every fold adds two CZ layers, so the achievable factors are 1 + 2k/n for n CZ layers.
    """
    if scale < 1:
        msg = f"Noise scale factor must be at least 1, got {scale}"
        raise ValueError(msg)

    units = _fold_units(c)
    n = len(units)
    if n == 0:
        msg = "Circuit has no CZ layer to fold"
        raise ValueError(msg)

    total = round((scale - 1) * n / 2)
    folds = np.full(n, total // n)
    extra = make_rng(seed).choice(n, size=total % n, replace=False)
    folds[extra] += 1

    achieved = (n + 2 * total) / n
    if abs(achieved - scale) > 1e-9:
        logger.warning(
            "Scale factor %.4g unreachable with %d CZ layers; using %.4g", scale, n, achieved
        )

    layers: list[Layer] = []
    cursor = 0
    for (start, stop), count in zip(units, folds, strict=True):
        layers.extend(c.layers[cursor:stop])
        unit = c.with_layers(c.layers[start:stop])
        inverse = invert(unit).layers
        for _ in range(count):
            layers.extend(inverse)
            layers.extend(unit.layers)
        cursor = stop
    layers.extend(c.layers[cursor:])

    return FoldedCircuit(
        circuit=c.with_layers(layers),
        requested=scale,
        achieved=achieved,
        folds=tuple(int(k) for k in folds),
    )


# twirling ---------------------------------------------------------------------------------


def twirl_layer(layer: CZLayer, frame: abc.Mapping[int, Pauli], /) -> list[Layer]:
    """P, CZ, P' with P' = CZ P CZ, which equals the bare CZ layer up to a global phase."""
    before = PauliTerm(factors=frame)
    if not before.factors:
        return [layer]

    after = conjugate_by_cz_layer(before, layer.pairs)
    return [PauliLayer(before.factors), layer, PauliLayer(after.factors)]


def pauli_twirl(c: CircuitIR, /, seed: SeedLike = None) -> CircuitIR:
    """Draw an independent uniform Pauli on every site touched by every CZ layer."""
    rng = make_rng(seed)
    layers: list[Layer] = []
    for layer in c.layers:
        if not isinstance(layer, CZLayer):
            layers.append(layer)
            continue

        draws = rng.integers(len(_TWIRL_PAULIS), size=len(layer.sites))
        frame = {site: _TWIRL_PAULIS[k] for site, k in zip(layer.sites, draws, strict=True)}
        layers.extend(twirl_layer(layer, frame))

    return c.with_layers(layers)


# extrapolation ----------------------------------------------------------------------------


@frozen(kw_only=True)
class ZnePoint:
    factor: Final[float]
    value: Final[float]
    sigma: Final[float] = 0.0


@frozen(kw_only=True)
class ZneEstimate:
    value: Final[float]
    """Extrapolated zero-noise value."""
    sigma: Final[float]
    model: Final[ZneModel]
    parameters: Final[tuple[float, ...]]
    """Linear: (slope, intercept). Exponential: (amplitude, rate)."""


def _linear(factors: FloatArray, values: FloatArray, sigmas: FloatArray) -> ZneEstimate:
    weighted = bool(np.all(sigmas > 0))
    design = np.column_stack([factors, np.ones_like(factors)])
    w = 1 / sigmas if weighted else np.ones_like(factors)
    a = design * w[:, None]
    b = values * w
    if np.linalg.matrix_rank(a) < 2:
        msg = "Scale factors must contain at least two distinct values"
        raise FitError(msg)

    params, *_ = np.linalg.lstsq(a, b, rcond=None)
    normal = np.linalg.inv(a.T @ a)
    if weighted:
        cov = normal
    else:
        dof = factors.size - 2
        residual = values - design @ params
        cov = normal * (float(residual @ residual) / dof if dof > 0 else 0.0)

    return ZneEstimate(
        value=float(params[1]),
        sigma=float(np.sqrt(max(cov[1, 1], 0.0))),
        model=ZneModel.LINEAR,
        parameters=(float(params[0]), float(params[1])),
    )


def _exponential(factors: FloatArray, values: FloatArray, sigmas: FloatArray) -> ZneEstimate:
    logger.warning("Exponential extrapolation is less stable than linear; check the residuals")
    sign = np.sign(values[0])
    if sign == 0 or np.any(np.sign(values) != sign):
        msg = "Exponential extrapolation needs values of one sign"
        raise FitError(msg)

    magnitude = np.abs(values)
    slope, intercept = np.polyfit(factors, np.log(magnitude), 1)

    def model(f: FloatArray, amplitude: float, rate: float) -> FloatArray:
        return amplitude * np.exp(-rate * f)

    weighted = bool(np.all(sigmas > 0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.optimize.OptimizeWarning)
        try:
            params, cov = scipy.optimize.curve_fit(
                model,
                factors,
                magnitude,
                p0=(np.exp(intercept), -slope),
                sigma=sigmas if weighted else None,
                absolute_sigma=weighted,
                maxfev=10000,
            )

        except RuntimeError as exc:
            raise FitError(str(exc)) from None

    variance = cov[0, 0] if np.isfinite(cov[0, 0]) else 0.0
    return ZneEstimate(
        value=float(sign * params[0]),
        sigma=float(np.sqrt(max(variance, 0.0))),
        model=ZneModel.EXPONENTIAL,
        parameters=(float(sign * params[0]), float(params[1])),
    )


def extrapolate_zne(
    points: abc.Sequence[ZnePoint], /, model: ZneModel = ZneModel.LINEAR
) -> ZneEstimate:
    """Weighted least-squares fit evaluated at zero noise.

    Points are weighted by 1/sigma when every sigma is positive, otherwise the fit is
    unweighted and its uncertainty comes from the residual scatter.
    """
    if len(points) < 2:
        msg = f"Extrapolation needs at least 2 points, got {len(points)}"
        raise FitError(msg)

    factors = np.array([p.factor for p in points])
    values = np.array([p.value for p in points])
    sigmas = np.array([p.sigma for p in points])
    if np.unique(factors).size < 2:
        msg = "Scale factors must contain at least two distinct values"
        raise FitError(msg)

    if model is ZneModel.EXPONENTIAL:
        return _exponential(factors, values, sigmas)

    return _linear(factors, values, sigmas)


# study ------------------------------------------------------------------------------------


@define(kw_only=True)
class ZneStudy:
    points: list[ZnePoint] = field(factory=list)
    rows: list[tuple[float, int, float]] = field(factory=list)
    """(achieved factor, twirl index, value) of every executed circuit."""
    estimate: ZneEstimate | None = None
    bootstrap_sigma: float | None = None
    noiseless: float = float("nan")
    shot_values: dict[float, list[list[FloatArray]]] = field(factory=dict)
    """Factor -> per measurement group -> single-shot values pooled over twirls."""
    constant: float = 0.0

    @property
    def unmitigated(self) -> float:
        """Value at the smallest scale factor."""
        return min(self.points, key=lambda p: p.factor).value


def zne_study(
    c: CircuitIR,
    H: PauliSum,
    /,
    noise: NoiseSpec,
    cfg: ZneConfig | None = None,
) -> ZneStudy:
    """Fold, twirl, run and extrapolate <H> for every scale factor."""
    cfg = cfg or ZneConfig()
    study = ZneStudy(noiseless=expectation(run(c), H))
    constant, groups = group_qubit_wise(H)
    study.constant = constant
    seeds = iter(spawn_seeds(cfg.seed, len(cfg.factors) * (cfg.twirls + 1)))

    for factor in cfg.factors:
        folded = fold_circuit(c, factor, next(seeds))
        values: list[float] = []
        sigmas: list[float] = []
        pooled: list[list[FloatArray]] = [[] for _ in groups]

        for twirl in range(cfg.twirls):
            seed = next(seeds)
            state = run(pauli_twirl(folded.circuit, seed), noise, seed=seed)
            if cfg.shots is None:
                value = expectation(state, H)
                sigmas.append(0.0)

            else:
                counts = sample_groups(state, groups, cfg.shots, make_rng(seed))
                energy = estimate_energy(constant, groups, counts)
                value = energy.value
                sigmas.append(energy.sigma)
                for bucket, group, histogram in zip(pooled, groups, counts, strict=True):
                    bucket.append(group_shot_values(group, histogram))

            values.append(value)
            study.rows.append((folded.achieved, twirl, value))

        mean = float(np.mean(values))
        if cfg.twirls > 1:
            sigma = float(np.std(values, ddof=1) / np.sqrt(cfg.twirls))
        else:
            sigma = float(np.sqrt(np.sum(np.square(sigmas))) / len(sigmas))

        study.points.append(ZnePoint(factor=folded.achieved, value=mean, sigma=sigma))
        if cfg.shots is not None:
            study.shot_values[folded.achieved] = pooled
        logger.info("ZNE factor %.3g: %.6f +- %.6f", folded.achieved, mean, sigma)

    study.estimate = extrapolate_zne(study.points, cfg.model)
    if cfg.shots is not None and cfg.resamples > 1:
        study.bootstrap_sigma = bootstrap_zne(study, cfg)

    logger.info(
        "ZNE: raw %.6f, mitigated %.6f, exact %.6f",
        study.unmitigated,
        study.estimate.value,
        study.noiseless,
    )
    return study


def bootstrap_zne(study: ZneStudy, /, cfg: ZneConfig | None = None) -> float:
    """Spread of the extrapolated value over shot-level resamples pooled across twirls."""
    cfg = cfg or ZneConfig()
    if not any(bucket for groups in study.shot_values.values() for bucket in groups):
        msg = "Bootstrap needs shot-level data; run the study with shots"
        raise ValueError(msg)

    rng = make_rng(cfg.seed)
    pooled = {
        factor: [np.concatenate(bucket) for bucket in groups]
        for factor, groups in study.shot_values.items()
    }
    estimates: list[float] = []
    for _ in range(cfg.resamples):
        points = [
            ZnePoint(
                factor=factor,
                value=study.constant
                + sum(float(rng.choice(values, size=values.size).mean()) for values in groups),
            )
            for factor, groups in pooled.items()
        ]
        estimates.append(extrapolate_zne(points, cfg.model).value)

    return float(np.std(estimates, ddof=1))
