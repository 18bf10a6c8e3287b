"""Entanglement Hamiltonian tomography.

The reduced state of a window A is modelled as rho_A = exp(-H_A) / Tr exp(-H_A) with

    H_A = -sum beta^ZZ_j Z_j Z_j+1 - sum beta^ZXZ_j Z_j-1 X_j Z_j+1 - sum beta^X_j X_j,

and the betas are fitted to measured outcome histograms under random local Pauli bases.
"""

from __future__ import annotations

import functools
import logging
import typing
from collections import abc
from typing import Final
from typing_extensions import Self

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse.linalg as spla
from attrs import define, field, frozen, validators

from .entanglement import entanglement_spectrum, uhlmann_fidelity
from .enums.analysis import GradientKind
from .enums.pauli import Pauli
from .exceptions import ConvergenceError, SiteCountError, SizeLimitError
from .pauli import PauliSum, PauliTerm
from .rules import DEFAULT_LAB_RULES, LabRules
from .sim import apply_readout, marginal_counts, random_bases, sample
from .utils import make_rng

if typing.TYPE_CHECKING:
    import scipy.sparse as sp

    from .abc.state import MeasurableState
    from .sim import Counts
    from .typeshed import ComplexArray, FloatArray, SeedLike

__all__ = (
    "NUM_TRACKED_LEVELS",
    "EhtConfig",
    "EhtFit",
    "EhtTrace",
    "EntHamCoeffs",
    "MeasurementDataset",
    "NoiseComparison",
    "Reconstruction",
    "WindowData",
    "WindowResult",
    "collect_dataset",
    "depolarize",
    "eht_gradient",
    "eht_loss",
    "exact_window_data",
    "fit_eht",
    "gibbs_state",
    "noise_robustness",
    "num_parameters",
    "reconstruct_and_score",
    "run_window",
    "shuffle_dataset",
    "subsystem_windows",
    "window_data",
)

logger = logging.getLogger(__name__)

NUM_TRACKED_LEVELS: Final = 8
"""Entanglement levels kept in traces and window results."""


@frozen(kw_only=True)
class EhtConfig:
    settings: Final[int] = field(default=200, validator=validators.ge(1))
    """Random measurement bases per prepared state."""
    shots: Final[int] = field(default=3000, validator=validators.ge(1))
    restarts: Final[int] = field(default=3, validator=validators.ge(1))
    init_range: Final[tuple[float, float]] = (0.1, 1.0)
    """Starting betas are uniform in this interval."""
    gradient: Final[GradientKind] = GradientKind.ANALYTIC
    eigenpairs: Final[int] = field(default=12, validator=validators.ge(2))
    """Eigenpairs kept when the window is too large for full diagonalization."""
    full_diagonalization: Final[int] = field(default=10, validator=validators.ge(1))
    """Windows up to this size use every eigenpair of H_A."""
    fd_step: Final[float] = field(default=1e-6, validator=validators.gt(0))
    max_iterations: Final[int] = field(default=1000, validator=validators.ge(1))
    snapshot_every: Final[int] = field(default=10, validator=validators.ge(1))
    """Optimizer iterations between recorded learning stages."""
    seed: Final[int | None] = 0


# coefficients -----------------------------------------------------------------------------


def _to_array(value: abc.Iterable[float]) -> FloatArray:
    return np.asarray(list(value), dtype=np.float64)


@frozen(kw_only=True, eq=False)
class EntHamCoeffs:
    """Inverse-temperature weights of the three term families on a window of ``size`` sites."""

    zz: FloatArray = field(converter=_to_array)
    """One per bond (j, j+1) inside the window."""
    zxz: FloatArray = field(converter=_to_array)
    """One per interior site."""
    x: FloatArray = field(converter=_to_array, validator=validators.min_len(1))

    def __attrs_post_init__(self) -> None:
        size = self.size
        if self.zz.size != max(size - 1, 0) or self.zxz.size != max(size - 2, 0):
            msg = (
                f"Window of {size} sites needs {max(size - 1, 0)} ZZ and {max(size - 2, 0)} ZXZ"
                f" weights, got {self.zz.size} and {self.zxz.size}"
            )
            raise ValueError(msg)

    @property
    def size(self) -> int:
        return self.x.size

    @classmethod
    def zeros(cls, size: int, /) -> Self:
        return cls.from_vector(size, np.zeros(num_parameters(size)))

    @classmethod
    def random(cls, size: int, rng: np.random.Generator, /, low: float, high: float) -> Self:
        return cls.from_vector(size, rng.uniform(low, high, size=num_parameters(size)))

    @classmethod
    def from_vector(cls, size: int, vector: abc.Sequence[float] | FloatArray, /) -> Self:
        v = np.asarray(vector, dtype=np.float64)
        if v.size != num_parameters(size):
            msg = f"Window of {size} sites has {num_parameters(size)} weights, got {v.size}"
            raise ValueError(msg)

        n_zz, n_zxz = max(size - 1, 0), max(size - 2, 0)
        return cls(zz=v[:n_zz], zxz=v[n_zz : n_zz + n_zxz], x=v[n_zz + n_zxz :])

    def to_vector(self) -> FloatArray:
        return np.concatenate([self.zz, self.zxz, self.x])

    def mirrored(self) -> Self:
        """Weights of the same operator with the window sites listed in reverse."""
        return type(self)(zz=self.zz[::-1], zxz=self.zxz[::-1], x=self.x[::-1])

    def hamiltonian(self) -> PauliSum:
        return PauliSum(
            num_sites=self.size,
            terms=tuple(
                term.scaled(-weight)
                for term, weight in zip(_term_strings(self.size), self.to_vector(), strict=True)
            ),
            hermitian=True,
        )


def num_parameters(size: int, /) -> int:
    return max(size - 1, 0) + max(size - 2, 0) + size


@functools.lru_cache(maxsize=32)
def _term_strings(size: int, /) -> tuple[PauliTerm, ...]:
    zz = [PauliTerm(factors={j: Pauli.Z, j + 1: Pauli.Z}) for j in range(size - 1)]
    zxz = [
        PauliTerm(factors={j - 1: Pauli.Z, j: Pauli.X, j + 1: Pauli.Z}) for j in range(1, size - 1)
    ]
    x = [PauliTerm(factors={j: Pauli.X}) for j in range(size)]
    return (*zz, *zxz, *x)


@functools.lru_cache(maxsize=32)
def _term_matrices(size: int, /) -> tuple[sp.csr_matrix, ...]:
    return tuple(
        PauliSum(num_sites=size, terms=(term,), hermitian=True).to_sparse().real.tocsr()
        for term in _term_strings(size)
    )


def _operator(coeffs: EntHamCoeffs, /) -> sp.csr_matrix:
    weights = coeffs.to_vector()
    matrices = _term_matrices(coeffs.size)
    total = -weights[0] * matrices[0]
    for weight, matrix in zip(weights[1:], matrices[1:], strict=True):
        total = total - weight * matrix
    return total.tocsr()


@frozen(eq=False)
class _Gibbs:
    levels: FloatArray
    """Eigenvalues of H_A, ascending, shifted so the lowest is 0."""
    vectors: ComplexArray
    boltzmann: FloatArray
    """exp(-levels)."""

    @property
    def weights(self) -> FloatArray:
        return self.boltzmann / self.boltzmann.sum()

    def density(self) -> ComplexArray:
        return (self.vectors * self.weights) @ self.vectors.conj().T


def _diagonalize(coeffs: EntHamCoeffs, eigenpairs: int | None) -> _Gibbs:
    H = _operator(coeffs)
    dim = H.shape[0]
    if eigenpairs is None or eigenpairs >= dim - 1:
        levels, vectors = scipy.linalg.eigh(H.toarray())

    else:
        levels, vectors = spla.eigsh(H, k=eigenpairs, which="SA")
        order = np.argsort(levels)
        levels, vectors = levels[order], vectors[:, order]

    levels = levels - levels[0]
    return _Gibbs(levels=levels, vectors=vectors.astype(np.complex128), boltzmann=np.exp(-levels))


def gibbs_state(coeffs: EntHamCoeffs, /, eigenpairs: int | None = None) -> ComplexArray:
    """exp(-H_A) / Tr exp(-H_A), from all eigenpairs or only the lowest ``eigenpairs``."""
    return _diagonalize(coeffs, eigenpairs).density()


# data -------------------------------------------------------------------------------------


@frozen(kw_only=True)
class MeasurementDataset:
    """Histograms over full bitstrings of the chain, one per global basis setting."""

    num_sites: Final[int]
    bases: Final[tuple[tuple[Pauli, ...], ...]]
    counts: Final[tuple[Counts, ...]]
    shots: Final[int]

    def __attrs_post_init__(self) -> None:
        if len(self.bases) != len(self.counts):
            msg = f"{len(self.bases)} settings but {len(self.counts)} histograms"
            raise ValueError(msg)

        for index, histogram in enumerate(self.counts):
            if sum(histogram.values()) != self.shots:
                msg = f"Setting {index} holds {sum(histogram.values())} shots, not {self.shots}"
                raise ValueError(msg)

    def __len__(self) -> int:
        return len(self.bases)


@frozen(kw_only=True, eq=False)
class WindowData:
    """Outcome probabilities on one window, rows indexed by setting."""

    sites: Final[tuple[int, ...]]
    bases: Final[tuple[tuple[Pauli, ...], ...]]
    probabilities: FloatArray

    def __attrs_post_init__(self) -> None:
        expected = (len(self.bases), 1 << len(self.sites))
        if self.probabilities.shape != expected:
            msg = f"Expected probabilities of shape {expected}, got {self.probabilities.shape}"
            raise ValueError(msg)

    @property
    def size(self) -> int:
        return len(self.sites)


def collect_dataset(
    state: MeasurableState,
    /,
    settings: int = 200,
    shots: int = 3000,
    *,
    seed: SeedLike = None,
) -> MeasurementDataset:
    """Sample ``shots`` outcomes under each of ``settings`` random global Pauli bases."""
    rng = make_rng(seed)
    bases = random_bases(state.num_sites, settings, int(rng.integers(2**32)))
    counts = tuple(sample(state, b, shots, rng) for b in bases)
    logger.info("Collected %d settings x %d shots on L=%d", settings, shots, state.num_sites)
    return MeasurementDataset(
        num_sites=state.num_sites, bases=tuple(bases), counts=counts, shots=shots
    )


def window_data(dataset: MeasurementDataset, sites: abc.Sequence[int], /) -> WindowData:
    """Marginal frequencies of the window, read off the global histograms."""
    sites = tuple(site % dataset.num_sites for site in sites)
    probabilities = np.zeros((len(dataset), 1 << len(sites)))
    for row, histogram in enumerate(dataset.counts):
        for bits, n in marginal_counts(histogram, sites).items():
            probabilities[row, int(bits, 2)] = n
    return WindowData(
        sites=sites,
        bases=tuple(tuple(b[site] for site in sites) for b in dataset.bases),
        probabilities=probabilities / dataset.shots,
    )


def exact_window_data(
    rho: ComplexArray,
    bases: abc.Sequence[abc.Sequence[Pauli]],
    /,
    sites: abc.Sequence[int] | None = None,
) -> WindowData:
    """Noise-free probabilities of a window state under the given local bases."""
    size = rho.shape[0].bit_length() - 1
    rows = [
        np.clip(np.real(np.diag(_rotate_density(rho, size, b))), 0, None) for b in bases
    ]
    return WindowData(
        sites=tuple(sites) if sites is not None else tuple(range(size)),
        bases=tuple(tuple(b) for b in bases),
        probabilities=np.array(rows),
    )


def _rotate_density(rho: ComplexArray, size: int, bases: abc.Sequence[Pauli]) -> ComplexArray:
    half = apply_readout(rho, size, bases)
    return apply_readout(half.conj().T, size, bases).conj().T


def shuffle_dataset(dataset: MeasurementDataset, /, seed: SeedLike = None) -> MeasurementDataset:
    """Permute every site's outcomes independently across shots, destroying correlations."""
    rng = make_rng(seed)
    shuffled: list[Counts] = []
    for histogram in dataset.counts:
        bits = np.array(
            [[int(c) for c in key] for key, n in histogram.items() for _ in range(n)],
            dtype=np.int8,
        )
        for column in range(bits.shape[1]):
            rng.shuffle(bits[:, column])
        keys = ["".join(map(str, row)) for row in bits]
        out: Counts = {}
        for key in keys:
            out[key] = out.get(key, 0) + 1
        shuffled.append(out)

    return MeasurementDataset(
        num_sites=dataset.num_sites,
        bases=dataset.bases,
        counts=tuple(shuffled),
        shots=dataset.shots,
    )


def subsystem_windows(L: int, size: int, count: int, /) -> list[tuple[int, ...]]:
    """``count`` windows of ``size`` contiguous sites, uniformly spaced, wrapping around."""
    if not 1 <= size <= L:
        raise SiteCountError(size, f"1..{L}")

    starts = [round(k * L / count) % L for k in range(count)]
    return [tuple((start + j) % L for j in range(size)) for start in starts]


def depolarize(rho: ComplexArray, p: float, /) -> ComplexArray:
    """(1 - p) rho + p I/d."""
    dim = rho.shape[0]
    return (1 - p) * rho + p * np.eye(dim) / dim


# loss -------------------------------------------------------------------------------------


def _rotated_vectors(gibbs: _Gibbs, size: int, bases: abc.Sequence[Pauli]) -> ComplexArray:
    return apply_readout(gibbs.vectors, size, bases)


def _residuals(gibbs: _Gibbs, data: WindowData) -> tuple[FloatArray, list[ComplexArray]]:
    weights = gibbs.weights
    rotated = [_rotated_vectors(gibbs, data.size, b) for b in data.bases]
    model = np.array([(np.abs(m) ** 2) @ weights for m in rotated])
    return data.probabilities - model, rotated


def _check_window(size: int, data: WindowData, rules: LabRules) -> None:
    limit = rules.limits.EHT_SUBSYSTEM
    if data.size > limit:
        raise SizeLimitError("Entanglement Hamiltonian window", data.size, limit)

    if size != data.size:
        raise SiteCountError(size, str(data.size))


def eht_loss(
    coeffs: EntHamCoeffs,
    data: WindowData,
    /,
    eigenpairs: int | None = None,
    *,
    rules: LabRules = DEFAULT_LAB_RULES,
) -> float:
    """Sum over settings and outcomes of (measured - modelled)^2."""
    _check_window(coeffs.size, data, rules)
    residual, _ = _residuals(_diagonalize(coeffs, eigenpairs), data)
    return float(np.sum(residual**2))


def _divided_differences(gibbs: _Gibbs) -> FloatArray:
    # f[l_i, l_j] of f(x) = exp(-x), with f'(l_i) on (near) ties
    levels, e = gibbs.levels, gibbs.boltzmann
    diff = levels[:, None] - levels[None, :]
    close = np.abs(diff) < 1e-10
    safe = np.where(close, 1.0, diff)
    return np.where(close, -e[:, None] * np.ones_like(diff), (e[:, None] - e[None, :]) / safe)


def eht_gradient(
    coeffs: EntHamCoeffs, data: WindowData, /, *, rules: LabRules = DEFAULT_LAB_RULES
) -> FloatArray:
    """Exact derivative of :func:`eht_loss` with all eigenpairs kept."""
    _check_window(coeffs.size, data, rules)
    gibbs = _diagonalize(coeffs, None)
    residual, rotated = _residuals(gibbs, data)

    # G in the eigenbasis: sum over settings of M^dagger diag(r) M with M = R V
    g_tilde = sum(
        (m.conj().T * r[None, :]) @ m for m, r in zip(rotated, residual, strict=True)
    )
    assert isinstance(g_tilde, np.ndarray)

    e = gibbs.boltzmann
    Z = e.sum()
    fdd = _divided_differences(gibbs)
    trace_g_e = np.real(np.sum(e * np.diag(g_tilde)))
    V = gibbs.vectors

    grad = np.empty(num_parameters(coeffs.size))
    for k, matrix in enumerate(_term_matrices(coeffs.size)):
        o_tilde = V.conj().T @ (matrix @ V)
        # d exp(-H) / d beta_k = -V (fdd * O~) V^dagger, since dH / d beta_k = -O_k
        trace_g_de = -np.real(np.sum(g_tilde.T * fdd * o_tilde))
        trace_de = np.real(np.sum(e * np.diag(o_tilde)))
        grad[k] = -2 * (trace_g_de / Z - trace_g_e * trace_de / Z**2)

    return grad


# fitting ----------------------------------------------------------------------------------


@frozen(kw_only=True, eq=False)
class EhtTrace:
    """One recorded stage of a fit."""

    iteration: Final[int]
    loss: Final[float]
    coeffs: Final[EntHamCoeffs]
    levels: Final[tuple[float, ...]]
    """Lowest entanglement levels of the current model state."""


@define(kw_only=True, eq=False)
class EhtFit:
    coeffs: EntHamCoeffs
    loss: float
    losses: list[list[float]] = field(factory=list)
    """Loss after every iteration, one list per restart."""
    stages: list[EhtTrace] = field(factory=list)
    """Learning stages of the winning restart."""
    converged: bool = True


def _levels(coeffs: EntHamCoeffs, eigenpairs: int | None) -> tuple[float, ...]:
    xi = entanglement_spectrum(gibbs_state(coeffs, eigenpairs))
    return tuple(float(v) for v in xi[:NUM_TRACKED_LEVELS])


def fit_eht(
    data: WindowData,
    /,
    cfg: EhtConfig | None = None,
    *,
    rules: LabRules = DEFAULT_LAB_RULES,
) -> EhtFit:
    """Best of ``cfg.restarts`` quasi-Newton fits from random positive betas."""
    cfg = cfg or EhtConfig()
    size = data.size
    eigenpairs = None if size <= cfg.full_diagonalization else cfg.eigenpairs
    _check_window(size, data, rules)

    def loss(x: FloatArray) -> float:
        return eht_loss(EntHamCoeffs.from_vector(size, x), data, eigenpairs, rules=rules)

    if cfg.gradient is GradientKind.ANALYTIC and eigenpairs is None:

        def jac(x: FloatArray) -> FloatArray:
            return eht_gradient(EntHamCoeffs.from_vector(size, x), data, rules=rules)

    else:
        if cfg.gradient is GradientKind.ANALYTIC:
            logger.debug("Window of %d sites is truncated; using finite differences", size)

        def jac(x: FloatArray) -> FloatArray:
            return scipy.optimize.approx_fprime(x, loss, cfg.fd_step)

    rng = make_rng(cfg.seed)
    low, high = cfg.init_range
    best: EhtFit | None = None
    all_losses: list[list[float]] = []

    for restart in range(cfg.restarts):
        x0 = rng.uniform(low, high, size=num_parameters(size))
        losses: list[float] = []
        stages: list[EhtTrace] = []

        def record(
            xk: FloatArray, losses: list[float] = losses, stages: list[EhtTrace] = stages
        ) -> None:
            value = loss(xk)
            losses.append(value)
            if len(losses) % cfg.snapshot_every == 1:
                coeffs = EntHamCoeffs.from_vector(size, xk)
                stages.append(
                    EhtTrace(
                        iteration=len(losses),
                        loss=value,
                        coeffs=coeffs,
                        levels=_levels(coeffs, eigenpairs),
                    )
                )

        result = scipy.optimize.minimize(
            loss,
            x0,
            jac=jac,
            method="L-BFGS-B",
            callback=record,
            options={"maxiter": cfg.max_iterations},
        )
        all_losses.append(losses)
        value = float(result.fun)
        logger.debug("EHT restart %d on %s: loss %.3e", restart, data.sites, value)
        if not np.isfinite(value):
            continue

        if best is None or value < best.loss:
            coeffs = EntHamCoeffs.from_vector(size, result.x)
            stages.append(
                EhtTrace(
                    iteration=len(losses),
                    loss=value,
                    coeffs=coeffs,
                    levels=_levels(coeffs, eigenpairs),
                )
            )
            best = EhtFit(coeffs=coeffs, loss=value, stages=stages, converged=bool(result.success))

    if best is None:
        msg = f"Every EHT restart diverged on window {data.sites}"
        raise ConvergenceError(msg, all_losses)

    best.losses = all_losses
    if not best.converged:
        logger.warning(
            "EHT fit on %s stopped before convergence (loss %.3e)", data.sites, best.loss
        )
    return best


# scoring ----------------------------------------------------------------------------------


@frozen(kw_only=True, eq=False)
class Reconstruction:
    rho: ComplexArray
    fidelity: Final[float]
    spectrum: FloatArray
    """Ascending entanglement levels of the reconstructed state."""


def reconstruct_and_score(
    coeffs: EntHamCoeffs, oracle_rho: ComplexArray, /, eigenpairs: int | None = None
) -> Reconstruction:
    rho = gibbs_state(coeffs, eigenpairs)
    if rho.shape != oracle_rho.shape:
        msg = f"Reconstruction of shape {rho.shape} cannot be compared to {oracle_rho.shape}"
        raise ValueError(msg)

    return Reconstruction(
        rho=rho, fidelity=uhlmann_fidelity(rho, oracle_rho), spectrum=entanglement_spectrum(rho)
    )


@frozen(kw_only=True, eq=False)
class WindowResult:
    window: Final[tuple[int, ...]]
    coeffs: Final[EntHamCoeffs]
    levels: Final[tuple[float, ...]]
    """Lowest reconstructed entanglement levels."""
    oracle_levels: Final[tuple[float, ...]]
    fidelity: Final[float]
    loss: Final[float]


def run_window(
    data: WindowData,
    oracle_rho: ComplexArray,
    /,
    cfg: EhtConfig | None = None,
    *,
    rules: LabRules = DEFAULT_LAB_RULES,
) -> WindowResult:
    """Fit one window and score it against the reference reduced state."""
    cfg = cfg or EhtConfig()
    fit = fit_eht(data, cfg, rules=rules)
    score = reconstruct_and_score(fit.coeffs, oracle_rho)
    oracle_levels = entanglement_spectrum(oracle_rho)
    logger.info("Window %s: F=%.4f loss=%.3e", data.sites, score.fidelity, fit.loss)
    return WindowResult(
        window=data.sites,
        coeffs=fit.coeffs,
        levels=tuple(float(v) for v in score.spectrum[:NUM_TRACKED_LEVELS]),
        oracle_levels=tuple(float(v) for v in oracle_levels[:NUM_TRACKED_LEVELS]),
        fidelity=score.fidelity,
        loss=fit.loss,
    )


@frozen(kw_only=True)
class NoiseComparison:
    p: Final[float]
    reconstructed: Final[float]
    """Fidelity of the reconstruction from noisy data to the clean state."""
    raw: Final[float]
    """Fidelity of the noisy state itself to the clean state."""


def noise_robustness(
    clean_rho: ComplexArray,
    p: float,
    /,
    cfg: EhtConfig | None = None,
    *,
    rules: LabRules = DEFAULT_LAB_RULES,
) -> NoiseComparison:
    """Fit exact data of the depolarized window state and compare both against the clean one."""
    cfg = cfg or EhtConfig()
    noisy = depolarize(clean_rho, p)
    size = clean_rho.shape[0].bit_length() - 1
    bases = random_bases(size, cfg.settings, cfg.seed)
    fit = fit_eht(exact_window_data(noisy, bases), cfg, rules=rules)
    return NoiseComparison(
        p=p,
        reconstructed=reconstruct_and_score(fit.coeffs, clean_rho).fidelity,
        raw=uhlmann_fidelity(noisy, clean_rho),
    )
