"""Entanglement spectra, entropies, central-charge fits and state fidelities."""

from __future__ import annotations

import logging
import typing
from collections import abc
from typing import Final

import numpy as np
from attrs import frozen

from .enums.model import Boundary
from .exceptions import FitError
from .rules import DEFAULT_LAB_RULES

if typing.TYPE_CHECKING:
    from .abc.state import QuantumState
    from .typeshed import AnyArray, FloatArray

__all__ = (
    "CentralChargeFit",
    "degeneracy_ratio",
    "entanglement_spectrum",
    "entropy_profile",
    "fit_central_charge",
    "schmidt_entropy",
    "uhlmann_fidelity",
    "von_neumann_entropy",
)

logger = logging.getLogger(__name__)


def _hermitian_eigenvalues(rho: AnyArray, /) -> FloatArray:
    return np.linalg.eigvalsh((rho + rho.conj().T) / 2)


def entanglement_spectrum(rho: AnyArray, /, cutoff: float | None = None) -> FloatArray:
    """Ascending levels xi = -ln(lambda) of a density matrix; eigenvalues below cutoff dropped."""
    if cutoff is None:
        cutoff = DEFAULT_LAB_RULES.numeric.SPECTRUM_CUTOFF

    weights = _hermitian_eigenvalues(rho)
    weights = weights[weights > cutoff]
    return np.sort(-np.log(weights))


def von_neumann_entropy(weights: AnyArray, /, cutoff: float | None = None) -> float:
    """-sum p ln p over a probability vector."""
    if cutoff is None:
        cutoff = DEFAULT_LAB_RULES.numeric.SPECTRUM_CUTOFF

    p = np.asarray(weights, dtype=np.float64)
    p = p[p > cutoff]
    return float(-np.sum(p * np.log(p)))


def schmidt_entropy(singular_values: AnyArray, /) -> float:
    """Entropy of a bipartition from its Schmidt coefficients."""
    s = np.asarray(singular_values, dtype=np.float64)
    return von_neumann_entropy(s**2 / np.sum(s**2))


def entropy_profile(state: QuantumState, /) -> FloatArray:
    """S(l) for l = 1..L-1 of a dense state or an MPS."""
    return state.entropy_profile()


@frozen(kw_only=True)
class CentralChargeFit:
    central_charge: Final[float]
    offset: Final[float]
    residual: Final[float]
    """Root mean square deviation of the fitted points."""
    window: Final[tuple[int, int]]
    """Inclusive range of subsystem sizes l used in the fit."""


def _chord(sizes: AnyArray, L: int, boundary: Boundary) -> FloatArray:
    if boundary is Boundary.PBC:
        return np.log(L / np.pi * np.sin(np.pi * sizes / L)) / 3

    return np.log(2 * L / np.pi * np.sin(np.pi * sizes / L)) / 6


def fit_central_charge(
    entropies: abc.Sequence[float] | FloatArray,
    L: int,
    boundary: Boundary = Boundary.PBC,
    /,
    *,
    margin: int = 3,
) -> CentralChargeFit:
    """Least-squares fit of the Calabrese-Cardy entropy formula.

    PBC: S(l) = (c/3) ln((L/pi) sin(pi l/L)) + const.
    OBC: S(l) = (c/6) ln((2L/pi) sin(pi l/L)) + const.
    Points with l < margin or l > L - margin are left out.
    """
    s = np.asarray(entropies, dtype=np.float64)
    if s.shape != (L - 1,):
        msg = f"Expected {L - 1} entropies for L={L}, got {s.shape}"
        raise FitError(msg)

    sizes = np.arange(1, L)
    mask = (sizes >= margin) & (sizes <= L - margin)
    if mask.sum() < 4:
        msg = f"Central charge fit needs at least 4 points, window leaves {mask.sum()}"
        raise FitError(msg)

    x = _chord(sizes[mask], L, boundary)
    design = np.column_stack([x, np.ones_like(x)])
    (c, offset), *_ = np.linalg.lstsq(design, s[mask], rcond=None)
    residual = float(np.sqrt(np.mean((design @ (c, offset) - s[mask]) ** 2)))
    logger.debug("Central charge fit L=%d: c=%.4f rms=%.2e", L, c, residual)

    return CentralChargeFit(
        central_charge=float(c),
        offset=float(offset),
        residual=residual,
        window=(int(sizes[mask][0]), int(sizes[mask][-1])),
    )


def degeneracy_ratio(levels: abc.Sequence[float] | FloatArray, /) -> float:
    """(xi_2 - xi_1) / (xi_3 - xi_1); small values signal a two-fold degenerate bottom."""
    xi = np.sort(np.asarray(levels, dtype=np.float64))
    if xi.size < 3:
        msg = f"Degeneracy ratio needs three levels, got {xi.size}"
        raise FitError(msg)

    gap = xi[2] - xi[0]
    if gap <= 0:
        return 1.0

    return float((xi[1] - xi[0]) / gap)


def _sqrtm_psd(rho: AnyArray, /) -> AnyArray:
    weights, vectors = np.linalg.eigh((rho + rho.conj().T) / 2)
    return (vectors * np.sqrt(np.clip(weights, 0, None))) @ vectors.conj().T


def uhlmann_fidelity(rho: AnyArray, sigma: AnyArray, /) -> float:
    """F = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    if rho.shape != sigma.shape:
        msg = f"Density matrices of shapes {rho.shape} and {sigma.shape} cannot be compared"
        raise ValueError(msg)

    root = _sqrtm_psd(rho)
    inner = _hermitian_eigenvalues(root @ sigma @ root)
    return float(np.clip(np.sum(np.sqrt(np.clip(inner, 0, None))) ** 2, 0.0, 1.0))
