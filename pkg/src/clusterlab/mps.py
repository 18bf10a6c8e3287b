"""Matrix product states and operators.

Site tensors have shape (chi_left, 2, chi_right); MPO tensors have shape
(w_left, w_right, s_out, s_in). Periodic chains use open-topology MPS with the wraparound
terms carried as long-range MPO channels.
"""

from __future__ import annotations

import logging
import typing
from collections import abc
from typing import Final
from typing_extensions import Self

import numpy as np
from attrs import define, field, frozen

from .circuit import CircuitIR, CZLayer, PauliLayer, XLayer, YLayer
from .entanglement import schmidt_entropy
from .enums.pauli import Pauli
from .exceptions import SiteCountError, SizeLimitError
from .pauli import PauliSum, single_site_matrix
from .rules import DEFAULT_LAB_RULES, LabRules
from .utils import make_rng

if typing.TYPE_CHECKING:
    from .sim import DenseState
    from .typeshed import ComplexArray, FloatArray, SeedLike

__all__ = ("MPO", "CircuitEvolution", "MPSState", "apply_circuit_mps", "truncated_svd")

logger = logging.getLogger(__name__)

_IDENTITY: Final = np.eye(2, dtype=np.complex128)
_PROJECTORS: Final = (
    np.diag([1, 0]).astype(np.complex128),
    np.diag([0, 1]).astype(np.complex128),
)
_Z: Final = single_site_matrix(Pauli.Z)


def truncated_svd(
    matrix: ComplexArray, /, chi_max: int | None = None, cutoff: float = 0.0
) -> tuple[ComplexArray, FloatArray, ComplexArray, float]:
    """SVD keeping at most chi_max values whose relative weight exceeds cutoff.

    Returns U, S, Vh and the discarded weight sum(s^2) / sum(all s^2).
    """
    try:
        u, s, vh = np.linalg.svd(matrix, full_matrices=False)

    except np.linalg.LinAlgError:
        import scipy.linalg

        u, s, vh = scipy.linalg.svd(matrix, full_matrices=False, lapack_driver="gesvd")

    weights = s**2
    total = weights.sum()
    keep = int(np.count_nonzero(weights > cutoff * total)) or 1
    if chi_max is not None:
        keep = min(keep, chi_max)

    discarded = float(weights[keep:].sum() / total) if total > 0 else 0.0
    return u[:, :keep], s[:keep], vh[:keep], discarded


def _contract_site(env: ComplexArray, bra: ComplexArray, ket: ComplexArray) -> ComplexArray:
    return np.einsum("ab,asc,bsd->cd", env, bra.conj(), ket, optimize=True)


@define(kw_only=True, eq=False)
class MPSState:
    tensors: list[ComplexArray] = field(converter=list)
    center: int | None = None
    """Orthogonality center, None when the gauge is unknown."""

    @property
    def num_sites(self) -> int:
        return len(self.tensors)

    @property
    def bond_dimensions(self) -> tuple[int, ...]:
        return tuple(t.shape[2] for t in self.tensors[:-1])

    @property
    def max_bond(self) -> int:
        return max(self.bond_dimensions, default=1)

    @classmethod
    def product(cls, bits: abc.Sequence[int], /) -> Self:
        tensors: list[ComplexArray] = []
        for bit in bits:
            tensor = np.zeros((1, 2, 1), dtype=np.complex128)
            tensor[0, bit, 0] = 1
            tensors.append(tensor)
        return cls(tensors=tensors, center=0)

    @classmethod
    def zero(cls, num_sites: int, /) -> Self:
        return cls.product([0] * num_sites)

    @classmethod
    def random(cls, num_sites: int, chi: int, /, seed: SeedLike = None) -> Self:
        rng = make_rng(seed)
        dims = [min(chi, 2**i, 2 ** (num_sites - i)) for i in range(num_sites + 1)]
        tensors = [
            rng.normal(size=(dims[i], 2, dims[i + 1]))
            + 1j * rng.normal(size=(dims[i], 2, dims[i + 1]))
            for i in range(num_sites)
        ]
        return cls(tensors=tensors).canonicalize(0)

    @classmethod
    def from_dense(cls, state: DenseState, /, chi_max: int | None = None) -> Self:
        L = state.num_sites
        tensors: list[ComplexArray] = []
        rest = state.amplitudes.reshape(1, -1)
        for _ in range(L - 1):
            chi_left = rest.shape[0]
            u, s, vh, _discarded = truncated_svd(rest.reshape(chi_left * 2, -1), chi_max)
            tensors.append(u.reshape(chi_left, 2, -1))
            rest = s[:, None] * vh
        tensors.append(rest.reshape(rest.shape[0], 2, 1))
        return cls(tensors=tensors, center=L - 1)

    def copy(self) -> Self:
        return type(self)(tensors=[t.copy() for t in self.tensors], center=self.center)

    def canonicalize(self, center: int = 0, /) -> Self:
        """Bring into mixed canonical form around ``center`` and normalize, in place."""
        L = self.num_sites
        tensors = self.tensors
        for i in range(center):
            chi_left, _, chi_right = tensors[i].shape
            q, r = np.linalg.qr(tensors[i].reshape(chi_left * 2, chi_right))
            tensors[i] = q.reshape(chi_left, 2, -1)
            tensors[i + 1] = np.einsum("ab,bsc->asc", r, tensors[i + 1])

        for i in range(L - 1, center, -1):
            chi_left, _, chi_right = tensors[i].shape
            q, r = np.linalg.qr(tensors[i].reshape(chi_left, 2 * chi_right).T)
            tensors[i] = q.T.reshape(-1, 2, chi_right)
            tensors[i - 1] = np.einsum("asb,cb->asc", tensors[i - 1], r)

        tensors[center] = tensors[center] / np.linalg.norm(tensors[center])
        self.center = center
        return self

    def compress(self, chi_max: int | None = None, cutoff: float = 0.0) -> float:
        """Truncate every bond with a left-to-right QR and a right-to-left SVD sweep, in place.

        Returns the largest discarded weight.
        """
        self.canonicalize(self.num_sites - 1)
        worst = 0.0
        tensors = self.tensors
        for i in range(self.num_sites - 1, 0, -1):
            chi_left, _, chi_right = tensors[i].shape
            u, s, vh, discarded = truncated_svd(
                tensors[i].reshape(chi_left, 2 * chi_right), chi_max, cutoff
            )
            worst = max(worst, discarded)
            tensors[i] = vh.reshape(-1, 2, chi_right)
            tensors[i - 1] = np.einsum("asb,bk->ask", tensors[i - 1], u * s)

        tensors[0] = tensors[0] / np.linalg.norm(tensors[0])
        self.center = 0
        return worst

    def inner(self, other: MPSState, /) -> complex:
        if other.num_sites != self.num_sites:
            raise SiteCountError(other.num_sites, str(self.num_sites))

        env = np.ones((1, 1), dtype=np.complex128)
        for bra, ket in zip(self.tensors, other.tensors, strict=True):
            env = _contract_site(env, bra, ket)
        return complex(env[0, 0])

    @property
    def norm(self) -> float:
        return float(np.sqrt(abs(self.inner(self))))

    def flipped(self) -> Self:
        tensors = [t[:, ::-1, :].copy() for t in self.tensors]
        return type(self)(tensors=tensors, center=self.center)

    def expect(self, op: PauliSum, /) -> complex:
        if op.num_sites != self.num_sites:
            raise SiteCountError(op.num_sites, str(self.num_sites))

        return MPO.from_pauli_sum(op).expect(self)

    def to_dense(self, rules: LabRules = DEFAULT_LAB_RULES) -> ComplexArray:
        if self.num_sites > rules.limits.DENSE_PURE:
            raise SizeLimitError("Statevector register", self.num_sites, rules.limits.DENSE_PURE)

        vector = np.ones((1, 1), dtype=np.complex128)
        for tensor in self.tensors:
            vector = np.tensordot(vector, tensor, axes=(1, 0)).reshape(-1, tensor.shape[2])
        return vector[:, 0]

    def bond_spectra(self) -> list[FloatArray]:
        """Schmidt coefficients of every bond, left to right."""
        state = self.copy().canonicalize(0)
        spectra: list[FloatArray] = []
        tensors = state.tensors
        for i in range(self.num_sites - 1):
            chi_left, _, chi_right = tensors[i].shape
            matrix = tensors[i].reshape(chi_left * 2, chi_right)
            u, s, vh = np.linalg.svd(matrix, full_matrices=False)
            spectra.append(s)
            tensors[i] = u.reshape(chi_left, 2, -1)
            tensors[i + 1] = np.einsum("ab,bsc->asc", s[:, None] * vh, tensors[i + 1])
        return spectra

    def entropy_profile(self) -> FloatArray:
        return np.array([schmidt_entropy(s) for s in self.bond_spectra()])

    def reduced_density(
        self, sites: abc.Sequence[int], /, rules: LabRules = DEFAULT_LAB_RULES
    ) -> ComplexArray:
        """rho_A of a contiguous, non-wrapping range of sites."""
        sites = list(sites)
        if not sites:
            msg = "Subsystem must contain at least one site"
            raise ValueError(msg)

        start, stop = sites[0], sites[-1] + 1
        if sites != list(range(start, stop)) or stop > self.num_sites:
            msg = f"MPS subsystems must be contiguous ranges inside the chain, got {sites}"
            raise ValueError(msg)

        if len(sites) > rules.limits.REDUCED_DENSITY:
            raise SizeLimitError(
                "Reduced density subsystem", len(sites), rules.limits.REDUCED_DENSITY
            )

        state = self.copy().canonicalize(start)
        block = state.tensors[start]
        for i in range(start + 1, stop):
            block = np.tensordot(block, state.tensors[i], axes=(-1, 0))
        chi_left, chi_right = block.shape[0], block.shape[-1]
        block = block.reshape(chi_left, -1, chi_right)
        return np.einsum("aib,ajb->ij", block, block.conj(), optimize=True)


@frozen(kw_only=True)
class MPO:
    tensors: Final[tuple[ComplexArray, ...]]

    @property
    def num_sites(self) -> int:
        return len(self.tensors)

    @property
    def bond_dimensions(self) -> tuple[int, ...]:
        return tuple(t.shape[1] for t in self.tensors[:-1])

    @classmethod
    def from_pauli_sum(cls, op: PauliSum, /) -> Self:
        """Finite-state MPO: channel 0 waits, channel 1 is done, others carry one term each.

        A term occupies its own channel on every bond between its first and last site.
        """
        L = op.num_sites
        crossing: list[dict[int, int]] = [{} for _ in range(max(L - 1, 0))]
        for index, term in enumerate(op.terms):
            if term.weight < 2:
                continue
            first, last = term.support[0], term.support[-1]
            for bond in range(first, last):
                crossing[bond][index] = 2 + len(crossing[bond])

        dims = [2, *(2 + len(c) for c in crossing), 2]
        tensors = [
            np.zeros((dims[i], dims[i + 1], 2, 2), dtype=np.complex128) for i in range(L)
        ]
        for tensor in tensors:
            tensor[0, 0] = _IDENTITY
            tensor[1, 1] = _IDENTITY

        for index, term in enumerate(op.terms):
            factors = dict(term.factors)
            if term.weight == 0:
                tensors[0][0, 1] += term.coefficient * _IDENTITY
                continue

            if term.weight == 1:
                site, pauli = term.factors[0]
                tensors[site][0, 1] += term.coefficient * single_site_matrix(pauli)
                continue

            first, last = term.support[0], term.support[-1]
            tensors[first][0, crossing[first][index]] += term.coefficient * single_site_matrix(
                factors[first]
            )
            for site in range(first + 1, last):
                matrix = single_site_matrix(factors.get(site, Pauli.I))
                tensors[site][crossing[site - 1][index], crossing[site][index]] = matrix
            tensors[last][crossing[last - 1][index], 1] += single_site_matrix(factors[last])

        tensors[0] = tensors[0][:1]
        tensors[-1] = tensors[-1][:, 1:]
        return cls(tensors=tuple(tensors))

    def expect(self, state: MPSState, /) -> complex:
        env = np.ones((1, 1, 1), dtype=np.complex128)
        for a, w in zip(state.tensors, self.tensors, strict=True):
            env = np.einsum("awb,asc,wvst,btd->cvd", env, a.conj(), w, a, optimize=True)
        return complex(env[0, 0, 0])

    def to_dense(self) -> ComplexArray:
        matrix = self.tensors[0][0]
        for w in self.tensors[1:]:
            # (v, S, T) x (v, u, s, t) -> (u, S s, T t)
            combined = np.einsum("vST,vust->uSsTt", matrix, w)
            u, dim_s, _, dim_t, _ = combined.shape
            matrix = combined.reshape(u, dim_s * 2, dim_t * 2)
        return matrix[0]


@frozen(kw_only=True)
class CircuitEvolution:
    state: Final[MPSState]
    truncation_error: Final[float]
    """Sum of the largest discarded weight of every compression."""


def _apply_single(state: MPSState, site: int, matrix: ComplexArray) -> None:
    state.tensors[site] = np.einsum("st,atb->asb", matrix, state.tensors[site])


def _ry(angle: float) -> ComplexArray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def _apply_cz(state: MPSState, a: int, b: int) -> None:
    """Bond-dimension-2 MPO |0><0| x I + |1><1| x Z spanning sites a..b."""
    tensors = state.tensors
    left = tensors[a]
    # channel k carries the control value
    new = np.stack([np.einsum("st,atb->asb", p, left) for p in _PROJECTORS], axis=3)
    chi_left, _, chi_right, _ = new.shape
    tensors[a] = new.reshape(chi_left, 2, chi_right * 2)

    for site in range(a + 1, b):
        tensors[site] = _grow_passthrough(tensors[site])

    right = tensors[b]
    chi_l, _, chi_r = right.shape
    parts = [right, np.einsum("st,atb->asb", _Z, right)]
    tensors[b] = np.stack(parts, axis=1).reshape(chi_l * 2, 2, chi_r)


def _grow_passthrough(t: ComplexArray, /) -> ComplexArray:
    """Carry the control channel through a site without acting on it."""
    chi_l, _, chi_r = t.shape
    grown = np.zeros((chi_l, 2, 2, chi_r, 2), dtype=np.complex128)
    grown[:, 0, :, :, 0] = t
    grown[:, 1, :, :, 1] = t
    return grown.reshape(chi_l * 2, 2, chi_r * 2)


def apply_circuit_mps(
    c: CircuitIR,
    /,
    chi_max: int = 256,
    *,
    cutoff: float = 1e-14,
    initial: MPSState | None = None,
) -> CircuitEvolution:
    """Apply a circuit layer by layer, compressing after every entangling layer."""
    state = initial.copy() if initial is not None else MPSState.zero(c.num_sites)
    if state.num_sites != c.num_sites:
        raise SiteCountError(c.num_sites, str(state.num_sites))

    truncation = 0.0
    for layer in c.layers:
        if isinstance(layer, YLayer):
            for site, angle in enumerate(layer.angles):
                if angle != 0:
                    _apply_single(state, site, _ry(angle))

        elif isinstance(layer, XLayer):
            for site in layer.sites:
                _apply_single(state, site, single_site_matrix(Pauli.X))

        elif isinstance(layer, PauliLayer):
            for site, pauli in layer.paulis:
                _apply_single(state, site, single_site_matrix(pauli))

        elif isinstance(layer, CZLayer):  # pyright: ignore[reportUnnecessaryIsInstance]
            for a, b in layer.pairs:
                _apply_cz(state, a, b)
            truncation += state.compress(chi_max, cutoff)

    logger.debug(
        "MPS evolution L=%d: max bond %d, truncation %.2e", c.num_sites, state.max_bond, truncation
    )
    return CircuitEvolution(state=state, truncation_error=truncation)
