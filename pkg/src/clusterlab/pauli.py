"""Exact algebra of Pauli strings and their weighted sums.

Sites are numbered 0..L-1. In dense vectors site 0 is the most significant bit of the basis
index, matching ``numpy.kron`` ordering with site 0 leftmost.
"""

from __future__ import annotations

import functools
import typing
from collections import abc
from typing import Final
from typing_extensions import Self

import numpy as np
import scipy.sparse as sp
from attrs import field, frozen, validators

from .enums.pauli import Pauli
from .exceptions import (
    InvalidLayerError,
    NegativeValueError,
    NonHermitianError,
    SiteCountError,
)
from .rules import DEFAULT_LAB_RULES
from .typeshed import AnyArray, ComplexArray, SitePair
from .utils import basis_indices, large_collection_repr, parity, site_bit

if typing.TYPE_CHECKING:
    from .abc.state import QuantumState

__all__ = (
    "PauliSum",
    "PauliTerm",
    "commutator",
    "conjugate_by_cz_layer",
    "expectation",
    "multiply",
    "validate_cz_pairs",
)

FactorsLike: typing.TypeAlias = (
    abc.Mapping[int, Pauli | str] | abc.Iterable[tuple[int, Pauli | str]]
)
Factors: typing.TypeAlias = tuple[tuple[int, Pauli], ...]

_SINGLE_SITE: Final[abc.Mapping[Pauli, ComplexArray]] = {
    Pauli.I: np.eye(2, dtype=np.complex128),
    Pauli.X: np.array([[0, 1], [1, 0]], dtype=np.complex128),
    Pauli.Y: np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    Pauli.Z: np.array([[1, 0], [0, -1]], dtype=np.complex128),
}
# cyclic order X -> Y -> Z -> X carries +i
_CYCLIC: Final = frozenset({(Pauli.X, Pauli.Y), (Pauli.Y, Pauli.Z), (Pauli.Z, Pauli.X)})


def single_site_matrix(pauli: Pauli, /) -> ComplexArray:
    return _SINGLE_SITE[pauli]


def _multiply_single(a: Pauli, b: Pauli, /) -> tuple[complex, Pauli]:
    if a is Pauli.I:
        return 1, b

    if b is Pauli.I:
        return 1, a

    if a is b:
        return 1, Pauli.I

    phase = 1j if (a, b) in _CYCLIC else -1j
    return phase, Pauli(6 - a - b)


def _as_pauli(value: Pauli | str, /) -> Pauli:
    return value if isinstance(value, Pauli) else Pauli.of_symbol(value)


def _canonical_factors(factors: FactorsLike, /) -> Factors:
    items = factors.items() if isinstance(factors, abc.Mapping) else factors
    merged: dict[int, Pauli] = {}

    for site, pauli in items:
        if site < 0:
            raise NegativeValueError(site)

        if site in merged:
            msg = f"Site {site} appears twice in a Pauli string"
            raise ValueError(msg)

        merged[site] = _as_pauli(pauli)

    return tuple(sorted((site, p) for site, p in merged.items() if p is not Pauli.I))


@frozen(kw_only=True, repr=False)
class PauliTerm:
    """Coefficient times a tensor product of single-site Pauli operators."""

    factors: Final[Factors] = field(factory=tuple, converter=_canonical_factors)
    """Sorted (site, Pauli) pairs; identity factors are never stored."""
    coefficient: Final[complex] = field(default=1.0, converter=complex)

    def __repr__(self) -> str:
        body = " ".join(f"{p.name}{site}" for site, p in self.factors) or "I"
        return f"({self.coefficient:.6g})*{body}"

    @classmethod
    def of(cls, factors: FactorsLike | str = (), coefficient: complex = 1.0) -> Self:
        """Create a term from a mapping, pairs, or a string like ``"Z0 X1 Z2"``."""
        if isinstance(factors, str):
            pairs = [(int(token[1:]), token[0]) for token in factors.split()]
            return cls(factors=pairs, coefficient=coefficient)

        return cls(factors=factors, coefficient=coefficient)

    @classmethod
    def identity(cls, coefficient: complex = 1.0) -> Self:
        return cls(coefficient=coefficient)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(site for site, _ in self.factors)

    @property
    def weight(self) -> int:
        return len(self.factors)

    @property
    def max_site(self) -> int:
        """Largest site index acted on, -1 for the identity."""
        return self.factors[-1][0] if self.factors else -1

    def factor(self, site: int, /) -> Pauli:
        for s, pauli in self.factors:
            if s == site:
                return pauli
        return Pauli.I

    def scaled(self, scalar: complex, /) -> Self:
        return type(self)(factors=self.factors, coefficient=self.coefficient * scalar)

    def adjoint(self) -> Self:
        return type(self)(factors=self.factors, coefficient=self.coefficient.conjugate())

    def commutes_with(self, other: PauliTerm, /) -> bool:
        anticommuting = sum(
            1
            for site, p in self.factors
            if (q := other.factor(site)) is not Pauli.I and q is not p
        )
        return anticommuting % 2 == 0

    def __mul__(self, other: PauliTerm | complex) -> PauliTerm:
        if isinstance(other, PauliTerm):
            return multiply(self, other)

        return self.scaled(other)

    def __rmul__(self, other: complex) -> PauliTerm:
        return self.scaled(other)

    def __neg__(self) -> PauliTerm:
        return self.scaled(-1)

    def action(self, num_sites: int, /) -> tuple[int, int, complex]:
        """Return (x_mask, z_mask, phase) such that P|b> = phase * (-1)^|b & z| |b ^ x>."""
        x_mask = z_mask = 0
        phase = self.coefficient
        for site, pauli in self.factors:
            if site >= num_sites:
                raise SiteCountError(num_sites, f"more than {site}")
            bit = site_bit(num_sites, site)
            if pauli.flips:
                x_mask |= bit
            if pauli.phases:
                z_mask |= bit
            if pauli is Pauli.Y:
                phase *= 1j
        return x_mask, z_mask, phase

    def apply(self, vectors: AnyArray, num_sites: int, /) -> ComplexArray:
        """Apply to a vector (or a stack of column vectors) of length 2^L."""
        x_mask, z_mask, phase = self.action(num_sites)
        return _apply_action(vectors, num_sites, x_mask, z_mask, phase)

    def to_dense(self, num_sites: int, /) -> ComplexArray:
        matrix = np.array([[self.coefficient]], dtype=np.complex128)
        for site in range(num_sites):
            matrix = np.kron(matrix, _SINGLE_SITE[self.factor(site)])
        return matrix


@functools.lru_cache(maxsize=256)
def _signs(num_sites: int, z_mask: int, /) -> AnyArray:
    signs = 1 - 2 * parity(basis_indices(num_sites), z_mask)
    signs.setflags(write=False)
    return signs


def _apply_action(
    vectors: AnyArray, num_sites: int, x_mask: int, z_mask: int, phase: complex
) -> ComplexArray:
    indices = basis_indices(num_sites)
    signs = _signs(num_sites, z_mask)
    weighted = vectors * (signs if vectors.ndim == 1 else signs[:, None])
    # (P v)[c] = phase * sign(c ^ x) * v[c ^ x]
    return phase * weighted[indices ^ x_mask]


def multiply(a: PauliTerm, b: PauliTerm, /) -> PauliTerm:
    """Product a*b with the phase from single-site Pauli multiplication."""
    sites = dict(a.factors)
    coefficient = a.coefficient * b.coefficient

    for site, pauli in b.factors:
        phase, product = _multiply_single(sites.get(site, Pauli.I), pauli)
        coefficient *= phase
        sites[site] = product

    return PauliTerm(factors=sites, coefficient=coefficient)


def validate_cz_pairs(pairs: abc.Iterable[SitePair], /) -> tuple[SitePair, ...]:
    """Normalise CZ pairs to (low, high) and check they are disjoint."""
    normalised = tuple((min(a, b), max(a, b)) for a, b in pairs)
    seen: set[int] = set()

    for a, b in normalised:
        if a == b or a < 0 or a in seen or b in seen:
            raise InvalidLayerError(normalised)
        seen.update((a, b))

    return normalised


def conjugate_by_cz_layer(op: PauliTerm, pairs: abc.Iterable[SitePair], /) -> PauliTerm:
    """Return U_CZ op U_CZ for a layer of disjoint CZ gates.

    X and Y pick up a Z on the partner site; Z commutes with CZ.
    """
    partner: dict[int, int] = {}
    for a, b in validate_cz_pairs(pairs):
        partner[a] = b
        partner[b] = a

    result = PauliTerm.identity(op.coefficient)
    for site, pauli in op.factors:
        if pauli.flips and site in partner:
            image = PauliTerm(factors={site: pauli, partner[site]: Pauli.Z})

        else:
            image = PauliTerm(factors={site: pauli})

        result = multiply(result, image)

    return result


def merge_terms(
    terms: abc.Iterable[PauliTerm], /, tolerance: float | None = None
) -> tuple[PauliTerm, ...]:
    """Coalesce terms with equal factors, keeping first-seen order."""
    if tolerance is None:
        tolerance = DEFAULT_LAB_RULES.numeric.MERGE_TOLERANCE

    merged: dict[Factors, complex] = {}
    for term in terms:
        merged[term.factors] = merged.get(term.factors, 0) + term.coefficient

    return tuple(
        PauliTerm(factors=factors, coefficient=coefficient)
        for factors, coefficient in merged.items()
        if abs(coefficient) > tolerance
    )


def _check_sites(instance: PauliSum, _: object, terms: tuple[PauliTerm, ...]) -> None:
    for term in terms:
        if term.max_site >= instance.num_sites:
            raise SiteCountError(instance.num_sites, f"more than {term.max_site}")


def _check_hermitian(instance: PauliSum, _: object, hermitian: bool) -> None:
    if not hermitian:
        return

    residue = max((abs(t.coefficient.imag) for t in instance.terms), default=0.0)
    if residue > DEFAULT_LAB_RULES.numeric.MERGE_TOLERANCE:
        raise NonHermitianError(residue)


@frozen(kw_only=True, repr=False)
class PauliSum:
    """Weighted sum of Pauli strings on L sites, always kept merged."""

    num_sites: Final[int] = field(validator=validators.ge(1))
    terms: Final[tuple[PauliTerm, ...]] = field(
        factory=tuple, converter=merge_terms, validator=_check_sites
    )
    hermitian: Final[bool] = field(default=False, validator=_check_hermitian)
    """When set, every merged coefficient is real."""

    def __repr__(self) -> str:
        return f"PauliSum(L={self.num_sites}, terms={large_collection_repr(self.terms)})"

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> abc.Iterator[PauliTerm]:
        return iter(self.terms)

    @classmethod
    def of(cls, num_sites: int, *terms: PauliTerm, hermitian: bool = False) -> Self:
        return cls(num_sites=num_sites, terms=terms, hermitian=hermitian)

    @classmethod
    def identity(cls, num_sites: int, coefficient: float = 1.0) -> Self:
        return cls(num_sites=num_sites, terms=(PauliTerm.identity(coefficient),), hermitian=True)

    def _combine(self, other: PauliSum, terms: abc.Iterable[PauliTerm], hermitian: bool) -> Self:
        if other.num_sites != self.num_sites:
            raise SiteCountError(other.num_sites, str(self.num_sites))

        return type(self)(num_sites=self.num_sites, terms=tuple(terms), hermitian=hermitian)

    def __add__(self, other: PauliSum) -> PauliSum:
        return self._combine(
            other, (*self.terms, *other.terms), self.hermitian and other.hermitian
        )

    def __sub__(self, other: PauliSum) -> PauliSum:
        return self + other.scaled(-1)

    def __neg__(self) -> PauliSum:
        return self.scaled(-1)

    def __mul__(self, other: PauliSum | complex) -> PauliSum:
        if isinstance(other, PauliSum):
            products = (multiply(a, b) for a in self.terms for b in other.terms)
            return self._combine(other, products, hermitian=False)

        return self.scaled(other)

    def __rmul__(self, other: complex) -> PauliSum:
        return self.scaled(other)

    def scaled(self, scalar: complex, /) -> PauliSum:
        hermitian = self.hermitian and complex(scalar).imag == 0
        return type(self)(
            num_sites=self.num_sites,
            terms=tuple(t.scaled(scalar) for t in self.terms),
            hermitian=hermitian,
        )

    def adjoint(self) -> PauliSum:
        return type(self)(
            num_sites=self.num_sites,
            terms=tuple(t.adjoint() for t in self.terms),
            hermitian=self.hermitian,
        )

    def as_hermitian(self) -> PauliSum:
        """Return a copy with the Hermitian flag set; raises if coefficients are not real."""
        return type(self)(num_sites=self.num_sites, terms=self.terms, hermitian=True)

    def embedded(self, num_sites: int, /) -> PauliSum:
        """Same operator viewed on a longer register."""
        return type(self)(num_sites=num_sites, terms=self.terms, hermitian=self.hermitian)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_real(self) -> bool:
        """Whether the operator has a real matrix in the computational basis."""
        return all(
            (term.coefficient * 1j ** sum(p is Pauli.Y for _, p in term.factors)).imag == 0
            for term in self.terms
        )

    def apply(self, vectors: AnyArray, /) -> ComplexArray:
        """Matrix-free product with a vector or a stack of column vectors."""
        out = np.zeros(vectors.shape, dtype=np.complex128)
        for term in self.terms:
            out += term.apply(vectors, self.num_sites)
        return out

    def to_sparse(self) -> sp.csr_matrix:
        dim = 1 << self.num_sites
        indices = basis_indices(self.num_sites)
        rows: list[AnyArray] = []
        data: list[AnyArray] = []

        for term in self.terms:
            x_mask, z_mask, phase = term.action(self.num_sites)
            rows.append(indices ^ x_mask)
            data.append(phase * _signs(self.num_sites, z_mask))

        if not rows:
            return sp.csr_matrix((dim, dim), dtype=np.complex128)

        matrix = sp.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.tile(indices, len(rows)))),
            shape=(dim, dim),
            dtype=np.complex128,
        ).tocsr()
        matrix.sum_duplicates()
        return matrix

    def to_dense(self) -> ComplexArray:
        return self.to_sparse().toarray()


def commutator(a: PauliSum, b: PauliSum, /) -> PauliSum:
    """[a, b] = ab - ba, merged."""
    return a * b - b * a


def expectation(state: QuantumState, op: PauliSum, /) -> float:
    """Real expectation value <psi|op|psi>.

    For operators flagged Hermitian, an imaginary residue above ``IMAG_TOLERANCE`` is an error;
    otherwise the imaginary part is dropped.
    """
    if state.num_sites != op.num_sites:
        raise SiteCountError(op.num_sites, str(state.num_sites))

    value = complex(state.expect(op))
    if op.hermitian and abs(value.imag) > DEFAULT_LAB_RULES.numeric.IMAG_TOLERANCE:
        raise NonHermitianError(abs(value.imag))

    return value.real
