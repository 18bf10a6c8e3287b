"""Cluster Ising Hamiltonians, physical cuts and the spin-flip symmetry.

H = -g sum Z_j Z_{j+1} - J sum Z_{j-1} X_j Z_{j+1} - h sum X_j
"""

from __future__ import annotations

from collections import abc
from typing import Final
from typing_extensions import Self

from attrs import field, frozen, validators

from .enums.model import Boundary, CutKind
from .enums.pauli import Pauli
from .exceptions import BoundaryError, InvalidCutError, SiteCountError
from .pauli import PauliSum, PauliTerm
from .rules import DEFAULT_LAB_RULES
from .typeshed import Bond

__all__ = (
    "CutConfig",
    "CutHamiltonian",
    "CutLayout",
    "ModelParams",
    "build_cut_hamiltonian",
    "build_hamiltonian",
    "coupling_components",
    "cut_layout",
    "site_distances",
    "spin_flip",
    "symmetry_projector",
)


def _check_site_count(instance: object, _: object, value: int) -> None:
    if value < 3:
        raise SiteCountError(value, "at least 3")


@frozen(kw_only=True)
class ModelParams:
    """Couplings and geometry of the J-h-g chain."""

    L: Final[int] = field(validator=_check_site_count)
    """Number of sites; a ZXZ term needs at least three."""
    J: Final[float] = field(default=1.0, converter=float)
    """Cluster coupling."""
    g: Final[float] = field(default=1.0, converter=float)
    """Ising coupling."""
    h: Final[float] = field(default=0.0, converter=float)
    """Transverse field."""
    boundary: Final[Boundary] = field(default=Boundary.PBC, validator=validators.in_(Boundary))

    @classmethod
    def critical(cls, L: int, boundary: Boundary = Boundary.PBC) -> Self:
        """The self-dual critical point J = g = 1, h = 0."""
        return cls(L=L, boundary=boundary)

    @classmethod
    def transverse_ising(cls, L: int, boundary: Boundary = Boundary.PBC) -> Self:
        """Critical transverse-field Ising chain, J = 0 and h = g = 1."""
        return cls(L=L, J=0.0, g=1.0, h=1.0, boundary=boundary)

    @property
    def is_periodic(self) -> bool:
        return self.boundary is Boundary.PBC


@frozen(kw_only=True)
class CutConfig:
    """Physical cuts on the pairs (L-1, 0) and (L/2-1, L/2) of a ring."""

    cut_a: Final[CutKind] = field(default=CutKind.NONE, validator=validators.in_(CutKind))
    cut_b: Final[CutKind] = field(default=CutKind.NONE, validator=validators.in_(CutKind))

    @classmethod
    def of_label(cls, label: str, /) -> Self:
        """Parse a two-letter label such as ``00``, ``u0`` or ``dd``."""
        by_letter = {kind.letter: kind for kind in CutKind}
        if len(label) != 2 or any(letter not in by_letter for letter in label):
            msg = f"Invalid cut label {label!r}"
            raise InvalidCutError(msg)

        return cls(cut_a=by_letter[label[0]], cut_b=by_letter[label[1]])

    @property
    def label(self) -> str:
        return self.cut_a.letter + self.cut_b.letter

    @property
    def is_uncut(self) -> bool:
        return not (self.cut_a.is_cut or self.cut_b.is_cut)


@frozen(kw_only=True)
class CutLayout:
    """Which bonds a cut configuration removes and which sites it pins."""

    cut_bonds: Final[frozenset[Bond]] = frozenset()
    pinned: Final[abc.Mapping[int, int]] = field(factory=dict)
    """Pinned site -> Z eigenvalue (+1 up, -1 down)."""


def cut_layout(p: ModelParams, c: CutConfig, /) -> CutLayout:
    if c.is_uncut:
        return CutLayout()

    if not p.is_periodic:
        msg = "Physical cuts are defined on periodic chains"
        raise BoundaryError(msg)

    if c.cut_b.is_cut and p.L % 2:
        msg = f"Cut b needs an even chain, got L={p.L}"
        raise InvalidCutError(msg)

    cut_bonds: set[Bond] = set()
    pinned: dict[int, int] = {}
    for kind, bond in ((c.cut_a, p.L - 1), (c.cut_b, p.L // 2 - 1)):
        if not kind.is_cut:
            continue
        cut_bonds.add(bond)
        if kind.pins:
            pinned[bond] = pinned[(bond + 1) % p.L] = kind.sign

    return CutLayout(cut_bonds=frozenset(cut_bonds), pinned=pinned)


def _chain_terms(p: ModelParams, /) -> list[tuple[PauliTerm, frozenset[Bond]]]:
    """Terms of H together with the bonds each of them spans."""
    L = p.L
    terms: list[tuple[PauliTerm, frozenset[Bond]]] = []

    if p.is_periodic:
        zz_bonds = range(L)
        zxz_centers = range(L)

    else:
        zz_bonds = range(L - 1)
        zxz_centers = range(1, L - 1)

    for j in zz_bonds:
        term = PauliTerm.of({j: Pauli.Z, (j + 1) % L: Pauli.Z}, -p.g)
        terms.append((term, frozenset({j})))

    for j in zxz_centers:
        left, right = (j - 1) % L, (j + 1) % L
        term = PauliTerm.of({left: Pauli.Z, j: Pauli.X, right: Pauli.Z}, -p.J)
        terms.append((term, frozenset({left, j})))

    for j in range(L):
        terms.append((PauliTerm.of({j: Pauli.X}, -p.h), frozenset()))

    return terms


def build_hamiltonian(p: ModelParams, /) -> PauliSum:
    """The J-h-g Hamiltonian; vanishing couplings contribute no terms."""
    return PauliSum(num_sites=p.L, terms=[term for term, _ in _chain_terms(p)], hermitian=True)


@frozen(kw_only=True)
class CutHamiltonian:
    hamiltonian: Final[PauliSum]
    layout: Final[CutLayout]

    @property
    def pinned(self) -> abc.Mapping[int, int]:
        return self.layout.pinned


def build_cut_hamiltonian(
    p: ModelParams, c: CutConfig, /, pinning_field: float | None = None
) -> CutHamiltonian:
    """Remove couplings across the cut bonds and pin the spins of pinned pairs.

    Terms with X or Y on a pinned site are dropped, so pinned spins factor out of every
    eigenstate, and each pinned site gets a field -field * s * Z.
    """
    if not p.is_periodic:
        msg = "Cut Hamiltonians are built from the periodic chain"
        raise BoundaryError(msg)

    if pinning_field is None:
        pinning_field = DEFAULT_LAB_RULES.numeric.PINNING_FIELD

    layout = cut_layout(p, c)
    kept: list[PauliTerm] = []

    for term, bonds in _chain_terms(p):
        if bonds & layout.cut_bonds:
            continue

        if any(pauli.flips and site in layout.pinned for site, pauli in term.factors):
            continue

        kept.append(term)

    for site, sign in sorted(layout.pinned.items()):
        kept.append(PauliTerm.of({site: Pauli.Z}, -pinning_field * sign))

    hamiltonian = PauliSum(num_sites=p.L, terms=kept, hermitian=True)
    return CutHamiltonian(hamiltonian=hamiltonian, layout=layout)


def spin_flip(L: int, /) -> PauliTerm:
    """O_X, the product of X over all sites."""
    return PauliTerm.of(dict.fromkeys(range(L), Pauli.X))


def symmetry_projector(L: int, /) -> PauliSum:
    """(I + O_X) / 2, the projector on the spin-flip even sector."""
    if L < 1:
        raise SiteCountError(L, "at least 1")

    return PauliSum.of(L, PauliTerm.identity(0.5), spin_flip(L).scaled(0.5), hermitian=True)


def coupling_components(
    hamiltonian: PauliSum, /, excluded: abc.Collection[int] = ()
) -> list[frozenset[int]]:
    """Connected groups of sites linked by multi-site terms, ignoring excluded sites."""
    parent = {site: site for site in range(hamiltonian.num_sites) if site not in excluded}

    def find(site: int) -> int:
        while parent[site] != site:
            parent[site] = parent[parent[site]]
            site = parent[site]
        return site

    for term in hamiltonian.terms:
        sites = [site for site in term.support if site in parent]
        for a, b in zip(sites, sites[1:]):
            parent[find(a)] = find(b)

    groups: dict[int, set[int]] = {}
    for site in parent:
        groups.setdefault(find(site), set()).add(site)

    return sorted((frozenset(group) for group in groups.values()), key=min)


def site_distances(
    L: int, boundary: Boundary, /, layout: CutLayout | None = None
) -> tuple[int, ...]:
    """D_i, the distance of each site to the nearest end of its open segment.

    Pinned sites and cut bonds end segments. Sites of an uncut ring, and pinned sites
    themselves, get 0.
    """
    layout = layout or CutLayout()
    pinned = layout.pinned

    def bond_present(j: int) -> bool:
        if boundary is Boundary.OBC and j == L - 1:
            return False
        return j not in layout.cut_bonds and j not in pinned and (j + 1) % L not in pinned

    broken = [j for j in range(L) if not bond_present(j)]
    distances = [0] * L
    if not broken:
        return tuple(distances)

    start = (broken[0] + 1) % L
    segment: list[int] = []

    def close_segment() -> None:
        for position, site in enumerate(segment):
            distances[site] = min(position, len(segment) - 1 - position)
        segment.clear()

    for offset in range(L):
        site = (start + offset) % L
        if site not in pinned:
            segment.append(site)
        if not bond_present(site):
            close_segment()

    close_segment()
    return tuple(distances)
