"""Layered circuit representation, the five-block ansatz and exact simplification passes."""

from __future__ import annotations

import logging
import typing
from collections import abc
from typing import Final, Literal, TypeAlias
from typing_extensions import Self

import numpy as np
from attrs import evolve, field, frozen, validators

from .enums.model import Boundary
from .enums.pauli import Pauli
from .exceptions import CircuitShapeError, SiteCountError
from .model import CutConfig, ModelParams, cut_layout, site_distances
from .pauli import PauliSum, PauliTerm, conjugate_by_cz_layer, validate_cz_pairs
from .typeshed import SitePair

if typing.TYPE_CHECKING:
    from .schedule import ParamSchedule

__all__ = (
    "CZLayer",
    "CircuitIR",
    "Layer",
    "PauliLayer",
    "XLayer",
    "YLayer",
    "build_ansatz",
    "entangler_pairs",
    "fuse_sandwiched_x_layer",
    "invert",
    "overlap_circuit",
    "simplify_terminal_cz",
)

logger = logging.getLogger(__name__)

PatternOrder: TypeAlias = Literal["ab", "ba"]


def _to_angles(value: abc.Iterable[float]) -> tuple[float, ...]:
    return tuple(float(v) for v in value)


@frozen
class YLayer:
    """Y rotations exp(-i theta Y / 2), one angle per site."""

    angles: Final[tuple[float, ...]] = field(converter=_to_angles)

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(range(len(self.angles)))


@frozen
class CZLayer:
    pairs: Final[tuple[SitePair, ...]] = field(converter=validate_cz_pairs)

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(site for pair in self.pairs for site in pair)


def _to_sites(value: abc.Iterable[int]) -> tuple[int, ...]:
    return tuple(sorted(set(value)))


@frozen
class XLayer:
    sites: Final[tuple[int, ...]] = field(converter=_to_sites)


def _to_paulis(value: abc.Iterable[tuple[int, Pauli]]) -> tuple[tuple[int, Pauli], ...]:
    return PauliTerm(factors=value).factors


@frozen
class PauliLayer:
    """Single-site Pauli gates; global phases are not tracked."""

    paulis: Final[tuple[tuple[int, Pauli], ...]] = field(converter=_to_paulis)

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(site for site, _ in self.paulis)

    def as_term(self) -> PauliTerm:
        return PauliTerm(factors=self.paulis)


Layer: TypeAlias = YLayer | CZLayer | XLayer | PauliLayer
SINGLE_QUBIT_LAYERS: Final = (YLayer, XLayer, PauliLayer)


def _check_layers(instance: CircuitIR, _: object, layers: tuple[Layer, ...]) -> None:
    for layer in layers:
        if isinstance(layer, YLayer):
            if len(layer.angles) != instance.num_sites:
                raise SiteCountError(len(layer.angles), str(instance.num_sites))

        elif any(site >= instance.num_sites for site in layer.sites):
            raise SiteCountError(max(layer.sites) + 1, f"at most {instance.num_sites}")


@frozen(kw_only=True)
class CircuitIR:
    """Ordered list of gate layers acting on |0...0>, in time order."""

    num_sites: Final[int] = field(validator=validators.ge(1))
    layers: Final[tuple[Layer, ...]] = field(
        factory=tuple, converter=tuple, validator=_check_layers
    )
    boundary: Final[Boundary] = field(default=Boundary.OBC, validator=validators.in_(Boundary))

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def cz_layers(self) -> tuple[CZLayer, ...]:
        return tuple(layer for layer in self.layers if isinstance(layer, CZLayer))

    @property
    def cz_depth(self) -> int:
        return len(self.cz_layers)

    def count(self, kind: type[Layer], /) -> int:
        return sum(isinstance(layer, kind) for layer in self.layers)

    def with_layers(self, layers: abc.Iterable[Layer], /) -> Self:
        return evolve(self, layers=tuple(layers))

    def extended(self, *layers: Layer) -> Self:
        return self.with_layers((*self.layers, *layers))


def entangler_pairs(
    L: int, boundary: Boundary, pattern: Literal["a", "b"], /, excluded: abc.Container[int] = ()
) -> tuple[SitePair, ...]:
    """CZ pairs of pattern A (bonds 0-1, 2-3, ...) or B (bonds 1-2, 3-4, ..., plus L-1-0 on a ring).

    ``excluded`` holds bonds that are skipped, indexed by their left site.
    """
    first = 0 if pattern == "a" else 1
    bonds = list(range(first, L - 1, 2))
    if pattern == "b" and boundary is Boundary.PBC:
        bonds.append(L - 1)

    return tuple((j, (j + 1) % L) for j in bonds if j not in excluded)


def build_ansatz(
    p: ModelParams,
    sched: ParamSchedule,
    c: CutConfig | None = None,
    /,
    *,
    pattern_order: PatternOrder = "ab",
    closing_entangler: bool = False,
) -> CircuitIR:
    """Five Y layers interleaved with four CZ layers alternating between patterns A and B.

    Pinned sites of a cut configuration get angle 0 (up) or pi (down) in the first layer and
    take no further gates; CZ gates never straddle a cut bond. With ``closing_entangler`` a
    fifth CZ layer follows the last rotation layer.
    """
    c = c or CutConfig()
    L = p.L
    if p.is_periodic and L % 2:
        msg = f"Periodic ansatz needs an even chain, got L={L}"
        raise CircuitShapeError(msg)

    layout = cut_layout(p, c)
    pinned = layout.pinned
    distances = site_distances(L, p.boundary, layout)
    angles = sched.angles(distances)

    for site, sign in pinned.items():
        angles[:, site] = 0.0
        angles[0, site] = 0.0 if sign > 0 else np.pi

    skipped = set(layout.cut_bonds)
    skipped.update(j for j in range(L) if j in pinned or (j + 1) % L in pinned)
    patterns = {
        name: CZLayer(entangler_pairs(L, p.boundary, name, skipped))
        for name in ("a", "b")
    }
    order = ("a", "b") if pattern_order == "ab" else ("b", "a")

    layers: list[Layer] = []
    for block in range(5):
        layers.append(YLayer(angles[block]))
        if block < 4 or closing_entangler:
            layers.append(patterns[order[block % 2]])

    return CircuitIR(num_sites=L, layers=layers, boundary=p.boundary)


def _invert_layer(layer: Layer, /) -> Layer:
    if isinstance(layer, YLayer):
        return YLayer([-angle for angle in layer.angles])

    return layer


def invert(c: CircuitIR, /) -> CircuitIR:
    """The inverse circuit: reversed layers with negated rotation angles."""
    return c.with_layers(_invert_layer(layer) for layer in reversed(c.layers))


def simplify_terminal_cz(c: CircuitIR, obs: PauliSum, /) -> tuple[CircuitIR, PauliSum]:
    """Drop a final CZ layer and conjugate the observable through it instead."""
    if not c.layers or not isinstance(last := c.layers[-1], CZLayer):
        msg = "Circuit does not end with a CZ layer"
        raise CircuitShapeError(msg)

    conjugated = PauliSum(
        num_sites=obs.num_sites,
        terms=[conjugate_by_cz_layer(term, last.pairs) for term in obs.terms],
        hermitian=obs.hermitian,
    )
    return c.with_layers(c.layers[:-1]), conjugated


def overlap_circuit(prep: CircuitIR, ref: CircuitIR, /, project: bool = False) -> CircuitIR:
    """U_ref^dagger (O_X) U_prep; P(0^L) of its output is the squared overlap."""
    if prep.num_sites != ref.num_sites:
        raise SiteCountError(ref.num_sites, str(prep.num_sites))

    middle: tuple[Layer, ...] = (XLayer(range(prep.num_sites)),) if project else ()
    return prep.with_layers((*prep.layers, *middle, *invert(ref).layers))


def _fuse(first: CZLayer, flips: XLayer, second: CZLayer, /) -> list[Layer] | None:
    # second . X_S . first = (second . first) . (first X_S first)
    conjugated = conjugate_by_cz_layer(
        PauliTerm(factors=dict.fromkeys(flips.sites, Pauli.X)), first.pairs
    )
    residual = set(first.pairs) ^ set(second.pairs)
    sites = [site for pair in residual for site in pair]
    if len(sites) != len(set(sites)):
        return None

    fused: list[Layer] = [PauliLayer(conjugated.factors)]
    if residual:
        fused.append(CZLayer(sorted(residual)))
    return fused


def fuse_sandwiched_x_layer(c: CircuitIR, /) -> CircuitIR:
    """Replace CZ - X - CZ sandwiches by an equivalent Pauli layer.

    With identical CZ layers on both sides the sandwich becomes a single layer of Pauli
    gates (Y on paired flipped sites); otherwise the CZ gates that do not cancel remain as
    one residual layer. Equality holds up to a global phase.
    """
    layers = list(c.layers)
    out: list[Layer] = []
    fused_any = False
    i = 0

    while i < len(layers):
        if i + 2 < len(layers):
            first, flips, second = layers[i], layers[i + 1], layers[i + 2]
            if (
                isinstance(first, CZLayer)
                and isinstance(flips, XLayer)
                and isinstance(second, CZLayer)
                and (fused := _fuse(first, flips, second)) is not None
            ):
                out.extend(fused)
                fused_any = True
                i += 3
                continue

        out.append(layers[i])
        i += 1

    if not fused_any:
        logger.info("No CZ-X-CZ sandwich found; circuit returned unchanged")
        return c

    return c.with_layers(out)
