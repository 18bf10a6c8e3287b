"""Shot-based energy estimation with qubit-wise commuting measurement groups."""

import typing
from collections import abc
from typing import Final

import numpy as np
from attrs import define, field, frozen

from clusterlab.enums.pauli import Pauli
from clusterlab.sim import Counts, sample

if typing.TYPE_CHECKING:
    from clusterlab.abc.state import MeasurableState
    from clusterlab.pauli import PauliSum, PauliTerm
    from clusterlab.typeshed import FloatArray

__all__ = (
    "EnergyEstimate",
    "MeasurementGroup",
    "estimate_energy",
    "group_qubit_wise",
    "group_shot_values",
    "sample_groups",
)


@define(kw_only=True)
class MeasurementGroup:
    """Terms that can all be read off a single product-basis measurement."""

    num_sites: Final[int]
    terms: list["PauliTerm"] = field(factory=list)
    assigned: dict[int, Pauli] = field(factory=dict)
    """Sites whose basis some term fixes."""

    def accepts(self, term: "PauliTerm", /) -> bool:
        return all(self.assigned.get(site, pauli) is pauli for site, pauli in term.factors)

    def add(self, term: "PauliTerm", /) -> None:
        self.terms.append(term)
        self.assigned.update(term.factors)

    @property
    def bases(self) -> tuple[Pauli, ...]:
        """Per-site measurement basis; sites no term touches are read in Z."""
        return tuple(self.assigned.get(site, Pauli.Z) for site in range(self.num_sites))


def group_qubit_wise(H: "PauliSum", /) -> tuple[float, list[MeasurementGroup]]:
    """Greedy first-fit grouping. Returns the identity coefficient and the groups."""
    constant = 0.0
    groups: list[MeasurementGroup] = []
    for term in sorted(H.terms, key=lambda t: -t.weight):
        if not term.factors:
            constant += term.coefficient.real
            continue

        for group in groups:
            if group.accepts(term):
                group.add(term)
                break

        else:
            group = MeasurementGroup(num_sites=H.num_sites)
            group.add(term)
            groups.append(group)

    return constant, groups


def sample_groups(
    state: "MeasurableState",
    groups: abc.Sequence[MeasurementGroup],
    shots: int,
    /,
    rng: np.random.Generator | None = None,
) -> list[Counts]:
    return [sample(state, group.bases, shots, rng) for group in groups]


def group_shot_values(group: MeasurementGroup, counts: abc.Mapping[str, int], /) -> "FloatArray":
    """Single-shot estimates sum_t c_t s_t of the group, one entry per recorded shot."""
    keys = list(counts)
    bits = np.array([[int(c) for c in key] for key in keys], dtype=np.int64)
    signs = 1 - 2 * bits
    per_outcome = np.zeros(len(keys))
    for term in group.terms:
        support = list(term.support)
        per_outcome += term.coefficient.real * np.prod(signs[:, support], axis=1)

    return np.repeat(per_outcome, [counts[key] for key in keys])


@frozen(kw_only=True)
class EnergyEstimate:
    value: Final[float]
    sigma: Final[float]
    """Standard error from the single-shot variance of every group."""


def estimate_energy(
    constant: float,
    groups: abc.Sequence[MeasurementGroup],
    counts: abc.Sequence[abc.Mapping[str, int]],
    /,
) -> EnergyEstimate:
    value = constant
    variance = 0.0
    for group, histogram in zip(groups, counts, strict=True):
        shots = group_shot_values(group, histogram)
        value += float(shots.mean())
        if shots.size > 1:
            variance += float(shots.var(ddof=1)) / shots.size

    return EnergyEstimate(value=value, sigma=float(np.sqrt(variance)))
