"""Reference eigenstates and prepared states, dense or MPS depending on the chain length."""

from __future__ import annotations

import logging
import typing
from typing import Final

from attrs import frozen

from .dmrg import DmrgConfig, dmrg_ground, dmrg_low_lying
from .exact import low_lying
from .model import CutConfig, ModelParams, build_cut_hamiltonian, build_hamiltonian
from .mps import MPSState, apply_circuit_mps
from .pauli import expectation
from .rules import DEFAULT_LAB_RULES, LabRules
from .sim import DenseState

if typing.TYPE_CHECKING:
    from .circuit import CircuitIR
    from .pauli import PauliSum

__all__ = (
    "LowLying",
    "State",
    "energy",
    "hamiltonian_for",
    "low_lying_states",
    "overlap",
    "prepared_state",
    "spectral_range",
)

logger = logging.getLogger(__name__)

State: typing.TypeAlias = DenseState | MPSState


@frozen(kw_only=True)
class LowLying:
    states: Final[tuple[State, ...]]
    energies: Final[tuple[float, ...]]
    exact: Final[bool]
    """Whether the states come from exact diagonalization rather than DMRG."""
    converged: Final[bool] = True

    def __len__(self) -> int:
        return len(self.states)


def hamiltonian_for(p: ModelParams, c: CutConfig | None = None, /) -> PauliSum:
    """The chain Hamiltonian, with cuts applied when ``c`` removes any bond."""
    if c is None or c.is_uncut:
        return build_hamiltonian(p)

    return build_cut_hamiltonian(p, c).hamiltonian


def low_lying_states(
    p: ModelParams,
    c: CutConfig | None = None,
    /,
    count: int = 1,
    *,
    dmrg: DmrgConfig | None = None,
    rules: LabRules = DEFAULT_LAB_RULES,
) -> LowLying:
    H = hamiltonian_for(p, c)
    if p.L <= rules.limits.EXACT_ORACLE:
        spectrum = low_lying(H, count, rules=rules)
        return LowLying(
            states=tuple(spectrum.state(k) for k in range(count)),
            energies=tuple(float(e) for e in spectrum.energies),
            exact=True,
        )

    results = dmrg_low_lying(H, count, dmrg)
    return LowLying(
        states=tuple(r.state for r in results),
        energies=tuple(r.energy for r in results),
        exact=False,
        converged=all(r.converged for r in results),
    )


def spectral_range(
    H: PauliSum, /, *, dmrg: DmrgConfig | None = None, rules: LabRules = DEFAULT_LAB_RULES
) -> tuple[float, float]:
    """(E_min, E_max), from the lowest states of H and of -H."""
    if H.num_sites <= rules.limits.EXACT_ORACLE:
        e_min = float(low_lying(H, 1, rules=rules).energies[0])
        e_max = -float(low_lying(H.scaled(-1), 1, rules=rules).energies[0])
        return e_min, e_max

    return dmrg_ground(H, dmrg).energy, -dmrg_ground(H.scaled(-1), dmrg).energy


def prepared_state(
    c: CircuitIR, /, *, chi_max: int = 256, rules: LabRules = DEFAULT_LAB_RULES
) -> State:
    """Noiseless output of a circuit, dense up to the dense-circuit limit."""
    if c.num_sites <= rules.limits.DENSE_CIRCUIT:
        return DenseState.zero(c.num_sites).evolved(c)

    evolution = apply_circuit_mps(c, chi_max)
    if evolution.truncation_error > 1e-6:
        logger.warning("Circuit MPS truncation error %.2e", evolution.truncation_error)
    return evolution.state


def overlap(a: State, b: State, /) -> complex:
    """<a|b> across representations."""
    if isinstance(a, DenseState) and isinstance(b, DenseState):
        return a.inner(b)

    if isinstance(a, DenseState):
        a = MPSState.from_dense(a)
    if isinstance(b, DenseState):
        b = MPSState.from_dense(b)
    return a.inner(b)


def energy(state: State, H: PauliSum, /) -> float:
    return expectation(state, H)
