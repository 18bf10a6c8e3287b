from typing import Final

from attrs import define, field

__all__ = ("DEFAULT_LAB_RULES", "LabRules", "LimitRules", "NumericRules")


@define
class NumericRules:
    MERGE_TOLERANCE: Final[float] = 1e-12
    """Pauli terms whose merged coefficient is at most this are dropped."""
    IMAG_TOLERANCE: Final[float] = 1e-10
    """Largest imaginary residue discarded from an expectation value."""
    PINNING_FIELD: Final[float] = 50.0
    """Strength of the local field fixing pinned spins at a physical cut."""
    PENALTY: Final[float] = 50.0
    """Energy penalty applied to previously found states in excited-state searches."""
    SPECTRUM_CUTOFF: Final[float] = 1e-12
    """Density-matrix eigenvalues below this are left out of entanglement spectra."""
    DEGENERATE_OVERLAP: Final[float] = 1e-6
    """Overlaps below this make a g-function ratio undefined."""


@define
class LimitRules:
    DENSE_PURE: Final[int] = 24
    """Largest chain simulated as a dense statevector."""
    DENSE_MIXED: Final[int] = 12
    """Largest chain simulated as a dense density operator."""
    SPARSE_MATRIX: Final[int] = 16
    """Largest chain for which an explicit sparse Hamiltonian matrix is built."""
    DENSE_EIGH: Final[int] = 9
    """Largest chain diagonalized with a full dense eigensolver."""
    REDUCED_DENSITY: Final[int] = 12
    """Largest subsystem whose reduced density matrix is formed."""
    EHT_SUBSYSTEM: Final[int] = 12
    """Largest window an entanglement Hamiltonian is fitted on."""
    EXACT_ORACLE: Final[int] = 16
    """Largest chain whose reference eigenstates come from exact diagonalization."""
    DENSE_CIRCUIT: Final[int] = 20
    """Largest chain whose prepared states are simulated densely rather than as an MPS."""


@define
class LabRules:
    numeric: Final[NumericRules] = field(factory=NumericRules)
    limits: Final[LimitRules] = field(factory=LimitRules)


DEFAULT_LAB_RULES: Final[LabRules] = LabRules()
