"""Exact diagonalization oracle for chains within dense reach."""

from __future__ import annotations

import logging
import typing
from typing import Final

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from attrs import frozen

from .exceptions import NonHermitianError, SizeLimitError
from .rules import DEFAULT_LAB_RULES, LabRules
from .sim import DenseState

if typing.TYPE_CHECKING:
    from .pauli import PauliSum
    from .typeshed import ComplexArray, FloatArray

__all__ = (
    "Spectrum",
    "energy_distance",
    "ground_state",
    "hamiltonian_operator",
    "low_lying",
    "spectral_bounds",
)

logger = logging.getLogger(__name__)


@frozen(kw_only=True)
class Spectrum:
    """Lowest eigenpairs of a Hamiltonian, ascending."""

    energies: Final[FloatArray]
    vectors: Final[ComplexArray]
    """Eigenvectors as columns."""
    num_sites: Final[int]

    def __len__(self) -> int:
        return len(self.energies)

    def state(self, index: int, /) -> DenseState:
        return DenseState(amplitudes=self.vectors[:, index], num_sites=self.num_sites)

    @property
    def gaps(self) -> FloatArray:
        """E_k - E_0 for every level."""
        return self.energies - self.energies[0]


def hamiltonian_operator(
    H: PauliSum, /, rules: LabRules = DEFAULT_LAB_RULES
) -> sp.csr_matrix | spla.LinearOperator:
    """CSR matrix up to the sparse limit, matrix-free LinearOperator beyond it."""
    if H.num_sites <= rules.limits.SPARSE_MATRIX:
        return H.to_sparse()

    dim = 1 << H.num_sites
    return spla.LinearOperator(
        (dim, dim), matvec=H.apply, rmatvec=H.apply, dtype=np.complex128
    )


def _check_hermitian(H: PauliSum, /) -> None:
    if not H.hermitian:
        residue = max((abs(t.coefficient.imag) for t in H.terms), default=0.0)
        if residue > DEFAULT_LAB_RULES.numeric.IMAG_TOLERANCE:
            raise NonHermitianError(residue)


def low_lying(
    H: PauliSum,
    k: int = 1,
    /,
    *,
    rules: LabRules = DEFAULT_LAB_RULES,
    tol: float = 0.0,
) -> Spectrum:
    """The k lowest eigenpairs; Lanczos (``eigsh``, which="SA") unless the chain is tiny."""
    _check_hermitian(H)
    L = H.num_sites
    if L > rules.limits.DENSE_PURE:
        raise SizeLimitError("Exact diagonalization register", L, rules.limits.DENSE_PURE)

    dim = 1 << L
    if L <= rules.limits.DENSE_EIGH or k >= dim - 1:
        energies, vectors = scipy.linalg.eigh(H.to_dense())
        energies, vectors = energies[:k], vectors[:, :k]

    else:
        v0 = np.ones(dim, dtype=np.complex128) / np.sqrt(dim)
        energies, vectors = spla.eigsh(
            hamiltonian_operator(H, rules), k=k, which="SA", v0=v0, tol=tol
        )
        order = np.argsort(energies)
        energies, vectors = energies[order], vectors[:, order]

    logger.debug("L=%d lowest levels: %s", L, np.array2string(energies, precision=8))
    return Spectrum(energies=np.asarray(energies), vectors=np.asarray(vectors), num_sites=L)


def ground_state(H: PauliSum, /, rules: LabRules = DEFAULT_LAB_RULES) -> tuple[DenseState, float]:
    spectrum = low_lying(H, 1, rules=rules)
    return spectrum.state(0), float(spectrum.energies[0])


def spectral_bounds(H: PauliSum, /, rules: LabRules = DEFAULT_LAB_RULES) -> tuple[float, float]:
    """(E_min, E_max) of the full spectrum."""
    e_min = float(low_lying(H, 1, rules=rules).energies[0])
    e_max = -float(low_lying(H.scaled(-1), 1, rules=rules).energies[0])
    return e_min, e_max


def energy_distance(energy: float, ground: float, highest: float, /) -> float:
    """(E - E_g) / (E_max - E_g), the energy above the ground state relative to the bandwidth."""
    width = highest - ground
    if width <= 0:
        msg = f"Spectrum has no width: E_g={ground}, E_max={highest}"
        raise ValueError(msg)

    return (energy - ground) / width
