"""Two-site DMRG for ground and penalised excited states."""

from __future__ import annotations

import logging
import typing
from collections import abc
from typing import Final

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla
from attrs import field, frozen, validators

from .exceptions import NonHermitianError
from .mps import MPO, MPSState, truncated_svd
from .rules import DEFAULT_LAB_RULES

if typing.TYPE_CHECKING:
    from .pauli import PauliSum
    from .typeshed import ComplexArray

__all__ = ("DmrgConfig", "DmrgResult", "dmrg_excited", "dmrg_ground", "dmrg_low_lying")

logger = logging.getLogger(__name__)

DENSE_LOCAL_PROBLEM: Final = 256
"""Local two-site problems up to this dimension are solved with a dense eigensolver."""


@frozen(kw_only=True)
class DmrgConfig:
    chi_max: Final[int] = field(default=256, validator=validators.ge(1))
    """Largest bond dimension kept in any SVD split."""
    max_sweeps: Final[int] = field(default=30, validator=validators.ge(1))
    min_sweeps: Final[int] = field(default=2, validator=validators.ge(1))
    energy_tolerance: Final[float] = field(default=1e-10, validator=validators.gt(0))
    """Sweeps stop once the energy changes by less than this."""
    penalty: Final[float] = field(
        factory=lambda: DEFAULT_LAB_RULES.numeric.PENALTY, validator=validators.gt(0)
    )
    """Energy penalty lambda on previously found states."""
    svd_cutoff: Final[float] = field(default=1e-14, validator=validators.ge(0))
    initial_chi: Final[int] = field(default=8, validator=validators.ge(1))
    seed: Final[int | None] = None


@frozen(kw_only=True)
class DmrgResult:
    state: Final[MPSState]
    energy: Final[float]
    energies: Final[tuple[float, ...]]
    """Energy after every full sweep."""
    converged: Final[bool]
    truncation_error: Final[float]
    """Largest discarded weight during the last sweep."""


def _grow_left(env: ComplexArray, a: ComplexArray, w: ComplexArray) -> ComplexArray:
    return np.einsum("awb,asc,wvst,btd->cvd", env, a.conj(), w, a, optimize=True)


def _grow_right(env: ComplexArray, a: ComplexArray, w: ComplexArray) -> ComplexArray:
    return np.einsum("cvd,asc,wvst,btd->awb", env, a.conj(), w, a, optimize=True)


def _overlap_left(env: ComplexArray, phi: ComplexArray, a: ComplexArray) -> ComplexArray:
    return np.einsum("xb,xsy,bsd->yd", env, phi.conj(), a, optimize=True)


def _overlap_right(env: ComplexArray, phi: ComplexArray, a: ComplexArray) -> ComplexArray:
    return np.einsum("yd,xsy,bsd->xb", env, phi.conj(), a, optimize=True)


class _Penalty:
    """Overlap environments of one previously found state."""

    __slots__ = ("left", "right", "tensors")

    def __init__(self, phi: MPSState, psi: MPSState) -> None:
        L = psi.num_sites
        self.tensors = phi.tensors
        self.left: list[ComplexArray] = [np.ones((1, 1), dtype=np.complex128)] * (L + 1)
        self.right: list[ComplexArray] = [np.ones((1, 1), dtype=np.complex128)] * L
        for i in range(L - 2, -1, -1):
            self.right[i] = _overlap_right(
                self.right[i + 1], phi.tensors[i + 1], psi.tensors[i + 1]
            )

    def local_vector(self, i: int) -> ComplexArray:
        """v with <phi|psi> = vdot(v, theta) for the two-site block theta at (i, i+1)."""
        pair = np.tensordot(self.tensors[i], self.tensors[i + 1], axes=(2, 0))
        return np.einsum(
            "xb,xsty,yd->bstd", self.left[i].conj(), pair, self.right[i + 1].conj(), optimize=True
        )


def _local_matvec(
    left: ComplexArray,
    w1: ComplexArray,
    w2: ComplexArray,
    right: ComplexArray,
    shape: tuple[int, ...],
) -> abc.Callable[[ComplexArray], ComplexArray]:
    def matvec(x: ComplexArray) -> ComplexArray:
        theta = x.reshape(shape)
        t = np.tensordot(left, theta, axes=(2, 0))  # a w t1 t2 d
        t = np.tensordot(t, w1, axes=([1, 2], [0, 3]))  # a t2 d u s1
        t = np.tensordot(t, w2, axes=([3, 1], [0, 3]))  # a d s1 v s2
        t = np.tensordot(t, right, axes=([3, 1], [1, 2]))  # a s1 s2 c
        return t.reshape(-1)

    return matvec


def _solve_local(
    matvec: abc.Callable[[ComplexArray], ComplexArray],
    penalties: abc.Sequence[tuple[ComplexArray, float]],
    guess: ComplexArray,
) -> tuple[float, ComplexArray]:
    def full(x: ComplexArray) -> ComplexArray:
        out = matvec(x)
        for v, weight in penalties:
            out = out + weight * v * np.vdot(v, x)
        return out

    n = guess.size
    if n <= DENSE_LOCAL_PROBLEM:
        matrix = np.column_stack([full(col) for col in np.eye(n, dtype=np.complex128)])
        energies, vectors = scipy.linalg.eigh((matrix + matrix.conj().T) / 2)
        return float(energies[0]), vectors[:, 0]

    operator = spla.LinearOperator((n, n), matvec=full, dtype=np.complex128)
    energies, vectors = spla.eigsh(operator, k=1, which="SA", v0=guess, tol=1e-12)
    return float(energies[0]), vectors[:, 0]


def _check_hermitian(H: PauliSum) -> None:
    residue = max((abs(t.coefficient.imag) for t in H.terms), default=0.0)
    if residue > DEFAULT_LAB_RULES.numeric.IMAG_TOLERANCE:
        raise NonHermitianError(residue)


def _run(H: PauliSum, cfg: DmrgConfig, previous: abc.Sequence[MPSState]) -> DmrgResult:
    _check_hermitian(H)
    L = H.num_sites
    mpo = MPO.from_pauli_sum(H).tensors
    psi = MPSState.random(L, cfg.initial_chi, seed=cfg.seed)
    tensors = psi.tensors

    left: list[ComplexArray] = [np.ones((1, 1, 1), dtype=np.complex128)] * (L + 1)
    right: list[ComplexArray] = [np.ones((1, 1, 1), dtype=np.complex128)] * L
    for i in range(L - 2, -1, -1):
        right[i] = _grow_right(right[i + 1], tensors[i + 1], mpo[i + 1])

    penalties = [_Penalty(phi, psi) for phi in previous]
    energies: list[float] = []
    converged = False
    truncation = 0.0

    def update(i: int, *, moving_right: bool) -> float:
        nonlocal truncation
        theta = np.tensordot(tensors[i], tensors[i + 1], axes=(2, 0))
        shape = theta.shape
        matvec = _local_matvec(left[i], mpo[i], mpo[i + 1], right[i + 1], shape)
        local = [(p.local_vector(i).reshape(-1), cfg.penalty) for p in penalties]
        energy, vector = _solve_local(matvec, local, theta.reshape(-1))
        penalty_energy = sum(w * abs(np.vdot(v, vector)) ** 2 for v, w in local)

        chi_left, _, _, chi_right = shape
        u, s, vh, discarded = truncated_svd(
            vector.reshape(chi_left * 2, 2 * chi_right), cfg.chi_max, cfg.svd_cutoff
        )
        s = s / np.linalg.norm(s)
        truncation = max(truncation, discarded)
        if moving_right:
            tensors[i] = u.reshape(chi_left, 2, -1)
            tensors[i + 1] = (s[:, None] * vh).reshape(-1, 2, chi_right)
            left[i + 1] = _grow_left(left[i], tensors[i], mpo[i])
            for p in penalties:
                p.left[i + 1] = _overlap_left(p.left[i], p.tensors[i], tensors[i])

        else:
            tensors[i] = (u * s).reshape(chi_left, 2, -1)
            tensors[i + 1] = vh.reshape(-1, 2, chi_right)
            right[i] = _grow_right(right[i + 1], tensors[i + 1], mpo[i + 1])
            for p in penalties:
                p.right[i] = _overlap_right(p.right[i + 1], p.tensors[i + 1], tensors[i + 1])

        return energy - float(penalty_energy)

    energy = np.inf
    for sweep in range(cfg.max_sweeps):
        truncation = 0.0
        for i in range(L - 1):
            energy = update(i, moving_right=True)
        for i in range(L - 2, -1, -1):
            energy = update(i, moving_right=False)

        logger.debug(
            "Sweep %d: E=%.12f chi=%d trunc=%.1e", sweep + 1, energy, psi.max_bond, truncation
        )
        if energies and sweep + 1 >= cfg.min_sweeps:
            converged = abs(energies[-1] - energy) < cfg.energy_tolerance
        energies.append(energy)
        if converged:
            break

    psi.center = 0
    if not converged:
        logger.warning(
            "DMRG did not converge in %d sweeps (L=%d, last change %.2e)",
            cfg.max_sweeps,
            L,
            abs(energies[-1] - energies[-2]) if len(energies) > 1 else float("nan"),
        )

    return DmrgResult(
        state=psi,
        energy=float(energy),
        energies=tuple(energies),
        converged=converged,
        truncation_error=truncation,
    )


def dmrg_ground(H: PauliSum, /, cfg: DmrgConfig | None = None) -> DmrgResult:
    return _run(H, cfg or DmrgConfig(), ())


def dmrg_excited(
    H: PauliSum, k: int, previous: abc.Sequence[MPSState], /, cfg: DmrgConfig | None = None
) -> DmrgResult:
    """The k-th excited state of H + lambda sum |psi_j><psi_j| over the k previous states."""
    if len(previous) != k:
        msg = f"Excited state {k} needs {k} previous states, got {len(previous)}"
        raise ValueError(msg)

    return _run(H, cfg or DmrgConfig(), previous)


def dmrg_low_lying(H: PauliSum, count: int, /, cfg: DmrgConfig | None = None) -> list[DmrgResult]:
    """The lowest ``count`` states, each penalised against all earlier ones."""
    results: list[DmrgResult] = []
    for k in range(count):
        results.append(dmrg_excited(H, k, [r.state for r in results], cfg))
    return results
