"""Dense statevector and density-operator simulation of layered circuits.

Amplitude vectors follow the basis convention of :mod:`clusterlab.pauli`: site 0 is the most
significant bit. Gate kernels act on column stacks of shape (2^L, m), so the same code
drives statevectors, density operators and full unitaries.
"""

from __future__ import annotations

import functools
import logging
import typing
from collections import abc
from typing import Final
from typing_extensions import Self

import numpy as np
from attrs import Attribute, define, field, frozen, validators

from .circuit import CircuitIR, CZLayer, Layer, PauliLayer, XLayer, YLayer, overlap_circuit
from .entanglement import schmidt_entropy
from .enums.pauli import Pauli
from .exceptions import SiteCountError, SizeLimitError
from .pauli import PauliSum, PauliTerm
from .rules import DEFAULT_LAB_RULES, LabRules
from .utils import basis_indices, bits_of, make_rng, site_mask, spawn_seeds

if typing.TYPE_CHECKING:
    from .abc.state import MeasurableState
    from .typeshed import ComplexArray, FloatArray, SeedLike, SitePair

__all__ = (
    "Counts",
    "DenseState",
    "DensityState",
    "NoiseSpec",
    "TrajectoryEnsemble",
    "apply_readout",
    "circuit_unitary",
    "marginal_counts",
    "overlap_amplitude",
    "overlap_protocol",
    "project_overlap_classically",
    "random_bases",
    "run",
    "run_trajectories",
    "sample",
)

logger = logging.getLogger(__name__)

Counts: typing.TypeAlias = dict[str, int]
"""Bitstring (site 0 first) -> number of shots."""

_HADAMARD: Final = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
_READOUT_ROTATIONS: Final[abc.Mapping[Pauli, ComplexArray]] = {
    Pauli.Z: np.eye(2, dtype=np.complex128),
    Pauli.X: _HADAMARD,
    # H S^dagger maps the +1 eigenstate of Y to |0>
    Pauli.Y: _HADAMARD @ np.diag([1, -1j]).astype(np.complex128),
}
_TWO_SITE_PAULIS: Final = tuple((a, b) for a in Pauli for b in Pauli)


def _unit_interval(instance: object, attribute: Attribute[float], value: float) -> None:
    if not 0.0 <= value <= 1.0:
        msg = f"{attribute.name} must lie in [0, 1], got {value}"
        raise ValueError(msg)


@frozen(kw_only=True)
class NoiseSpec:
    """Noise applied while running a circuit; single-qubit gates are ideal."""

    cz_depolarizing: Final[float] = field(default=0.0, converter=float, validator=_unit_interval)
    """Two-qubit depolarizing probability after every CZ gate."""
    global_depolarizing: Final[float] = field(
        default=0.0, converter=float, validator=_unit_interval
    )
    """State-level rho -> (1-p) rho + p I/d applied at the end of the circuit."""
    cz_overrotation: Final[float] = field(default=0.0, converter=float)
    """Coherent exp(-i delta/2 ZZ) error after every CZ gate."""
    trajectories: Final[int] = field(default=200, validator=validators.ge(1))
    """Number of pure-state trajectories when a density operator is too large."""

    @property
    def is_noiseless(self) -> bool:
        return self.is_coherent and self.cz_overrotation == 0

    @property
    def is_coherent(self) -> bool:
        """Whether the noise keeps a pure state pure."""
        return self.cz_depolarizing == 0 and self.global_depolarizing == 0


# gate kernels on column stacks ------------------------------------------------------------


def _apply_single(cols: ComplexArray, site: int, matrix: ComplexArray) -> ComplexArray:
    shaped = cols.reshape(1 << site, 2, -1)
    return np.einsum("ij,ajb->aib", matrix, shaped).reshape(cols.shape)


def _ry(angle: float, /) -> ComplexArray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


@functools.lru_cache(maxsize=64)
def _cz_signs(num_sites: int, pairs: tuple[SitePair, ...], /) -> FloatArray:
    indices = basis_indices(num_sites)
    both = np.zeros_like(indices)
    for a, b in pairs:
        both ^= bits_of(indices, num_sites, a) & bits_of(indices, num_sites, b)
    signs = (1 - 2 * both).astype(np.float64)
    signs.setflags(write=False)
    return signs


@functools.lru_cache(maxsize=64)
def _zz_phases(num_sites: int, pair: SitePair, angle: float, /) -> ComplexArray:
    indices = basis_indices(num_sites)
    a, b = pair
    zz = (1 - 2 * bits_of(indices, num_sites, a)) * (1 - 2 * bits_of(indices, num_sites, b))
    phases = np.exp(-0.5j * angle * zz)
    phases.setflags(write=False)
    return phases


def _apply_layer(cols: ComplexArray, num_sites: int, layer: Layer) -> ComplexArray:
    if isinstance(layer, YLayer):
        for site, angle in enumerate(layer.angles):
            if angle != 0:
                cols = _apply_single(cols, site, _ry(angle))
        return cols

    if isinstance(layer, CZLayer):
        return cols * _cz_signs(num_sites, layer.pairs)[:, None]

    if isinstance(layer, XLayer):
        mask = site_mask(num_sites, layer.sites)
        return cols[basis_indices(num_sites) ^ mask]

    if isinstance(layer, PauliLayer):  # pyright: ignore[reportUnnecessaryIsInstance]
        return layer.as_term().apply(cols, num_sites)

    msg = f"Unknown layer {layer!r}"
    raise TypeError(msg)


def apply_readout(
    cols: ComplexArray, num_sites: int, bases: abc.Sequence[Pauli], /
) -> ComplexArray:
    """Rotate every site from its measurement basis to Z, column by column."""
    if len(bases) != num_sites:
        raise SiteCountError(len(bases), str(num_sites))

    for site, basis in enumerate(bases):
        if basis is not Pauli.Z:
            cols = _apply_single(cols, site, _READOUT_ROTATIONS[basis])
    return cols


def _conjugate(
    rho: ComplexArray, apply: abc.Callable[[ComplexArray], ComplexArray]
) -> ComplexArray:
    # U rho U^dagger = U (U rho^dagger)^dagger for Hermitian rho
    return apply(apply(rho).conj().T).conj().T


def _check_size(what: str, num_sites: int, limit: int) -> None:
    if num_sites > limit:
        raise SizeLimitError(what, num_sites, limit)


# states -----------------------------------------------------------------------------------


def _reduced(cols: ComplexArray, num_sites: int, sites: abc.Sequence[int]) -> ComplexArray:
    """Partial trace of |psi><psi| (single column) down to the listed sites, in that order."""
    tensor = cols.reshape((2,) * num_sites)
    rest = [site for site in range(num_sites) if site not in sites]
    matrix = np.transpose(tensor, (*sites, *rest)).reshape(1 << len(sites), -1)
    return matrix @ matrix.conj().T


@define(kw_only=True, eq=False)
class DenseState:
    """Normalized 2^L amplitude vector."""

    amplitudes: ComplexArray = field(converter=lambda a: np.asarray(a, dtype=np.complex128))
    num_sites: Final[int] = field(validator=validators.ge(1))

    @amplitudes.validator  # pyright: ignore[reportAttributeAccessIssue, reportUntypedFunctionDecorator]
    def _check_amplitudes(self, _: object, value: ComplexArray) -> None:
        if value.shape != (1 << self.num_sites,):
            msg = f"Expected {1 << self.num_sites} amplitudes, got shape {value.shape}"
            raise ValueError(msg)

    @classmethod
    def zero(cls, num_sites: int, /) -> Self:
        amplitudes = np.zeros(1 << num_sites, dtype=np.complex128)
        amplitudes[0] = 1
        return cls(amplitudes=amplitudes, num_sites=num_sites)

    @classmethod
    def from_vector(cls, vector: abc.Sequence[complex] | ComplexArray, /) -> Self:
        """Wrap and normalize an arbitrary amplitude vector of length 2^L."""
        amplitudes = np.asarray(vector, dtype=np.complex128)
        num_sites = amplitudes.size.bit_length() - 1
        return cls(amplitudes=amplitudes / np.linalg.norm(amplitudes), num_sites=num_sites)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def evolved(self, c: CircuitIR, /) -> Self:
        if c.num_sites != self.num_sites:
            raise SiteCountError(c.num_sites, str(self.num_sites))

        cols = self.amplitudes[:, None]
        for layer in c.layers:
            cols = _apply_layer(cols, self.num_sites, layer)
        return type(self)(amplitudes=cols[:, 0], num_sites=self.num_sites)

    def inner(self, other: DenseState, /) -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def flipped(self) -> Self:
        # O_X maps index b to its complement, which reverses the vector
        return type(self)(amplitudes=self.amplitudes[::-1].copy(), num_sites=self.num_sites)

    def expect(self, op: PauliSum, /) -> complex:
        return complex(np.vdot(self.amplitudes, op.apply(self.amplitudes)))

    def probabilities(self) -> FloatArray:
        return np.abs(self.amplitudes) ** 2

    def rotated(self, bases: abc.Sequence[Pauli], /) -> Self:
        cols = apply_readout(self.amplitudes[:, None], self.num_sites, bases)
        return type(self)(amplitudes=cols[:, 0], num_sites=self.num_sites)

    def reduced_density(
        self, sites: abc.Sequence[int], /, rules: LabRules = DEFAULT_LAB_RULES
    ) -> ComplexArray:
        """rho_A on the listed sites; indices wrap around the chain."""
        sites = [site % self.num_sites for site in sites]
        _check_size("Reduced density subsystem", len(sites), rules.limits.REDUCED_DENSITY)
        return _reduced(self.amplitudes, self.num_sites, sites)

    def schmidt_values(self, cut: int, /) -> FloatArray:
        """Schmidt coefficients between sites [0, cut) and [cut, L)."""
        matrix = self.amplitudes.reshape(1 << cut, -1)
        return np.linalg.svd(matrix, compute_uv=False)

    def entropy_profile(self) -> FloatArray:
        return np.array(
            [schmidt_entropy(self.schmidt_values(cut)) for cut in range(1, self.num_sites)]
        )


@define(kw_only=True, eq=False)
class DensityState:
    """Density operator as a dense 2^L x 2^L matrix."""

    matrix: ComplexArray
    num_sites: Final[int] = field(validator=validators.ge(1))

    @classmethod
    def zero(cls, num_sites: int, /) -> Self:
        matrix = np.zeros((1 << num_sites, 1 << num_sites), dtype=np.complex128)
        matrix[0, 0] = 1
        return cls(matrix=matrix, num_sites=num_sites)

    @classmethod
    def from_pure(cls, state: DenseState, /) -> Self:
        a = state.amplitudes
        return cls(matrix=np.outer(a, a.conj()), num_sites=state.num_sites)

    def _with(self, matrix: ComplexArray, /) -> Self:
        return type(self)(matrix=matrix, num_sites=self.num_sites)

    @property
    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix, self.matrix)))

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def expect(self, op: PauliSum, /) -> complex:
        return complex(np.trace(op.apply(self.matrix)))

    def probabilities(self) -> FloatArray:
        return np.clip(np.real(np.diag(self.matrix)), 0, None)

    def rotated(self, bases: abc.Sequence[Pauli], /) -> Self:
        return self._with(
            _conjugate(self.matrix, lambda m: apply_readout(m, self.num_sites, bases))
        )

    def apply_layer(self, layer: Layer, /) -> Self:
        return self._with(
            _conjugate(self.matrix, lambda m: _apply_layer(m, self.num_sites, layer))
        )

    def apply_zz_rotation(self, pair: SitePair, angle: float, /) -> Self:
        phases = _zz_phases(self.num_sites, pair, angle)
        return self._with(self.matrix * phases[:, None] * phases.conj()[None, :])

    def depolarize_pair(self, pair: SitePair, p: float, /) -> Self:
        """(1-p) rho + p Tr_ab(rho) x I/4, written as a uniform average over 16 Pauli pairs."""
        if p == 0:
            return self

        a, b = pair
        twirled = np.zeros_like(self.matrix)
        for pa, pb in _TWO_SITE_PAULIS:
            term = PauliTerm(factors={a: pa, b: pb})
            twirled += _conjugate(self.matrix, lambda m, t=term: t.apply(m, self.num_sites))

        return self._with((1 - p) * self.matrix + p * twirled / len(_TWO_SITE_PAULIS))

    def depolarize(self, p: float, /) -> Self:
        """(1-p) rho + p I/d."""
        if p == 0:
            return self

        dim = 1 << self.num_sites
        return self._with((1 - p) * self.matrix + p * np.eye(dim) / dim)

    def reduced_density(
        self, sites: abc.Sequence[int], /, rules: LabRules = DEFAULT_LAB_RULES
    ) -> ComplexArray:
        sites = [site % self.num_sites for site in sites]
        _check_size("Reduced density subsystem", len(sites), rules.limits.REDUCED_DENSITY)
        L = self.num_sites
        rest = [site for site in range(L) if site not in sites]
        tensor = self.matrix.reshape((2,) * (2 * L))
        order = (*sites, *rest, *(L + s for s in sites), *(L + s for s in rest))
        dim_a, dim_b = 1 << len(sites), 1 << len(rest)
        shaped = np.transpose(tensor, order).reshape(dim_a, dim_b, dim_a, dim_b)
        return np.einsum("ibjb->ij", shaped)


@define(kw_only=True, eq=False)
class TrajectoryEnsemble:
    """Equal-weight mixture of pure trajectories, optionally mixed with the identity."""

    states: Final[tuple[DenseState, ...]] = field(converter=tuple, validator=validators.min_len(1))
    global_depolarizing: Final[float] = 0.0

    @property
    def num_sites(self) -> int:
        return self.states[0].num_sites

    def _identity_weight(self, op: PauliSum) -> complex:
        return sum((t.coefficient for t in op.terms if not t.factors), 0j)

    def expect(self, op: PauliSum, /) -> complex:
        mean = np.mean([state.expect(op) for state in self.states])
        p = self.global_depolarizing
        return complex((1 - p) * mean + p * self._identity_weight(op))

    def probabilities(self) -> FloatArray:
        mean = np.mean([state.probabilities() for state in self.states], axis=0)
        p = self.global_depolarizing
        return (1 - p) * mean + p / mean.size

    def rotated(self, bases: abc.Sequence[Pauli], /) -> Self:
        return type(self)(
            states=[state.rotated(bases) for state in self.states],
            global_depolarizing=self.global_depolarizing,
        )


# running circuits -------------------------------------------------------------------------


def circuit_unitary(c: CircuitIR, /, rules: LabRules = DEFAULT_LAB_RULES) -> ComplexArray:
    """Dense unitary of a noiseless circuit, up to the untracked global phase."""
    _check_size("Dense unitary register", c.num_sites, rules.limits.DENSE_MIXED)
    cols = np.eye(1 << c.num_sites, dtype=np.complex128)
    for layer in c.layers:
        cols = _apply_layer(cols, c.num_sites, layer)
    return cols


def _run_density(c: CircuitIR, noise: NoiseSpec) -> DensityState:
    state = DensityState.zero(c.num_sites)
    for layer in c.layers:
        state = state.apply_layer(layer)
        if isinstance(layer, CZLayer):
            for pair in layer.pairs:
                if noise.cz_overrotation:
                    state = state.apply_zz_rotation(pair, noise.cz_overrotation)
                state = state.depolarize_pair(pair, noise.cz_depolarizing)

    return state.depolarize(noise.global_depolarizing)


def _run_trajectory(c: CircuitIR, noise: NoiseSpec, rng: np.random.Generator) -> DenseState:
    L = c.num_sites
    cols = DenseState.zero(L).amplitudes[:, None]
    for layer in c.layers:
        cols = _apply_layer(cols, L, layer)
        if not isinstance(layer, CZLayer):
            continue

        for pair in layer.pairs:
            if noise.cz_overrotation:
                cols = cols * _zz_phases(L, pair, noise.cz_overrotation)[:, None]
            if noise.cz_depolarizing and rng.random() < noise.cz_depolarizing:
                pa, pb = _TWO_SITE_PAULIS[rng.integers(len(_TWO_SITE_PAULIS))]
                cols = PauliTerm(factors={pair[0]: pa, pair[1]: pb}).apply(cols, L)

    return DenseState(amplitudes=cols[:, 0], num_sites=L)


def run_trajectories(
    c: CircuitIR,
    noise: NoiseSpec,
    /,
    seed: SeedLike = None,
    rules: LabRules = DEFAULT_LAB_RULES,
) -> TrajectoryEnsemble:
    """Unbiased pure-state unravelling of the CZ noise channel."""
    _check_size("Statevector register", c.num_sites, rules.limits.DENSE_PURE)
    rng = make_rng(seed)
    states = [_run_trajectory(c, noise, rng) for _ in range(noise.trajectories)]
    return TrajectoryEnsemble(states=states, global_depolarizing=noise.global_depolarizing)


def run(
    c: CircuitIR,
    /,
    noise: NoiseSpec | None = None,
    *,
    seed: SeedLike = None,
    rules: LabRules = DEFAULT_LAB_RULES,
) -> DenseState | DensityState | TrajectoryEnsemble:
    """Run a circuit from |0...0>.

    Noiseless (or purely coherent) runs return a :class:`DenseState`; stochastic noise uses
    an exact density operator up to the mixed-state limit and trajectories beyond it.
    """
    L = c.num_sites
    if noise is None or noise.is_noiseless:
        _check_size("Statevector register", L, rules.limits.DENSE_PURE)
        return DenseState.zero(L).evolved(c)

    if noise.is_coherent:
        _check_size("Statevector register", L, rules.limits.DENSE_PURE)
        return _run_trajectory(c, noise, make_rng(seed))

    if L <= rules.limits.DENSE_MIXED:
        return _run_density(c, noise)

    logger.debug("L=%d beyond density limit, sampling %d trajectories", L, noise.trajectories)
    return run_trajectories(c, noise, seed=seed, rules=rules)


def overlap_protocol(
    prep: CircuitIR,
    ref: CircuitIR,
    /,
    project: bool = False,
    *,
    noise: NoiseSpec | None = None,
    shots: int | None = None,
    seed: SeedLike = None,
    rules: LabRules = DEFAULT_LAB_RULES,
) -> float:
    """Probability of 0^L after U_ref^dagger (O_X) U_prep.

    Noiselessly this is |<ref|prep>|^2, or |<ref|O_X|prep>|^2 with ``project``. With ``shots``
    the probability is estimated from a binomial sample.
    """
    run_seed, shot_seed = spawn_seeds(seed, 2)
    state = run(overlap_circuit(prep, ref, project), noise, seed=run_seed, rules=rules)
    p0 = float(np.clip(state.probabilities()[0], 0.0, 1.0))
    if shots is None:
        return p0

    rng = make_rng(shot_seed)
    return rng.binomial(shots, p0) / shots


def overlap_amplitude(
    prep: CircuitIR, ref: CircuitIR, /, project: bool = False, rules: LabRules = DEFAULT_LAB_RULES
) -> complex:
    """<ref|(O_X)|prep> from noiseless statevectors; carries the sign the protocol cannot see."""
    if prep.num_sites != ref.num_sites:
        raise SiteCountError(ref.num_sites, str(prep.num_sites))

    _check_size("Statevector register", prep.num_sites, rules.limits.DENSE_PURE)
    prepared = DenseState.zero(prep.num_sites).evolved(prep)
    reference = DenseState.zero(ref.num_sites).evolved(ref)
    if project:
        prepared = prepared.flipped()
    return reference.inner(prepared)


def project_overlap_classically(reference: DenseState, prepared: DenseState, /) -> complex:
    """<ref|P|prep> with P = (I + O_X)/2, assembled from two plain inner products."""
    return (reference.inner(prepared) + reference.inner(prepared.flipped())) / 2


# measurement ------------------------------------------------------------------------------


def random_bases(
    num_sites: int, count: int, /, seed: SeedLike = None
) -> list[tuple[Pauli, ...]]:
    """Independent uniform per-site choices among X, Y and Z."""
    rng = make_rng(seed)
    choices = rng.integers(3, size=(count, num_sites))
    letters = (Pauli.X, Pauli.Y, Pauli.Z)
    return [tuple(letters[k] for k in row) for row in choices]


def _bitstrings(num_sites: int, indices: abc.Iterable[int]) -> list[str]:
    return [format(index, f"0{num_sites}b") for index in indices]


def sample(
    state: MeasurableState,
    bases: abc.Sequence[Pauli] | str,
    shots: int,
    /,
    rng: np.random.Generator | None = None,
) -> Counts:
    """Multinomial histogram of outcomes after rotating every site's basis to Z."""
    if shots < 1:
        msg = f"Need at least one shot, got {shots}"
        raise ValueError(msg)

    if isinstance(bases, str):
        bases = [Pauli.of_symbol(letter) for letter in bases]

    rng = rng or make_rng(None)
    probabilities = state.rotated(bases).probabilities()
    probabilities = np.clip(probabilities, 0, None)
    counts = rng.multinomial(shots, probabilities / probabilities.sum())
    outcomes = np.flatnonzero(counts)
    return dict(
        zip(_bitstrings(state.num_sites, outcomes), (int(n) for n in counts[outcomes]), strict=True)
    )


def marginal_counts(counts: abc.Mapping[str, int], sites: abc.Sequence[int], /) -> Counts:
    """Histogram restricted to the listed sites, in that order."""
    out: Counts = {}
    for bits, n in counts.items():
        key = "".join(bits[site] for site in sites)
        out[key] = out.get(key, 0) + n
    return out
