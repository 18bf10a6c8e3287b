import numpy as np
import pytest

from .helpers import random_state

from clusterlab.circuit import CircuitIR, YLayer, build_ansatz, overlap_circuit
from clusterlab.enums.model import Boundary
from clusterlab.enums.pauli import Pauli
from clusterlab.exceptions import SiteCountError, SizeLimitError
from clusterlab.model import ModelParams, symmetry_projector
from clusterlab.pauli import PauliSum, PauliTerm
from clusterlab.schedule import ParamSchedule
from clusterlab.sim import (
    DenseState,
    DensityState,
    NoiseSpec,
    circuit_unitary,
    marginal_counts,
    overlap_amplitude,
    overlap_protocol,
    project_overlap_classically,
    random_bases,
    run,
    run_trajectories,
    sample,
)
from clusterlab.utils import make_rng, spawn_seeds


def _ansatz(L: int, rng: np.random.Generator, boundary: Boundary = Boundary.PBC) -> CircuitIR:
    return build_ansatz(
        ModelParams.critical(L, boundary), ParamSchedule.uniform(rng.uniform(-2, 2, 5))
    )


class TestRun:
    def test_empty_circuit(self) -> None:
        state = run(CircuitIR(num_sites=3))
        assert isinstance(state, DenseState)
        np.testing.assert_allclose(state.amplitudes, DenseState.zero(3).amplitudes)

    def test_y_pi_flips_both_sites(self) -> None:
        state = run(CircuitIR(num_sites=2, layers=[YLayer([np.pi, np.pi])]))
        assert abs(state.amplitudes[3]) == pytest.approx(1)

    def test_norm_preserved(self, rng: np.random.Generator) -> None:
        state = run(_ansatz(10, rng))
        assert state.norm == pytest.approx(1, abs=1e-10)

    def test_register_limit(self) -> None:
        with pytest.raises(SizeLimitError):
            run(CircuitIR(num_sites=25))

    def test_unitary_limit(self) -> None:
        with pytest.raises(SizeLimitError):
            circuit_unitary(CircuitIR(num_sites=13))

    def test_noise_rates_checked(self) -> None:
        with pytest.raises(ValueError, match="cz_depolarizing"):
            NoiseSpec(cz_depolarizing=1.5)

    def test_zero_noise_density_is_the_pure_projector(self, rng: np.random.Generator) -> None:
        c = _ansatz(6, rng)
        rho = DensityState.zero(6)
        for layer in c.layers:
            rho = rho.apply_layer(layer)
        expected = DensityState.from_pure(run(c)).matrix
        np.testing.assert_allclose(rho.matrix, expected, atol=1e-10)

    def test_purity_falls_with_cz_noise(self, rng: np.random.Generator) -> None:
        c = _ansatz(6, rng)
        purities = []
        for p in (0.0, 0.01, 0.05, 0.1, 0.2):
            state = run(c, NoiseSpec(cz_depolarizing=p, global_depolarizing=1e-3))
            assert isinstance(state, DensityState)
            assert state.trace == pytest.approx(1)
            purities.append(state.purity)
        assert np.all(np.diff(purities) < 0)

    def test_full_pair_depolarizing_mixes_the_pair(self) -> None:
        rho = DensityState.zero(3).depolarize_pair((0, 2), 1.0)
        np.testing.assert_allclose(rho.reduced_density([0, 2]), np.eye(4) / 4, atol=1e-12)
        np.testing.assert_allclose(rho.reduced_density([1]), np.diag([1, 0]), atol=1e-12)

    def test_coherent_error_keeps_the_state_pure(self, rng: np.random.Generator) -> None:
        state = run(_ansatz(6, rng), NoiseSpec(cz_overrotation=0.1))
        assert isinstance(state, DenseState)
        assert state.norm == pytest.approx(1)

    def test_trajectories_track_the_density_operator(self, rng: np.random.Generator) -> None:
        c = _ansatz(4, rng)
        noise = NoiseSpec(cz_depolarizing=0.2, trajectories=4000)
        zz = PauliSum.of(4, PauliTerm.of("Z0 Z1"), PauliTerm.of("X2"))
        exact = run(c, noise).expect(zz)
        sampled = run_trajectories(c, noise, seed=7).expect(zz)
        assert sampled.real == pytest.approx(exact.real, abs=0.1)


class TestReducedDensity:
    def test_unit_trace_and_hermitian(self, rng: np.random.Generator) -> None:
        rho = random_state(6, rng).reduced_density([1, 2, 3])
        assert np.trace(rho).real == pytest.approx(1)
        np.testing.assert_allclose(rho, rho.conj().T, atol=1e-12)

    def test_sites_wrap(self, rng: np.random.Generator) -> None:
        state = random_state(5, rng)
        np.testing.assert_allclose(
            state.reduced_density([4, 5]), state.reduced_density([4, 0]), atol=1e-12
        )

    def test_dense_and_density_agree(self, rng: np.random.Generator) -> None:
        state = random_state(5, rng)
        np.testing.assert_allclose(
            state.reduced_density([3, 0]),
            DensityState.from_pure(state).reduced_density([3, 0]),
            atol=1e-12,
        )


class TestOverlapProtocol:
    def test_self_overlap(self, rng: np.random.Generator) -> None:
        c = _ansatz(8, rng)
        assert overlap_protocol(c, c) == pytest.approx(1, abs=1e-10)

    @pytest.mark.parametrize("project", [False, True])
    def test_matches_dense_states(self, project: bool, rng: np.random.Generator) -> None:
        prep, ref = _ansatz(8, rng), _ansatz(8, rng)
        prepared, reference = run(prep), run(ref)
        if project:
            prepared = prepared.flipped()
        expected = abs(reference.inner(prepared)) ** 2
        assert overlap_protocol(prep, ref, project) == pytest.approx(expected, abs=1e-10)
        assert abs(overlap_amplitude(prep, ref, project)) ** 2 == pytest.approx(expected)

    def test_projected_overlap_from_two_amplitudes(self, rng: np.random.Generator) -> None:
        prep, ref = _ansatz(6, rng), _ansatz(6, rng)
        plain = overlap_amplitude(prep, ref)
        flipped = overlap_amplitude(prep, ref, project=True)
        reference, prepared = run(ref), run(prep)
        direct = complex(
            np.vdot(reference.amplitudes, symmetry_projector(6).apply(prepared.amplitudes))
        )
        assert project_overlap_classically(reference, prepared) == pytest.approx(direct)
        assert (plain + flipped) / 2 == pytest.approx(direct)

    def test_shots_give_a_frequency(self, rng: np.random.Generator) -> None:
        prep, ref = _ansatz(6, rng), _ansatz(6, rng)
        p = overlap_protocol(prep, ref, shots=400, seed=3)
        assert 0 <= p <= 1
        assert (p * 400) == pytest.approx(round(p * 400))

    def test_shot_draw_has_its_own_stream(self, rng: np.random.Generator) -> None:
        prep, ref = _ansatz(6, rng), _ansatz(6, rng)
        p0 = overlap_protocol(prep, ref)
        _, shot_seed = spawn_seeds(11, 2)
        expected = make_rng(shot_seed).binomial(1000, p0) / 1000
        assert overlap_protocol(prep, ref, shots=1000, seed=11) == expected
        assert overlap_protocol(prep, ref, shots=1000, seed=11) == expected

    def test_noise_lowers_the_self_overlap(self, rng: np.random.Generator) -> None:
        c = _ansatz(6, rng)
        assert overlap_protocol(c, c, noise=NoiseSpec(cz_depolarizing=0.05)) < 1

    def test_mismatched_sizes(self, rng: np.random.Generator) -> None:
        with pytest.raises(SiteCountError):
            overlap_circuit(_ansatz(6, rng), _ansatz(8, rng))


class TestSample:
    def test_all_up(self) -> None:
        assert sample(DenseState.zero(4), "ZZZZ", 50) == {"0000": 50}

    def test_plus_state_in_z(self) -> None:
        shots = 3000
        counts = sample(DenseState.from_vector([1, 1]), [Pauli.Z], shots, np.random.default_rng(5))
        sigma = np.sqrt(0.25 / shots)
        assert abs(counts.get("0", 0) / shots - 0.5) < 3 * sigma

    @pytest.mark.parametrize(
        ("vector", "basis"), [([1, 1], "X"), ([1, 1j], "Y"), ([1, 0], "Z")]
    )
    def test_eigenstates_read_out_as_zero(self, vector: list[complex], basis: str) -> None:
        assert sample(DenseState.from_vector(vector), basis, 100) == {"0": 100}

    def test_needs_shots(self) -> None:
        with pytest.raises(ValueError, match="shot"):
            sample(DenseState.zero(2), "ZZ", 0)

    def test_converges_to_born_distribution(self, rng: np.random.Generator) -> None:
        state = run(_ansatz(4, rng))
        exact = state.probabilities()
        distances = []
        for shots in (100, 10_000, 1_000_000):
            counts = sample(state, "ZZZZ", shots, np.random.default_rng(11))
            empirical = np.zeros_like(exact)
            for bits, n in counts.items():
                empirical[int(bits, 2)] = n / shots
            distances.append(0.5 * np.abs(empirical - exact).sum())
        assert distances[-1] < distances[0]
        assert distances[-1] < 3 * np.sqrt(exact.size / 1_000_000)

    def test_marginals(self) -> None:
        counts = {"010": 3, "011": 2, "110": 1}
        assert marginal_counts(counts, [0, 1]) == {"01": 5, "11": 1}
        assert marginal_counts(counts, [2, 0]) == {"00": 3, "10": 2, "01": 1}


class TestRandomBases:
    def test_shape_and_letters(self) -> None:
        bases = random_bases(5, 30, seed=2)
        assert len(bases) == 30
        assert all(len(row) == 5 for row in bases)
        assert {p for row in bases for p in row} <= {Pauli.X, Pauli.Y, Pauli.Z}

    def test_seeded(self) -> None:
        assert random_bases(4, 10, seed=9) == random_bases(4, 10, seed=9)
