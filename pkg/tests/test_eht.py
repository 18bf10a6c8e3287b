import numpy as np
import pytest

from .helpers import random_state

from clusterlab.eht import (
    EhtConfig,
    EntHamCoeffs,
    MeasurementDataset,
    WindowData,
    collect_dataset,
    depolarize,
    eht_gradient,
    eht_loss,
    exact_window_data,
    fit_eht,
    gibbs_state,
    noise_robustness,
    num_parameters,
    reconstruct_and_score,
    run_window,
    shuffle_dataset,
    subsystem_windows,
    window_data,
)
from clusterlab.enums.pauli import Pauli
from clusterlab.exceptions import SiteCountError, SizeLimitError
from clusterlab.model import ModelParams
from clusterlab.oracle import low_lying_states
from clusterlab.sim import DenseState, random_bases

FAST = EhtConfig(settings=60, restarts=1, max_iterations=300, seed=3)


def _critical_window(size: int) -> np.ndarray:
    state = low_lying_states(ModelParams.critical(12)).states[0]
    assert isinstance(state, DenseState)
    return state.reduced_density(range(size))


class TestCoefficients:
    def test_parameter_count(self) -> None:
        assert num_parameters(5) == 4 + 3 + 5
        coeffs = EntHamCoeffs.zeros(5)
        assert coeffs.size == 5
        assert len(coeffs.to_vector()) == num_parameters(5)

    def test_vector_length_is_checked(self) -> None:
        with pytest.raises(ValueError):
            EntHamCoeffs.from_vector(4, np.zeros(num_parameters(4) + 1))

    def test_vector_round_trip(self, rng: np.random.Generator) -> None:
        coeffs = EntHamCoeffs.random(4, rng, low=0.1, high=1.0)
        again = EntHamCoeffs.from_vector(4, coeffs.to_vector())
        np.testing.assert_array_equal(again.to_vector(), coeffs.to_vector())

    def test_mirrored_reverses_each_family(self, rng: np.random.Generator) -> None:
        coeffs = EntHamCoeffs.random(5, rng, low=0.1, high=1.0)
        mirrored = coeffs.mirrored()
        np.testing.assert_array_equal(mirrored.zz, coeffs.zz[::-1])
        np.testing.assert_array_equal(mirrored.zxz, coeffs.zxz[::-1])
        np.testing.assert_array_equal(mirrored.x, coeffs.x[::-1])


class TestGibbsState:
    def test_zero_coefficients_give_the_identity(self) -> None:
        np.testing.assert_allclose(gibbs_state(EntHamCoeffs.zeros(3)), np.eye(8) / 8)

    def test_is_a_density_matrix(self, rng: np.random.Generator) -> None:
        rho = gibbs_state(EntHamCoeffs.random(4, rng, low=0.1, high=1.0))
        np.testing.assert_allclose(rho, rho.conj().T, atol=1e-12)
        assert np.trace(rho).real == pytest.approx(1)
        assert np.linalg.eigvalsh(rho).min() > -1e-12

    def test_truncation_keeps_the_state(self) -> None:
        # -6 sum X: the dropped levels sit 24 or more above the ground
        coeffs = EntHamCoeffs(zz=np.zeros(4), zxz=np.zeros(3), x=np.full(5, 6.0))
        np.testing.assert_allclose(gibbs_state(coeffs, 12), gibbs_state(coeffs), atol=1e-6)


class TestDatasets:
    def test_shot_count_is_checked(self) -> None:
        with pytest.raises(ValueError, match="shots"):
            MeasurementDataset(
                num_sites=2, bases=((Pauli.Z, Pauli.Z),), counts=({"00": 3},), shots=4
            )

    def test_histogram_count_is_checked(self) -> None:
        with pytest.raises(ValueError):
            MeasurementDataset(num_sites=2, bases=((Pauli.Z, Pauli.Z),), counts=(), shots=4)

    def test_window_shape_is_checked(self) -> None:
        with pytest.raises(ValueError, match="shape"):
            WindowData(sites=(0, 1), bases=((Pauli.Z, Pauli.Z),), probabilities=np.zeros((1, 2)))

    def test_collect(self) -> None:
        dataset = collect_dataset(DenseState.zero(4), 7, 50, seed=1)
        assert len(dataset) == 7
        assert all(sum(h.values()) == 50 for h in dataset.counts)
        assert all(len(b) == 4 for b in dataset.bases)

    def test_window_marginals(self, rng: np.random.Generator) -> None:
        dataset = collect_dataset(random_state(5, rng), 10, 200, seed=2)
        data = window_data(dataset, [4, 5, 6])
        assert data.sites == (4, 0, 1)
        np.testing.assert_allclose(data.probabilities.sum(axis=1), 1)
        assert data.bases[0] == tuple(dataset.bases[0][s] for s in (4, 0, 1))

    def test_shuffling_destroys_correlations(self) -> None:
        dataset = MeasurementDataset(
            num_sites=2,
            bases=((Pauli.Z, Pauli.Z),),
            counts=({"00": 500, "11": 500},),
            shots=1000,
        )
        shuffled = shuffle_dataset(dataset, seed=4)
        (histogram,) = shuffled.counts
        assert sum(histogram.values()) == 1000
        assert histogram.get("01", 0) + histogram.get("10", 0) > 300
        assert sum(n for k, n in histogram.items() if k[0] == "0") == 500

    def test_subsystem_windows(self) -> None:
        windows = subsystem_windows(16, 8, 4)
        assert [w[0] for w in windows] == [0, 4, 8, 12]
        assert windows[-1] == (12, 13, 14, 15, 0, 1, 2, 3)

    def test_window_size_is_bounded(self) -> None:
        with pytest.raises(SiteCountError):
            subsystem_windows(8, 9, 1)

    def test_depolarize(self, rng: np.random.Generator) -> None:
        rho = random_state(3, rng).reduced_density([0, 1])
        noisy = depolarize(rho, 0.1)
        assert np.trace(noisy).real == pytest.approx(1)
        np.testing.assert_allclose(depolarize(rho, 1.0), np.eye(4) / 4)


class TestLoss:
    def test_self_consistent_data(self, rng: np.random.Generator) -> None:
        coeffs = EntHamCoeffs.random(4, rng, low=0.1, high=1.0)
        data = exact_window_data(gibbs_state(coeffs), random_bases(4, 30, 1))
        assert eht_loss(coeffs, data) < 1e-12

    def test_maximally_mixed_against_pure_data(self) -> None:
        rho = np.diag([1.0, 0.0]).astype(complex)
        data = exact_window_data(rho, [(Pauli.Z,), (Pauli.X,)])
        # Z outcomes differ by 0.5 each; X outcomes match
        assert eht_loss(EntHamCoeffs.zeros(1), data) == pytest.approx(0.5)

    def test_mirror_invariance(self, rng: np.random.Generator) -> None:
        state = random_state(5, rng)
        bases = random_bases(3, 20, 7)
        forward = exact_window_data(state.reduced_density([0, 1, 2]), bases)
        backward = exact_window_data(
            state.reduced_density([2, 1, 0]), [tuple(b[::-1]) for b in bases]
        )
        coeffs = EntHamCoeffs.random(3, rng, low=0.1, high=1.0)
        assert eht_loss(coeffs, forward) == pytest.approx(
            eht_loss(coeffs.mirrored(), backward), abs=1e-12
        )

    def test_window_limit(self) -> None:
        data = WindowData(
            sites=tuple(range(13)),
            bases=((Pauli.Z,) * 13,),
            probabilities=np.zeros((1, 1 << 13)),
        )
        with pytest.raises(SizeLimitError):
            eht_loss(EntHamCoeffs.zeros(13), data)

    def test_size_mismatch(self) -> None:
        data = exact_window_data(np.eye(4) / 4, [(Pauli.Z, Pauli.X)])
        with pytest.raises(SiteCountError):
            eht_loss(EntHamCoeffs.zeros(3), data)

    def test_analytic_gradient(self, rng: np.random.Generator) -> None:
        rho = random_state(5, rng).reduced_density([0, 1, 2])
        data = exact_window_data(rho, random_bases(3, 25, 9))
        x = rng.uniform(0.1, 1.0, num_parameters(3))
        analytic = eht_gradient(EntHamCoeffs.from_vector(3, x), data)
        step = 1e-6
        numeric = np.zeros_like(x)
        for k in range(len(x)):
            shift = np.zeros_like(x)
            shift[k] = step
            up = eht_loss(EntHamCoeffs.from_vector(3, x + shift), data)
            down = eht_loss(EntHamCoeffs.from_vector(3, x - shift), data)
            numeric[k] = (up - down) / (2 * step)
        np.testing.assert_allclose(analytic, numeric, atol=1e-6)


class TestFit:
    def test_recovers_a_gibbs_state(self, rng: np.random.Generator) -> None:
        target = gibbs_state(EntHamCoeffs.random(3, rng, low=0.2, high=1.0))
        data = exact_window_data(target, random_bases(3, 60, 2))
        fit = fit_eht(data, FAST)
        assert fit.loss < 1e-6
        assert reconstruct_and_score(fit.coeffs, target).fidelity > 0.999

    def test_loss_trace_decreases(self, rng: np.random.Generator) -> None:
        rho = random_state(6, rng).reduced_density([0, 1, 2])
        fit = fit_eht(exact_window_data(rho, random_bases(3, 40, 4)), FAST)
        (trace,) = fit.losses
        assert np.all(np.diff(trace) <= 1e-10)
        assert fit.stages[-1].loss == pytest.approx(fit.loss)
        assert len(fit.stages[-1].levels) <= 8

    def test_identical_states_score_one(self, rng: np.random.Generator) -> None:
        coeffs = EntHamCoeffs.random(3, rng, low=0.1, high=1.0)
        score = reconstruct_and_score(coeffs, gibbs_state(coeffs))
        assert score.fidelity == pytest.approx(1, abs=1e-8)
        assert np.all(np.diff(score.spectrum) >= 0)

    def test_score_shape_mismatch(self) -> None:
        with pytest.raises(ValueError):
            reconstruct_and_score(EntHamCoeffs.zeros(2), np.eye(8) / 8)

    def test_run_window(self) -> None:
        rho = _critical_window(3)
        result = run_window(exact_window_data(rho, random_bases(3, 60, 1)), rho, FAST)
        assert result.window == (0, 1, 2)
        assert result.fidelity > 0.95
        assert len(result.levels) == len(result.oracle_levels) == 8

    @pytest.mark.slow
    def test_critical_window_fidelity(self) -> None:
        rho = _critical_window(5)
        data = exact_window_data(rho, random_bases(5, 200, 0))
        result = run_window(data, rho, EhtConfig(restarts=3))
        assert result.fidelity > 0.99

    @pytest.mark.slow
    def test_shuffled_data_loses_fidelity(self) -> None:
        state = low_lying_states(ModelParams.critical(12)).states[0]
        assert isinstance(state, DenseState)
        rho = state.reduced_density(range(5))
        dataset = shuffle_dataset(collect_dataset(state, 200, 3000, seed=5), seed=6)
        result = run_window(window_data(dataset, range(5)), rho, EhtConfig(restarts=2))
        assert result.fidelity < 0.9

    @pytest.mark.slow
    def test_reconstruction_beats_raw_noise(self) -> None:
        comparison = noise_robustness(_critical_window(4), 0.05, EhtConfig(restarts=2))
        assert comparison.reconstructed > comparison.raw
