import numpy as np
import pytest

from clusterlab.enums.model import Boundary
from clusterlab.exact import energy_distance, ground_state, low_lying, spectral_bounds
from clusterlab.exceptions import NonHermitianError, SizeLimitError
from clusterlab.model import ModelParams, build_hamiltonian
from clusterlab.pauli import PauliSum, PauliTerm


class TestLowLying:
    @pytest.mark.parametrize("L", [6, 10, 12])
    def test_matches_dense_eigensolver(self, L: int) -> None:
        H = build_hamiltonian(ModelParams.critical(L, Boundary.OBC))
        spectrum = low_lying(H, 3)
        if L <= 10:
            expected = np.linalg.eigvalsh(H.to_dense())[:3]
            np.testing.assert_allclose(spectrum.energies, expected, atol=1e-9)
        assert np.all(np.diff(spectrum.energies) >= 0)
        assert spectrum.gaps[0] == 0

    def test_states_are_eigenvectors(self) -> None:
        H = build_hamiltonian(ModelParams.critical(10))
        spectrum = low_lying(H, 2)
        for k in range(2):
            state = spectrum.state(k)
            residual = H.apply(state.amplitudes) - spectrum.energies[k] * state.amplitudes
            assert np.linalg.norm(residual) < 1e-6

    def test_register_limit(self) -> None:
        with pytest.raises(SizeLimitError):
            low_lying(PauliSum.identity(25))

    def test_non_hermitian(self) -> None:
        with pytest.raises(NonHermitianError):
            low_lying(PauliSum.of(3, PauliTerm.of("X0", 1j)))


class TestSpectralBounds:
    def test_field_chain(self) -> None:
        H = PauliSum.of(4, *(PauliTerm.of({j: "Z"}, -1) for j in range(4)))
        assert spectral_bounds(H) == pytest.approx((-4, 4))

    def test_ground_state_sits_at_the_bottom(self, obc8: ModelParams) -> None:
        H = build_hamiltonian(obc8)
        _, energy = ground_state(H)
        low, high = spectral_bounds(H)
        assert energy == pytest.approx(low)
        assert high > low


class TestEnergyDistance:
    def test_normalised_to_the_band(self) -> None:
        assert energy_distance(-9.0, -10.0, 10.0) == pytest.approx(0.05)
        assert energy_distance(-10.0, -10.0, 10.0) == 0

    def test_empty_band(self) -> None:
        with pytest.raises(ValueError, match="width"):
            energy_distance(1.0, 1.0, 1.0)
