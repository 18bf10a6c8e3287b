import numpy as np
import pytest

from clusterlab.dmrg import DmrgConfig, dmrg_excited, dmrg_ground, dmrg_low_lying
from clusterlab.enums.model import Boundary
from clusterlab.exact import low_lying
from clusterlab.exceptions import NonHermitianError
from clusterlab.model import CutConfig, ModelParams, build_hamiltonian
from clusterlab.oracle import hamiltonian_for, low_lying_states, overlap
from clusterlab.pauli import PauliSum, PauliTerm

CONFIG = DmrgConfig(chi_max=64, seed=1)


class TestDmrgGround:
    def test_trivial_field(self) -> None:
        H = PauliSum.of(6, *(PauliTerm.of({j: "Z"}, -1) for j in range(6)))
        result = dmrg_ground(H, CONFIG)
        assert result.energy == pytest.approx(-6)
        assert abs(result.state.to_dense()[0]) == pytest.approx(1, abs=1e-8)

    @pytest.mark.parametrize("boundary", list(Boundary))
    def test_matches_exact_diagonalization(self, boundary: Boundary) -> None:
        H = build_hamiltonian(ModelParams.critical(8, boundary))
        result = dmrg_ground(H, CONFIG)
        spectrum = low_lying(H, 1)
        assert result.converged
        assert result.energy == pytest.approx(spectrum.energies[0], abs=1e-8)
        fidelity = abs(overlap(spectrum.state(0), result.state)) ** 2
        assert fidelity > 1 - 1e-7

    def test_sweep_energies_do_not_rise(self) -> None:
        H = build_hamiltonian(ModelParams.critical(10, Boundary.OBC))
        energies = np.array(dmrg_ground(H, CONFIG).energies)
        assert np.all(np.diff(energies) < 1e-9)

    def test_unconverged_run_is_flagged(self) -> None:
        H = build_hamiltonian(ModelParams.critical(10))
        cfg = DmrgConfig(chi_max=2, max_sweeps=1, min_sweeps=1, seed=1)
        assert not dmrg_ground(H, cfg).converged

    def test_rejects_non_hermitian(self) -> None:
        H = PauliSum.of(4, PauliTerm.of("Z0 Z1", 1j))
        with pytest.raises(NonHermitianError):
            dmrg_ground(H, CONFIG)


class TestDmrgExcited:
    def test_low_lying_levels(self) -> None:
        H = build_hamiltonian(ModelParams.critical(8, Boundary.OBC))
        results = dmrg_low_lying(H, 3, CONFIG)
        exact = low_lying(H, 3).energies
        np.testing.assert_allclose([r.energy for r in results], exact, atol=1e-7)

    def test_penalised_states_are_orthogonal(self) -> None:
        H = build_hamiltonian(ModelParams.critical(8))
        states = [r.state for r in dmrg_low_lying(H, 3, CONFIG)]
        for i in range(3):
            for j in range(i):
                assert abs(states[i].inner(states[j])) < 1e-6

    def test_needs_every_previous_state(self) -> None:
        H = build_hamiltonian(ModelParams.critical(6))
        ground = dmrg_ground(H, CONFIG).state
        with pytest.raises(ValueError, match="previous"):
            dmrg_excited(H, 2, [ground], CONFIG)


class TestOracle:
    @pytest.mark.parametrize("L", [8, 12, 16])
    def test_open_chain_edge_modes(self, L: int) -> None:
        # the edge doublet is degenerate to round-off, the next level is a bulk excitation
        gaps = low_lying(build_hamiltonian(ModelParams.critical(L, Boundary.OBC)), 3).gaps
        assert gaps[1] < 1e-8 * gaps[2]

    def test_exact_up_to_the_oracle_limit(self) -> None:
        result = low_lying_states(ModelParams.critical(10), count=2)
        assert result.exact
        assert len(result) == 2
        assert result.energies[0] <= result.energies[1]

    def test_cut_states_use_the_cut_hamiltonian(self) -> None:
        p = ModelParams.critical(8)
        c = CutConfig.of_label("u0")
        result = low_lying_states(p, c)
        expected = low_lying(hamiltonian_for(p, c), 1).energies[0]
        assert result.energies[0] == pytest.approx(expected)

    @pytest.mark.slow
    def test_dmrg_beyond_the_oracle_limit(self) -> None:
        p = ModelParams.critical(18)
        result = low_lying_states(p, dmrg=DmrgConfig(chi_max=64, seed=2))
        assert not result.exact
        assert result.converged
        expected = low_lying(build_hamiltonian(p), 1).energies[0]
        assert result.energies[0] == pytest.approx(expected, abs=1e-6)
