import numpy as np
import pytest

from clusterlab.enums.model import Boundary, CutKind
from clusterlab.enums.pauli import Pauli
from clusterlab.exact import ground_state
from clusterlab.exceptions import BoundaryError, InvalidCutError, SiteCountError
from clusterlab.model import (
    CutConfig,
    ModelParams,
    build_cut_hamiltonian,
    build_hamiltonian,
    coupling_components,
    cut_layout,
    site_distances,
    symmetry_projector,
)
from clusterlab.oracle import low_lying_states
from clusterlab.pauli import PauliSum, PauliTerm, expectation


def _count(H: PauliSum, pattern: tuple[Pauli, ...]) -> int:
    return sum(tuple(p for _, p in term.factors) == pattern for term in H.terms)


class TestBuildHamiltonian:
    def test_open_chain_term_counts(self) -> None:
        H = build_hamiltonian(ModelParams.critical(4, Boundary.OBC))
        assert _count(H, (Pauli.Z, Pauli.Z)) == 3
        assert _count(H, (Pauli.Z, Pauli.X, Pauli.Z)) == 2
        assert len(H) == 5
        assert all(term.coefficient == -1 for term in H.terms)

    def test_ring_term_counts(self) -> None:
        H = build_hamiltonian(ModelParams.critical(4, Boundary.PBC))
        assert len(H) == 8
        assert PauliTerm.of({0: "Z", 3: "Z"}, -1) in H.terms
        assert PauliTerm.of({3: "Z", 0: "X", 1: "Z"}, -1) in H.terms

    def test_transverse_field_terms(self) -> None:
        H = build_hamiltonian(ModelParams(L=5, h=0.25, boundary=Boundary.OBC))
        assert _count(H, (Pauli.X,)) == 5

    def test_too_short(self) -> None:
        with pytest.raises(SiteCountError):
            ModelParams(L=2)

    def test_dense_ground_energy_matches_eigh(self, obc8: ModelParams) -> None:
        H = build_hamiltonian(obc8)
        _, energy = ground_state(H)
        assert energy == pytest.approx(np.linalg.eigvalsh(H.to_dense())[0], abs=1e-9)

    def test_reflection_keeps_ground_energy(self, obc8: ModelParams) -> None:
        H = build_hamiltonian(obc8)
        L = obc8.L
        mirrored = PauliSum(
            num_sites=L,
            terms=[
                PauliTerm(
                    factors=[(L - 1 - site, p) for site, p in term.factors],
                    coefficient=term.coefficient,
                )
                for term in H.terms
            ],
            hermitian=True,
        )
        assert ground_state(mirrored)[1] == pytest.approx(ground_state(H)[1], abs=1e-9)


class TestCutHamiltonian:
    def test_uncut_is_the_ring(self, pbc8: ModelParams) -> None:
        cut = build_cut_hamiltonian(pbc8, CutConfig())
        assert cut.hamiltonian == build_hamiltonian(pbc8)
        assert not cut.pinned

    def test_one_cut_pins_its_pair(self, pbc8: ModelParams) -> None:
        cut = build_cut_hamiltonian(pbc8, CutConfig(cut_a=CutKind.UP))
        assert dict(cut.pinned) == {7: 1, 0: 1}
        for term in cut.hamiltonian.terms:
            if term.weight > 1:
                assert not {0, 7} <= set(term.support)

    def test_pinning_field(self, pbc8: ModelParams) -> None:
        cut = build_cut_hamiltonian(pbc8, CutConfig(cut_a=CutKind.DOWN))
        assert PauliTerm.of("Z0", 50.0) in cut.hamiltonian.terms
        assert PauliTerm.of("Z7", 50.0) in cut.hamiltonian.terms

    def test_two_cuts_split_the_ring(self) -> None:
        p = ModelParams.critical(12)
        cut = build_cut_hamiltonian(p, CutConfig.of_label("ud"))
        components = coupling_components(cut.hamiltonian, excluded=cut.pinned)
        assert len(components) == 2

    def test_free_cuts_split_without_pinning(self) -> None:
        p = ModelParams.critical(12)
        cut = build_cut_hamiltonian(p, CutConfig.of_label("ff"))
        assert not cut.pinned
        assert len(coupling_components(cut.hamiltonian)) == 2

    def test_cut_b_needs_even_chain(self) -> None:
        with pytest.raises(InvalidCutError):
            build_cut_hamiltonian(ModelParams.critical(7), CutConfig(cut_b=CutKind.UP))

    def test_open_chain_rejected(self, obc8: ModelParams) -> None:
        with pytest.raises(BoundaryError):
            build_cut_hamiltonian(obc8, CutConfig(cut_a=CutKind.UP))

    def test_pinned_ground_state(self) -> None:
        p = ModelParams.critical(12)
        state = low_lying_states(p, CutConfig.of_label("u0")).states[0]
        for site in (0, 11):
            z = PauliSum.of(12, PauliTerm.of({site: "Z"}))
            assert expectation(state, z) == pytest.approx(1, abs=1e-6)


class TestCutConfig:
    @pytest.mark.parametrize(
        ("label", "expected"),
        [
            ("00", CutConfig()),
            ("u0", CutConfig(cut_a=CutKind.UP)),
            ("dd", CutConfig(cut_a=CutKind.DOWN, cut_b=CutKind.DOWN)),
            ("f0", CutConfig(cut_a=CutKind.FREE)),
        ],
    )
    def test_labels(self, label: str, expected: CutConfig) -> None:
        assert CutConfig.of_label(label) == expected
        assert expected.label == label

    @pytest.mark.parametrize("label", ["", "u", "x0", "uuu"])
    def test_invalid_labels(self, label: str) -> None:
        with pytest.raises(InvalidCutError):
            CutConfig.of_label(label)


class TestSymmetryProjector:
    def test_single_site(self) -> None:
        expected = np.array([[1, 1], [1, 1]]) / 2
        np.testing.assert_allclose(symmetry_projector(1).to_dense(), expected)

    @pytest.mark.parametrize("L", [1, 3, 6])
    def test_idempotent(self, L: int) -> None:
        P = symmetry_projector(L)
        square = P * P
        assert square.terms == P.terms

    def test_ring_ground_state_is_even(self) -> None:
        state = low_lying_states(ModelParams.critical(12)).states[0]
        assert expectation(state, symmetry_projector(12)) == pytest.approx(1, abs=1e-8)


class TestSiteDistances:
    def test_open_chain(self) -> None:
        assert site_distances(6, Boundary.OBC) == (0, 1, 2, 2, 1, 0)

    def test_uncut_ring(self) -> None:
        assert site_distances(6, Boundary.PBC) == (0,) * 6

    def test_pinned_pair_ends_the_segment(self, pbc8: ModelParams) -> None:
        layout = cut_layout(pbc8, CutConfig(cut_a=CutKind.UP))
        assert site_distances(8, Boundary.PBC, layout) == (0, 0, 1, 2, 2, 1, 0, 0)
