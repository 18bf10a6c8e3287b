import typing

import numpy as np
import pytest

from .helpers import random_state, random_term

from clusterlab.circuit import CircuitIR, CZLayer
from clusterlab.enums.model import Boundary
from clusterlab.enums.pauli import Pauli
from clusterlab.exceptions import InvalidLayerError, NonHermitianError, SiteCountError
from clusterlab.model import ModelParams, build_hamiltonian, spin_flip
from clusterlab.pauli import (
    PauliSum,
    PauliTerm,
    commutator,
    conjugate_by_cz_layer,
    expectation,
    multiply,
)
from clusterlab.sim import DenseState, circuit_unitary


class _SkewedState:
    """Stands in for a state whose numerics leave an imaginary residue."""

    num_sites = 1

    def expect(self, op: PauliSum, /) -> complex:
        return 0.5 + 1e-6j


class TestPauliTerm:
    def test_identity_factors_are_dropped(self) -> None:
        term = PauliTerm.of({0: Pauli.I, 2: Pauli.X})
        assert term.factors == ((2, Pauli.X),)

    def test_equal_regardless_of_order(self) -> None:
        a = PauliTerm.of({2: "Z", 0: "X"}, 0.5)
        b = PauliTerm.of([(0, "X"), (2, "Z")], 0.5)
        assert a == b

    def test_parses_strings(self) -> None:
        assert PauliTerm.of("Z0 X1 Z2") == PauliTerm.of({0: "Z", 1: "X", 2: "Z"})

    def test_repeated_site_rejected(self) -> None:
        with pytest.raises(ValueError, match="twice"):
            PauliTerm.of([(0, "X"), (0, "Z")])

    def test_dense_matches_kron(self) -> None:
        x = np.array([[0, 1], [1, 0]])
        z = np.diag([1, -1])
        expected = 2 * np.kron(np.kron(z, np.eye(2)), x)
        np.testing.assert_allclose(PauliTerm.of("Z0 X2", 2).to_dense(3), expected)

    def test_apply_matches_dense(self, rng: np.random.Generator) -> None:
        term = random_term(4, rng)
        vector = rng.normal(size=16) + 1j * rng.normal(size=16)
        np.testing.assert_allclose(term.apply(vector, 4), term.to_dense(4) @ vector)


class TestMultiply:
    @pytest.mark.parametrize(
        ("a", "b", "expected"),
        [
            ("X0", "Z0", PauliTerm.of("Y0", -1j)),
            ("Z0 Z1", "Z0 Z1", PauliTerm.identity()),
            ("Z0 X1 Z2", "Z1 Z2", PauliTerm.of("Z0 Y1", -1j)),
            ("X0", "Y0", PauliTerm.of("Z0", 1j)),
        ],
    )
    def test_products(self, a: str, b: str, expected: PauliTerm) -> None:
        assert multiply(PauliTerm.of(a), PauliTerm.of(b)) == expected

    def test_matches_matrix_product(self, rng: np.random.Generator) -> None:
        for _ in range(20):
            a, b = random_term(3, rng), random_term(3, rng)
            np.testing.assert_allclose(
                multiply(a, b).to_dense(3), a.to_dense(3) @ b.to_dense(3), atol=1e-12
            )

    def test_associative_and_norm_preserving(self, rng: np.random.Generator) -> None:
        for _ in range(20):
            a, b, c = (random_term(4, rng) for _ in range(3))
            left = multiply(multiply(a, b), c)
            right = multiply(a, multiply(b, c))
            assert left.factors == right.factors
            assert left.coefficient == pytest.approx(right.coefficient)
            assert abs(left.coefficient) == pytest.approx(
                abs(a.coefficient) * abs(b.coefficient) * abs(c.coefficient)
            )


class TestConjugateByCz:
    @pytest.mark.parametrize(
        ("op", "pairs", "expected"),
        [
            ("X0", [(0, 1)], "X0 Z1"),
            ("Z0", [(0, 1)], "Z0"),
            ("Z0 X1 Z2", [(0, 1), (2, 3)], "X1 Z2"),
        ],
    )
    def test_known_images(self, op: str, pairs: list[tuple[int, int]], expected: str) -> None:
        assert conjugate_by_cz_layer(PauliTerm.of(op), pairs) == PauliTerm.of(expected)

    def test_overlapping_pairs_rejected(self) -> None:
        with pytest.raises(InvalidLayerError):
            conjugate_by_cz_layer(PauliTerm.of("X0"), [(0, 1), (1, 2)])

    @pytest.mark.parametrize("num_sites", [3, 4, 6])
    def test_matches_dense_conjugation(self, num_sites: int, rng: np.random.Generator) -> None:
        for _ in range(10):
            term = random_term(num_sites, rng)
            sites = rng.permutation(num_sites)
            pairs = [
                (int(sites[k]), int(sites[k + 1]))
                for k in range(0, num_sites - 1, 2)
                if rng.random() < 0.7
            ]
            u = circuit_unitary(CircuitIR(num_sites=num_sites, layers=[CZLayer(pairs)]))
            image = conjugate_by_cz_layer(term, pairs)
            np.testing.assert_allclose(
                image.to_dense(num_sites), u @ term.to_dense(num_sites) @ u, atol=1e-12
            )
            assert abs(image.coefficient) == pytest.approx(abs(term.coefficient))


class TestPauliSum:
    def test_terms_are_merged(self) -> None:
        op = PauliSum.of(2, PauliTerm.of("Z0", 1), PauliTerm.of("Z0", 2), PauliTerm.of("X1", 1))
        assert len(op) == 2
        assert op.terms[0] == PauliTerm.of("Z0", 3)

    def test_cancelled_terms_vanish(self) -> None:
        op = PauliSum.of(1, PauliTerm.of("Z0", 1), PauliTerm.of("Z0", -1))
        assert op.is_zero

    def test_hermitian_flag_checks_coefficients(self) -> None:
        with pytest.raises(NonHermitianError):
            PauliSum.of(1, PauliTerm.of("Z0", 1j), hermitian=True)

    def test_site_range_checked(self) -> None:
        with pytest.raises(SiteCountError):
            PauliSum.of(2, PauliTerm.of("Z2"))

    def test_sparse_matches_dense_terms(self, rng: np.random.Generator) -> None:
        terms = [random_term(3, rng) for _ in range(5)]
        op = PauliSum.of(3, *terms)
        expected = sum(term.to_dense(3) for term in terms)
        np.testing.assert_allclose(op.to_dense(), expected, atol=1e-12)

    @pytest.mark.parametrize("boundary", list(Boundary))
    @pytest.mark.parametrize(("J", "g", "h"), [(1, 1, 0), (0.7, 1, 0.3), (1, 0, 1)])
    def test_hamiltonian_commutes_with_spin_flip(
        self, boundary: Boundary, J: float, g: float, h: float
    ) -> None:
        H = build_hamiltonian(ModelParams(L=6, J=J, g=g, h=h, boundary=boundary))
        flip = PauliSum.of(6, spin_flip(6))
        assert commutator(H, flip).is_zero


class TestExpectation:
    def test_all_up_ising_chain(self) -> None:
        terms = [PauliTerm.of({j: "Z", j + 1: "Z"}) for j in range(5)]
        assert expectation(DenseState.zero(6), PauliSum.of(6, *terms)) == pytest.approx(5)

    def test_all_up_cluster_chain(self) -> None:
        H = build_hamiltonian(ModelParams.critical(8, Boundary.OBC))
        assert expectation(DenseState.zero(8), H) == pytest.approx(-7)

    def test_spin_flip_squares_to_one(self, rng: np.random.Generator) -> None:
        flip = PauliSum.of(5, spin_flip(5))
        assert expectation(random_state(5, rng), flip * flip) == pytest.approx(1)

    def test_imaginary_part_of_general_operators_is_dropped(self) -> None:
        state = DenseState.from_vector([1, 1j])
        assert expectation(state, PauliSum.of(1, PauliTerm.of("Y0", 1j))) == pytest.approx(0)

    @pytest.mark.parametrize("hermitian", [False, True])
    def test_residue_matters_only_for_hermitian_operators(self, hermitian: bool) -> None:
        op = PauliSum.of(1, PauliTerm.of("Z0"), hermitian=hermitian)
        state: typing.Any = _SkewedState()
        if not hermitian:
            assert expectation(state, op) == pytest.approx(0.5)
            return

        with pytest.raises(NonHermitianError):
            expectation(state, op)

    def test_size_mismatch(self) -> None:
        with pytest.raises(SiteCountError):
            expectation(DenseState.zero(3), PauliSum.identity(4))
