import numpy as np
import pytest

from conftest import random_complex
from core import Element, TupleOfElements, PresentationError, UnsupportedOperation, realize, op_norm
from minnorm import min_norm
from models import (
    PAULI_X, PAULI_Y, model_space, row_space, column_space, oh_space,
    clifford_generators, clifford_space, closed_form_min_norm, clifford_identity_suite, clifford_ratio_probe,
)
from summing import pi2oh_lower, pi2oh_upper_certificate


class TestModelSpaces:
    def test_row_and_column_bases(self):
        assert np.array_equal(row_space(3).basis[2], np.array([[0, 0, 1]]))
        assert np.array_equal(column_space(3).basis[1], np.array([[0], [1], [0]]))

    def test_embedded_row_lives_in_square_matrices(self):
        assert row_space(3, embedded=True).shape == (3, 3)
        assert column_space(2, embedded=True).shape == (2, 2)

    def test_oh_is_abstract(self):
        assert oh_space(4).is_abstract

    def test_unknown_kind(self):
        with pytest.raises(PresentationError):
            model_space('diagonal', 3)

    def test_model_space_labels(self):
        for kind in ('row', 'column', 'oh', 'clifford'):
            assert model_space(kind, 3).presentation.label == kind


class TestClifford:
    def test_single_generator(self):
        assert np.array_equal(clifford_generators(1)[0], PAULI_X)

    def test_two_generators_are_paulis(self):
        X, Y = clifford_generators(2)
        assert np.array_equal(X, PAULI_X) and np.array_equal(Y, PAULI_Y)
        assert np.allclose(X @ Y + Y @ X, 0)

    @pytest.mark.parametrize('n', [1, 2, 3, 4, 5, 6, 7, 8])
    def test_generator_relations(self, n):
        gens = clifford_generators(n)
        D = 2 ** ((n + 1) // 2)
        assert all(u.shape == (D, D) for u in gens)
        for i, u in enumerate(gens):
            assert np.max(np.abs(u - u.conj().T)) <= 1e-14
            assert np.max(np.abs(u @ u - np.eye(D))) <= 1e-14
            for v in gens[i + 1:]:
                assert np.max(np.abs(u @ v + v @ u)) <= 1e-14

    def test_needs_positive_n(self):
        with pytest.raises(PresentationError):
            clifford_generators(0)

    @pytest.mark.parametrize('n', [2, 3, 4, 5, 6])
    def test_identity_suite(self, n):
        report = clifford_identity_suite(n, seed=n)
        assert report.passed()
        assert all(v <= 1e-12 for v in report.residuals().values())

    def test_first_generator_norm(self):
        x = realize(Element(clifford_space(3), [1, 0, 0]))
        assert abs(op_norm(x) - 1.0) <= 1e-14

    def test_two_dimensional_example(self):
        space = clifford_space(2)
        ix = realize(Element(space, np.array([1, 1]) / np.sqrt(2)))
        assert op_norm(ix) ** 2 <= 2 + 1e-12
        assert abs(np.real(np.trace(ix.conj().T @ ix)) / 2 - 1.0) <= 1e-12

    def test_ratio_probe_on_generators(self):
        gens = TupleOfElements(clifford_space(4), np.eye(4))
        assert min_norm(gens) / 4 >= 0.5 - 1e-12

    def test_single_generator_ratio(self):
        t = TupleOfElements(clifford_space(3), [[1, 0, 0]])
        assert abs(min_norm(t) - 1.0) <= 1e-12

    @pytest.mark.parametrize('n', [2, 3, 4, 5, 6])
    def test_ratio_probe(self, n, quick_search):
        result = clifford_ratio_probe(n, samples=10_000, seed=n, search=quick_search)
        assert result.passed()
        assert result.min_ratio >= 0.5 - 1e-9

    @pytest.mark.parametrize('n', [2, 3, 4, 5, 6])
    def test_sandwich(self, n, quick_search):
        space = clifford_space(n)
        lower = pi2oh_lower(space, search=quick_search).value
        upper = pi2oh_upper_certificate(space, search=quick_search).C
        assert 1 - 1e-6 <= lower <= upper + 1e-6
        assert upper <= np.sqrt(2) + 1e-6


class TestClosedForms:
    @pytest.mark.parametrize('n', [2, 3, 5])
    def test_row_identity(self, n):
        assert abs(closed_form_min_norm('row', np.eye(n)) - np.sqrt(n)) <= 1e-12

    def test_oh_identity(self):
        assert abs(closed_form_min_norm('oh', np.eye(4)) - 1.0) <= 1e-12

    @pytest.mark.parametrize('kind', ['row', 'column'])
    def test_matches_generic_engine(self, kind, rng):
        space = model_space(kind, 3).presentation
        for _ in range(100):
            A = random_complex(rng, 4, 3)
            generic = min_norm(TupleOfElements(space, A))
            assert abs(closed_form_min_norm(kind, A) - generic) <= 1e-10 * generic

    def test_clifford_has_no_closed_form(self):
        with pytest.raises(UnsupportedOperation):
            closed_form_min_norm('clifford', np.eye(2))

    def test_oh_is_unitarily_homogeneous(self, rng):
        A = random_complex(rng, 3, 3)
        Q, _ = np.linalg.qr(random_complex(rng, 3, 3))
        oh = oh_space(3)
        base = min_norm(TupleOfElements(oh, A))
        assert abs(min_norm(TupleOfElements(oh, A @ Q)) - base) <= 1e-10 * base
        assert abs(min_norm(TupleOfElements(oh, A[:, ::-1])) - base) <= 1e-10 * base
