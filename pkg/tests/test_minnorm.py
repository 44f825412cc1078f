import numpy as np
import pytest

from conftest import random_complex
from core import OperatorSpacePresentation, TupleOfElements, UnsupportedOperation, canonical_tuple, embed, op_norm
from minnorm import (
    build_superoperator, min_norm, min_norm_and_gradient, min_norm_psd_restricted, psd_ascent,
    oh_norm, cb_norm_from_oh,
)
from models import row_space, column_space


def random_space(rng, n, d1, d2=None):
    d2 = d1 if d2 is None else d2
    return OperatorSpacePresentation.from_matrices([random_complex(rng, d1, d2) for _ in range(n)])


def random_tuple(rng, k, n, d1, d2=None):
    return TupleOfElements(random_space(rng, n, d1, d2), random_complex(rng, k, n))


class TestSuperoperator:
    def test_identity_element(self):
        space = OperatorSpacePresentation.from_matrices([np.eye(3)])
        assert np.allclose(build_superoperator(TupleOfElements(space, [[1]])).M, np.eye(9))

    def test_matrix_unit_gives_rank_one_projection(self):
        e11 = np.zeros((2, 2))
        e11[0, 0] = 1
        M = build_superoperator(TupleOfElements(OperatorSpacePresentation.from_matrices([e11]), [[1]])).M
        expected = np.zeros((4, 4))
        expected[0, 0] = 1
        assert np.allclose(M, expected)

    def test_row_tuple_collapses_to_trace(self, rng):
        op = build_superoperator(canonical_tuple(row_space(3)))
        y = random_complex(rng, 3, 3)
        assert np.allclose(op.apply(y), [[np.trace(y)]], atol=1e-12)

    def test_apply_matches_definition(self, rng):
        t = random_tuple(rng, 3, 2, 2, 3)
        y = random_complex(rng, 3, 3)
        X = np.tensordot(t.A, t.space.basis, axes=1)
        expected = sum(x @ y @ x.conj().T for x in X)
        assert np.max(np.abs(build_superoperator(t).apply(y) - expected)) <= 1e-12 * np.max(np.abs(expected))

    def test_empty_tuple_is_zero(self):
        t = TupleOfElements(row_space(2), np.zeros((0, 2)))
        assert not np.any(build_superoperator(t).M)
        assert min_norm(t) == 0.0


class TestMinNorm:
    def test_single_element_is_op_norm_squared(self, rng):
        t = random_tuple(rng, 1, 3, 3, 2)
        x = np.tensordot(t.A[0], t.space.basis, axes=1)
        assert abs(min_norm(t) - op_norm(x) ** 2) <= 1e-12 * max(1.0, op_norm(x) ** 2)

    @pytest.mark.parametrize('n', [2, 3, 4, 5])
    def test_canonical_row_tuple(self, n):
        assert abs(min_norm(canonical_tuple(row_space(n))) - np.sqrt(n)) <= 1e-10

    def test_trace_form_samples_never_exceed_norm(self, rng):
        t = random_tuple(rng, 3, 3, 2)
        value = min_norm(t)
        X = np.tensordot(t.A, t.space.basis, axes=1)
        for _ in range(500):
            y, z = random_complex(rng, 2, 2), random_complex(rng, 2, 2)
            y, z = y / np.linalg.norm(y), z / np.linalg.norm(z)
            assert abs(np.trace(sum(x @ y @ x.conj().T for x in X) @ z)) <= value * (1 + 1e-12)
        assert abs(psd_ascent(t, seed=1).value - value) <= 1e-6 * max(1.0, value)

    def test_quadratic_homogeneity(self, rng):
        t = random_tuple(rng, 3, 2, 3)
        c = 1.7 - 0.4j
        assert abs(min_norm(t.scaled(c)) - abs(c) ** 2 * min_norm(t)) <= 1e-10 * max(1.0, min_norm(t))

    def test_unitary_mixing_invariance(self, rng):
        t = random_tuple(rng, 4, 3, 2)
        Q, _ = np.linalg.qr(random_complex(rng, 4, 4))
        mixed = TupleOfElements(t.space, Q @ t.A)
        assert abs(min_norm(mixed) - min_norm(t)) <= 1e-10 * max(1.0, min_norm(t))

    def test_monotone_and_subadditive(self, rng):
        t1, t2 = random_tuple(rng, 2, 3, 3), None
        t2 = TupleOfElements(t1.space, random_complex(rng, 3, 3))
        both = t1.concat(t2)
        assert min_norm(both) >= min_norm(t1) - 1e-10
        assert min_norm(both) <= min_norm(t1) + min_norm(t2) + 1e-10

    @pytest.mark.parametrize('builder', [row_space, column_space])
    def test_closed_form_for_row_and_column(self, builder, rng):
        space = builder(4)
        for _ in range(100):
            A = random_complex(rng, int(rng.integers(1, 6)), 4)
            expected = np.linalg.norm(A.conj().T @ A)
            assert abs(min_norm(TupleOfElements(space, A)) - expected) <= 1e-8 * expected

    def test_oh_model_is_sigma_max_squared(self, rng):
        A = random_complex(rng, 3, 4)
        t = TupleOfElements(OperatorSpacePresentation.oh_model(4), A)
        assert abs(min_norm(t) - np.linalg.norm(A, 2) ** 2) <= 1e-10 * np.linalg.norm(A, 2) ** 2

    def test_embedding_does_not_change_the_norm(self, rng):
        t = random_tuple(rng, 3, 2, 2, 3)
        big = TupleOfElements(embed(t.space, (4, 4)), t.A)
        assert abs(min_norm(big) - min_norm(t)) <= 1e-10 * max(1.0, min_norm(t))

    def test_power_iteration_matches_svd(self, rng):
        t = random_tuple(rng, 3, 2, 9)
        M = build_superoperator(t).M
        assert min(M.shape) > 64
        expected = np.linalg.svd(M, compute_uv=False)[0]
        assert abs(min_norm(t) - expected) <= 1e-9 * expected


class TestGradient:
    @pytest.mark.parametrize('abstract', [False, True])
    def test_matches_finite_differences(self, rng, abstract):
        if abstract:
            t = TupleOfElements(OperatorSpacePresentation.oh_model(3), random_complex(rng, 3, 3))
        else:
            t = random_tuple(rng, 3, 3, 2)
        value, grad = min_norm_and_gradient(t)
        assert abs(value - min_norm(t)) <= 1e-10 * value
        E = random_complex(rng, *t.A.shape)
        h = 1e-6
        plus = min_norm(TupleOfElements(t.space, t.A + h * E))
        minus = min_norm(TupleOfElements(t.space, t.A - h * E))
        fd = (plus - minus) / (2 * h)
        assert abs(fd - np.real(np.vdot(grad, E))) <= 1e-5 * max(1.0, abs(fd))


class TestPsdRestricted:
    def test_identity(self):
        t = TupleOfElements(OperatorSpacePresentation.from_matrices([np.eye(3)]), [[1]])
        result = psd_ascent(t, restarts=1)
        assert abs(result.value - 1.0) <= 1e-10
        assert np.allclose(result.y, np.eye(3) / np.sqrt(3), atol=1e-8)

    @pytest.mark.parametrize('n', [2, 3, 4])
    def test_embedded_row_tuple(self, n):
        t = canonical_tuple(embed(row_space(n), (n, n)))
        result = psd_ascent(t)
        assert abs(result.value - np.sqrt(n)) <= 1e-8
        e11 = np.zeros((n, n))
        e11[0, 0] = 1
        assert np.allclose(result.z, e11, atol=1e-6)

    def test_equals_min_norm_on_random_square_tuples(self, rng):
        for _ in range(50):
            d = int(rng.integers(2, 5))
            k = int(rng.integers(1, 7))
            t = random_tuple(rng, k, min(k, d * d), d)
            value = min_norm(t)
            assert abs(min_norm_psd_restricted(t) - value) <= 1e-6 * max(1.0, value)

    def test_needs_square_matrices(self):
        with pytest.raises(UnsupportedOperation):
            min_norm_psd_restricted(canonical_tuple(row_space(3)))

    def test_rejects_oh_model(self):
        with pytest.raises(UnsupportedOperation):
            min_norm_psd_restricted(canonical_tuple(OperatorSpacePresentation.oh_model(2)))


class TestOhNorms:
    @pytest.mark.parametrize('n', [2, 3, 5])
    def test_row_oh_norm(self, n):
        assert abs(oh_norm(canonical_tuple(row_space(n))) - n ** 0.25) <= 1e-10

    def test_unit_element(self):
        assert abs(oh_norm(TupleOfElements(row_space(3), [[0, 1, 0]])) - 1.0) <= 1e-12

    def test_homogeneity(self, rng):
        t = random_tuple(rng, 2, 2, 2)
        assert abs(oh_norm(t.scaled(-3j)) - 3 * oh_norm(t)) <= 1e-10 * max(1.0, oh_norm(t))

    def test_cb_norm_of_oh_identity(self):
        assert abs(cb_norm_from_oh(canonical_tuple(OperatorSpacePresentation.oh_model(4))) - 1.0) <= 1e-12

    def test_cb_norm_into_row(self):
        assert abs(cb_norm_from_oh(canonical_tuple(row_space(4))) - 4 ** 0.25) <= 1e-10
        assert abs(cb_norm_from_oh(canonical_tuple(row_space(4)).scaled(2.5)) - 2.5 * 4 ** 0.25) <= 1e-10
