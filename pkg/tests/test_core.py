import json

import numpy as np
import pytest

from conftest import random_complex
from core import (
    OperatorSpacePresentation, Element, TupleOfElements, PositiveTensor,
    PresentationError, UnsupportedOperation, InputFormatError,
    cmat, op_norm, realize, realize_tuple, gram_tuple, is_positive, direct_sum, embed,
    matrix_space, is_full_matrix_space, canonical_tuple, fix_phase, load_space, load_tuple,
)
from models import row_space, column_space


def unit(d1, d2, i, j):
    m = np.zeros((d1, d2), dtype=np.complex128)
    m[i, j] = 1.0
    return m


class TestMatrices:
    def test_cmat_rejects_non_finite(self):
        with pytest.raises(PresentationError):
            cmat([[1.0, np.nan]])

    def test_cmat_is_read_only(self):
        m = cmat([[1, 2], [3, 4]])
        with pytest.raises(ValueError):
            m[0, 0] = 5

    @pytest.mark.parametrize('m, expected', [
        (np.eye(3), 1.0),
        (unit(2, 2, 0, 1), 1.0),
        (np.diag([3, -4j]), 4.0),
    ])
    def test_op_norm(self, m, expected):
        assert abs(op_norm(m) - expected) <= 1e-12

    def test_op_norm_of_block_diagonal_is_max(self, rng):
        a, b = random_complex(rng, 2, 3), random_complex(rng, 3, 2)
        block = np.zeros((5, 5), dtype=np.complex128)
        block[:2, :3], block[2:, 3:] = a, b
        assert abs(op_norm(block) - max(op_norm(a), op_norm(b))) <= 1e-12

    def test_fix_phase_makes_first_component_positive(self, rng):
        v = fix_phase(random_complex(rng, 4))
        assert abs(v[0].imag) <= 1e-12 and v[0].real > 0


class TestPresentation:
    def test_dependent_basis_is_rejected(self):
        with pytest.raises(PresentationError):
            OperatorSpacePresentation.from_matrices([np.eye(2), 2 * np.eye(2)])

    def test_mixed_shapes_are_rejected(self):
        with pytest.raises(PresentationError):
            OperatorSpacePresentation.from_matrices([np.eye(2), np.eye(3)])

    def test_unknown_label_is_rejected(self):
        with pytest.raises(PresentationError):
            OperatorSpacePresentation.from_matrices([np.eye(2)], label='banana')

    def test_oh_model_has_no_shape(self):
        oh = OperatorSpacePresentation.oh_model(3)
        assert oh.is_abstract and oh.dim == 3
        with pytest.raises(UnsupportedOperation):
            oh.shape
        with pytest.raises(UnsupportedOperation):
            realize(Element(oh, np.ones(3)))

    def test_rectangular_row_and_column_shapes(self):
        assert row_space(3).shape == (1, 3)
        assert column_space(3).shape == (3, 1)

    def test_dict_round_trip_keeps_basis(self, rng):
        space = OperatorSpacePresentation.from_matrices([random_complex(rng, 2, 3) for _ in range(2)])
        again = OperatorSpacePresentation.from_dict(json.loads(json.dumps(space.to_dict())))
        assert again.same_as(space)


class TestRealize:
    def test_basis_vector(self):
        space = row_space(3)
        assert np.array_equal(realize(Element(space, [1, 0, 0])), space.basis[0])

    def test_zero(self):
        assert not np.any(realize(Element(row_space(3), np.zeros(3))))

    def test_units_sum_to_identity(self):
        space = OperatorSpacePresentation.from_matrices([unit(2, 2, 0, 0), unit(2, 2, 1, 1)])
        assert np.allclose(realize(Element(space, [1, 1])), np.eye(2))

    def test_linearity(self, rng):
        space = OperatorSpacePresentation.from_matrices([random_complex(rng, 3, 3) for _ in range(3)])
        c1, c2 = random_complex(rng, 3), random_complex(rng, 3)
        alpha, beta = 0.3 - 1.2j, 2.0 + 0.5j
        lhs = realize(Element(space, alpha * c1 + beta * c2))
        rhs = alpha * realize(Element(space, c1)) + beta * realize(Element(space, c2))
        assert np.max(np.abs(lhs - rhs)) <= 1e-14 * max(1.0, np.max(np.abs(lhs)))

    def test_empty_tuple(self):
        t = TupleOfElements(row_space(2), np.zeros((0, 2)))
        assert t.k == 0
        assert realize_tuple(t).shape == (0, 1, 2)


class TestPositivity:
    def test_single_element_gram_is_rank_one(self, rng):
        c = random_complex(rng, 3)
        C = gram_tuple(TupleOfElements(row_space(3), c[None, :])).C
        assert np.allclose(C, np.outer(c, c.conj()), atol=1e-12)

    def test_canonical_tuple_gives_identity(self):
        assert np.allclose(gram_tuple(canonical_tuple(row_space(4))).C, np.eye(4))

    def test_repeated_element_doubles(self):
        C = gram_tuple(TupleOfElements(row_space(2), [[1, 0], [1, 0]])).C
        assert np.allclose(C, [[2, 0], [0, 0]])

    def test_gram_is_positive(self, rng):
        space = row_space(3)
        for _ in range(10):
            assert is_positive(gram_tuple(TupleOfElements(space, random_complex(rng, 4, 3))))

    def test_gram_is_unitarily_invariant(self, rng):
        space = row_space(3)
        A = random_complex(rng, 4, 3)
        Q, _ = np.linalg.qr(random_complex(rng, 4, 4))
        C1 = gram_tuple(TupleOfElements(space, A)).C
        C2 = gram_tuple(TupleOfElements(space, Q @ A)).C
        assert np.max(np.abs(C1 - C2)) <= 1e-12

    @pytest.mark.parametrize('C, expected', [
        (np.eye(2), True),
        (np.array([[0, 1], [0, 0]]), False),
        (np.diag([1, -1]), False),
    ])
    def test_is_positive_examples(self, C, expected):
        assert is_positive(PositiveTensor(row_space(2), C)) is expected


class TestDirectSum:
    def test_row_plus_column_shape(self):
        s = direct_sum(row_space(2), column_space(2))
        assert s.shape == (3, 3) and s.dim == 2

    def test_zero_block_keeps_norms(self, rng):
        p = OperatorSpacePresentation.from_matrices([random_complex(rng, 2, 2) for _ in range(2)])
        s = direct_sum(p, (2, 1))
        c = random_complex(rng, 2)
        assert abs(op_norm(realize(Element(s, c))) - op_norm(realize(Element(p, c)))) <= 1e-12

    def test_doubled_row_space(self, rng):
        p = row_space(2)
        s = direct_sum(p, p)
        c = random_complex(rng, 2)
        x, y = realize(Element(p, c)), realize(Element(s, c))
        assert abs(np.linalg.norm(y) - np.sqrt(2) * np.linalg.norm(x)) <= 1e-12
        assert abs(op_norm(y) - op_norm(x)) <= 1e-12

    def test_size_mismatch(self):
        with pytest.raises(PresentationError):
            direct_sum(row_space(2), row_space(3))


class TestAmbient:
    def test_embed_pads_with_zeros(self):
        s = embed(row_space(2), (2, 2))
        assert s.shape == (2, 2) and s.label == 'row'
        assert np.array_equal(s.basis[1], unit(2, 2, 0, 1))

    def test_embed_cannot_shrink(self):
        with pytest.raises(PresentationError):
            embed(column_space(3), (2, 1))

    def test_matrix_space_is_full(self):
        assert is_full_matrix_space(matrix_space(2, 3))
        assert is_full_matrix_space(row_space(3))
        assert not is_full_matrix_space(embed(row_space(3), (3, 3)))
        assert not is_full_matrix_space(OperatorSpacePresentation.oh_model(2))

    def test_matrix_space_coefficients_are_vec(self, rng):
        X = random_complex(rng, 2, 3)
        assert np.allclose(realize(Element(matrix_space(2, 3), X.reshape(-1))), X)


class TestJson:
    def test_load_space_and_tuple(self, tmp_path):
        space_file = tmp_path / 'space.json'
        space_file.write_text(json.dumps({
            'shape': [1, 2],
            'basis': [{'re': [[1, 0]], 'im': [[0, 0]]}, {'re': [[0, 1]], 'im': [[0, 0]]}],
            'label': 'row',
        }))
        space = load_space(space_file)
        assert space.same_as(row_space(2))

        tuple_file = tmp_path / 'tuple.json'
        tuple_file.write_text(json.dumps({'A': {'re': [[1, 0], [0, 1]], 'im': [[0, 0], [0, 0]]}}))
        assert np.allclose(load_tuple(tuple_file, space).A, np.eye(2))

    def test_malformed_json_reports_location(self, tmp_path):
        bad = tmp_path / 'bad.json'
        bad.write_text('{"shape": [1, 2],\n "basis": [}')
        with pytest.raises(InputFormatError, match=r'bad\.json:2:'):
            load_space(bad)

    def test_tuple_without_space(self, tmp_path):
        f = tmp_path / 't.json'
        f.write_text(json.dumps({'A': [[1, 0]]}))
        with pytest.raises(InputFormatError):
            load_tuple(f)

    def test_declared_shape_must_match(self, tmp_path):
        f = tmp_path / 's.json'
        f.write_text(json.dumps({'shape': [2, 2], 'basis': [[[1, 0]]]}))
        with pytest.raises(InputFormatError):
            load_space(f)
