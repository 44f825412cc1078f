import cvxpy as cp
import numpy as np
import pytest

from conftest import random_complex
from core import (
    OperatorSpacePresentation, PresentationError, UnsupportedOperation, DegenerateFormError,
    embed, matrix_space,
)
from models import row_space, column_space, oh_space
from summing import PhiFunctional, KMixture, tracial_atom
from factorize import (
    LinearMapCoeff, identity_map, transpose_map, cb_from_oh_exact, cb_upper_into_oh, forward_bound,
    lewis_search, distance_to_oh, dual_norm_upper, dual_factorization, trace_duality_check,
    project_onto, projection_residuals, lewis_projection, cb_lower_matrix_map, amplification_profile,
    pairwise_distance,
)


def oh_map(target, U):
    return LinearMapCoeff(oh_space(target.dim), target, U)


def into_oh(source, U):
    return LinearMapCoeff(source, oh_space(source.dim), U)


def random_subspace(rng, n, d):
    return OperatorSpacePresentation.from_matrices([random_complex(rng, d, d) for _ in range(n)])


class TestLinearMaps:
    def test_shape_is_checked(self):
        with pytest.raises(PresentationError):
            LinearMapCoeff(row_space(2), oh_space(2), np.eye(3))

    def test_inverse_and_composition(self, rng):
        U = random_complex(rng, 3, 3)
        m = into_oh(row_space(3), U)
        assert np.allclose(m.then(m.inverse()).U, np.eye(3))

    def test_singular_map_has_no_inverse(self):
        m = into_oh(row_space(2), np.array([[1, 0], [0, 0]]))
        assert not m.is_invertible()
        with pytest.raises(PresentationError):
            m.inverse()


class TestCbNorms:
    def test_identity_on_oh(self):
        assert abs(cb_from_oh_exact(identity_map(oh_space(4))) - 1.0) <= 1e-12

    @pytest.mark.parametrize('builder', [row_space, column_space])
    @pytest.mark.parametrize('n', [2, 3, 4])
    def test_oh_into_row_and_column(self, builder, n):
        assert abs(cb_from_oh_exact(oh_map(builder(n), np.eye(n))) - n ** 0.25) <= 1e-10

    def test_needs_oh_source(self):
        with pytest.raises(UnsupportedOperation):
            cb_from_oh_exact(identity_map(row_space(2)))

    @pytest.mark.parametrize('n', [2, 3, 4])
    def test_row_into_oh(self, n, quick_search):
        assert cb_upper_into_oh(into_oh(row_space(n), np.eye(n)), quick_search) <= 1.02 * n ** 0.25

    def test_oh_into_oh_is_exact(self):
        bound = forward_bound(LinearMapCoeff(oh_space(3), oh_space(3), np.eye(3)))
        assert bound.exact
        assert abs(bound.value - 1.0) <= 1e-12

    def test_zero_map(self):
        assert cb_upper_into_oh(into_oh(row_space(2), np.zeros((2, 2)))) == 0.0

    def test_forward_needs_oh_target(self):
        with pytest.raises(UnsupportedOperation):
            forward_bound(identity_map(row_space(2)))


class TestLewis:
    def test_oh_model_is_a_fixed_point(self, quick_search):
        result = lewis_search(oh_space(3), quick_search)
        assert result.converged
        assert np.allclose(result.map.U, np.eye(3), atol=1e-9)

    @pytest.mark.parametrize('n', [2, 3])
    def test_row_space_is_homogeneous(self, n, quick_search):
        result = lewis_search(row_space(n), quick_search)
        U = result.map.U
        assert np.allclose(U / U[0, 0], np.eye(n), atol=1e-6)
        assert abs(result.product - np.sqrt(n)) <= 1e-6

    def test_random_subspace_of_m2(self, rng, quick_search):
        result = lewis_search(random_subspace(rng, 2, 2), quick_search)
        assert 1 - 1e-9 <= result.product <= np.sqrt(2) * 1.05
        assert abs(abs(np.linalg.det(result.map.U)) - 1.0) <= 1e-8


class TestDistance:
    def test_oh_model(self, quick_search):
        report = distance_to_oh(oh_space(3), quick_search, candidates=1)
        assert abs(report.product - 1.0) <= 1e-9
        assert report.candidate == 'identity'

    @pytest.mark.parametrize('n', [2, 3, 4])
    def test_row_space(self, n, quick_search):
        report = distance_to_oh(row_space(n), quick_search, candidates=1)
        assert 1 - 1e-9 <= report.product <= np.sqrt(n) + 1e-6
        assert report.guarantee == pytest.approx(np.sqrt(n))
        assert abs(report.recompute_backward() - report.backward_exact) <= 1e-10

    def test_random_subspaces_of_m3(self, rng, distance_search):
        for _ in range(20):
            report = distance_to_oh(random_subspace(rng, 2, 3), distance_search, candidates=0)
            assert 1 - 1e-9 <= report.product <= np.sqrt(2) * 1.05
            assert report.within_band
            if report.certificate is not None:
                assert report.certificate.solver_status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE)

    def test_report_serializes_replay_data(self, quick_search):
        data = distance_to_oh(row_space(2), quick_search, candidates=1).to_dict()
        assert {'U', 'forward_upper', 'backward_exact', 'product', 'seed'} <= set(data)


class TestDualNorm:
    def test_identity_on_oh(self, quick_search):
        assert dual_norm_upper(identity_map(oh_space(3)), quick_search) <= np.sqrt(3) + 1e-9

    def test_homogeneity(self, quick_search):
        v = oh_map(row_space(2), np.eye(2))
        base = dual_norm_upper(v, quick_search)
        scaled = dual_norm_upper(oh_map(row_space(2), 3 * np.eye(2)), quick_search)
        assert abs(scaled - 3 * base) <= 1e-6 * scaled

    def test_dominates_cb_norm(self, quick_search):
        v = oh_map(row_space(2), np.eye(2))
        fac = dual_factorization(v, quick_search)
        assert fac.value >= cb_from_oh_exact(v) - 1e-9
        assert np.allclose(fac.A.U @ fac.B, v.U, atol=1e-9)

    @pytest.mark.parametrize('space', [row_space(2), oh_space(3)], ids=['row2', 'oh3'])
    def test_trace_duality(self, space, quick_search):
        report = trace_duality_check(space, quick_search)
        assert report.passed
        assert report.n <= report.product * 1.02


class TestProjections:
    def test_full_matrix_space_gives_identity(self):
        space = matrix_space(2)
        P = project_onto(space, KMixture.single(tracial_atom(space)))
        assert np.allclose(P.U, np.eye(4), atol=1e-12)

    def test_span_of_identity(self, quick_search):
        d = 3
        space = OperatorSpacePresentation.from_matrices([np.eye(d)])
        P = project_onto(space, KMixture.single(tracial_atom(space)))
        X = np.arange(d * d, dtype=float).reshape(d, d)
        assert abs((P.U @ X.reshape(-1))[0] - np.trace(X) / d) <= 1e-12
        assert cb_lower_matrix_map(P, 2, quick_search) <= 1 + 1e-6

    def test_degenerate_form(self):
        e11, e22 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
        space = OperatorSpacePresentation.from_matrices([e22])
        with pytest.raises(DegenerateFormError) as info:
            project_onto(space, KMixture.single(PhiFunctional(e11, e11)))
        assert info.value.nullity == 1

    def test_row_space_in_m2(self, search):
        report = lewis_projection(embed(row_space(2), (2, 2)), search, level=4)
        assert report.inclusion_residual <= 1e-12
        assert report.idempotence_residual <= 1e-12
        assert len(report.amplification) == 4
        assert max(report.amplification) <= np.sqrt(2) + 1e-6
        assert report.bound <= np.sqrt(2) + 1e-6

    def test_residuals_of_generic_subspace(self, rng, quick_search):
        space = random_subspace(rng, 2, 2)
        mixture = lewis_search(space, quick_search).mixture
        inclusion, idempotence = projection_residuals(project_onto(space, mixture))
        assert inclusion <= 1e-10 and idempotence <= 1e-10


class TestAmplification:
    def test_identity(self, quick_search):
        assert all(abs(v - 1.0) <= 1e-9 for v in amplification_profile(identity_map(matrix_space(2)), 3, quick_search))

    def test_transpose_is_detected(self, quick_search):
        assert cb_lower_matrix_map(transpose_map(2), 2, quick_search) >= 2 - 1e-3

    def test_monotone_in_level(self, rng, quick_search):
        space = matrix_space(2)
        P = LinearMapCoeff(space, space, random_complex(rng, 4, 4))
        values = amplification_profile(P, 4, quick_search)
        assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))

    def test_level_must_be_positive(self):
        with pytest.raises(PresentationError):
            amplification_profile(transpose_map(2), 0)


class TestPairwise:
    def test_row_versus_column(self, quick_search):
        assert pairwise_distance(row_space(2), column_space(2), quick_search, candidates=1).bound <= 2 + 1e-6

    def test_row_versus_oh(self, quick_search):
        for n in (2, 3):
            assert pairwise_distance(row_space(n), oh_space(n), quick_search, candidates=1).bound <= np.sqrt(n) + 1e-6

    def test_same_space(self, quick_search):
        report = pairwise_distance(row_space(2), row_space(2), quick_search, candidates=1)
        assert report.bound >= 1 - 1e-9 and report.identity_route == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(PresentationError):
            pairwise_distance(row_space(2), row_space(3))
