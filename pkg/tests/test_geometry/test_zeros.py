import numpy as np
import pytest

from twistred.calc.fields import ScalarField
from twistred.core.exceptions import PreconditionError, ResourceGuardError
from twistred.geometry.skew import SkewMatrix
from twistred.geometry.torus import MomentLevel, TorusAction
from twistred.geometry.twist import alpha_from_skew, fundamental_form
from twistred.geometry.zeros import (
    common_root_search,
    expected_horizontal_dim,
    exponents,
    horizontal_space_dim,
    koszul_tuple,
    level_zero_search,
)

pytestmark = [pytest.mark.unit]


def holo_parts(tf):
    return tf.field.one_form_parts()[0]


class TestHorizontalSpace:
    def test_exponents(self):
        assert len(exponents(3, 2)) == 6
        assert (2, 0, 0) in exponents(3, 2)

    @pytest.mark.parametrize("N", [2, 4, 6, 8])
    def test_charge_two_tuples_are_skew_matrices(self, N):
        assert horizontal_space_dim(N, 2) == N * (N - 1) // 2

    def test_degree_two_coefficients(self):
        assert horizontal_space_dim(4, 3) == 20
        assert expected_horizontal_dim(4, 3) == 20

    @pytest.mark.parametrize("N, k", [(3, 3), (3, 4), (5, 3)])
    def test_multiplication_is_onto(self, N, k):
        assert horizontal_space_dim(N, k) == expected_horizontal_dim(N, k)

    def test_preconditions(self):
        with pytest.raises(PreconditionError):
            horizontal_space_dim(4, 1)
        with pytest.raises(PreconditionError):
            horizontal_space_dim(1, 2)

    def test_resource_guard(self):
        with pytest.raises(ResourceGuardError):
            horizontal_space_dim(20, 5)


class TestCommonRoots:
    def test_koszul_tuple_is_horizontal(self, rng):
        Ps = koszul_tuple(rng, 4, degree=2)
        euler = sum((ScalarField.z(4, j) * p for j, p in enumerate(Ps)), ScalarField.const(4, 0))
        assert euler.is_zero()
        assert all(p.is_holomorphic() for p in Ps)

    def test_invertible_skew_has_no_root(self, rng):
        M = SkewMatrix.random_generic(rng, 4)
        found = common_root_search(holo_parts(alpha_from_skew(M)), starts=4, seed=1)
        assert found.value >= M.min_norm_bound() - 1e-8
        assert np.linalg.norm(found.point) == pytest.approx(1)

    def test_singular_skew_has_a_root(self):
        M = SkewMatrix.from_entries(4, [[0, 1, 1, 0]])
        found = common_root_search(holo_parts(alpha_from_skew(M)), starts=4, seed=1)
        assert found.value < 1e-12
        # the kernel of M^T is spanned by e2, e3
        assert np.linalg.norm(found.point[:2]) < 1e-6

    def test_searches_are_reproducible(self):
        Ps = holo_parts(fundamental_form(4, 0, 1))
        a = common_root_search(Ps, starts=3, seed=7)
        b = common_root_search(Ps, starts=3, seed=7, threads=2)
        assert a.value == b.value
        np.testing.assert_array_equal(a.point, b.point)

    def test_rejects_non_horizontal(self):
        # P_j = z_j q(z) breaks sum_j z_j P_j = 0
        q = ScalarField.z(3, 0) + ScalarField.z(3, 1)
        with pytest.raises(PreconditionError):
            common_root_search([ScalarField.z(3, j) * q for j in range(3)], starts=1)

    def test_rejects_inhomogeneous(self):
        z = [ScalarField.z(2, j) for j in range(2)]
        with pytest.raises(PreconditionError):
            common_root_search([-z[1] * z[1], z[0]], starts=1)

    def test_rejects_wrong_count(self):
        with pytest.raises(PreconditionError):
            common_root_search([ScalarField.z(3, 0)], starts=1)


class TestLevelZeroSearch:
    def test_fundamental_form_vanishes_on_the_sphere(self):
        # alpha_01 = z0 dz1 - z1 dz0 vanishes where z0 = z1 = 0
        level = MomentLevel(TorusAction.diagonal(4), [0.5])
        tf = fundamental_form(4, 0, 1)
        found = level_zero_search(tf.norm_sq_field(), level, starts=4, seed=0)
        assert found.value < 1e-6
        assert level.residual(found.point) < 1e-8

    def test_invertible_skew_stays_positive(self, rng):
        level = MomentLevel(TorusAction.diagonal(4), [0.5])
        M = SkewMatrix.random_generic(rng, 4)
        found = level_zero_search(alpha_from_skew(M).norm_sq_field(), level, starts=2, seed=0)
        assert found.value >= M.min_norm_bound() * (1 - 1e-6)
