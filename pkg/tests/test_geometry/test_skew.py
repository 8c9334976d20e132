import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twistred.calc.exterior import Form
from twistred.core.exceptions import NotSkewError, SamplingError, SingularMatrixError
from twistred.geometry.skew import (
    SkewMatrix,
    collinearity_locus,
    pfaffian,
    pfaffian_expansion,
    pfaffian_ltl,
    pfaffian_square_residual,
    projected_line,
    singular_limit_probe,
)

pytestmark = [pytest.mark.unit]


def random_skew(rng, N):
    A = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    return SkewMatrix(A - A.T)


class TestConstruction:
    def test_from_entries(self):
        M = SkewMatrix.from_entries(4, [[0, 1, 1, 0], [2, 3, 1, 0]])
        assert M.M[1, 0] == -1
        assert M.to_entries() == [[0, 1, 1.0, 0.0], [2, 3, 1.0, 0.0]]

    @pytest.mark.parametrize(
        "N, entries",
        [
            (3, [[0, 1, 1, 0]]),
            (4, [[1, 0, 1, 0]]),
            (4, [[0, 4, 1, 0]]),
            (4, [[0, 1, 1, 0], [0, 1, 2, 0]]),
            (4, [[0, 1, 1]]),
        ],
    )
    def test_from_entries_rejects(self, N, entries):
        with pytest.raises(NotSkewError):
            SkewMatrix.from_entries(N, entries)

    def test_rejects_non_skew(self):
        with pytest.raises(NotSkewError):
            SkewMatrix(np.eye(2))
        with pytest.raises(NotSkewError):
            SkewMatrix(np.zeros((3, 3)))

    def test_random_generic(self, rng):
        M = SkewMatrix.random_generic(rng, 6)
        assert M.is_invertible()
        assert abs(M.pfaffian()) >= 0.1
        np.testing.assert_allclose((M.M * 8).real, np.rint((M.M * 8).real))

    def test_random_lt(self, rng):
        M = SkewMatrix.random_lt(rng, c=1.2j)
        deviation, mu = M.lt_deviation()
        assert deviation < 1e-12
        assert mu == pytest.approx(1.44)

    def test_min_norm_bound(self, rng):
        M = SkewMatrix.random_generic(rng, 4)
        z = rng.standard_normal((20, 4)) + 1j * rng.standard_normal((20, 4))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        norms = np.sum(np.abs(z @ M.M) ** 2, axis=1)
        assert np.min(norms) >= M.min_norm_bound() * (1 - 1e-12)


class TestPfaffian:
    def test_known_values(self):
        assert pfaffian(SkewMatrix.from_entries(4, [[0, 1, 1, 0], [2, 3, 1, 0]])) == pytest.approx(1)
        assert pfaffian(SkewMatrix.block_j([2, 3j, -1])) == pytest.approx(-6j)

    def test_four_by_four_formula(self, rng):
        M = random_skew(rng, 4).M
        expected = M[0, 1] * M[2, 3] - M[0, 2] * M[1, 3] + M[0, 3] * M[1, 2]
        assert pfaffian_expansion(M.tolist()) == pytest.approx(expected)

    @pytest.mark.parametrize("N", [2, 6, 8, 10])
    def test_square_is_determinant(self, rng, N):
        assert pfaffian_square_residual(random_skew(rng, N)) < 1e-10

    def test_methods_agree(self, rng):
        M = random_skew(rng, 8)
        assert pfaffian_ltl(M.M) == pytest.approx(pfaffian_expansion(M.M.tolist()), rel=1e-10)

    def test_singular(self):
        M = SkewMatrix.from_entries(4, [[0, 1, 1, 0]])
        assert pfaffian(M) == 0
        assert pfaffian_ltl(M.M) == 0
        assert not M.is_invertible()

    def test_odd_size(self):
        with pytest.raises(NotSkewError):
            pfaffian_expansion([[0]])


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_pfaffian_congruence(seed):
    # Pf(B^T A B) = det(B) Pf(A)
    rng = np.random.default_rng(seed)
    A = random_skew(rng, 6)
    B = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    C = SkewMatrix(B.T @ A.M @ B, tol=1e-12)
    lhs = pfaffian(C)
    rhs = np.linalg.det(B) * pfaffian(A)
    assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(rhs))


class TestCollinearity:
    def test_block_pair(self):
        M1 = SkewMatrix.block_j([1, 1, 1, 1])
        M2 = SkewMatrix.block_j([1, 2, 3, 4])
        report = collinearity_locus(M1, M2)
        assert report.is_generic(4)
        assert report.separation == pytest.approx(1)
        e0 = np.eye(8)[0]
        assert report.distance(e0) < 1e-12
        assert report.distance(np.eye(8)[0] + np.eye(8)[2]) == pytest.approx(np.sqrt(0.5))
        assert report.summary()["algebraic"] == [2, 2, 2, 2]

    def test_repeated_eigenvalue_is_not_generic(self):
        M1 = SkewMatrix.block_j([1, 1, 1, 1])
        M2 = SkewMatrix.block_j([1, 1, 3, 4])
        assert not collinearity_locus(M1, M2).is_generic(4)

    def test_singular_first_matrix(self):
        M1 = SkewMatrix.block_j([1, 0, 1, 1])
        with pytest.raises(SingularMatrixError):
            collinearity_locus(M1, SkewMatrix.block_j([1, 2, 3, 4]))


class TestSingularLimitProbe:
    def setup_method(self):
        self.M1 = SkewMatrix.block_j([1, 1, 1, 1])
        self.M2 = SkewMatrix.block_j([1, 2, 3, 4])

    def test_projected_line_is_a_projector(self):
        z = np.array([0.6, 0.8j, 0.3, 0.1, 0, 0.2, 0, 0])
        form = projected_line(self.M1, self.M2, z)
        # diagonal coefficients of beta ^ conj(beta) / |beta|^2 sum to 1
        trace = sum(form.coefficient((j,), (j,)) for j in range(8))
        assert trace == pytest.approx(1)

    def test_limits_depend_on_direction(self):
        result = singular_limit_probe(self.M1, self.M2, [0.6, 0.8j], [1e-2, 1e-3, 1e-4, 1e-5])
        along_2, along_3 = result.limits
        assert along_2.isclose(Form.dz(3, 8).wedge(Form.dzb(3, 8)), 1e-3)
        assert along_3.isclose(Form.dz(2, 8).wedge(Form.dzb(2, 8)), 1e-3)
        assert result.difference() == pytest.approx(2, abs=1e-3)
        assert result.paths[0].convergence() < 1e-3

    def test_equal_matrices_never_separate(self):
        with pytest.raises(SamplingError):
            singular_limit_probe(self.M1, self.M1, [0.6, 0.8j], [1e-2, 1e-3])

    def test_needs_two_dimensional_start(self):
        with pytest.raises(NotSkewError):
            singular_limit_probe(self.M1, self.M2, [1.0], [1e-2])
