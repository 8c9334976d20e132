import numpy as np
import pytest

from twistred.calc.exterior import Form
from twistred.calc.fields import FormField, ScalarField
from twistred.core.exceptions import DimensionMismatchError, PreconditionError, TwistredValueError
from twistred.geometry.skew import SkewMatrix
from twistred.geometry.torus import MomentLevel, TorusAction, sample_level
from twistred.geometry.twist import (
    TwistForm,
    alpha_from_skew,
    alpha_norm_identity_residual,
    fundamental_form,
    gram_schmidt,
    hirzebruch_action,
    hirzebruch_parts,
    hirzebruch_twist,
    infer_charge,
    norm_identity_residual,
    orthogonality_residual,
    veronese_monomials,
    veronese_pullback,
    verify_subtori,
    verify_twist,
)

pytestmark = [pytest.mark.unit]


@pytest.fixture
def sphere():
    return MomentLevel(TorusAction.diagonal(4), [0.5])


def failures(entries):
    return [e for e in entries if e.kind == "check" and not e.passed]


class TestSkewTwist:
    def test_charge_is_two_i(self, rng):
        tf = alpha_from_skew(SkewMatrix.random_generic(rng, 4))
        np.testing.assert_allclose(tf.charge, [2j])
        assert tf.is_pure()

    def test_coefficients(self):
        M = SkewMatrix.from_entries(4, [[0, 1, 1, 0], [2, 3, 1, 0]])
        tf = alpha_from_skew(M)
        z = np.array([1.0, 2.0, 3.0, 4.0])
        # column j of M against z: (-z1, z0, -z3, z2)
        np.testing.assert_allclose(tf.coefficients(z)[0], [-2, 1, -4, 3])

    def test_verify_twist(self, rng, sphere):
        tf = alpha_from_skew(SkewMatrix.random_generic(rng, 4))
        pts = sample_level(sphere, 10, seed=0)
        entries = verify_twist(tf, sphere, pts, zero_search_starts=2)
        assert not failures(entries), failures(entries)
        names = [e.name for e in entries]
        assert "twist alpha: zero search min |alpha|^2" in names

    def test_wrong_declared_charge_fails(self, rng, sphere):
        tf = alpha_from_skew(SkewMatrix.random_generic(rng, 4)).with_charge([3j])
        pts = sample_level(sphere, 5, seed=0)
        failed = {e.name for e in failures(verify_twist(tf, sphere, pts, zero_search_starts=0))}
        assert failed == {"twist alpha: L_V alpha = k alpha (exact)", "twist alpha: L_V alpha - k alpha"}

    def test_non_horizontal_form_fails(self, sphere):
        N = 4
        field = FormField.from_form(Form.dz(0, N)).scale(ScalarField.z(N, 0))
        tf = TwistForm(field, [2j], TorusAction.diagonal(N), "euler")
        pts = sample_level(sphere, 5, seed=0)
        failed = {e.name for e in failures(verify_twist(tf, sphere, pts, zero_search_starts=0))}
        assert "twist euler: horizontal (exact)" in failed

    def test_norm_identity(self, rng):
        M = SkewMatrix.random_generic(rng, 6)
        pts = rng.standard_normal((50, 6)) + 1j * rng.standard_normal((50, 6))
        assert alpha_norm_identity_residual(M, pts) < 1e-12

    def test_action_dimension(self, rng):
        with pytest.raises(DimensionMismatchError):
            alpha_from_skew(SkewMatrix.random_generic(rng, 4), TorusAction.diagonal(6))

    def test_not_charge_definite(self):
        N = 2
        field = FormField.from_form(Form.dz(0, N)).scale(ScalarField.z(N, 0) + ScalarField.z(N, 0) * ScalarField.z(N, 1))
        assert infer_charge(field, TorusAction.diagonal(N)) is None


class TestFundamentalForms:
    def test_alpha_01(self):
        tf = fundamental_form(4, 0, 1)
        z = np.array([2.0, 3.0, 0.0, 0.0])
        np.testing.assert_allclose(tf.coefficients(z)[0], [-3, 2, 0, 0])

    @pytest.mark.parametrize("pair", [(0, 0), (0, 4), (-1, 2)])
    def test_invalid_pairs(self, pair):
        with pytest.raises(TwistredValueError):
            fundamental_form(4, *pair)


class TestGramSchmidt:
    def test_orthogonal_with_unchanged_charges(self, rng):
        a = alpha_from_skew(SkewMatrix.random_generic(rng, 4), name="a")
        b = alpha_from_skew(SkewMatrix.random_generic(rng, 4), name="b")
        betas = gram_schmidt([a, b])
        pts = rng.standard_normal((50, 4)) + 1j * rng.standard_normal((50, 4))
        assert orthogonality_residual(betas, pts) < 1e-10
        assert all(np.allclose(beta.charge, [2j]) for beta in betas)
        assert [beta.name for beta in betas] == ["beta0", "beta1"]

    def test_projection_norm_identity(self, rng):
        a = alpha_from_skew(SkewMatrix.random_generic(rng, 4))
        b = alpha_from_skew(SkewMatrix.random_generic(rng, 4))
        beta = gram_schmidt([a, b])[1]
        pts = rng.standard_normal((50, 4)) + 1j * rng.standard_normal((50, 4))
        assert norm_identity_residual(a, b, pts) < 1e-12
        rhs = b.norm_sq(pts) - np.abs(np.sum(a.coefficients(pts).conj() * b.coefficients(pts), axis=1)) ** 2 / a.norm_sq(pts)
        np.testing.assert_allclose(beta.norm_sq(pts), rhs, rtol=1e-9)

    def test_projection_keeps_charge(self, rng, sphere):
        a = alpha_from_skew(SkewMatrix.random_generic(rng, 4))
        b = alpha_from_skew(SkewMatrix.random_generic(rng, 4))
        beta = gram_schmidt([a, b])[1]
        assert not beta.field.is_holomorphic()
        entries = verify_twist(beta, sphere, sample_level(sphere, 5, seed=1), tol=1e-8, zero_search_starts=0)
        assert not failures(entries), failures(entries)

    def test_charge_mismatch(self, rng):
        a = alpha_from_skew(SkewMatrix.random_generic(rng, 4))
        with pytest.raises(PreconditionError):
            gram_schmidt([a, a.with_charge([4j])])

    def test_empty(self):
        assert gram_schmidt([]) == []


class TestHirzebruch:
    @pytest.mark.parametrize("n", [-1, 0, 1, 2])
    def test_charges(self, n):
        a1, a2 = hirzebruch_parts(n)
        action = hirzebruch_action(n)
        np.testing.assert_allclose(infer_charge(a1.field, action), [2j, 0, 0])
        np.testing.assert_allclose(infer_charge(a2.field, action), [1j * n, 2j, 0])
        tf = hirzebruch_twist(n)
        np.testing.assert_allclose(tf.charge, action.volume_charge() / 2)
        np.testing.assert_allclose(infer_charge(tf.field, action), tf.charge)

    def test_holomorphic_only_without_twisting(self):
        assert hirzebruch_twist(0).field.is_holomorphic()
        assert not hirzebruch_twist(1).field.is_holomorphic()

    @pytest.mark.parametrize("n", [-1, 2])
    def test_twist_axioms_on_level(self, n):
        tf = hirzebruch_twist(n)
        level = MomentLevel(tf.action, [5.0, 2.0, 1.0])
        pts = sample_level(level, 5, seed=0)
        entries = verify_twist(tf, level, pts, tol=1e-8, zero_search_starts=0)
        assert not failures(entries), failures(entries)
        assert not failures(verify_subtori(tf, level, pts, tol=1e-8))


class TestVeronese:
    def test_monomial_count(self):
        assert len(veronese_monomials(1)) == 4
        assert len(veronese_monomials(2)) == 36

    def test_degree_one_is_alpha(self, rng):
        M = SkewMatrix.random_generic(rng, 4)
        v = veronese_pullback(1, M)
        a = alpha_from_skew(M)
        assert (v.field - a.field).is_zero()
        np.testing.assert_allclose(v.charge, a.charge)

    def test_degree_two_charge(self, rng):
        M = SkewMatrix.random_generic(rng, 36)
        v = veronese_pullback(2, M)
        assert v.dim == 8
        np.testing.assert_allclose(v.charge, [4j])
        np.testing.assert_allclose(infer_charge(v.field, v.action), [4j])
        assert v.contract_generator([1.0]).is_zero()

    def test_dimension_mismatch(self, rng):
        with pytest.raises(DimensionMismatchError):
            veronese_pullback(2, SkewMatrix.random_generic(rng, 4))
