import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twistred.calc.exterior import (
    ANTI,
    HOLO,
    Form,
    MultiIndex,
    Omega0,
    TangentVector,
    all_indices,
    c_n,
    dual_contract,
    merge_indices,
    norm_sq,
    omega0,
)
from twistred.core.exceptions import (
    ArityMismatchError,
    DimensionMismatchError,
    GradeMismatchError,
    MixedTypeError,
    TwistredValueError,
)

pytestmark = [pytest.mark.unit]

DIM = 3


def random_form(rng, dim, degree, density=0.6):
    terms = {}
    for mi in all_indices(dim, degree):
        if rng.random() < density:
            terms[mi] = complex(rng.standard_normal(), rng.standard_normal())
    return Form(dim, terms)


def random_vector(rng, dim):
    return TangentVector(
        rng.standard_normal(dim) + 1j * rng.standard_normal(dim),
        rng.standard_normal(dim) + 1j * rng.standard_normal(dim),
    )


class TestMultiIndex:
    def test_checked_rejects_unsorted(self):
        with pytest.raises(TwistredValueError):
            MultiIndex.checked((1, 0), ())
        with pytest.raises(TwistredValueError):
            MultiIndex.checked((), (-1,))

    def test_merge_sign(self):
        # dzb0 ^ dz1 = -dz1 ^ dzb0
        sign, mi = merge_indices(MultiIndex((), (0,)), MultiIndex((1,), ()))
        assert sign == -1
        assert mi == MultiIndex((1,), (0,))

    def test_merge_repeated_slot(self):
        assert merge_indices(MultiIndex((0,), ()), MultiIndex((0,), ())) == (0, None)

    def test_conj_sign(self):
        assert MultiIndex((0,), (1,)).conj() == (-1, MultiIndex((1,), (0,)))
        assert MultiIndex((0, 1), ()).conj() == (1, MultiIndex((), (0, 1)))


class TestConstants:
    def test_c_n_values(self):
        assert c_n(1) == pytest.approx(-2j)
        assert c_n(2) == pytest.approx(2)
        assert c_n(3) == pytest.approx(-4j / 3)
        assert c_n(4) == pytest.approx(16 / 24)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_volume_normalization(self, n):
        Om = Omega0(n)
        lhs = Om.wedge(Om.conj())
        rhs = omega0(n).power(n).scale(c_n(n))
        assert lhs.isclose(rhs, 1e-12)

    def test_all_indices_count(self):
        # C(2N, k) monomials of degree k
        assert len(all_indices(3, 2)) == 15
        assert len(all_indices(4, 4)) == 70


class TestAlgebra:
    def test_dz_squares_to_zero(self):
        a = Form.dz(1, DIM)
        assert a.wedge(a).is_zero()

    def test_graded_commutativity(self, rng):
        a = random_form(rng, DIM, 1)
        b = random_form(rng, DIM, 2)
        c = random_form(rng, DIM, 1)
        assert a.wedge(b).isclose(b.wedge(a), 1e-12)
        assert a.wedge(c).isclose(-c.wedge(a), 1e-12)

    def test_wedge_is_associative(self, rng):
        a, b, c = (random_form(rng, DIM, k) for k in (1, 2, 1))
        assert a.wedge(b).wedge(c).isclose(a.wedge(b.wedge(c)), 1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            Form.dz(0, 2) + Form.dz(0, 3)
        with pytest.raises(DimensionMismatchError):
            Form(2, {MultiIndex((2,), ()): 1})

    def test_mixed_grade(self):
        f = Form.dz(0, 2) + Form.constant(2, 1)
        assert not f.is_homogeneous
        assert Form.dz(0, 2).is_homogeneous
        assert f.degree_component(1).isclose(Form.dz(0, 2), 0)
        assert f.degree_component(0).isclose(Form.constant(2, 1), 0)
        with pytest.raises(GradeMismatchError):
            _ = f.grade

    def test_conj_is_involution(self, rng):
        a = random_form(rng, DIM, 2)
        assert a.conj().conj().isclose(a, 0)

    def test_conj_of_omega0_is_real(self):
        w = omega0(4)
        assert w.conj().isclose(w, 1e-15)

    def test_type_component(self):
        f = Form.dz(0, 2).wedge(Form.dzb(1, 2)) + Form.dz(0, 2).wedge(Form.dz(1, 2))
        assert f.type_component(1, 1).bidegrees == {(1, 1)}
        assert f.type_component(2, 0).bidegrees == {(2, 0)}


class TestContraction:
    def test_contract_basis(self):
        v = TangentVector.basis(HOLO, 1, DIM)
        f = Form.dz(0, DIM).wedge(Form.dz(1, DIM))
        assert f.contract(v).isclose(-Form.dz(0, DIM), 0)

    def test_antiderivation(self, rng):
        a = random_form(rng, DIM, 1)
        b = random_form(rng, DIM, 2)
        v = random_vector(rng, DIM)
        lhs = a.wedge(b).contract(v)
        rhs = a.contract(v).wedge(b) - a.wedge(b.contract(v))
        assert lhs.isclose(rhs, 1e-12)

    def test_contract_twice_vanishes(self, rng):
        a = random_form(rng, DIM, 3)
        v = random_vector(rng, DIM)
        assert a.contract(v).contract(v).max_abs() < 1e-12

    def test_metric_dual_swaps_types(self):
        v = Form.dz(2, DIM).scale(3).metric_dual()
        assert v.anti[2] == 3
        assert not np.any(v.holo)

    def test_metric_dual_rejects_mixed(self):
        with pytest.raises(MixedTypeError):
            (Form.dz(0, 2) + Form.dzb(1, 2)).metric_dual()

    def test_norm_sq_of_one_form(self):
        a = Form.from_one_form([1, 2j, 0])
        assert norm_sq(a) == pytest.approx(5)

    def test_dual_contract_pairs_with_conjugate(self):
        # <dz0, dz0> through contraction of conj(a) with the dual of a
        a = Form.dz(0, 2)
        assert dual_contract(a.conj(), a).scalar() == pytest.approx(1)


class TestEvaluation:
    def test_eval_on_matches_determinant(self):
        f = Form.dz(0, 2).wedge(Form.dzb(1, 2))
        u = TangentVector([1, 2], [3, 4])
        v = TangentVector([5, 6], [7, 8])
        # dz0(u) dzb1(v) - dz0(v) dzb1(u)
        assert f.eval_on([u, v]) == pytest.approx(1 * 8 - 5 * 4)

    def test_eval_on_arity(self):
        with pytest.raises(ArityMismatchError):
            Form.dz(0, 2).eval_on([TangentVector([1, 0]), TangentVector([0, 1])])

    def test_real_vector_round_trip(self):
        v = TangentVector.from_real([1.0, -2.0], [0.5, 3.0])
        assert v.is_real()
        np.testing.assert_allclose(v.to_real(), [1.0, -2.0, 0.5, 3.0])

    def test_omega0_on_real_frame(self):
        # omega0(d/dx, d/dy) = 1
        x = TangentVector.from_real([1.0], [0.0])
        y = TangentVector.from_real([0.0], [1.0])
        assert omega0(1).eval_on([x, y]) == pytest.approx(1)

    def test_form_values_on_real_vectors_of_real_form(self, rng):
        w = omega0(DIM)
        u = TangentVector.from_real(rng.standard_normal(DIM), rng.standard_normal(DIM))
        v = TangentVector.from_real(rng.standard_normal(DIM), rng.standard_normal(DIM))
        assert abs(w.eval_on([u, v]).imag) < 1e-12


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), min_size=3, max_size=3),
    st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), min_size=3, max_size=3),
)
def test_one_form_wedge_is_antisymmetric(a, b):
    fa = Form.from_one_form(a, [0, 0, 0])
    fb = Form.from_one_form([0, 0, 0], b)
    assert fa.wedge(fb).isclose(-fb.wedge(fa), 1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2), st.integers(min_value=0, max_value=2))
def test_contraction_is_dual_pairing(kind, j):
    v = TangentVector.basis(kind, j, 3)
    for k in range(3):
        assert Form.dz(k, 3).contract(v).scalar() == (1 if (kind == HOLO and k == j) else 0)
        assert Form.dzb(k, 3).contract(v).scalar() == (1 if (kind == ANTI and k == j) else 0)
