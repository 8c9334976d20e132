"""Whole families of matrices and random fields at the sizes the maths is quoted for."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twistred.calc.exterior import Omega0, all_indices
from twistred.calc.fields import FormField, ScalarField, VectorFieldExpr, finite_difference_check
from twistred.geometry.reduction import AmbientStructure, reduce, verify_basic, verify_su_equations
from twistred.geometry.skew import SkewMatrix
from twistred.geometry.torsion import exact_pfaffian, lt_check, unit_sphere, verify_torsion_equations
from twistred.geometry.torus import MomentLevel, TorusAction, sample_level
from twistred.geometry.twist import alpha_from_skew

pytestmark = [pytest.mark.slow]

DIM = 3
LT_IFF = "lt: M* M = mu I iff W3 = W4 = W5 = 0"


def failures(entries):
    return [e for e in entries if e.kind == "check" and not e.passed]


@pytest.fixture(scope="module")
def sphere():
    return unit_sphere()


def random_scalar(rng, dim=DIM, rational=False):
    f = ScalarField.const(dim, int(rng.integers(-3, 4)))
    for _ in range(3):
        j, k = rng.integers(0, dim, 2)
        c = complex(int(rng.integers(-3, 4)), int(rng.integers(-3, 4)))
        f = f + ScalarField.z(dim, int(j)) * ScalarField.zb(dim, int(k)) * c
    if rational:
        f = f / (1 + ScalarField.sum_abs_sq(dim))
    return f


def random_field(rng, degree, dim=DIM):
    rational = bool(rng.random() < 0.3)
    terms = {
        mi: random_scalar(rng, dim, rational)
        for mi in all_indices(dim, degree)
        if rng.random() < 0.5
    }
    return FormField(dim, terms)


def random_vector_field(rng, dim=DIM):
    return VectorFieldExpr(
        [random_scalar(rng, dim) for _ in range(dim)],
        [random_scalar(rng, dim) for _ in range(dim)],
    )


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=0, max_value=2))
def test_d_squared_vanishes(seed, degree):
    f = random_field(np.random.default_rng(seed), degree)
    assert f.d().d().is_zero()


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=1, max_value=2))
def test_contraction_is_an_antiderivation(seed, degree):
    rng = np.random.default_rng(seed)
    a = random_field(rng, degree)
    b = random_field(rng, 1)
    v = random_vector_field(rng)
    lhs = a.wedge(b).contract(v)
    rhs = a.contract(v).wedge(b) + a.wedge(b.contract(v)).scale((-1) ** degree)
    assert (lhs - rhs).is_zero()


@pytest.mark.parametrize("seed", range(10))
def test_finite_difference_on_the_sphere(seed):
    tf = alpha_from_skew(SkewMatrix.random_generic(np.random.default_rng(seed), 4))
    f = tf.field.wedge(tf.field.conj()).scale(tf.norm_sq_field().inverse())
    z = sample_level(unit_sphere(), 1, seed=seed, stream="finite-difference")[0]
    assert finite_difference_check(f, z) < 1e-6


@pytest.mark.parametrize("seed", range(20))
def test_pfaffian_cancels_exactly(seed):
    M = SkewMatrix.random_generic(np.random.default_rng(seed), 4)
    dalpha = alpha_from_skew(M).field.d()
    square = dalpha.wedge(dalpha) - Omega0(4, FormField).scale(8 * exact_pfaffian(M))
    assert square.is_zero()


@pytest.mark.parametrize("seed", range(20))
def test_cp3_family(seed):
    action = TorusAction.diagonal(4)
    M = SkewMatrix.random_generic(np.random.default_rng(100 + seed), 4)
    rs = reduce(AmbientStructure(4), action, [alpha_from_skew(M, action)], normalize=True)
    level = MomentLevel(action, [0.5])
    entries = verify_su_equations(rs, level, points=50, trials=5, tol=1e-10, seed=seed)
    entries += verify_basic(rs, level, points=50, trials=5, tol=1e-10, seed=seed)
    assert not failures(entries), failures(entries)


@pytest.mark.parametrize("seed", range(10))
def test_torsion_equations(sphere, seed):
    M = SkewMatrix.random_generic(np.random.default_rng(200 + seed), 4)
    entries = verify_torsion_equations(M, sphere, points=3, trials=5, tol=1e-8, seed=seed)
    assert not failures(entries), failures(entries)


@pytest.mark.parametrize("kind", ["lt", "generic"])
@pytest.mark.parametrize("seed", range(10))
def test_lt_equivalence(sphere, kind, seed):
    rng = np.random.default_rng(300 + seed)
    M = SkewMatrix.random_lt(rng) if kind == "lt" else SkewMatrix.random_generic(rng, 4)
    entries = lt_check(M, sphere, points=3, trials=5, tol=1e-8, seed=seed)
    assert not failures(entries), failures(entries)
    iff = next(e for e in entries if e.name == LT_IFF)
    assert iff.detail == {"matrix_lt": kind == "lt", "classes_lt": kind == "lt"}
