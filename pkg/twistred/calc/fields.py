"""
Form fields with exact rational coefficients in (z, zb).

Coefficients are quotients of sparse polynomials over the Gaussian rationals in
the 2N formal variables z_0..z_{N-1}, zb_0..zb_{N-1}. Wirtinger derivatives are
ordinary partial derivatives in these variables. Numerators and denominators are
kept as computed; zero tests are exact because numerators are canonical.
"""

from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from sympy.polys.domains import QQ, QQ_I
from sympy.polys.polyerrors import DomainError
from sympy.polys.rings import PolyElement, ring

from twistred.calc.exterior import (
    ANTI,
    HOLO,
    BaseForm,
    BaseVector,
    Form,
    MultiIndex,
    TangentVector,
    merge_indices,
)
from twistred.core.exceptions import (
    DimensionMismatchError,
    PoleError,
    TwistredTypeError,
    TwistredValueError,
)
from twistred.core.logging import logger

Number = Union[int, float, complex]

# relative size of a denominator below which evaluation is treated as a pole
POLE_RTOL = 1e-14


@lru_cache(maxsize=None)
def field_ring(dim: int):
    """Polynomial ring QQ_I[z_0..z_{N-1}, zb_0..zb_{N-1}]."""
    names = [f"z{j}" for j in range(dim)] + [f"zb{j}" for j in range(dim)]
    return ring(",".join(names), QQ_I)[0]


def _rational(x: float):
    if isinstance(x, (int, np.integer)):
        return QQ(int(x))
    num, den = float(x).as_integer_ratio()
    return QQ(num, den)


def to_coeff(value: Any):
    """Exact Gaussian rational for a Python/numpy number."""
    if QQ_I.of_type(value):
        return value
    if isinstance(value, (bool, int, np.integer)):
        return QQ_I(int(value), 0)
    value = complex(value)
    if not (np.isfinite(value.real) and np.isfinite(value.imag)):
        raise TwistredValueError(f"Non-finite coefficient {value}")
    return QQ_I(_rational(value.real), _rational(value.imag))


def coeff_to_complex(c) -> complex:
    return complex(float(c.x), float(c.y))


def _poly_conj(p: PolyElement, dim: int) -> PolyElement:
    R = p.ring
    return R.from_dict(
        {m[dim:] + m[:dim]: QQ_I(c.x, -c.y) for m, c in p.items()}
    )


def _compile(p: PolyElement) -> Tuple[np.ndarray, np.ndarray]:
    if not p:
        return np.zeros((0, p.ring.ngens), dtype=np.int64), np.zeros(0, dtype=complex)
    monoms, coeffs = zip(*p.items())
    return (
        np.asarray(monoms, dtype=np.int64),
        np.asarray([coeff_to_complex(c) for c in coeffs], dtype=complex),
    )


def _eval_compiled(compiled, full: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Values and absolute term sums at points full = [z, conj z] of shape (P, 2N)."""
    exps, coeffs = compiled
    if len(coeffs) == 0:
        zeros = np.zeros(full.shape[0], dtype=complex)
        return zeros, zeros.real
    mons = np.prod(full[:, None, :] ** exps[None, :, :], axis=2)  # (P, T)
    return mons @ coeffs, np.abs(mons) @ np.abs(coeffs)


def as_points(points: Any, dim: int) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    if pts.shape[1] != dim:
        raise DimensionMismatchError(f"Points of dimension {pts.shape[1]}, expected {dim}")
    return pts


class ScalarField:
    """Rational function num/den of (z, zb)."""

    __slots__ = ("dim", "num", "den", "_compiled")

    def __init__(self, dim: int, num: PolyElement, den: Optional[PolyElement] = None):
        R = field_ring(dim)
        self.dim = dim
        self.num = num
        self.den = R.one if den is None else den
        if not self.den:
            raise TwistredValueError("Denominator is identically zero")
        self._compiled: Optional[Tuple[Any, Any]] = None

    # construction

    @classmethod
    def const(cls, dim: int, value: Any) -> "ScalarField":
        R = field_ring(dim)
        c = to_coeff(value)
        num = R.from_dict({(0,) * (2 * dim): c}) if c else R.zero
        return cls(dim, num)

    @classmethod
    def z(cls, dim: int, j: int) -> "ScalarField":
        return cls(dim, field_ring(dim).gens[j])

    @classmethod
    def zb(cls, dim: int, j: int) -> "ScalarField":
        return cls(dim, field_ring(dim).gens[dim + j])

    @classmethod
    def abs_sq(cls, dim: int, j: int) -> "ScalarField":
        gens = field_ring(dim).gens
        return cls(dim, gens[j] * gens[dim + j])

    @classmethod
    def sum_abs_sq(cls, dim: int, weights: Optional[Sequence[Any]] = None) -> "ScalarField":
        """sum_j w_j |z_j|^2"""
        gens = field_ring(dim).gens
        weights = [1] * dim if weights is None else list(weights)
        num = field_ring(dim).zero
        for j, w in enumerate(weights):
            if w:
                num += gens[j] * gens[dim + j] * to_coeff(w)
        return cls(dim, num)

    @property
    def ring(self):
        return field_ring(self.dim)

    def _lift(self, other: Any) -> "ScalarField":
        if isinstance(other, ScalarField):
            if other.dim != self.dim:
                raise DimensionMismatchError(
                    f"Dimension mismatch: {self.dim} vs {other.dim}"
                )
            return other
        if isinstance(other, (BaseForm, BaseVector)):
            raise TwistredTypeError(f"Cannot combine ScalarField with {type(other)}")
        return ScalarField.const(self.dim, other)

    # predicates

    def is_zero(self) -> bool:
        return not self.num

    def equals(self, other: Any) -> bool:
        return (self - self._lift(other)).is_zero()

    def is_polynomial(self) -> bool:
        return self.den == self.ring.one

    def is_holomorphic(self) -> bool:
        d = self.dim
        return all(not any(m[d:]) for p in (self.num, self.den) for m in p.keys())

    def is_real(self) -> bool:
        return self.equals(self.conj())

    # arithmetic

    def __add__(self, other: Any) -> "ScalarField":
        other = self._lift(other)
        if not other.num:
            return self
        if not self.num:
            return other
        if self.den == other.den:
            return ScalarField(self.dim, self.num + other.num, self.den)
        return ScalarField(
            self.dim, self.num * other.den + other.num * self.den, self.den * other.den
        )

    __radd__ = __add__

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.dim, -self.num, self.den)

    def __sub__(self, other: Any) -> "ScalarField":
        return self + (-self._lift(other))

    def __rsub__(self, other: Any) -> "ScalarField":
        return self._lift(other) - self

    def __mul__(self, other: Any) -> "ScalarField":
        if isinstance(other, (BaseForm, BaseVector)):
            return NotImplemented
        other = self._lift(other)
        if not self.num or not other.num:
            return ScalarField(self.dim, self.ring.zero)
        return ScalarField(self.dim, self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def inverse(self) -> "ScalarField":
        if not self.num:
            raise TwistredValueError("Division by the zero field")
        return ScalarField(self.dim, self.den, self.num)

    def __truediv__(self, other: Any) -> "ScalarField":
        return self * self._lift(other).inverse()

    def __rtruediv__(self, other: Any) -> "ScalarField":
        return self._lift(other) * self.inverse()

    def __pow__(self, k: int) -> "ScalarField":
        if k < 0:
            return self.inverse() ** (-k)
        return ScalarField(self.dim, self.num**k, self.den**k)

    def conj(self) -> "ScalarField":
        return ScalarField(
            self.dim, _poly_conj(self.num, self.dim), _poly_conj(self.den, self.dim)
        )

    def diff(self, kind: int, j: int) -> "ScalarField":
        """Wirtinger derivative d/dz_j (kind HOLO) or d/dzb_j (kind ANTI)."""
        gen = self.ring.gens[j if kind == HOLO else self.dim + j]
        dnum = self.num.diff(gen)
        dden = self.den.diff(gen)
        if not dden:
            return ScalarField(self.dim, dnum, self.den)
        return ScalarField(
            self.dim, dnum * self.den - self.num * dden, self.den * self.den
        )

    def diff_values(self, kind: int, j: int, points: Any) -> np.ndarray:
        """Values of diff(kind, j) at points, without expanding the squared denominator."""
        gen = self.ring.gens[j if kind == HOLO else self.dim + j]
        dnum = ScalarField(self.dim, self.num.diff(gen), self.den).evaluate(points)
        dden = self.den.diff(gen)
        if not dden:
            return dnum
        return dnum - self.evaluate(points) * ScalarField(self.dim, dden, self.den).evaluate(points)

    def simplify(self) -> "ScalarField":
        """Cancel the gcd of numerator and denominator when the ground domain allows it."""
        if not self.num:
            return ScalarField(self.dim, self.ring.zero)
        # gcd over QQ_I is not available in every sympy version
        try:
            num, den = self.num.cancel(self.den)
        except (DomainError, NotImplementedError) as e:
            logger.debug(f"gcd cancellation skipped: {e}")
            return self
        return ScalarField(self.dim, num, den)

    # evaluation

    def _get_compiled(self):
        if self._compiled is None:
            self._compiled = (_compile(self.num), _compile(self.den))
        return self._compiled

    def evaluate(self, points: Any) -> np.ndarray:
        """Values at a batch of points of shape (P, N); returns shape (P,)."""
        pts = as_points(points, self.dim)
        full = np.concatenate([pts, pts.conj()], axis=1)
        cnum, cden = self._get_compiled()
        num, _ = _eval_compiled(cnum, full)
        den, den_scale = _eval_compiled(cden, full)
        bad = np.abs(den) <= POLE_RTOL * np.maximum(den_scale, np.finfo(float).tiny)
        if np.any(bad):
            raise PoleError(f"Denominator vanishes at {pts[np.argmax(bad)]}")
        return num / den

    def __call__(self, point: Any) -> complex:
        return complex(self.evaluate(point)[0])

    def __repr__(self):
        if self.is_polynomial():
            return f"ScalarField({self.num.as_expr()})"
        return f"ScalarField(({self.num.as_expr()}) / ({self.den.as_expr()}))"


class VectorFieldExpr(BaseVector[ScalarField]):
    """sum_j holo_j d/dz_j + anti_j d/dzb_j with rational coefficients."""

    def __init__(self, holo: Sequence[Any], anti: Sequence[Any]):
        if len(holo) != len(anti):
            raise DimensionMismatchError("holo and anti parts must be equal length")
        self.dim = len(holo)
        self.holo = [_as_field(self.dim, c) for c in holo]
        self.anti = [_as_field(self.dim, c) for c in anti]

    def component(self, kind: int, j: int) -> ScalarField:
        return self.holo[j] if kind == HOLO else self.anti[j]

    def conj(self) -> "VectorFieldExpr":
        return VectorFieldExpr([c.conj() for c in self.anti], [c.conj() for c in self.holo])

    def is_real(self) -> bool:
        return all(a.equals(h.conj()) for h, a in zip(self.holo, self.anti))

    def __add__(self, other: "VectorFieldExpr") -> "VectorFieldExpr":
        return VectorFieldExpr(
            [a + b for a, b in zip(self.holo, other.holo)],
            [a + b for a, b in zip(self.anti, other.anti)],
        )

    def scale(self, factor: Any) -> "VectorFieldExpr":
        return VectorFieldExpr([c * factor for c in self.holo], [c * factor for c in self.anti])

    def apply(self, f: ScalarField) -> ScalarField:
        """Directional derivative V(f)."""
        out = ScalarField.const(self.dim, 0)
        for j in range(self.dim):
            if not self.holo[j].is_zero():
                out = out + self.holo[j] * f.diff(HOLO, j)
            if not self.anti[j].is_zero():
                out = out + self.anti[j] * f.diff(ANTI, j)
        return out

    def bracket(self, other: "VectorFieldExpr") -> "VectorFieldExpr":
        """Lie bracket [self, other]."""
        return VectorFieldExpr(
            [self.apply(w) - other.apply(v) for v, w in zip(self.holo, other.holo)],
            [self.apply(w) - other.apply(v) for v, w in zip(self.anti, other.anti)],
        )

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.holo + self.anti)

    def evaluate(self, point: Any) -> TangentVector:
        pts = as_points(point, self.dim)
        return TangentVector(
            [c.evaluate(pts)[0] for c in self.holo],
            [c.evaluate(pts)[0] for c in self.anti],
        )


def _as_field(dim: int, c: Any) -> ScalarField:
    return c if isinstance(c, ScalarField) else ScalarField.const(dim, c)


class FormField(BaseForm[ScalarField]):
    """Form whose coefficients are ScalarFields."""

    __slots__ = ()

    def _coerce(self, c: Any) -> ScalarField:
        return _as_field(self.dim, c)

    @staticmethod
    def _coeff_is_zero(c: ScalarField) -> bool:
        return c.is_zero()

    @staticmethod
    def _coeff_conj(c: ScalarField) -> ScalarField:
        return c.conj()

    def _make_vector(self, holo, anti) -> VectorFieldExpr:
        return VectorFieldExpr(holo, anti)

    @classmethod
    def from_form(cls, form: Form) -> "FormField":
        return cls(form.dim, dict(form.terms))

    def partial(self, kind: int, j: int) -> "FormField":
        return self._new({mi: c.diff(kind, j) for mi, c in self.terms.items()})

    def d(self) -> "FormField":
        """Exterior derivative sum_j dz_j ^ d/dz_j + dzb_j ^ d/dzb_j."""
        terms: Dict[MultiIndex, ScalarField] = {}
        for mi, c in self.terms.items():
            for kind, occupied in ((HOLO, mi.holo), (ANTI, mi.anti)):
                for j in range(self.dim):
                    if j in occupied:
                        continue
                    dc = c.diff(kind, j)
                    if dc.is_zero():
                        continue
                    one = MultiIndex((j,), ()) if kind == HOLO else MultiIndex((), (j,))
                    sign, out = merge_indices(one, mi)
                    val = dc if sign > 0 else -dc
                    terms[out] = terms[out] + val if out in terms else val
        return self._new(terms)

    def lie_derivative(self, v: VectorFieldExpr) -> "FormField":
        """Cartan formula L_V = i_V d + d i_V."""
        return self.d().contract(v) + self.contract(v).d()

    def simplify(self) -> "FormField":
        return self._new({mi: c.simplify() for mi, c in self.terms.items()})

    def is_holomorphic(self) -> bool:
        return all(c.is_holomorphic() for c in self.terms.values())

    def evaluate_many(self, points: Any) -> List[Form]:
        pts = as_points(points, self.dim)
        values = {mi: c.evaluate(pts) for mi, c in self.terms.items()}
        return [
            Form(self.dim, {mi: v[p] for mi, v in values.items()})
            for p in range(pts.shape[0])
        ]

    def evaluate(self, point: Any) -> Form:
        return self.evaluate_many(point)[0]


def d(f: FormField) -> FormField:
    return f.d()


def lie_derivative(v: VectorFieldExpr, f: FormField) -> FormField:
    return f.lie_derivative(v)


def finite_difference_check(f: FormField, points: Any, h: float = 1e-5) -> float:
    """Max relative deviation between symbolic Wirtinger derivatives of every
    coefficient and central differences in the real coordinates x_j, y_j,
    over one point or a batch of points."""
    if h <= 0:
        raise TwistredValueError("Step h must be positive")
    pts = as_points(points, f.dim)
    P, n = pts.shape
    # shifted[p, j, k]: point p moved by the k-th step in coordinate j
    steps = np.array([h, -h, 1j * h, -1j * h])
    moves = steps[None, :, None] * np.eye(n)[:, None, :]  # (n, 4, n)
    shifted = pts[:, None, None, :] + moves[None]
    flat = shifted.reshape(-1, n)
    worst = 0.0
    for c in f.terms.values():
        vals = c.evaluate(flat).reshape(P, n, 4)
        fx = (vals[..., 0] - vals[..., 1]) / (2 * h)
        fy = (vals[..., 2] - vals[..., 3]) / (2 * h)
        numeric = {HOLO: (fx - 1j * fy) / 2, ANTI: (fx + 1j * fy) / 2}
        for kind in (HOLO, ANTI):
            for j in range(n):
                exact = c.diff_values(kind, j, pts)
                dev = np.abs(exact - numeric[kind][:, j]) / np.maximum(np.abs(exact), 1.0)
                worst = max(worst, float(np.max(dev)))
    return worst


def coordinate_field(dim: int, kind: int, j: int) -> VectorFieldExpr:
    """d/dz_j or d/dzb_j as a constant vector field."""
    holo = [0] * dim
    anti = [0] * dim
    (holo if kind == HOLO else anti)[j] = 1
    return VectorFieldExpr(holo, anti)
