"""
Pointwise complex exterior algebra on C^N.

Basis monomials are dz_I ^ dzb_J with I, J strictly increasing (0-based). The
canonical order puts every dz before every dzb; permutation signs are absorbed
into the coefficients. The Hermitian metric is the flat one with |dz_j| = 1.
"""

import math
from bisect import bisect_right
from functools import lru_cache
from itertools import combinations
from typing import (
    Any,
    Dict,
    Generic,
    Iterable,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Set,
    Tuple,
    TypeVar,
    Union,
)

import numpy as np

from twistred.core.exceptions import (
    ArityMismatchError,
    DimensionMismatchError,
    GradeMismatchError,
    MixedTypeError,
    TwistredValueError,
)

HOLO = 0
ANTI = 1

C = TypeVar("C")
F = TypeVar("F", bound="BaseForm")


class MultiIndex(NamedTuple):
    holo: Tuple[int, ...]
    anti: Tuple[int, ...]

    @classmethod
    def checked(cls, holo: Iterable[int], anti: Iterable[int]) -> "MultiIndex":
        holo, anti = tuple(holo), tuple(anti)
        for seq in (holo, anti):
            if any(j < 0 for j in seq):
                raise TwistredValueError(f"Negative index in {seq}")
            if any(b <= a for a, b in zip(seq, seq[1:])):
                raise TwistredValueError(
                    f"Indices must be strictly increasing, got {seq}"
                )
        return cls(holo, anti)

    @property
    def bidegree(self) -> Tuple[int, int]:
        return len(self.holo), len(self.anti)

    @property
    def degree(self) -> int:
        return len(self.holo) + len(self.anti)

    def keys(self) -> List[Tuple[int, int]]:
        """Flat (kind, index) slots in canonical order."""
        return [(HOLO, j) for j in self.holo] + [(ANTI, j) for j in self.anti]

    def max_index(self) -> int:
        return max(self.holo + self.anti, default=-1)

    def conj(self) -> Tuple[int, "MultiIndex"]:
        """Index and sign of the conjugate monomial."""
        sign = -1 if (len(self.holo) * len(self.anti)) % 2 else 1
        return sign, MultiIndex(self.anti, self.holo)


EMPTY = MultiIndex((), ())


def _count_greater(xs: Sequence[int], ys: Sequence[int]) -> int:
    # pairs (x, y) with x > y, both sorted
    return sum(len(xs) - bisect_right(xs, y) for y in ys)


@lru_cache(maxsize=1 << 18)
def merge_indices(a: MultiIndex, b: MultiIndex) -> Tuple[int, Optional[MultiIndex]]:
    """Sign and index of dz_a ^ dz_b, or (0, None) if they share a slot."""
    if set(a.holo) & set(b.holo) or set(a.anti) & set(b.anti):
        return 0, None
    inversions = (
        len(a.anti) * len(b.holo)
        + _count_greater(a.holo, b.holo)
        + _count_greater(a.anti, b.anti)
    )
    merged = MultiIndex(tuple(sorted(a.holo + b.holo)), tuple(sorted(a.anti + b.anti)))
    return (-1 if inversions % 2 else 1), merged


def c_n(n: int) -> complex:
    """2^n / n! * (-i)^(n^2)"""
    phase = [1, -1j, -1, 1j][(n * n) % 4]
    return complex(2**n / math.factorial(n) * phase)


class BaseVector(Generic[C]):
    """Common surface of pointwise tangent vectors and vector field expressions."""

    dim: int

    def component(self, kind: int, j: int) -> C:
        raise NotImplementedError


class BaseForm(Generic[C]):
    """Sparse map MultiIndex -> coefficient with exterior algebra operations.

    Subclasses fix the coefficient type through the three ``_coeff_*`` hooks.
    """

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: Optional[Dict[MultiIndex, C]] = None):
        self.dim = int(dim)
        self.terms: Dict[MultiIndex, C] = {}
        for mi, c in (terms or {}).items():
            if mi.max_index() >= self.dim:
                raise DimensionMismatchError(
                    f"Index {mi} out of range for dimension {self.dim}"
                )
            c = self._coerce(c)
            if not self._coeff_is_zero(c):
                self.terms[mi] = c

    # coefficient hooks

    def _coerce(self, c: Any) -> Any:
        return c

    @staticmethod
    def _coeff_is_zero(c: Any) -> bool:
        raise NotImplementedError

    @staticmethod
    def _coeff_conj(c: Any) -> Any:
        raise NotImplementedError

    def _new(self: F, terms: Dict[MultiIndex, Any]) -> F:
        return type(self)(self.dim, terms)

    # construction

    @classmethod
    def zero(cls, dim: int):
        return cls(dim, {})

    @classmethod
    def constant(cls, dim: int, value: Any):
        return cls(dim, {EMPTY: value})

    @classmethod
    def dz(cls, j: int, dim: int):
        return cls(dim, {MultiIndex((j,), ()): 1})

    @classmethod
    def dzb(cls, j: int, dim: int):
        return cls(dim, {MultiIndex((), (j,)): 1})

    @classmethod
    def from_one_form(cls, holo: Sequence[Any], anti: Optional[Sequence[Any]] = None):
        """sum_j holo[j] dz_j + anti[j] dzb_j"""
        dim = len(holo)
        terms: Dict[MultiIndex, Any] = {}
        for j, c in enumerate(holo):
            terms[MultiIndex((j,), ())] = c
        for j, c in enumerate(() if anti is None else anti):
            terms[MultiIndex((), (j,))] = c
        return cls(dim, terms)

    # structure

    def _check_dim(self, other: "BaseForm"):
        if self.dim != other.dim:
            raise DimensionMismatchError(
                f"Dimension mismatch: {self.dim} vs {other.dim}"
            )

    @property
    def degrees(self) -> Set[int]:
        return {mi.degree for mi in self.terms}

    @property
    def bidegrees(self) -> Set[Tuple[int, int]]:
        return {mi.bidegree for mi in self.terms}

    @property
    def is_homogeneous(self) -> bool:
        return len(self.degrees) <= 1

    @property
    def grade(self) -> Optional[int]:
        """Common degree of all terms, None for the zero form."""
        degrees = self.degrees
        if not degrees:
            return None
        if len(degrees) > 1:
            raise GradeMismatchError(f"Mixed-grade form with degrees {sorted(degrees)}")
        return next(iter(degrees))

    def is_zero(self) -> bool:
        return not self.terms

    def scalar(self) -> Any:
        """Degree-0 coefficient."""
        return self.terms.get(EMPTY, self._coerce(0))

    def coefficient(self, holo: Sequence[int], anti: Sequence[int] = ()) -> Any:
        return self.terms.get(MultiIndex(tuple(holo), tuple(anti)), self._coerce(0))

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms.items())

    # linear structure

    def __add__(self: F, other: F) -> F:
        self._check_dim(other)
        terms = dict(self.terms)
        for mi, c in other.terms.items():
            terms[mi] = terms[mi] + c if mi in terms else c
        return self._new(terms)

    def __neg__(self: F) -> F:
        return self._new({mi: -c for mi, c in self.terms.items()})

    def __sub__(self: F, other: F) -> F:
        return self + (-other)

    def scale(self: F, factor: Any) -> F:
        return self._new({mi: c * factor for mi, c in self.terms.items()})

    def __mul__(self: F, factor: Any) -> F:
        if isinstance(factor, BaseForm):
            return self.wedge(factor)
        return self.scale(factor)

    def __rmul__(self: F, factor: Any) -> F:
        return self.scale(factor)

    # algebra

    def wedge(self: F, other: F) -> F:
        self._check_dim(other)
        terms: Dict[MultiIndex, Any] = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                sign, mi = merge_indices(ma, mb)
                if not sign:
                    continue
                c = ca * cb if sign > 0 else -(ca * cb)
                terms[mi] = terms[mi] + c if mi in terms else c
        return self._new(terms)

    def power(self: F, k: int) -> F:
        out = self.constant(self.dim, 1)
        for _ in range(k):
            out = out.wedge(self)
        return out

    def conj(self: F) -> F:
        terms = {}
        for mi, c in self.terms.items():
            sign, cmi = mi.conj()
            c = self._coeff_conj(c)
            terms[cmi] = c if sign > 0 else -c
        return self._new(terms)

    def type_component(self: F, p: int, q: int) -> F:
        return self._new({mi: c for mi, c in self.terms.items() if mi.bidegree == (p, q)})

    def degree_component(self: F, k: int) -> F:
        return self._new({mi: c for mi, c in self.terms.items() if mi.degree == k})

    def contract(self: F, v: BaseVector) -> F:
        """Interior product with a vector; anti-derivation of degree -1."""
        if v.dim != self.dim:
            raise DimensionMismatchError(f"Dimension mismatch: {v.dim} vs {self.dim}")
        terms: Dict[MultiIndex, Any] = {}
        for mi, c in self.terms.items():
            keys = mi.keys()
            for p, (kind, j) in enumerate(keys):
                vc = v.component(kind, j)
                if self._coeff_is_zero(self._coerce(vc)):
                    continue
                rest = keys[:p] + keys[p + 1 :]
                out = MultiIndex(
                    tuple(i for k, i in rest if k == HOLO),
                    tuple(i for k, i in rest if k == ANTI),
                )
                val = c * vc if p % 2 == 0 else -(c * vc)
                terms[out] = terms[out] + val if out in terms else val
        return self._new(terms)

    def one_form_parts(self) -> Tuple[List[Any], List[Any]]:
        """Coefficient lists (holo, anti) of a 1-form."""
        if self.degrees - {1}:
            raise GradeMismatchError("Expected a 1-form")
        zero = self._coerce(0)
        holo = [zero] * self.dim
        anti = [zero] * self.dim
        for mi, c in self.terms.items():
            if mi.holo:
                holo[mi.holo[0]] = c
            else:
                anti[mi.anti[0]] = c
        return holo, anti

    def _make_vector(self, holo: List[Any], anti: List[Any]) -> BaseVector:
        raise NotImplementedError

    def metric_dual(self) -> BaseVector:
        """sum a_j dz_j -> sum a_j d/dzb_j and sum b_j dzb_j -> sum b_j d/dz_j."""
        holo, anti = self.one_form_parts()
        has_holo = any(mi.holo for mi in self.terms)
        has_anti = any(mi.anti for mi in self.terms)
        if has_holo and has_anti:
            raise MixedTypeError("metric_dual needs a pure (1,0) or (0,1) form")
        return self._make_vector(anti, holo)

    def __repr__(self):
        if not self.terms:
            return f"{type(self).__name__}(dim={self.dim}, 0)"
        parts = []
        for mi, c in sorted(self.terms.items()):
            mono = "^".join(
                [f"dz{j}" for j in mi.holo] + [f"dzb{j}" for j in mi.anti]
            )
            parts.append(f"({c})*{mono}" if mono else f"({c})")
        return f"{type(self).__name__}(dim={self.dim}, " + " + ".join(parts) + ")"


class TangentVector(BaseVector[complex]):
    """Pointwise vector sum holo_j d/dz_j + anti_j d/dzb_j."""

    __slots__ = ("holo", "anti", "dim")

    def __init__(self, holo: Sequence[complex], anti: Optional[Sequence[complex]] = None):
        self.holo = np.asarray(holo, dtype=complex).copy()
        self.anti = (
            np.zeros_like(self.holo)
            if anti is None
            else np.asarray(anti, dtype=complex).copy()
        )
        if self.holo.shape != self.anti.shape or self.holo.ndim != 1:
            raise DimensionMismatchError("holo and anti parts must be equal length")
        self.dim = len(self.holo)

    @classmethod
    def basis(cls, kind: int, j: int, dim: int) -> "TangentVector":
        e = np.zeros(dim, dtype=complex)
        e[j] = 1
        return cls(e, None) if kind == HOLO else cls(np.zeros(dim, dtype=complex), e)

    @classmethod
    def from_real(cls, a: Sequence[float], b: Sequence[float]) -> "TangentVector":
        """Real vector sum a_j d/dx_j + b_j d/dy_j."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return cls(a + 1j * b, a - 1j * b)

    def to_real(self) -> np.ndarray:
        """(a, b) coordinates of the real part, length 2N."""
        return np.concatenate([self.holo.real, self.holo.imag])

    def component(self, kind: int, j: int) -> complex:
        return complex(self.holo[j] if kind == HOLO else self.anti[j])

    def conj(self) -> "TangentVector":
        return TangentVector(np.conj(self.anti), np.conj(self.holo))

    def is_real(self, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self.anti - np.conj(self.holo)), initial=0.0) <= tol)

    def __add__(self, other: "TangentVector") -> "TangentVector":
        if other.dim != self.dim:
            raise DimensionMismatchError(f"Dimension mismatch: {self.dim} vs {other.dim}")
        return TangentVector(self.holo + other.holo, self.anti + other.anti)

    def __sub__(self, other: "TangentVector") -> "TangentVector":
        return self + other * -1

    def __mul__(self, factor: complex) -> "TangentVector":
        return TangentVector(self.holo * factor, self.anti * factor)

    __rmul__ = __mul__

    def __repr__(self):
        return f"TangentVector(holo={self.holo}, anti={self.anti})"


class Form(BaseForm[complex]):
    """Pointwise form with complex coefficients."""

    __slots__ = ()

    @staticmethod
    def _coerce(c: Any) -> complex:
        return complex(c)

    @staticmethod
    def _coeff_is_zero(c: complex) -> bool:
        return c == 0

    @staticmethod
    def _coeff_conj(c: complex) -> complex:
        return c.conjugate()

    def _make_vector(self, holo, anti) -> TangentVector:
        return TangentVector(holo, anti)

    def norm(self) -> float:
        """l1 norm of the coefficient vector."""
        return float(sum(abs(c) for c in self.terms.values()))

    def max_abs(self) -> float:
        return float(max((abs(c) for c in self.terms.values()), default=0.0))

    def eval_on(self, vs: Sequence[TangentVector]) -> complex:
        """Antisymmetric multilinear evaluation on len(vs) vectors."""
        k = len(vs)
        for v in vs:
            if v.dim != self.dim:
                raise DimensionMismatchError(
                    f"Dimension mismatch: {v.dim} vs {self.dim}"
                )
        if self.terms and self.grade != k:
            raise ArityMismatchError(f"Form of grade {self.grade} evaluated on {k} vectors")
        if k == 0:
            return self.scalar()
        rows = np.stack([np.concatenate([v.holo, v.anti]) for v in vs])  # (k, 2N)
        total = 0j
        for mi, c in self.terms.items():
            cols = list(mi.holo) + [self.dim + j for j in mi.anti]
            total += c * np.linalg.det(rows[:, cols])
        return complex(total)

    def isclose(self, other: "Form", tol: float) -> bool:
        return (self - other).max_abs() <= tol


def wedge(a: F, b: F) -> F:
    return a.wedge(b)


def contract(v: BaseVector, a: F) -> F:
    return a.contract(v)


def metric_dual(a: BaseForm) -> BaseVector:
    return a.metric_dual()


def dual_contract(a: BaseForm, b: F) -> F:
    """Contraction of b with the metric dual of the pure-type 1-form a."""
    return b.contract(a.metric_dual())


def norm_sq(a: BaseForm) -> Any:
    return dual_contract(a.conj(), a).scalar()


def type_component(a: F, p: int, q: int) -> F:
    return a.type_component(p, q)


def eval_on(a: Form, vs: Sequence[TangentVector]) -> complex:
    return a.eval_on(vs)


def omega0(dim: int, cls=Form):
    """(i/2) sum dz_j ^ dzb_j"""
    return cls(dim, {MultiIndex((j,), (j,)): 0.5j for j in range(dim)})


def Omega0(dim: int, cls=Form):
    """dz_0 ^ ... ^ dz_{N-1}"""
    return cls(dim, {MultiIndex(tuple(range(dim)), ()): 1})


def all_indices(dim: int, degree: int) -> List[MultiIndex]:
    """All basis monomials of a given total degree."""
    out = []
    for p in range(degree + 1):
        q = degree - p
        if p > dim or q > dim:
            continue
        for holo in combinations(range(dim), p):
            for anti in combinations(range(dim), q):
                out.append(MultiIndex(holo, anti))
    return out


FormLike = Union[Form, BaseForm]
