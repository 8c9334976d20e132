"""
Restricted exterior algebra on a real tangent frame.

A frame of m real tangent vectors f_0..f_{m-1} at a point of a level set turns any
ambient k-form into a dense vector of its values on the k-subsets of the frame.
Pullback is an algebra morphism, so products of restricted factors equal the
restriction of the ambient product; large wedges are done here instead of on
the ambient sparse forms.
"""

from functools import lru_cache
from itertools import combinations
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from twistred.calc.exterior import BaseForm, Form, TangentVector
from twistred.calc.fields import FormField
from twistred.core.exceptions import (
    DegenerateFrameError,
    DimensionMismatchError,
    GradeMismatchError,
)
from twistred.report_models import CheckEntry

# det batches are split so that no intermediate array exceeds this many entries
_CHUNK_ENTRIES = 1 << 22


@lru_cache(maxsize=None)
def subsets(m: int, k: int) -> np.ndarray:
    """All k-subsets of range(m) in lexicographic order, shape (C(m,k), k)."""
    if k == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.asarray(list(combinations(range(m), k)), dtype=np.int64).reshape(-1, k)


@lru_cache(maxsize=None)
def subset_index(m: int, k: int) -> Dict[Tuple[int, ...], int]:
    return {tuple(s): i for i, s in enumerate(subsets(m, k).tolist())}


@lru_cache(maxsize=None)
def wedge_table(m: int, k1: int, k2: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(ia, ib, out, sign) such that e_S ^ e_T = sign * e_out for disjoint S, T."""
    out_index = subset_index(m, k1 + k2)
    ia, ib, iout, sign = [], [], [], []
    idx2 = subset_index(m, k2)
    for i, s in enumerate(subsets(m, k1).tolist()):
        rest = [j for j in range(m) if j not in s]
        for t in combinations(rest, k2):
            inversions = sum(1 for a in s for b in t if a > b)
            ia.append(i)
            ib.append(idx2[t])
            iout.append(out_index[tuple(sorted(s + list(t)))])
            sign.append(-1.0 if inversions % 2 else 1.0)
    return (
        np.asarray(ia, dtype=np.int64),
        np.asarray(ib, dtype=np.int64),
        np.asarray(iout, dtype=np.int64),
        np.asarray(sign),
    )


def _batched_det(mats: np.ndarray) -> np.ndarray:
    if mats.shape[-1] == 0:
        return np.ones(mats.shape[:-2], dtype=mats.dtype)
    return np.linalg.det(mats)


def frame_matrix(frame: Union[np.ndarray, Sequence[TangentVector]]) -> np.ndarray:
    """Rows [holo | anti] of the frame vectors, shape (m, 2N)."""
    if isinstance(frame, np.ndarray):
        return frame
    return np.stack([np.concatenate([v.holo, v.anti]) for v in frame])


class FrameForm:
    """k-form on an m-dimensional frame, stored densely over k-subsets."""

    __slots__ = ("m", "k", "coeffs")

    def __init__(self, m: int, k: int, coeffs: Optional[np.ndarray] = None):
        self.m = m
        self.k = k
        size = len(subsets(m, k)) if k <= m else 0
        if coeffs is None:
            coeffs = np.zeros(size, dtype=complex)
        self.coeffs = np.asarray(coeffs, dtype=complex)
        if self.coeffs.shape != (size,):
            raise DimensionMismatchError(
                f"Expected {size} coefficients for a {k}-form on {m} directions"
            )

    @classmethod
    def pullback(cls, form: Form, frame: Union[np.ndarray, Sequence[TangentVector]]) -> "FrameForm":
        """Restriction of a homogeneous ambient form to the frame."""
        P = frame_matrix(frame)
        m, two_n = P.shape
        if two_n != 2 * form.dim:
            raise DimensionMismatchError(
                f"Frame of ambient size {two_n // 2}, form of dimension {form.dim}"
            )
        k = form.grade
        if k is None:
            return cls(m, 0)
        if k > m:
            return cls(m, k)
        S = subsets(m, k)
        items = list(form.terms.items())
        cols = np.asarray(
            [list(mi.holo) + [form.dim + j for j in mi.anti] for mi, _ in items],
            dtype=np.int64,
        ).reshape(len(items), k)
        cs = np.asarray([c for _, c in items], dtype=complex)
        out = np.zeros(len(S), dtype=complex)
        per_term = max(1, len(S) * k * k)
        step = max(1, _CHUNK_ENTRIES // per_term)
        for lo in range(0, len(items), step):
            A = P[:, cols[lo : lo + step]]  # (m, T, k)
            A = np.transpose(A, (1, 0, 2))  # (T, m, k)
            mats = A[:, S, :]  # (T, nS, k, k)
            out += cs[lo : lo + step] @ _batched_det(mats)
        return cls(m, k, out)

    # algebra

    def _check(self, other: "FrameForm"):
        if self.m != other.m:
            raise DimensionMismatchError(f"Frames of size {self.m} and {other.m}")

    def __add__(self, other: "FrameForm") -> "FrameForm":
        self._check(other)
        if self.k != other.k:
            raise GradeMismatchError(f"Adding a {self.k}-form and a {other.k}-form")
        return FrameForm(self.m, self.k, self.coeffs + other.coeffs)

    def __neg__(self) -> "FrameForm":
        return FrameForm(self.m, self.k, -self.coeffs)

    def __sub__(self, other: "FrameForm") -> "FrameForm":
        return self + (-other)

    def scale(self, factor: complex) -> "FrameForm":
        return FrameForm(self.m, self.k, self.coeffs * factor)

    def __mul__(self, other: Any) -> "FrameForm":
        if isinstance(other, FrameForm):
            return self.wedge(other)
        return self.scale(other)

    def __rmul__(self, factor: complex) -> "FrameForm":
        return self.scale(factor)

    def conj(self) -> "FrameForm":
        # frame vectors are real
        return FrameForm(self.m, self.k, np.conj(self.coeffs))

    def wedge(self, other: "FrameForm") -> "FrameForm":
        self._check(other)
        k = self.k + other.k
        if k > self.m:
            return FrameForm(self.m, k)
        ia, ib, iout, sign = wedge_table(self.m, self.k, other.k)
        out = np.zeros(len(subsets(self.m, k)), dtype=complex)
        np.add.at(out, iout, sign * self.coeffs[ia] * other.coeffs[ib])
        return FrameForm(self.m, k, out)

    def power(self, n: int) -> "FrameForm":
        out = FrameForm(self.m, 0, np.ones(1, dtype=complex))
        for _ in range(n):
            out = out.wedge(self)
        return out

    def wedge_matrix(self, k: int) -> np.ndarray:
        """Matrix of the linear map x -> x ^ self on k-forms."""
        ia, ib, iout, sign = wedge_table(self.m, k, self.k)
        rows = len(subsets(self.m, k + self.k)) if k + self.k <= self.m else 0
        mat = np.zeros((rows, len(subsets(self.m, k))), dtype=complex)
        np.add.at(mat, (iout, ia), sign * self.coeffs[ib])
        return mat

    def contract(self, coords: np.ndarray) -> "FrameForm":
        """Interior product with the vector sum_i coords[i] f_i."""
        if self.k == 0:
            return FrameForm(self.m, 0)
        out = np.zeros(len(subsets(self.m, self.k - 1)), dtype=complex)
        idx = subset_index(self.m, self.k - 1)
        for i, s in enumerate(subsets(self.m, self.k).tolist()):
            c = self.coeffs[i]
            if c == 0:
                continue
            for p, j in enumerate(s):
                rest = tuple(s[:p] + s[p + 1 :])
                out[idx[rest]] += (-1) ** p * c * coords[j]
        return FrameForm(self.m, self.k - 1, out)

    # evaluation

    def evaluate(self, tuples: np.ndarray) -> np.ndarray:
        """Values on a batch of k-tuples given in frame coordinates, shape (T, k, m)."""
        tuples = np.asarray(tuples)
        if tuples.ndim == 2:
            tuples = tuples[None]
        if tuples.shape[1] != self.k:
            raise GradeMismatchError(
                f"{self.k}-form evaluated on {tuples.shape[1]} vectors"
            )
        if self.k == 0:
            return np.full(tuples.shape[0], self.coeffs[0] if len(self.coeffs) else 0j)
        S = subsets(self.m, self.k)
        nz = np.flatnonzero(self.coeffs)
        out = np.zeros(tuples.shape[0], dtype=complex)
        if len(nz) == 0:
            return out
        step = max(1, _CHUNK_ENTRIES // (len(nz) * self.k * self.k))
        for lo in range(0, tuples.shape[0], step):
            W = tuples[lo : lo + step]  # (t, k, m)
            mats = W[:, :, S[nz]]  # (t, k, nz, k)
            mats = np.transpose(mats, (0, 2, 1, 3))  # (t, nz, k, k)
            out[lo : lo + step] = _batched_det(mats) @ self.coeffs[nz]
        return out

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs), initial=0.0))

    def __repr__(self):
        return f"FrameForm(m={self.m}, k={self.k}, max={self.max_abs():.3g})"


def random_tuples(rng: np.random.Generator, trials: int, k: int, m: int) -> np.ndarray:
    """Random unit combinations of the frame vectors, shape (trials, k, m)."""
    W = rng.standard_normal((trials, k, m))
    norms = np.linalg.norm(W, axis=2, keepdims=True)
    return W / np.where(norms == 0, 1.0, norms)


def restricted_residual(
    a: FrameForm, b: FrameForm, rng: np.random.Generator, trials: int, floor: float = 1.0
) -> float:
    """max |a(w) - b(w)| / max(|a(w)|, |b(w)|, floor) over random frame tuples."""
    if a.k != b.k:
        raise GradeMismatchError(f"Comparing a {a.k}-form with a {b.k}-form")
    if a.m != b.m:
        raise DimensionMismatchError(f"Frames of size {a.m} and {b.m}")
    if a.k > a.m:
        return 0.0
    W = random_tuples(rng, trials, a.k, a.m)
    va = a.evaluate(W)
    vb = b.evaluate(W)
    scale = np.maximum(np.maximum(np.abs(va), np.abs(vb)), floor)
    return float(np.max(np.abs(va - vb) / scale, initial=0.0))


def _restrict(
    x: Union[BaseForm, FrameForm], frame, point: Optional[np.ndarray]
) -> FrameForm:
    if isinstance(x, FrameForm):
        return x
    if isinstance(x, FormField):
        if point is None:
            raise DimensionMismatchError("A point is required to restrict a FormField")
        x = x.evaluate(point)
    return FrameForm.pullback(x, frame)


def restricted_equal(
    a: Union[BaseForm, FrameForm],
    b: Union[BaseForm, FrameForm],
    tangent_frame: Union[np.ndarray, Sequence[TangentVector]],
    trials: int,
    tol: float,
    rng: np.random.Generator,
    point: Optional[np.ndarray] = None,
    name: str = "restricted-equal",
    floor: float = 1.0,
) -> CheckEntry:
    """Compare two forms on random tuples from the span of a tangent frame.

    A zero form on either side is compared in the degree of the other side.
    """
    P = frame_matrix(tangent_frame)
    if P.shape[0] == 0 or np.linalg.matrix_rank(P) < P.shape[0]:
        raise DegenerateFrameError("Tangent frame is rank deficient")
    fa = _restrict(a, P, point)
    fb = _restrict(b, P, point)
    if fa.k != fb.k:
        if fa.max_abs() == 0:
            fa = FrameForm(fb.m, fb.k)
        elif fb.max_abs() == 0:
            fb = FrameForm(fa.m, fa.k)
    residual = restricted_residual(fa, fb, rng, trials, floor)
    return CheckEntry.check(name, residual, tol, points=1, trials=trials)


def real_frame(frame: np.ndarray) -> np.ndarray:
    """Real coordinates (a, b) of real frame vectors a d/dx + b d/dy."""
    n = frame.shape[1] // 2
    return np.concatenate([frame[:, :n].real, frame[:, :n].imag], axis=1)


def frame_coordinates(v: TangentVector, frame: np.ndarray) -> np.ndarray:
    """Coordinates of a real tangent vector in an orthonormal real frame."""
    return real_frame(frame) @ v.to_real()


def typical_scale(*factors: FrameForm, rng: np.random.Generator, trials: int = 8) -> float:
    """Product of the largest sampled values of the factors.

    Used as the floor of restricted residuals of product identities, so that an
    identity a ^ b = 0 is measured against |a| |b| rather than against 1.
    """
    scale = 1.0
    for f in factors:
        if f.k > f.m:
            return 0.0
        W = random_tuples(rng, trials, f.k, f.m)
        scale *= float(np.max(np.abs(f.evaluate(W)), initial=0.0))
    return scale


def pullback_graded(form: Form, frame: np.ndarray, grade: int) -> FrameForm:
    """Pullback that keeps the grade of a form that happens to vanish."""
    if form.is_zero():
        return FrameForm(frame.shape[0], grade)
    return FrameForm.pullback(form, frame)
