"""
Twist forms: horizontal, charge-definite (1,0)-forms on C^N.

Constructors return rational form fields in (z, zb); nothing here assumes the
coefficients are holomorphic.
"""

from itertools import combinations_with_replacement
from math import comb
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from twistred.calc.exterior import MultiIndex, dual_contract
from twistred.calc.fields import FormField, ScalarField, field_ring, to_coeff
from twistred.core.exceptions import (
    DimensionMismatchError,
    PoleError,
    PreconditionError,
    TwistredValueError,
)
from twistred.core.logging import logger
from twistred.geometry.skew import SkewMatrix
from twistred.geometry.torus import MomentLevel, TorusAction
from twistred.geometry.zeros import level_zero_search
from twistred.report_models import CheckEntry
from twistred.utils import complex_pairs


class TwistForm:
    """A (1,0)-form field with its declared V-charge under a torus action."""

    def __init__(
        self,
        field: FormField,
        charge: Sequence[complex],
        action: TorusAction,
        name: str = "alpha",
    ):
        if field.dim != action.N:
            raise DimensionMismatchError(
                f"Form on C^{field.dim} with an action on C^{action.N}"
            )
        if field.degrees - {1}:
            raise TwistredValueError(f"Twist form {name} must be a 1-form")
        self.field = field
        self.charge = np.asarray(charge, dtype=complex).reshape(-1)
        if self.charge.shape != (action.s,):
            raise TwistredValueError(f"Charge of {name} must have {action.s} entries")
        self.action = action
        self.name = name
        self._norm_sq: Optional[ScalarField] = None

    def __repr__(self):
        return f"TwistForm({self.name}, charge={self.charge.tolist()})"

    @property
    def dim(self) -> int:
        return self.field.dim

    def with_charge(self, charge: Sequence[complex]) -> "TwistForm":
        """Same field with a different declared charge."""
        return TwistForm(self.field, charge, self.action, self.name)

    def with_action(self, action: TorusAction, charge: Sequence[complex]) -> "TwistForm":
        return TwistForm(self.field, charge, action, self.name)

    def is_pure(self) -> bool:
        return self.field.bidegrees <= {(1, 0)}

    def conj(self) -> FormField:
        return self.field.conj()

    def norm_sq_field(self) -> ScalarField:
        """sum_j |a_j|^2 as a rational field."""
        if self._norm_sq is None:
            total = ScalarField.const(self.dim, 0)
            for c in self.field.terms.values():
                total = total + c * c.conj()
            self._norm_sq = total
        return self._norm_sq

    def coefficients(self, points: Any) -> np.ndarray:
        """Coefficients of dz_j at a batch of points, shape (P, N)."""
        pts = np.atleast_2d(np.asarray(points, dtype=complex))
        out = np.zeros((pts.shape[0], self.dim), dtype=complex)
        for mi, c in self.field.terms.items():
            if mi.holo:
                out[:, mi.holo[0]] = c.evaluate(pts)
        return out

    def norm_sq(self, points: Any) -> np.ndarray:
        return np.sum(np.abs(self.coefficients(points)) ** 2, axis=1)

    def lie_derivative(self, a: Sequence[float]) -> FormField:
        return self.field.lie_derivative(self.action.induced_field(a))

    def contract_generator(self, a: Sequence[float]) -> ScalarField:
        return self.field.contract(self.action.induced_field(a)).scalar()


def infer_charge(field: FormField, action: TorusAction) -> Optional[np.ndarray]:
    """V-charge read off the monomials, or None if the field is not charge-definite.

    The term z^p zb^q dz_j / den has charge i(<q_., p> - <q_., q> + q_j) - charge(den).
    """
    N = action.N
    Q = action.Q

    def weight(monom: Tuple[int, ...]) -> np.ndarray:
        m = np.asarray(monom)
        return Q @ (m[:N] - m[N:])

    charges = set()
    for mi, c in field.terms.items():
        slot = np.zeros(action.s, dtype=np.int64)
        for j in mi.holo:
            slot += Q[:, j]
        for j in mi.anti:
            slot -= Q[:, j]
        den = {tuple(weight(m)) for m in c.den.keys()}
        num = {tuple(weight(m)) for m in c.num.keys()}
        if len(den) != 1:
            return None
        (dw,) = den
        for w in num:
            charges.add(tuple(np.asarray(w) - np.asarray(dw) + slot))
    if len(charges) != 1:
        return None
    return 1j * np.asarray(next(iter(charges)), dtype=complex)


def alpha_from_skew(M: SkewMatrix, action: Optional[TorusAction] = None, name: str = "alpha") -> TwistForm:
    """alpha_M = sum_ij z_i m_ij dz_j."""
    action = action or TorusAction.diagonal(M.N)
    if action.N != M.N:
        raise DimensionMismatchError(f"{M.N}x{M.N} matrix with an action on C^{action.N}")
    R = field_ring(M.N)
    terms: Dict[MultiIndex, ScalarField] = {}
    for j in range(M.N):
        poly = R.zero
        for i in range(M.N):
            if M.M[i, j] != 0:
                poly += R.gens[i] * to_coeff(M.M[i, j])
        if poly:
            terms[MultiIndex((j,), ())] = ScalarField(M.N, poly)
    field = FormField(M.N, terms)
    charge = infer_charge(field, action)
    if charge is None:
        raise PreconditionError(f"alpha_M is not charge definite for {action}")
    return TwistForm(field, charge, action, name)


def fundamental_form(N: int, i: int, j: int) -> TwistForm:
    """alpha_ij = z_i dz_j - z_j dz_i under the diagonal circle."""
    if not (0 <= i < N and 0 <= j < N) or i == j:
        raise TwistredValueError(f"Invalid pair ({i}, {j}) for N = {N}")
    M = np.zeros((N, N), dtype=complex)
    M[i, j] = 1
    M[j, i] = -1
    return alpha_from_skew(SkewMatrix(M), name=f"alpha_{i}{j}")


# verification


def _relative_field_residual(values: np.ndarray, reference: np.ndarray) -> float:
    """max over points of max_j |values| / max_j |reference|."""
    num = np.max(np.abs(values), axis=1)
    den = np.maximum(np.max(np.abs(reference), axis=1), np.finfo(float).tiny)
    return float(np.max(num / den, initial=0.0))


def _field_values(field: FormField, points: np.ndarray) -> np.ndarray:
    """Coefficients of a 1-form at points as (P, 2N): dz part then dzb part."""
    N = field.dim
    out = np.zeros((points.shape[0], 2 * N), dtype=complex)
    for mi, c in field.terms.items():
        col = mi.holo[0] if mi.holo else N + mi.anti[0]
        out[:, col] = c.evaluate(points)
    return out


def verify_twist(
    tf: TwistForm,
    level: MomentLevel,
    points: np.ndarray,
    tol: float = 1e-10,
    seed: int = 0,
    zero_search_starts: int = 16,
    threads: int = 1,
    prefix: Optional[str] = None,
) -> List[CheckEntry]:
    """Horizontality, charge, non-vanishing and type of a twist form at level points."""
    label = prefix or f"twist {tf.name}"
    action = tf.action
    points = np.atleast_2d(points)
    P = points.shape[0]
    entries: List[CheckEntry] = []
    alpha = _field_values(tf.field, points)

    horizontal_exact = True
    charge_exact = True
    horizontal_res = 0.0
    charge_res = 0.0
    measured = []
    for a in range(action.s):
        e = action.basis(a)
        contraction = tf.contract_generator(e)
        horizontal_exact &= contraction.is_zero()
        V = np.stack([np.concatenate([v.holo, v.anti]) for v in (action.induced_vector(e, z) for z in points)])
        pairing = np.abs(np.sum(alpha * V, axis=1))
        scale = np.linalg.norm(alpha, axis=1) * np.linalg.norm(V, axis=1)
        horizontal_res = max(
            horizontal_res, float(np.max(pairing / np.maximum(scale, np.finfo(float).tiny)))
        )

        lie = tf.lie_derivative(e)
        charge_exact &= (lie - tf.field.scale(complex(tf.charge[a]))).is_zero()
        lie_vals = _field_values(lie, points)
        charge_res = max(
            charge_res,
            _relative_field_residual(lie_vals - tf.charge[a] * alpha, alpha),
        )
        rayleigh = np.sum(lie_vals * alpha.conj(), axis=1) / np.sum(np.abs(alpha) ** 2, axis=1)
        measured.append(complex(np.mean(rayleigh)))

    entries.append(CheckEntry.boolean(f"{label}: horizontal (exact)", horizontal_exact))
    entries.append(CheckEntry.check(f"{label}: max |alpha(V_a)|", horizontal_res, tol, points=P))
    entries.append(
        CheckEntry.boolean(
            f"{label}: L_V alpha = k alpha (exact)",
            charge_exact,
            declared=complex_pairs(tf.charge),
        )
    )
    entries.append(CheckEntry.check(f"{label}: L_V alpha - k alpha", charge_res, tol, points=P))
    entries.append(
        CheckEntry.measure(
            f"{label}: measured charge",
            points=P,
            declared=complex_pairs(tf.charge),
            measured=complex_pairs(measured),
        )
    )

    norms = np.sum(np.abs(alpha) ** 2, axis=1)
    entries.append(
        CheckEntry.boolean(
            f"{label}: nonvanishing at samples",
            bool(np.min(norms) > 0),
            min_norm_sq=float(np.min(norms)),
        )
    )
    if zero_search_starts > 0:
        try:
            best, _ = level_zero_search(
                tf.norm_sq_field(), level, zero_search_starts, seed=seed, threads=threads
            )
            entries.append(
                CheckEntry.measure(
                    f"{label}: zero search min |alpha|^2",
                    best,
                    starts=zero_search_starts,
                    verdict="zero found" if best < 1e-12 else "no zero found above tolerance",
                )
            )
        except PoleError as e:
            logger.warning(f"Zero search for {tf.name} stopped at a pole: {e}")
            entries.append(CheckEntry.measure(f"{label}: zero search min |alpha|^2", note=str(e)))
    entries.append(CheckEntry.boolean(f"{label}: pure (1,0)", tf.is_pure()))
    return entries


def verify_subtori(
    tf: TwistForm, level: MomentLevel, points: np.ndarray, tol: float = 1e-10
) -> List[CheckEntry]:
    """The twist axioms for each rank-1 subtorus generated by a basis element."""
    entries = []
    for a in range(tf.action.s):
        sub = tf.action.subtorus(tf.action.basis(a))
        restricted = tf.with_action(sub, [tf.charge[a]])
        sub_entries = verify_twist(
            restricted, level, points, tol, zero_search_starts=0, prefix=f"subtorus e{a} {tf.name}"
        )
        entries.extend(e for e in sub_entries if e.kind == "check")
    return entries


# orthogonalization


def orthogonal_projection(alpha: TwistForm, beta: TwistForm) -> FormField:
    """P_alpha(beta) = beta - (conj(alpha) . beta / |alpha|^2) alpha"""
    coeff = dual_contract(alpha.conj(), beta.field).scalar() / alpha.norm_sq_field()
    return beta.field - alpha.field.scale(coeff)


def gram_schmidt(tfs: Sequence[TwistForm]) -> List[TwistForm]:
    """Sequential projections; outputs pairwise orthogonal with unchanged charges."""
    if not tfs:
        return []
    first = tfs[0]
    if first.field.is_zero():
        raise TwistredValueError("First twist form is identically zero")
    for tf in tfs[1:]:
        if tf.action is not first.action and not np.array_equal(tf.action.Q, first.action.Q):
            raise PreconditionError("Twist forms act under different torus actions")
        if not np.allclose(tf.charge, first.charge, rtol=0, atol=1e-12):
            raise PreconditionError(
                f"Charges {tf.charge.tolist()} and {first.charge.tolist()} differ"
            )
    out: List[TwistForm] = []
    for k, tf in enumerate(tfs):
        field = tf.field
        for prev in out:
            field = orthogonal_projection(prev, TwistForm(field, tf.charge, tf.action))
        out.append(TwistForm(field, tf.charge, tf.action, name=f"beta{k}"))
        logger.debug(f"Orthogonalized {tf.name} into beta{k} with {len(field)} terms")
    return out


def orthogonality_residual(tfs: Sequence[TwistForm], points: np.ndarray) -> float:
    """max |conj(a) . b| / (|a| |b|) over pairs and points."""
    coeffs = [tf.coefficients(points) for tf in tfs]
    worst = 0.0
    for i in range(len(coeffs)):
        for j in range(len(coeffs)):
            if i == j:
                continue
            pair = np.abs(np.sum(coeffs[i].conj() * coeffs[j], axis=1))
            scale = np.linalg.norm(coeffs[i], axis=1) * np.linalg.norm(coeffs[j], axis=1)
            worst = max(worst, float(np.max(pair / np.maximum(scale, np.finfo(float).tiny))))
    return worst


def norm_identity_residual(alpha: TwistForm, beta: TwistForm, points: np.ndarray) -> float:
    """|P_alpha(beta)|^2 against |beta|^2 - |conj(alpha) . beta|^2 / |alpha|^2."""
    a = alpha.coefficients(points)
    b = beta.coefficients(points)
    ra = np.sum(np.abs(a) ** 2, axis=1)
    rb = np.sum(np.abs(b) ** 2, axis=1)
    overlap = np.sum(a.conj() * b, axis=1)
    proj = b - (overlap / ra)[:, None] * a
    lhs = np.sum(np.abs(proj) ** 2, axis=1)
    rhs = rb - np.abs(overlap) ** 2 / ra
    return float(np.max(np.abs(lhs - rhs) / np.maximum(rb, np.finfo(float).tiny)))


# constructions


def hirzebruch_action(n: int) -> TorusAction:
    """T^3 on C^6 whose quotient is a CP^1-bundle over the Hirzebruch surface F_n."""
    return TorusAction(
        [
            [1, 1, n, 0, 0, 2 - n],
            [0, 0, 1, 1, 0, -2],
            [0, 0, 0, 0, 1, 1],
        ]
    )


def hirzebruch_parts(n: int) -> Tuple[TwistForm, TwistForm]:
    """alpha_1 = -z1 dz0 + z0 dz1 and
    alpha_2 = -z3 dz2 + z2 dz3 + n z2 z3 / (|z0|^2 + |z1|^2) (zb0 dz0 + zb1 dz1)."""
    N = 6
    action = hirzebruch_action(n)
    z = [ScalarField.z(N, j) for j in range(N)]
    zb = [ScalarField.zb(N, j) for j in range(N)]
    a1 = FormField.from_one_form([-z[1], z[0], 0, 0, 0, 0])
    a2 = FormField.from_one_form([0, 0, -z[3], z[2], 0, 0])
    if n:
        corr = z[2] * z[3] * n / ScalarField.sum_abs_sq(N, [1, 1, 0, 0, 0, 0])
        a2 = a2 + FormField.from_one_form([corr * zb[0], corr * zb[1], 0, 0, 0, 0])
    return (
        TwistForm(a1, [2j, 0, 0], action, "alpha1"),
        TwistForm(a2, [1j * n, 2j, 0], action, "alpha2"),
    )


def hirzebruch_twist(n: int) -> TwistForm:
    """alpha = z4 alpha_1 + z5 alpha_2, of charge q_V / 2."""
    a1, a2 = hirzebruch_parts(n)
    N = 6
    field = a1.field.scale(ScalarField.z(N, 4)) + a2.field.scale(ScalarField.z(N, 5))
    action = a1.action
    return TwistForm(field, action.volume_charge() / 2, action, "alpha")


def veronese_monomials(n: int) -> List[Tuple[int, ...]]:
    """Degree-n monomials in 4n variables as sorted index tuples."""
    return list(combinations_with_replacement(range(4 * n), n))


def veronese_pullback(n: int, M: SkewMatrix) -> TwistForm:
    """Pull alpha_M back along the degree-n monomial map C^{4n} -> C^{2m}."""
    N = 4 * n
    monomials = veronese_monomials(n)
    if M.N != len(monomials) or M.N != comb(5 * n - 1, n):
        raise DimensionMismatchError(
            f"Veronese of degree {n} needs a {comb(5 * n - 1, n)}x{comb(5 * n - 1, n)} matrix, got {M.N}"
        )
    R = field_ring(N)
    phi = []
    for idx in monomials:
        p = R.one
        for j in idx:
            p = p * R.gens[j]
        phi.append(p)
    # u_j = sum_i phi_i m_ij
    u = []
    for j in range(M.N):
        p = R.zero
        for i in range(M.N):
            if M.M[i, j] != 0:
                p += phi[i] * to_coeff(M.M[i, j])
        u.append(p)
    terms: Dict[MultiIndex, ScalarField] = {}
    for k in range(N):
        gen = R.gens[k]
        coeff = R.zero
        for j in range(M.N):
            if u[j]:
                dphi = phi[j].diff(gen)
                if dphi:
                    coeff += u[j] * dphi
        if coeff:
            terms[MultiIndex((k,), ())] = ScalarField(N, coeff)
    action = TorusAction.diagonal(N)
    logger.debug(f"Veronese pullback of degree {n}: {sum(len(c.num) for c in terms.values())} monomials")
    return TwistForm(FormField(N, terms), [2j * n], action, f"veronese{n}")


def alpha_norm_identity_residual(M: SkewMatrix, points: np.ndarray) -> float:
    """|alpha_M(z)|^2 against z* M* M z."""
    tf = alpha_from_skew(M)
    pts = np.atleast_2d(points)
    lhs = tf.norm_sq(pts)
    A = M.adjoint_product()
    rhs = np.einsum("pi,ij,pj->p", pts.conj(), A, pts).real
    return float(np.max(np.abs(lhs - rhs) / np.maximum(np.abs(rhs), 1.0)))
