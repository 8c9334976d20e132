"""
Torsion classes of the SU(3)-structures on CP^3 built from a skew 4x4 matrix M.

With alpha = alpha_M, r = |alpha|^2, xi the holomorphic Euler field and
Omega^ = abar . i_xi Omega0:

    d alpha = lambda Omega^ + alpha ^ eta,   lambda = 2 Pf(M) / r,   eta = abar . d alpha / r
    Omega_M = abar ^ Omega^ / r,             omega_M = omega0 - (i / r) alpha ^ abar

and the structure equations

    d omega = 3/2 Im(conj(W1) Omega) + W4 ^ omega + W3
    d Omega = W1 omega^2 + W2 ^ omega + conj(W5) ^ Omega

with W1 = 4/3 conj(lambda), W3 = Re(eta) ^ omega0, W4 = -Re(eta), W5 = -2 Re(eta).
All classes live on CP^3 and are checked on horizontal frames of the unit sphere.
"""

from typing import Dict, List, NamedTuple, Tuple, Union

import numpy as np
from sympy.polys.domains import QQ, QQ_I

from twistred.calc.exterior import Omega0, dual_contract, omega0
from twistred.calc.fields import FormField, ScalarField, to_coeff
from twistred.calc.frames import (
    FrameForm,
    pullback_graded,
    restricted_residual,
    typical_scale,
)
from twistred.core.exceptions import PreconditionError, SingularMatrixError
from twistred.core.logging import logger
from twistred.geometry.reduction import AmbientStructure, PointSampler, reduce
from twistred.geometry.skew import SkewMatrix, pfaffian_expansion
from twistred.geometry.torus import MomentLevel, TorusAction
from twistred.geometry.twist import TwistForm, alpha_from_skew
from twistred.report_models import CheckEntry
from twistred.utils import run_indexed

N = 4

# LT decision thresholds
LT_MATRIX_TOL = 1e-12
LT_CLASS_TOL = 1e-8

_FOUR_THIRDS = QQ_I(QQ(4, 3), QQ(0))


def _check_matrix(M: SkewMatrix):
    if M.N != N:
        raise PreconditionError(f"Torsion is computed for 4x4 matrices, got {M.N}x{M.N}")
    if not M.is_invertible():
        raise SingularMatrixError("Torsion needs an invertible skew matrix")


def _check_sphere(level: MomentLevel):
    Q = level.action.Q
    if Q.shape != (1, N) or not np.all(Q == 1) or abs(level.c[0] - 0.5) > 1e-14:
        raise PreconditionError("Torsion checks run on the unit sphere of C^4 under the diagonal circle")


def unit_sphere(max_resample: int = 200) -> MomentLevel:
    return MomentLevel(TorusAction.diagonal(N), [0.5], max_resample=max_resample)


def exact_pfaffian(M: SkewMatrix):
    """Pf(M) over the Gaussian rationals of the (binary exact) entries."""
    entries = [[to_coeff(M.M[i, j]) for j in range(M.N)] for i in range(M.N)]
    return to_coeff(pfaffian_expansion(entries))


def _re(f: FormField) -> FormField:
    return (f + f.conj()).scale(QQ_I(QQ(1, 2), QQ(0)))


class TorsionData:
    """Fields of the CP^3 structure of one matrix and its five torsion classes.

    ``W2`` is not a field here: it is solved pointwise from its wedge with omega,
    see ``TorsionPoint``.
    """

    def __init__(self, M: SkewMatrix):
        _check_matrix(M)
        self.M = M
        self.action = TorusAction.diagonal(N)
        self.twist: TwistForm = alpha_from_skew(M, self.action)
        self.pf = exact_pfaffian(M)

        alpha = self.twist.field
        abar = alpha.conj()
        self.alpha = alpha
        self.r = self.twist.norm_sq_field()
        inv_r = self.r.inverse()
        xi = self.action.holomorphic_field([1.0])

        self.dalpha = alpha.d()
        self.Omega_hat = dual_contract(abar, Omega0(N, FormField).contract(xi))
        self.eta_r = dual_contract(abar, self.dalpha)  # r eta, polynomial

        self.lam = ScalarField.const(N, 2 * self.pf) * inv_r
        self.eta = self.eta_r.scale(inv_r)
        self.re_eta = _re(self.eta)
        self.d_eta = self.eta.d()

        self.omega0 = omega0(N, FormField)
        self.Omega = abar.wedge(self.Omega_hat).scale(inv_r)
        self.omega = self.omega0 - alpha.wedge(abar).scale(inv_r * 1j)
        self.dOmega = self.Omega.d()
        self.domega = self.omega.d()

        self.W1 = self.lam.conj() * _FOUR_THIRDS
        self.W3 = self.re_eta.wedge(self.omega0)
        self.W4 = -self.re_eta
        self.W5 = self.re_eta.scale(-2)
        logger.debug(
            f"Torsion fields for {M}: Pf = {complex(float(self.pf.x), float(self.pf.y)):.6g}, "
            f"dOmega {len(self.dOmega)} terms, domega {len(self.domega)} terms"
        )

    @property
    def pfaffian(self) -> complex:
        return complex(float(self.pf.x), float(self.pf.y))

    def exact_entries(self) -> List[CheckEntry]:
        """Polynomial identities decided by exact cancellation."""
        Om0 = Omega0(N, FormField)
        square = self.dalpha.wedge(self.dalpha) - Om0.scale(8 * self.pf)
        decomposition = (
            self.dalpha.scale(self.r)
            - self.alpha.wedge(self.eta_r)
            - self.Omega_hat.scale(2 * self.pf)
        )
        dr = FormField.constant(N, self.r).d()
        re_eta = self.eta_r + self.eta_r.conj() + dr.scale(2)
        return [
            CheckEntry.boolean("torsion: d alpha ^ d alpha = 8 Pf(M) Omega0 (exact)", square.is_zero()),
            CheckEntry.boolean(
                "torsion: d alpha = lambda Omega^ + alpha ^ eta (exact)", decomposition.is_zero()
            ),
            CheckEntry.boolean("torsion: Re(eta) = -d|alpha|^2 / |alpha|^2 (exact)", re_eta.is_zero()),
            CheckEntry.boolean("torsion: W3 real (exact)", (self.W3 - self.W3.conj()).is_zero()),
            CheckEntry.boolean("torsion: W4 real (exact)", (self.W4 - self.W4.conj()).is_zero()),
        ]

    def at(self, z: np.ndarray, frame: np.ndarray) -> "TorsionPoint":
        return TorsionPoint(self, z, frame)


def lambda_eta(M: SkewMatrix) -> Tuple[ScalarField, FormField]:
    """lambda_M and eta_M of d alpha_M = lambda_M Omega^_M + alpha_M ^ eta_M."""
    td = TorsionData(M)
    return td.lam, td.eta


def torsion_classes(M: SkewMatrix) -> TorsionData:
    return TorsionData(M)


def _pull(field: FormField, z: np.ndarray, frame: np.ndarray, grade: int) -> FrameForm:
    return pullback_graded(field.evaluate(z), frame, grade)


def _imag(x: FrameForm) -> FrameForm:
    return (x - x.conj()).scale(-0.5j)


class TorsionPoint:
    """Restrictions of the torsion quantities to a horizontal frame at one point."""

    def __init__(self, td: TorsionData, z: np.ndarray, frame: np.ndarray):
        self.td = td
        self.z = np.asarray(z, dtype=complex)
        self.frame = frame
        self.r = float(td.r(self.z).real)
        self.lam = td.lam(self.z)
        self.Omega = _pull(td.Omega, self.z, frame, 3)
        self.omega = _pull(td.omega, self.z, frame, 2)
        self.omega0 = _pull(td.omega0, self.z, frame, 2)
        self.alpha = _pull(td.alpha, self.z, frame, 1)
        self.aab = self.alpha.wedge(self.alpha.conj())
        self.dOmega = _pull(td.dOmega, self.z, frame, 4)
        self.domega = _pull(td.domega, self.z, frame, 3)
        self.re_eta = _pull(td.re_eta, self.z, frame, 1)
        self.d_eta = _pull(td.d_eta, self.z, frame, 2)

    @property
    def W1(self) -> complex:
        return 4 / 3 * np.conj(self.lam)

    @property
    def W3(self) -> FrameForm:
        return self.re_eta.wedge(self.omega0)

    @property
    def W4(self) -> FrameForm:
        return -self.re_eta

    @property
    def W5(self) -> FrameForm:
        return self.re_eta.scale(-2)

    def w2_wedge_omega(self) -> FrameForm:
        """W2 ^ omega in closed form."""
        w, aab, r, lam = self.omega, self.aab, self.r, self.lam
        first = (w + aab.scale(1.5j / r)).wedge(w).scale(self.W1 / 2)
        second = aab.wedge(self.omega0).scale(1j * np.conj(lam) / r)
        third = aab.wedge(self.d_eta).scale(1 / (lam * r))
        return first + second + third

    def W2(self) -> FrameForm:
        """Solve W2 ^ omega = w2_wedge_omega() on the frame."""
        L = self.omega.wedge_matrix(2)
        x = np.linalg.solve(L, self.w2_wedge_omega().coeffs)
        return FrameForm(self.omega.m, 2, x)


def w1_from_trace(tp: TorsionPoint) -> complex:
    """W1 from dOmega ^ omega = W1 omega^3, by least squares on the top degree."""
    top = tp.omega.power(3).coeffs
    return complex(np.vdot(top, tp.dOmega.wedge(tp.omega).coeffs) / np.vdot(top, top))


def closed_form_w2_lt(tp: TorsionPoint) -> FrameForm:
    """W2 = W1/2 (omega + 3i/(2r) alpha ^ abar), valid when M* M = mu I."""
    return (tp.omega + tp.aab.scale(1.5j / tp.r)).scale(tp.W1 / 2)


def _residual(a: FrameForm, b: FrameForm, rng: np.random.Generator, trials: int, scale: float) -> float:
    return restricted_residual(a, b, rng, trials, max(scale, np.finfo(float).tiny))


def _zero(a: FrameForm) -> FrameForm:
    return FrameForm(a.m, a.k)


def _scale_of(rng: np.random.Generator, *forms: FrameForm) -> float:
    return max(typical_scale(f, rng=rng) for f in forms)


def _point_residuals(tp: TorsionPoint, rng: np.random.Generator, trials: int, floor: float) -> Dict[str, float]:
    w, Om = tp.omega, tp.Omega
    out: Dict[str, float] = {}

    lhs = tp.dOmega.wedge(w)
    out["trace"] = _residual(lhs, Om.wedge(tp.domega), rng, trials, floor * _scale_of(rng, lhs))
    out["trace_w1"] = _residual(lhs, w.power(3).scale(tp.W1), rng, trials, floor * _scale_of(rng, lhs))
    w1t = w1_from_trace(tp)
    out["w1"] = abs(w1t - tp.W1) / max(abs(tp.W1), floor)
    out["w1_value"] = abs(tp.W1)

    rhs = _imag(Om.scale(np.conj(tp.W1))).scale(1.5) + tp.W4.wedge(w) + tp.W3
    out["domega"] = _residual(tp.domega, rhs, rng, trials, floor * _scale_of(rng, tp.domega, rhs))

    w2w = tp.w2_wedge_omega()
    base = w.power(2).scale(tp.W1) + w2w
    closing = base + tp.W5.wedge(Om)
    other = base - tp.W5.wedge(Om)
    s = floor * _scale_of(rng, tp.dOmega, closing)
    out["dOmega"] = _residual(tp.dOmega, closing, rng, trials, s)
    out["dOmega_other_sign"] = _residual(tp.dOmega, other, rng, trials, s)

    W2 = tp.W2()
    prim = W2.wedge(w.power(2))
    out["W2_primitive"] = _residual(prim, _zero(prim), rng, trials, floor * typical_scale(W2, w, w, rng=rng))
    typed = W2.wedge(Om)
    out["W2_type"] = _residual(typed, _zero(typed), rng, trials, floor * typical_scale(W2, Om, rng=rng))
    out["W2_solve"] = _residual(W2.wedge(w), w2w, rng, trials, floor * _scale_of(rng, w2w))
    W3 = tp.W3
    prim3 = W3.wedge(w)
    # W3 is measured against d omega, of which it is a part; it may vanish up to rounding
    s3 = max(typical_scale(tp.re_eta, tp.omega0, w, rng=rng), typical_scale(tp.domega, w, rng=rng))
    out["W3_primitive"] = _residual(prim3, _zero(prim3), rng, trials, floor * s3)

    out["lambda"] = abs(tp.lam)
    out["W2_norm"] = W2.max_abs()
    out["W3_norm"] = W3.max_abs()
    out["W4_norm"] = tp.W4.max_abs()
    out["W5_norm"] = tp.W5.max_abs()
    return out


def verify_torsion_equations(
    M: Union[SkewMatrix, TorsionData],
    level: MomentLevel,
    points: int,
    trials: int,
    tol: float,
    seed: int = 0,
    floor: float = 1.0,
    threads: int = 1,
) -> List[CheckEntry]:
    """Both structure equations, the trace identity and the type of each class on horizontal frames."""
    _check_sphere(level)
    td = M if isinstance(M, TorsionData) else TorsionData(M)
    rs = reduce(AmbientStructure(N), td.action, [td.twist], normalize=True)
    sampler = PointSampler(level, seed, "torsion")

    def run(i: int) -> Dict[str, float]:
        z, frame = sampler.point(i, horizontal=True)
        rng = sampler.rng(i)
        tp = td.at(z, frame)
        out = _point_residuals(tp, rng, trials, floor)
        ps = rs.at(z, frame)
        out["reduction"] = max(
            _residual(ps.Omega_f, -tp.Omega, rng, trials, floor * _scale_of(rng, tp.Omega)),
            _residual(ps.omega_f(), tp.omega, rng, trials, floor * _scale_of(rng, tp.omega)),
        )
        return out

    results = run_indexed(run, points, threads)

    def worst(key: str) -> float:
        return max(r[key] for r in results)

    def least(key: str) -> float:
        return min(r[key] for r in results)

    def check(name: str, key: str, **detail) -> CheckEntry:
        return CheckEntry.check(f"torsion: {name}", worst(key), tol, points=points, trials=trials, **detail)

    entries = td.exact_entries()
    entries += [
        check("Omega_M = -Omega of the normalized reduction", "reduction"),
        check("d Omega ^ omega = Omega ^ d omega", "trace"),
        check("d Omega ^ omega = W1 omega^3", "trace_w1"),
        check("W1 from trace = 4/3 conj(lambda)", "w1"),
        check("d omega = 3/2 Im(conj(W1) Omega) + W4 ^ omega + W3", "domega"),
        check("d Omega = W1 omega^2 + W2 ^ omega + conj(W5) ^ Omega", "dOmega", W5="-2 Re(eta)"),
        CheckEntry.measure(
            "torsion: d Omega residual with W5 = +2 Re(eta)",
            worst("dOmega_other_sign"),
            points=points,
            closes=bool(worst("dOmega_other_sign") <= tol),
        ),
        check("W2 solved from W2 ^ omega", "W2_solve"),
        check("W2 ^ omega^2 = 0", "W2_primitive"),
        check("W2 ^ Omega = 0", "W2_type"),
        check("W3 ^ omega = 0", "W3_primitive"),
        CheckEntry.boolean("torsion: lambda nonvanishing", least("lambda") > 0, min=least("lambda")),
        CheckEntry.measure("torsion: |W1| range", least("w1_value"), points=points, max=worst("w1_value")),
    ]
    entries += [
        CheckEntry.measure(f"torsion: max |W{k}|", worst(f"W{k}_norm"), points=points)
        for k in (2, 3, 4, 5)
    ]
    return entries


class LTSummary(NamedTuple):
    deviation: float
    mu: float
    max_classes: float  # max over samples of |W3|, |W4|, |W5|

    @property
    def matrix_lt(self) -> bool:
        return self.deviation < LT_MATRIX_TOL * max(1.0, self.mu)

    @property
    def classes_lt(self) -> bool:
        return self.max_classes < LT_CLASS_TOL


def lt_check(
    M: Union[SkewMatrix, TorsionData],
    level: MomentLevel,
    points: int,
    trials: int,
    tol: float,
    seed: int = 0,
    floor: float = 1.0,
    threads: int = 1,
) -> List[CheckEntry]:
    """M* M = mu I against the vanishing of W3, W4, W5, plus the LT closed forms when it holds."""
    _check_sphere(level)
    td = M if isinstance(M, TorsionData) else TorsionData(M)
    deviation, mu = td.M.lt_deviation()
    sampler = PointSampler(level, seed, "lt")

    def run(i: int) -> Dict[str, float]:
        z, frame = sampler.point(i, horizontal=True)
        rng = sampler.rng(i)
        tp = td.at(z, frame)
        lam_sq = abs(tp.lam) ** 2
        W2 = tp.W2()
        return {
            "classes": max(tp.W3.max_abs(), tp.W4.max_abs(), tp.W5.max_abs()),
            "d_eta": _residual(
                tp.d_eta,
                tp.omega0.scale(-1j * lam_sq),
                rng,
                trials,
                floor * lam_sq * _scale_of(rng, tp.omega0),
            ),
            "W2": _residual(W2, closed_form_w2_lt(tp), rng, trials, floor * _scale_of(rng, W2)),
            "W2_norm": W2.max_abs(),
        }

    results = run_indexed(run, points, threads)
    summary = LTSummary(deviation, mu, max(r["classes"] for r in results))
    entries = [
        CheckEntry.measure("lt: |M* M - mu I|", deviation, mu=mu),
        CheckEntry.measure("lt: max |W3|, |W4|, |W5|", summary.max_classes, points=points),
        CheckEntry.boolean(
            "lt: M* M = mu I iff W3 = W4 = W5 = 0",
            summary.matrix_lt == summary.classes_lt,
            matrix_lt=summary.matrix_lt,
            classes_lt=summary.classes_lt,
        ),
    ]
    if summary.matrix_lt:
        min_w2 = min(r["W2_norm"] for r in results)
        entries += [
            CheckEntry.check(
                "lt: d eta = -i |lambda|^2 omega0",
                max(r["d_eta"] for r in results),
                tol,
                points=points,
                trials=trials,
            ),
            CheckEntry.check(
                "lt: W2 = W1/2 (omega + 3i/(2r) alpha ^ abar)",
                max(r["W2"] for r in results),
                tol,
                points=points,
                trials=trials,
            ),
            CheckEntry.boolean("lt: W2 nonvanishing", min_w2 > 0, min=min_w2),
        ]
    logger.debug(f"LT check for {td.M}: deviation {deviation:.3g}, classes {summary.max_classes:.3g}")
    return entries
