"""
Linear torus actions on C^N.

Row a of the charge matrix Q holds the weights q^a_j; the generator e_a acts by
z_j -> exp(i q^a_j t) z_j. Moment maps use the 1/2 convention
mu_a = 1/2 sum_j q^a_j |z_j|^2, so that i_{V_a} omega0 = -d mu_a.
"""

import itertools
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

from twistred.calc.exterior import Form, Omega0, TangentVector, omega0
from twistred.calc.fields import FormField, ScalarField, VectorFieldExpr
from twistred.core.exceptions import (
    DegenerateFrameError,
    IrregularLevelError,
    SamplingError,
    TwistredValueError,
)
from twistred.core.logging import logger
from twistred.report_models import CheckEntry
from twistred.utils import rng_for

WALL_TOL = 1e-9


class TorusAction:
    """T^s acting linearly and diagonally on C^N with integer charges."""

    def __init__(self, charges: Sequence[Sequence[int]]):
        Q = np.asarray(charges)
        if Q.ndim != 2 or Q.size == 0:
            raise TwistredValueError("Charge matrix must be a non-empty s x N array")
        if not np.all(np.equal(np.mod(Q, 1), 0)):
            raise TwistredValueError("Charges must be integers")
        self.Q = Q.astype(np.int64)
        self.s, self.N = self.Q.shape
        if np.linalg.matrix_rank(self.Q.astype(float)) != self.s:
            raise TwistredValueError(f"Charge matrix of rank < {self.s}")

    @classmethod
    def diagonal(cls, N: int) -> "TorusAction":
        return cls([[1] * N])

    def __repr__(self):
        return f"TorusAction(Q={self.Q.tolist()})"

    def basis(self, a: int) -> np.ndarray:
        e = np.zeros(self.s)
        e[a] = 1
        return e

    def weights(self, a: Sequence[float]) -> np.ndarray:
        """<a, q_j> for j = 0..N-1."""
        a = np.asarray(a, dtype=float)
        if a.shape != (self.s,):
            raise TwistredValueError(f"Lie algebra element must have {self.s} entries")
        return a @ self.Q

    def subtorus(self, a: Sequence[float]) -> "TorusAction":
        """Rank-1 subtorus generated by an integral element a."""
        return TorusAction([np.rint(self.weights(a)).astype(int).tolist()])

    # fields

    def induced_field(self, a: Sequence[float]) -> VectorFieldExpr:
        """V_a = sum_j i<a,q_j> z_j d/dz_j - i<a,q_j> zb_j d/dzb_j"""
        w = self.weights(a)
        holo = [ScalarField.z(self.N, j) * (1j * float(w[j])) for j in range(self.N)]
        anti = [ScalarField.zb(self.N, j) * (-1j * float(w[j])) for j in range(self.N)]
        return VectorFieldExpr(holo, anti)

    def holomorphic_field(self, a: Sequence[float]) -> VectorFieldExpr:
        """xi_a = sum_j <a,q_j> z_j d/dz_j"""
        w = self.weights(a)
        holo = [ScalarField.z(self.N, j) * float(w[j]) for j in range(self.N)]
        return VectorFieldExpr(holo, [0] * self.N)

    def induced_vector(self, a: Sequence[float], point: np.ndarray) -> TangentVector:
        w = self.weights(a)
        z = np.asarray(point, dtype=complex)
        return TangentVector(1j * w * z, -1j * w * np.conj(z))

    def holomorphic_vector(self, a: Sequence[float], point: np.ndarray) -> TangentVector:
        w = self.weights(a)
        return TangentVector(w * np.asarray(point, dtype=complex))

    def generators(self) -> List[VectorFieldExpr]:
        return [self.induced_field(self.basis(a)) for a in range(self.s)]

    # moment map

    def moment_map(self) -> List[ScalarField]:
        return [ScalarField.sum_abs_sq(self.N, self.Q[a] * 0.5) for a in range(self.s)]

    def moment_values(self, points: np.ndarray) -> np.ndarray:
        """mu at a batch of points, shape (P, s)."""
        pts = np.atleast_2d(points)
        return 0.5 * (np.abs(pts) ** 2) @ self.Q.T

    def jacobian(self, point: np.ndarray) -> np.ndarray:
        """Real s x 2N Jacobian of mu in coordinates (x, y)."""
        z = np.asarray(point, dtype=complex)
        return np.concatenate([self.Q * z.real, self.Q * z.imag], axis=1)

    def is_regular(self, point: np.ndarray, tol: float = 1e-10) -> bool:
        sv = np.linalg.svd(self.jacobian(point), compute_uv=False)
        return bool(sv[-1] > tol * max(1.0, sv[0]))

    def gram(self, point: np.ndarray) -> np.ndarray:
        """G_ab = sum_j q^a_j q^b_j |z_j|^2; det G is the squared volume of the orbit."""
        t = np.abs(np.asarray(point, dtype=complex)) ** 2
        return (self.Q * t) @ self.Q.T

    # charges

    def volume_charge(self) -> np.ndarray:
        """V-charge of Omega0: L_{V_a} Omega0 = i (sum_j q^a_j) Omega0."""
        return 1j * self.Q.sum(axis=1).astype(complex)

    # flow

    def flow(self, a: Sequence[float], t: float, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=complex) * np.exp(1j * t * self.weights(a))

    def push_frame(self, a: Sequence[float], t: float, frame: np.ndarray) -> np.ndarray:
        """Differential of the flow applied to frame rows [holo | anti]."""
        phase = np.exp(1j * t * self.weights(a))
        return np.concatenate(
            [frame[:, : self.N] * phase, frame[:, self.N :] * np.conj(phase)], axis=1
        )


def xi_charge(q_v: Sequence[complex]) -> np.ndarray:
    """Charge with respect to xi from the charge with respect to V."""
    return np.asarray(q_v, dtype=complex) / 1j


def v_charge(q_xi: Sequence[complex]) -> np.ndarray:
    return np.asarray(q_xi, dtype=complex) * 1j


class SingularLocus(NamedTuple):
    """A function whose value must stay above a floor at accepted samples."""

    name: str
    distance: Callable[[np.ndarray], float]
    floor: float


class MomentLevel:
    """Level set mu^{-1}(c) with the sampling policy of a scenario."""

    def __init__(
        self,
        action: TorusAction,
        c: Sequence[float],
        loci: Optional[Sequence[SingularLocus]] = None,
        max_resample: int = 200,
        tol: float = 1e-12,
    ):
        self.action = action
        self.c = np.asarray(c, dtype=float).reshape(-1)
        if self.c.shape != (action.s,):
            raise TwistredValueError(f"Level must have {action.s} entries")
        self.loci = list(loci or [])
        self.max_resample = max_resample
        self.tol = tol
        cols = self.wall()
        if cols is not None:
            raise IrregularLevelError(
                f"Level {self.c.tolist()} is not a regular value: 2c lies in the cone "
                f"of columns {list(cols)} of Q, which have rank < {action.s}"
            )
        self._interior = self._interior_point()

    @property
    def dim(self) -> int:
        """Real dimension of the level set."""
        return 2 * self.action.N - self.action.s

    def wall(self) -> Optional[Tuple[int, ...]]:
        """Columns of Q of rank < s whose cone contains 2c, None at a regular value.

        A point of the level supported on S has rank d mu = rank Q_S, and by
        Caratheodory it is enough to try linearly independent column sets.
        """
        Q = self.action.Q.astype(float)
        s, N = Q.shape
        target = 2 * self.c
        tol = WALL_TOL * max(1.0, float(np.max(np.abs(target))))
        if np.max(np.abs(target)) <= tol:
            return ()
        for k in range(1, s):
            for cols in itertools.combinations(range(N), k):
                sub = Q[:, list(cols)]
                if np.linalg.matrix_rank(sub) < k:
                    continue
                t = np.linalg.lstsq(sub, target, rcond=None)[0]
                if np.max(np.abs(sub @ t - target)) <= tol and np.all(t >= -tol):
                    return cols
        return None

    def _is_normalizable(self) -> bool:
        return self.action.s == 1 and bool(np.all(self.action.Q > 0))

    def _interior_point(self) -> np.ndarray:
        """A t = |z|^2 in the interior of {Q t = 2c, t >= 0}."""
        Q = self.action.Q.astype(float)
        s, N = Q.shape
        if self._is_normalizable():
            if self.c[0] <= 0:
                raise IrregularLevelError(
                    f"Level {self.c.tolist()} is not a regular value (empty or the origin)"
                )
            return np.full(N, 2 * self.c[0] / Q[0].sum())
        # maximize the smallest slack: variables (t, m), t_j - m >= 0, Q t = 2c
        cost = np.zeros(N + 1)
        cost[-1] = -1.0
        A_ub = np.concatenate([-np.eye(N), np.ones((N, 1))], axis=1)
        A_eq = np.concatenate([Q, np.zeros((s, 1))], axis=1)
        res = linprog(
            cost,
            A_ub=A_ub,
            b_ub=np.zeros(N),
            A_eq=A_eq,
            b_eq=2 * self.c,
            bounds=[(0, None)] * N + [(None, 1.0)],
            method="highs",
        )
        if not res.success or res.x[-1] <= 1e-9:
            raise IrregularLevelError(
                f"Level {self.c.tolist()} has no regular points with all |z_j| > 0"
            )
        t0 = res.x[:N]
        # linprog is only accurate to its own tolerance; land exactly on Q t = 2c
        return t0 - Q.T @ np.linalg.solve(Q @ Q.T, Q @ t0 - 2 * self.c)

    def _draw(self, rng: np.random.Generator) -> np.ndarray:
        Q = self.action.Q.astype(float)
        N = self.action.N
        if self._is_normalizable():
            z = rng.standard_normal(N) + 1j * rng.standard_normal(N)
            scale = np.sqrt(2 * self.c[0] / (Q[0] @ np.abs(z) ** 2))
            return z * scale
        # move from the interior point along a random direction inside {Q t = 2c}
        t0 = self._interior
        u = rng.exponential(size=N) * t0.mean() * 2
        proj = u - Q.T @ np.linalg.solve(Q @ Q.T, Q @ u - 2 * self.c)
        direction = proj - t0
        neg = direction < 0
        lam_max = np.min(-t0[neg] / direction[neg], initial=1.0) if np.any(neg) else 1.0
        lam = rng.uniform(0.05, 0.95) * min(1.0, lam_max)
        t = t0 + lam * direction
        theta = rng.uniform(0, 2 * np.pi, size=N)
        return np.sqrt(np.clip(t, 0, None)) * np.exp(1j * theta)

    def accepts(self, z: np.ndarray) -> bool:
        if not self.action.is_regular(z):
            return False
        return all(locus.distance(z) > locus.floor for locus in self.loci)

    def sample_one(self, seed: int, *keys) -> np.ndarray:
        rng = rng_for(seed, "level", *keys)
        for attempt in range(self.max_resample):
            z = self._draw(rng)
            if self.accepts(z):
                if attempt:
                    logger.debug(f"Sample {keys} accepted after {attempt} rejections")
                return z
        raise SamplingError(
            f"No admissible sample after {self.max_resample} draws; "
            f"level {self.c.tolist()} may be close to a singular locus"
        )

    def residual(self, z: np.ndarray) -> float:
        return float(np.max(np.abs(self.action.moment_values(z)[0] - self.c)))


def sample_level(level: MomentLevel, count: int, seed: int, stream: str = "default") -> np.ndarray:
    """count accepted points on the level, reproducible from (seed, stream, index)."""
    points = np.stack([level.sample_one(seed, stream, i) for i in range(count)])
    worst = max(level.residual(z) for z in points)
    if worst > level.tol * max(1.0, float(np.max(np.abs(level.c)))):
        raise SamplingError(f"Samples off the level by {worst:.3g}")
    return points


def tangent_frame(level: MomentLevel, point: np.ndarray) -> np.ndarray:
    """Orthonormal real basis of ker d mu at point, as rows [holo | anti]."""
    z = np.asarray(point, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(level.c))))
    if level.residual(z) > 1e-8 * scale:
        raise TwistredValueError("Point is not on the level set")
    J = level.action.jacobian(z)
    if np.linalg.matrix_rank(J) < level.action.s:
        raise DegenerateFrameError("Moment map is not submersive at this point")
    return _complexify(null_space(J))


def horizontal_frame(level: MomentLevel, point: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the tangent vectors orthogonal to the orbit."""
    z = np.asarray(point, dtype=complex)
    action = level.action
    J = action.jacobian(z)
    orbit = np.stack(
        [action.induced_vector(action.basis(a), z).to_real() for a in range(action.s)]
    )
    basis = null_space(np.concatenate([J, orbit], axis=0))
    if basis.shape[1] != 2 * (action.N - action.s):
        raise DegenerateFrameError("Orbit is degenerate at this point")
    return _complexify(basis)


def _complexify(real_basis: np.ndarray) -> np.ndarray:
    n = real_basis.shape[0] // 2
    a, b = real_basis[:n].T, real_basis[n:].T
    return np.concatenate([a + 1j * b, a - 1j * b], axis=1)


def verify_action(action: TorusAction) -> List[CheckEntry]:
    """Exact checks: Killing and Hamiltonian generators, commutativity, volume charge."""
    N = action.N
    w0 = omega0(N, FormField)
    W0 = Omega0(N, FormField)
    mus = action.moment_map()
    gens = action.generators()
    q_v = action.volume_charge()
    killing = hamiltonian = charge = True
    for a, V in enumerate(gens):
        killing &= w0.lie_derivative(V).is_zero()
        hamiltonian &= (w0.contract(V) + _differential(mus[a])).is_zero()
        charge &= (W0.lie_derivative(V) - W0.scale(complex(q_v[a]))).is_zero()
    commuting = all(
        gens[a].bracket(gens[b]).is_zero()
        for a in range(action.s)
        for b in range(a + 1, action.s)
    )
    return [
        CheckEntry.boolean("action: L_V omega0 = 0", killing),
        CheckEntry.boolean("action: i_V omega0 + d mu = 0", hamiltonian),
        CheckEntry.boolean(
            "action: L_V Omega0 = q_V Omega0",
            charge,
            q_v=[[float(c.real), float(c.imag)] for c in q_v],
        ),
        CheckEntry.boolean("action: [V_a, V_b] = 0", commuting),
    ]


def _differential(f: ScalarField) -> FormField:
    return FormField.constant(f.dim, f).d()


def xi_v_identity(
    action: TorusAction, points: np.ndarray, degree_form: Optional[Form] = None
) -> float:
    """max |i_xi Phi + i i_V Phi| on (m,0) forms Phi (Omega0 by default)."""
    worst = 0.0
    for z in points:
        phi = degree_form if degree_form is not None else Omega0(action.N)
        for a in range(action.s):
            e = action.basis(a)
            lhs = phi.contract(action.holomorphic_vector(e, z))
            rhs = phi.contract(action.induced_vector(e, z)).scale(-1j)
            worst = max(worst, (lhs - rhs).max_abs())
    return worst
