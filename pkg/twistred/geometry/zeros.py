"""
Horizontal polynomial tuples and numerical zero searches.

Zero searches corroborate, they never prove: a positive minimum only means that
no zero was found above tolerance from the given starts.
"""

from itertools import combinations_with_replacement
from math import comb
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares, minimize
from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from twistred.calc.exterior import HOLO
from twistred.calc.fields import ScalarField, field_ring, to_coeff
from twistred.core.exceptions import PoleError, PreconditionError, ResourceGuardError
from twistred.core.logging import logger
from twistred.geometry.torus import MomentLevel
from twistred.utils import rng_for, run_indexed

# largest multiplication matrix (rows x columns) horizontal_space_dim will build
MAX_MATRIX_ENTRIES = 2_000_000


def exponents(N: int, degree: int) -> List[Tuple[int, ...]]:
    """Exponent vectors of the degree-d monomials in N variables."""
    out = []
    for idx in combinations_with_replacement(range(N), degree):
        e = [0] * N
        for j in idx:
            e[j] += 1
        out.append(tuple(e))
    return out


def horizontal_space_dim(N: int, k: int) -> int:
    """Dimension of the N-tuples of degree-(k-1) forms P with sum_j z_j P_j = 0.

    Computed as the nullity of the multiplication map on coefficient vectors, by
    exact row reduction over QQ.
    """
    if N < 2 or k < 2:
        raise PreconditionError(f"Need N >= 2 and k >= 2, got N={N}, k={k}")
    sources = exponents(N, k - 1)
    targets = exponents(N, k)
    n_cols = N * len(sources)
    n_rows = len(targets)
    if n_rows * n_cols > MAX_MATRIX_ENTRIES:
        raise ResourceGuardError(
            f"Multiplication matrix {n_rows}x{n_cols} exceeds {MAX_MATRIX_ENTRIES} entries"
        )
    row_of = {e: i for i, e in enumerate(targets)}
    rows = [[QQ(0)] * n_cols for _ in range(n_rows)]
    for j in range(N):
        for s, e in enumerate(sources):
            shifted = list(e)
            shifted[j] += 1
            rows[row_of[tuple(shifted)]][j * len(sources) + s] = QQ(1)
    _, pivots = DomainMatrix(rows, (n_rows, n_cols), QQ).rref()
    return n_cols - len(pivots)


def expected_horizontal_dim(N: int, k: int) -> int:
    """N C(N+k-2, k-1) - C(N+k-1, k): the multiplication map is onto."""
    return N * comb(N + k - 2, k - 1) - comb(N + k - 1, k)


def koszul_tuple(rng: np.random.Generator, N: int, degree: int = 2) -> List[ScalarField]:
    """P = M(z) z with M(z) skew and entries random forms of degree - 1."""
    if degree < 1:
        raise PreconditionError("Koszul tuples need degree >= 1")
    R = field_ring(N)
    monomials = exponents(N, degree - 1)
    M = [[R.zero] * N for _ in range(N)]
    for i in range(N):
        for j in range(i + 1, N):
            entry = R.zero
            for e in monomials:
                c = complex(rng.integers(-4, 5), rng.integers(-4, 5))
                if c:
                    entry += R.from_dict({tuple(e) + (0,) * N: to_coeff(c)})
            M[i][j] = entry
            M[j][i] = -entry
    gens = R.gens
    return [ScalarField(N, sum((M[i][j] * gens[j] for j in range(N)), R.zero)) for i in range(N)]


class ZeroSearchResult(NamedTuple):
    value: float
    point: np.ndarray


class _PolySystem:
    """Holomorphic polynomials and their Jacobian on a shared monomial table."""

    def __init__(self, Ps: Sequence[ScalarField]):
        N = Ps[0].dim
        self.N = N
        polys = list(Ps)
        jac = [[p.diff(HOLO, k) for k in range(N)] for p in polys]
        flat = polys + [d for row in jac for d in row]
        table = {}
        for p in flat:
            for m in p.num.keys():
                table.setdefault(m[:N], len(table))
        self.exps = np.asarray(list(table), dtype=np.int64).reshape(len(table), N)
        C = np.zeros((len(flat), len(table)), dtype=complex)
        for r, p in enumerate(flat):
            for m, c in p.num.items():
                C[r, table[m[:N]]] = complex(float(c.x), float(c.y))
        self.C = C
        self.n_polys = len(polys)

    def evaluate(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        mons = np.prod(z[None, :] ** self.exps, axis=1)
        vals = self.C @ mons
        P = vals[: self.n_polys]
        J = vals[self.n_polys :].reshape(self.n_polys, self.N)
        return P, J


def _check_homogeneous_tuple(Ps: Sequence[ScalarField]) -> int:
    if not Ps:
        raise PreconditionError("Empty polynomial tuple")
    N = Ps[0].dim
    if len(Ps) != N:
        raise PreconditionError(f"Expected {N} polynomials, got {len(Ps)}")
    degrees = set()
    for p in Ps:
        if not (p.is_polynomial() and p.is_holomorphic()):
            raise PreconditionError("Zero search needs holomorphic polynomials")
        degrees |= {sum(m[:N]) for m in p.num.keys()}
    if len(degrees) != 1:
        raise PreconditionError(f"Polynomials are not homogeneous of one degree: {sorted(degrees)}")
    euler = ScalarField.const(N, 0)
    for j, p in enumerate(Ps):
        euler = euler + ScalarField.z(N, j) * p
    if not euler.is_zero():
        raise PreconditionError("sum_j z_j P_j does not vanish identically")
    return next(iter(degrees))


def _sphere_descent(
    system: _PolySystem, z: np.ndarray, max_iter: int, grad_tol: float
) -> Tuple[float, np.ndarray]:
    P, J = system.evaluate(z)
    f = float(np.vdot(P, P).real)
    step = 1.0
    for _ in range(max_iter):
        g = 2 * J.conj().T @ P
        g_t = g - np.real(np.vdot(z, g)) * z
        gnorm = float(np.linalg.norm(g_t))
        if gnorm < grad_tol or f < 1e-30:
            break
        step = min(step * 2, 1e3)
        while True:
            trial = z - step * g_t
            trial = trial / np.linalg.norm(trial)
            P_t, J_t = system.evaluate(trial)
            f_t = float(np.vdot(P_t, P_t).real)
            if f_t <= f - 1e-4 * step * gnorm**2 or step < 1e-16:
                break
            step /= 2
        if f_t >= f:
            break
        z, P, J, f = trial, P_t, J_t, f_t
    return f, z


def _polish(system: _PolySystem, z: np.ndarray) -> Tuple[float, np.ndarray]:
    N = system.N

    def residuals(x):
        w = x[:N] + 1j * x[N:]
        P, _ = system.evaluate(w)
        return np.concatenate([P.real, P.imag, [np.vdot(w, w).real - 1.0]])

    res = least_squares(residuals, np.concatenate([z.real, z.imag]), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    w = res.x[:N] + 1j * res.x[N:]
    w = w / np.linalg.norm(w)
    P, _ = system.evaluate(w)
    return float(np.vdot(P, P).real), w


def common_root_search(
    Ps: Sequence[ScalarField],
    starts: int = 64,
    seed: int = 0,
    threads: int = 1,
    max_iter: int = 500,
    grad_tol: float = 1e-14,
) -> ZeroSearchResult:
    """Minimize sum_j |P_j(z)|^2 over the unit sphere from several starts."""
    _check_homogeneous_tuple(Ps)
    system = _PolySystem(Ps)
    N = system.N

    def run(i: int) -> Tuple[float, np.ndarray]:
        rng = rng_for(seed, "common-root", i)
        z = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        z = z / np.linalg.norm(z)
        f, z = _sphere_descent(system, z, max_iter, grad_tol)
        f_p, z_p = _polish(system, z)
        return (f_p, z_p) if f_p < f else (f, z)

    results = run_indexed(run, starts, threads)
    value, point = min(results, key=lambda r: r[0])
    logger.debug(f"Common root search: best value {value:.3g} over {starts} starts")
    return ZeroSearchResult(value, point)


def level_zero_search(
    norm_field: ScalarField,
    level: MomentLevel,
    starts: int,
    seed: int = 0,
    threads: int = 1,
    max_iter: int = 200,
) -> ZeroSearchResult:
    """Minimize a nonnegative field over the level set by SLSQP from level samples."""
    action = level.action
    N = action.N

    def objective(x):
        try:
            return float(norm_field(x[:N] + 1j * x[N:]).real)
        except PoleError:
            return 1e6

    constraint = {
        "type": "eq",
        "fun": lambda x: action.moment_values(x[:N] + 1j * x[N:])[0] - level.c,
        "jac": lambda x: action.jacobian(x[:N] + 1j * x[N:]),
    }
    scale = max(1.0, float(np.max(np.abs(level.c))))

    def run(i: int) -> Tuple[float, np.ndarray]:
        z0 = level.sample_one(seed, "zero-search", i)
        best = (objective(np.concatenate([z0.real, z0.imag])), z0)
        res = minimize(
            objective,
            np.concatenate([z0.real, z0.imag]),
            method="SLSQP",
            constraints=[constraint],
            options={"maxiter": max_iter, "ftol": 1e-16},
        )
        z = res.x[:N] + 1j * res.x[N:]
        if level.residual(z) <= 1e-8 * scale:
            value = objective(res.x)
            if value < best[0]:
                best = (value, z)
        return best

    results = run_indexed(run, starts, threads)
    value, point = min(results, key=lambda r: r[0])
    logger.debug(f"Level zero search: best value {value:.3g} over {starts} starts")
    return ZeroSearchResult(value, point)
