"""
Skew-symmetric matrices: Pfaffians, eigen-structure of pencils, singular limits.
"""

from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from twistred.calc.exterior import Form
from twistred.core.exceptions import NotSkewError, SamplingError, SingularMatrixError
from twistred.core.logging import logger

# above this size the Pfaffian switches from expansion to elimination
_EXPANSION_MAX_N = 8


class SkewMatrix:
    """Complex N x N matrix with M^T = -M and N even."""

    def __init__(self, entries: Any, tol: float = 0.0):
        M = np.array(entries, dtype=complex)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise NotSkewError(f"Expected a square matrix, got shape {M.shape}")
        if M.shape[0] % 2:
            raise NotSkewError(f"Skew matrix of odd size {M.shape[0]}")
        scale = max(1.0, float(np.max(np.abs(M), initial=0.0)))
        if np.max(np.abs(M + M.T), initial=0.0) > tol * scale:
            raise NotSkewError("Matrix is not skew-symmetric")
        self.M = M
        self.N = M.shape[0]

    @classmethod
    def from_entries(cls, N: int, entries: Sequence[Sequence[float]]) -> "SkewMatrix":
        """Build from upper-triangle (i, j, re, im) entries, i < j, 0-based."""
        if N <= 0 or N % 2:
            raise NotSkewError(f"Skew matrix of odd or empty size {N}")
        M = np.zeros((N, N), dtype=complex)
        seen = set()
        for entry in entries:
            if len(entry) != 4:
                raise NotSkewError(f"Entry {entry} is not (i, j, re, im)")
            i, j, re, im = entry
            i, j = int(i), int(j)
            if not 0 <= i < j < N:
                raise NotSkewError(f"Entry ({i}, {j}) is not in the upper triangle of a {N}x{N} matrix")
            if (i, j) in seen:
                raise NotSkewError(f"Duplicate entry ({i}, {j})")
            seen.add((i, j))
            M[i, j] = complex(re, im)
            M[j, i] = -M[i, j]
        return cls(M)

    def to_entries(self) -> List[List[float]]:
        return [
            [i, j, float(self.M[i, j].real), float(self.M[i, j].imag)]
            for i in range(self.N)
            for j in range(i + 1, self.N)
            if self.M[i, j] != 0
        ]

    @classmethod
    def block_j(cls, lams: Sequence[complex]) -> "SkewMatrix":
        """diag(lam_0 J, lam_1 J, ...) with J = [[0, 1], [-1, 0]]."""
        J = np.array([[0, 1], [-1, 0]], dtype=complex)
        return cls(scipy.linalg.block_diag(*[lam * J for lam in lams]))

    @classmethod
    def random_generic(
        cls, rng: np.random.Generator, N: int, min_pf: float = 0.1, max_tries: int = 200
    ) -> "SkewMatrix":
        """Entries (k + i l)/8 with integers k, l in [-16, 16]; invertible with |Pf| >= min_pf."""
        for _ in range(max_tries):
            raw = (rng.integers(-16, 17, (N, N)) + 1j * rng.integers(-16, 17, (N, N))) / 8
            upper = np.triu(raw, 1)
            candidate = cls(upper - upper.T)
            if candidate.is_invertible() and abs(candidate.pfaffian()) >= min_pf:
                return candidate
        raise SamplingError(f"No invertible skew matrix with |Pf| >= {min_pf} in {max_tries} draws")

    @classmethod
    def random_lt(
        cls, rng: np.random.Generator, c: Optional[complex] = None, N: int = 4
    ) -> "SkewMatrix":
        """c U^T J U with U unitary, so that M* M = |c|^2 I."""
        G = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
        U, R = np.linalg.qr(G)
        U = U * (np.diag(R) / np.abs(np.diag(R)))  # Haar phase fix
        if c is None:
            c = rng.uniform(0.8, 1.5) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        J = cls.block_j([1] * (N // 2)).M
        M = c * U.T @ J @ U
        return cls((M - M.T) / 2)

    # linear algebra

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.M, compute_uv=False)

    def sigma_min(self) -> float:
        return float(self.singular_values()[-1])

    def is_invertible(self, rtol: float = 1e-12) -> bool:
        sv = self.singular_values()
        return bool(sv[-1] > rtol * max(sv[0], 1.0))

    def min_norm_bound(self) -> float:
        """Lower bound sigma_min(M)^2 of z* M* M z on the unit sphere."""
        return self.sigma_min() ** 2

    def adjoint_product(self) -> np.ndarray:
        """M* M"""
        return self.M.conj().T @ self.M

    def lt_deviation(self) -> Tuple[float, float]:
        """(max |M* M - mu I|, mu) with mu = tr(M* M) / N."""
        A = self.adjoint_product()
        mu = float(np.trace(A).real) / self.N
        return float(np.max(np.abs(A - mu * np.eye(self.N)))), mu

    def pfaffian(self) -> complex:
        return pfaffian(self)

    def __repr__(self):
        return f"SkewMatrix(N={self.N}, sigma_min={self.sigma_min():.3g})"


def pfaffian_expansion(entries: Sequence[Sequence[Any]]) -> Any:
    """Pfaffian by expansion along the first row.

    Works over any commutative ring whose elements support +, -, *; used with
    exact Gaussian rationals as well as with complex floats.
    """
    n = len(entries)
    if n % 2:
        raise NotSkewError(f"Pfaffian of odd size {n}")
    memo: Dict[Tuple[int, ...], Any] = {}

    def pf(idx: Tuple[int, ...]) -> Any:
        if not idx:
            return 1
        if idx in memo:
            return memo[idx]
        first = idx[0]
        total: Any = 0
        for p in range(1, len(idx)):
            a = entries[first][idx[p]]
            if not a:
                continue
            term = a * pf(idx[1:p] + idx[p + 1 :])
            total = total + term if p % 2 == 1 else total - term
        memo[idx] = total
        return total

    return pf(tuple(range(n)))


def pfaffian_ltl(A: np.ndarray) -> complex:
    """Pfaffian by Parlett-Reid elimination with partial pivoting."""
    A = np.array(A, dtype=complex)
    n = A.shape[0]
    if n % 2:
        return 0j
    pf = 1.0 + 0j
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.abs(A[k + 1 :, k]).argmax())
        if kp != k + 1:
            A[[k + 1, kp], k:] = A[[kp, k + 1], k:]
            A[k:, [k + 1, kp]] = A[k:, [kp, k + 1]]
            pf = -pf
        if A[k + 1, k] == 0:
            return 0j
        pf *= A[k, k + 1]
        if k + 2 < n:
            tau = A[k, k + 2 :] / A[k, k + 1]
            A[k + 2 :, k + 2 :] += np.outer(tau, A[k + 2 :, k + 1])
            A[k + 2 :, k + 2 :] -= np.outer(A[k + 2 :, k + 1], tau)
    return complex(pf)


def pfaffian(M: SkewMatrix) -> complex:
    if M.N <= _EXPANSION_MAX_N:
        return complex(pfaffian_expansion(M.M.tolist()))
    return pfaffian_ltl(M.M)


def pfaffian_square_residual(M: SkewMatrix) -> float:
    """|Pf(M)^2 - det(M)| relative to max(|det M|, 1)."""
    pf = pfaffian(M)
    det = complex(np.linalg.det(M.M))
    return abs(pf * pf - det) / max(abs(det), 1.0)


# collinearity of two charge-2 twist forms


class EigenCluster(NamedTuple):
    value: complex
    algebraic: int
    geometric: int
    basis: np.ndarray  # orthonormal columns spanning the eigenspace


class CollinearityReport(NamedTuple):
    clusters: List[EigenCluster]
    separation: float  # smallest distance between distinct eigenvalues

    def is_generic(self, expected: int, min_separation: float = 1e-6) -> bool:
        """expected clusters, each with equal 2-dimensional algebraic and geometric multiplicity."""
        return (
            len(self.clusters) == expected
            and all(c.algebraic == 2 and c.geometric == 2 for c in self.clusters)
            and self.separation > min_separation
        )

    def distance(self, z: np.ndarray) -> float:
        """Relative distance from z to the union of the eigenspaces."""
        z = np.asarray(z, dtype=complex)
        norm = np.linalg.norm(z)
        if norm == 0:
            return 0.0
        return float(
            min(np.linalg.norm(z - c.basis @ (c.basis.conj().T @ z)) for c in self.clusters)
            / norm
        )

    def summary(self) -> Dict[str, Any]:
        return {
            "eigenvalues": [[float(c.value.real), float(c.value.imag)] for c in self.clusters],
            "algebraic": [c.algebraic for c in self.clusters],
            "geometric": [c.geometric for c in self.clusters],
            "separation": self.separation,
        }


def collinearity_locus(M1: SkewMatrix, M2: SkewMatrix, cluster_tol: float = 1e-8) -> CollinearityReport:
    """Eigen-structure of M1^{-1} M2; its eigenspaces are where alpha_{M1} and alpha_{M2} are collinear."""
    if M1.N != M2.N:
        raise NotSkewError(f"Matrices of size {M1.N} and {M2.N}")
    if not M1.is_invertible():
        raise SingularMatrixError("M1 must be invertible")
    A = scipy.linalg.solve(M1.M, M2.M)
    eigvals = scipy.linalg.eigvals(A)
    scale = max(1.0, float(np.max(np.abs(eigvals))))
    groups: List[List[complex]] = []
    for lam in sorted(eigvals, key=lambda x: (x.real, x.imag)):
        for g in groups:
            if abs(lam - np.mean(g)) <= cluster_tol * scale:
                g.append(lam)
                break
        else:
            groups.append([lam])
    clusters = []
    for g in groups:
        value = complex(np.mean(g))
        basis = scipy.linalg.null_space(A - value * np.eye(M1.N), rcond=1e-8)
        clusters.append(EigenCluster(value, len(g), basis.shape[1], basis))
    values = [c.value for c in clusters]
    separation = min(
        (abs(a - b) for i, a in enumerate(values) for b in values[i + 1 :]),
        default=float("inf"),
    )
    logger.debug(f"M1^-1 M2 has {len(clusters)} eigenvalue clusters, separation {separation:.3g}")
    return CollinearityReport(clusters, float(separation))


def random_generic_pair(
    rng: np.random.Generator, N: int = 8, max_tries: int = 200
) -> Tuple[SkewMatrix, SkewMatrix, CollinearityReport]:
    """Random invertible pair whose pencil has N/2 well separated double eigenvalues."""
    M1 = SkewMatrix.random_generic(rng, N)
    for attempt in range(max_tries):
        M2 = SkewMatrix.random_generic(rng, N)
        report = collinearity_locus(M1, M2)
        if report.is_generic(N // 2):
            return M1, M2, report
        logger.warning(f"Skew pair {attempt} is not generic, resampling")
    raise SamplingError(f"No generic skew pair in {max_tries} draws")


# singular limit of the second orthogonalized form


class ProbePath(NamedTuple):
    eps: List[float]
    forms: List[Form]  # beta ^ conj(beta) / |beta|^2 at each accepted eps
    skipped: List[float]

    @property
    def limit(self) -> Form:
        return self.forms[-1]

    def convergence(self) -> float:
        """Change between the last two evaluated forms."""
        if len(self.forms) < 2:
            return float("inf")
        return (self.forms[-1] - self.forms[-2]).norm()


class ProbeResult(NamedTuple):
    paths: List[ProbePath]

    @property
    def limits(self) -> List[Form]:
        return [p.limit for p in self.paths]

    def difference(self) -> float:
        """l1 norm of the difference of the two limits."""
        return (self.paths[0].limit - self.paths[1].limit).norm()


def projected_line(M1: SkewMatrix, M2: SkewMatrix, z: np.ndarray) -> Optional[Form]:
    """beta ^ conj(beta) / |beta|^2 with beta = P_{alpha_1}(alpha_2) at z, None where beta = 0."""
    a1 = M1.M.T @ z
    a2 = M2.M.T @ z
    r1 = float(np.vdot(a1, a1).real)
    if r1 == 0:
        return None
    b = a2 - (np.vdot(a1, a2) / r1) * a1
    rb = float(np.vdot(b, b).real)
    if rb == 0:
        return None
    beta = Form.from_one_form(b)
    return beta.wedge(beta.conj()).scale(1 / rb)


def singular_limit_probe(
    M1: SkewMatrix, M2: SkewMatrix, Z1: Sequence[complex], eps_sequence: Sequence[float]
) -> ProbeResult:
    """Approach the collinearity locus along (Z1, eps, 0, 0, ...) and (Z1, 0, eps, 0, ...)."""
    if M1.N < 4 or M1.N != M2.N:
        raise NotSkewError("The probe needs two skew matrices of the same size N >= 4")
    Z1 = np.asarray(Z1, dtype=complex)
    if Z1.shape != (2,):
        raise NotSkewError("Z1 must be a vector in C^2")
    paths = []
    for slot in (2, 3):
        eps_done, forms, skipped = [], [], []
        for eps in eps_sequence:
            z = np.zeros(M1.N, dtype=complex)
            z[:2] = Z1
            z[slot] = eps
            form = projected_line(M1, M2, z)
            if form is None:
                logger.warning(f"beta vanishes at eps={eps}, skipped")
                skipped.append(float(eps))
                continue
            eps_done.append(float(eps))
            forms.append(form)
        if not forms:
            raise SamplingError("Every step of the probe hit a zero of beta")
        paths.append(ProbePath(eps_done, forms, skipped))
    return ProbeResult(paths)
