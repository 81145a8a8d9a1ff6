"""The matrices Q, B, K, T of size (m-1)x(m-1), their determinant, and the
rank-one comparison matrices L and K' used in the determinant lower bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.linalg

from .integration import DEFAULT_SPEC, DomainError, QuadratureSpec
from .quadrature import Q_of_q
from .special_functions import beta_coefficients

__all__ = [
    "Q_BOUND_CONSTANT",
    "MatrixBundle",
    "RankOneBound",
    "Lemma2Report",
    "ConsistencyError",
    "binomial",
    "normalising_scalar",
    "q_arguments",
    "q_values",
    "build_bundle",
    "det_T",
    "lu_determinant",
    "trace_log_determinant",
    "rank_one_bound",
    "kprime_matrix",
    "spectral_radius",
    "power_iteration",
    "lemma2_check",
]

# |Q(q)| <= 1.827/m with 1.827 = (3/2) * 1.218
Q_BOUND_CONSTANT = Fraction(1827, 1000)


class ConsistencyError(ArithmeticError):
    """Two exact computations of the same quantity disagree."""


def binomial(n: int, k: int) -> int:
    """C(n, k) as an exact integer, zero outside 0 <= k <= n."""
    if k < 0 or k > n or n < 0:
        return 0
    return math.comb(n, k)


def normalising_scalar(m: int) -> Fraction:
    """(m!)^2 / (m (2m)!) = 1 / (m C(2m, m))."""
    return Fraction(math.factorial(m) ** 2, m * math.factorial(2 * m))


def q_arguments(m: int) -> np.ndarray:
    """Integer matrix of the arguments n - 2i + 2j, 1 <= i, j <= m-1."""
    n = 2 * m - 1
    idx = np.arange(1, m)
    return n - 2 * idx[:, None] + 2 * idx[None, :]


def q_values(m: int, spec: QuadratureSpec = DEFAULT_SPEC) -> dict[int, float]:
    """Q(q) for every odd q in [3, 4m-5]."""
    poly = beta_coefficients(m)
    return {q: Q_of_q(q, m, spec, poly) for q in range(3, 4 * m - 4, 2)}


def _log_binomial(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


# beyond this the exact big-integer ratios are replaced by log-gamma
EXACT_COUPLING_MAX_M = 500


@lru_cache(maxsize=None)
def _coupling(m: int) -> np.ndarray:
    """C[l, j] = scalar * 2m * C(n, j-l) = 2 C(n, j-l) / C(2m, m).

    Each ratio is formed exactly before rounding: numerator and denominator
    are ~4^m on their own and overflow a double near m = 500.
    """
    n = 2 * m - 1
    size = m - 1
    ratios = np.zeros(size)
    if m <= EXACT_COUPLING_MAX_M:
        central = math.comb(2 * m, m)
        for d in range(size):
            ratios[d] = float(Fraction(2 * binomial(n, d), central))
    else:
        log_central = _log_binomial(2 * m, m)
        for d in range(size):
            ratios[d] = 2.0 * math.exp(_log_binomial(n, d) - log_central)
    out = np.zeros((size, size))
    for l in range(size):
        out[l, l:] = ratios[:size - l]
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class MatrixBundle:
    m: int
    n: int
    Q_mat: np.ndarray
    B_mat: tuple[tuple[int, ...], ...]
    scalar: Fraction
    K_mat: np.ndarray
    T_mat: np.ndarray
    q_table: dict[int, float] = field(repr=False)

    @property
    def size(self) -> int:
        return self.m - 1


def build_bundle(m: int, spec: QuadratureSpec = DEFAULT_SPEC,
                 q_table: dict[int, float] | None = None) -> MatrixBundle:
    """Assemble Q, B, K = scalar*Q*B and T = I - K for the given m.

    Q has Toeplitz structure, so only the 2m-3 distinct values Q(3..4m-5)
    are integrated.  A precomputed ``q_table`` may be passed in.
    """
    if m < 2:
        raise DomainError(f"m must be >= 2, got {m}")
    n = 2 * m - 1
    if q_table is None:
        q_table = q_values(m, spec)
    args = q_arguments(m)
    Q_mat = np.vectorize(q_table.__getitem__, otypes=[float])(args)
    B_mat = tuple(tuple(2 * m * binomial(n, j - i) for j in range(m - 1))
                  for i in range(m - 1))
    K_mat = Q_mat @ _coupling(m)
    T_mat = np.eye(m - 1) - K_mat
    for arr in (Q_mat, K_mat, T_mat):
        arr.flags.writeable = False
    return MatrixBundle(m, n, Q_mat, B_mat, normalising_scalar(m), K_mat, T_mat, dict(q_table))


def lu_determinant(A: np.ndarray) -> float:
    """Determinant from an LU factorisation with partial pivoting."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 1.0
    lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    swaps = np.count_nonzero(piv != np.arange(piv.size))
    return float((-1.0) ** swaps * np.prod(np.diag(lu)))


def det_T(bundle: MatrixBundle) -> float:
    return lu_determinant(bundle.T_mat)


def trace_log_determinant(K: np.ndarray, terms: int) -> float:
    """exp(-sum_{l=1}^{terms} tr(K^l)/l), which tends to det(I - K) when r(K) < 1."""
    K = np.asarray(K, dtype=float)
    power = np.eye(K.shape[0])
    acc = 0.0
    for l in range(1, terms + 1):
        power = power @ K
        acc += np.trace(power) / l
    return math.exp(-acc)


@dataclass(frozen=True)
class RankOneBound:
    m: int
    L_row: tuple[int, ...]
    lambda1_L: int
    lambda1_Kprime_exact: Fraction
    lambda1_Kprime: float


def rank_one_bound(m: int) -> RankOneBound:
    """Row of L, its only non-zero eigenvalue, and lambda_1(K').

    lambda_1(L) is computed by the direct double sum and by the closed form
    (m/2) C(2m-1, m-1) - 2^(2m-3); both are exact and must coincide.
    """
    if m < 2:
        raise DomainError(f"m must be >= 2, got {m}")
    n = 2 * m - 1
    row = []
    partial = 0
    for k in range(1, m):
        partial += binomial(n, k - 1)
        row.append(partial)
    direct = sum(row)
    closed = Fraction(m, 2) * binomial(2 * m - 1, m - 1) - Fraction(2) ** (2 * m - 3)
    if closed != direct:
        raise ConsistencyError(f"lambda_1(L) mismatch at m={m}: {direct} != {closed}")
    lam_k = 2 * Q_BOUND_CONSTANT * normalising_scalar(m) * direct
    return RankOneBound(m, tuple(row), direct, lam_k, float(lam_k))


def kprime_matrix(m: int) -> np.ndarray:
    """K'_ij = 2 * 1.827 * scalar * L_ij; every row equals the row of L."""
    bound = rank_one_bound(m)
    factor = 2 * Q_BOUND_CONSTANT * normalising_scalar(m)
    row = np.array([float(factor * v) for v in bound.L_row])
    return np.tile(row, (m - 1, 1))


def spectral_radius(X: np.ndarray) -> float:
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(X))))


def power_iteration(X: np.ndarray, tol: float = 1e-12, max_iter: int = 10_000,
                    seed: int = 0) -> tuple[float, int]:
    """Dominant eigenvalue modulus by power iteration in the infinity norm.

    Returns ``(estimate, iterations)``.  A zero matrix gives 0.
    """
    X = np.asarray(X, dtype=float)
    v = np.random.default_rng(seed).uniform(0.5, 1.5, X.shape[0])
    v /= np.abs(v).max()
    estimate = 0.0
    for it in range(1, max_iter + 1):
        w = X @ v
        norm = np.abs(w).max()
        if norm == 0.0:
            return 0.0, it
        v = w / norm
        if abs(norm - estimate) <= tol * norm:
            return float(norm), it
        estimate = norm
    return float(estimate), max_iter


@dataclass(frozen=True)
class Lemma2Report:
    precondition_ok: bool
    max_entry_excess: float
    r_K: float
    r_Kprime: float
    det_K: float
    det_Kprime: float
    holds: bool
    trace_log_errors: tuple[tuple[int, float], ...]


def lemma2_check(K: np.ndarray, Kprime: np.ndarray, slack: float = 0.0,
                 trace_terms: tuple[int, ...] = (5, 10, 20, 40)) -> Lemma2Report:
    """Check det(I-K) >= det(I-K') > 0 given |K| <= K' entrywise and r(K') < 1.

    A failing hypothesis is reported through ``precondition_ok``; ``holds`` is
    then meaningless rather than a counterexample.  The trace-log series error
    against the LU determinant is recorded at the truncation orders
    ``trace_terms`` for K.
    """
    K = np.asarray(K, dtype=float)
    Kprime = np.asarray(Kprime, dtype=float)
    eye = np.eye(K.shape[0])
    excess = float(np.max(np.abs(K) - Kprime)) if K.size else 0.0
    r_Kp = spectral_radius(Kprime)
    precondition = excess <= slack and r_Kp < 1.0
    det_K = lu_determinant(eye - K)
    det_Kp = lu_determinant(eye - Kprime)
    errors = tuple((L, abs(det_K - trace_log_determinant(K, L))) for L in trace_terms)
    return Lemma2Report(precondition, excess, spectral_radius(K), r_Kp, det_K, det_Kp,
                        bool(det_K >= det_Kp - slack and det_Kp > 0.0), errors)
