"""Partition functions of finite log gases and the beta = 1, 2, 4 ratio.

    Z_{V,beta,k} = (1/k!) int prod_{i<j} |x_i - x_j|^beta exp(-sum V(x_i)) dx

Three estimators are provided:

``tensor-quadrature``
    Nested Gauss-Legendre rules on the ordered region x_1 < ... < x_k, where
    the interaction is a polynomial and the integrand is smooth (k <= 4).
``monte-carlo``
    Independent draws from a tabulated density proportional to exp(-V/T),
    reweighted in log space; reproducible per (seed, beta, k, chunk) and
    independent of the number of workers (k <= 12).
``moments``
    Heine's determinant (beta = 2) and de Bruijn's Pfaffians (beta = 1, 4),
    written in the monic orthogonal-polynomial basis of exp(-V) on the
    truncated line to keep the matrices well conditioned.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .integration import gauss_legendre

__all__ = [
    "METHODS",
    "Potential",
    "LogGasEstimate",
    "RatioEstimate",
    "LogGasError",
    "truncation_radius",
    "proposal_temperature",
    "log_integrand",
    "partition_function",
    "universality_ratio",
    "convergence_study",
    "estimate_rows",
    "CSV_COLUMNS",
    "StudyRow",
    "MOMENTS_MAX_K",
]

METHODS = ("tensor-quadrature", "monte-carlo", "moments")
MAX_K = {"tensor-quadrature": 4, "monte-carlo": 12, "moments": 32}
# per-beta limits of the moments method: past these the skew moment
# matrices lose more than ~1e-5 relative accuracy to rounding
# (measured against Mehta's integral for the Gaussian weight)
MOMENTS_MAX_K = {1: 24, 2: 32, 4: 16}
CSV_COLUMNS = ("N", "beta", "k", "method", "value_log", "error", "seed")

_TENSOR_NODES = {1: 256, 2: 160, 3: 72, 4: 40}
_CHUNK = 1 << 14


class LogGasError(ValueError):
    """Invalid request or failed estimate for a log-gas quantity."""


@dataclass(frozen=True)
class Potential:
    """V(x) = sum_p coefficients[p] x^p, of even degree with positive leading term."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        while len(coeffs) > 1 and coeffs[-1] == 0.0:
            coeffs = coeffs[:-1]
        object.__setattr__(self, "coefficients", coeffs)
        degree = len(coeffs) - 1
        if degree < 2 or degree % 2:
            raise LogGasError(f"V must have even degree >= 2, got degree {degree}")
        if coeffs[-1] <= 0:
            raise LogGasError("leading coefficient of V must be positive")

    @classmethod
    def monomial(cls, m: int, kappa: float = 1.0) -> "Potential":
        """kappa * x^(2m)."""
        return cls((0.0,) * (2 * m) + (float(kappa),))

    @property
    def degree_half(self) -> int:
        return (len(self.coefficients) - 1) // 2

    def scaled(self, factor: float) -> "Potential":
        return Potential(tuple(factor * c for c in self.coefficients))

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coefficients)

    def label(self) -> str:
        terms = [f"{c:g}*x^{p}" for p, c in enumerate(self.coefficients) if c]
        return " + ".join(reversed(terms))


@dataclass(frozen=True)
class LogGasEstimate:
    value: float
    log_value: float
    error: float
    method: str
    k: int
    beta: int
    samples_or_nodes: int
    radius: float
    seed: int | None = None
    # kept separately so that it survives overflow of value and error
    relative_error: float = math.nan


def _check_request(beta: int, k: int, method: str) -> None:
    if beta not in (1, 2, 4):
        raise LogGasError(f"beta must be 1, 2 or 4, got {beta}")
    if method not in METHODS:
        raise LogGasError(f"unknown method {method!r}; choose from {METHODS}")
    if k < 1 or k > MAX_K[method]:
        raise LogGasError(f"k={k} outside 1..{MAX_K[method]} for method {method}")
    if method == "moments" and beta == 1 and k % 2 and k > 1:
        # de Bruijn's odd-k formula needs a bordered matrix; only even k here
        raise LogGasError("moments method for beta=1 requires k = 1 or even k")
    if method == "moments" and k > MOMENTS_MAX_K[beta]:
        raise LogGasError(f"moments method for beta={beta} is limited to k <= {MOMENTS_MAX_K[beta]}")


def truncation_radius(V: Potential, beta: int, k: int, digits: float = 14.0) -> float:
    """Smallest R (on a 1/64 grid) with V(R) - (beta(k-1) + 1) log(1 + 2R) beyond
    ``digits`` decades above min V, in both directions."""
    target = digits * math.log(10.0) + 5.0
    vmin = float(np.min(V(np.linspace(-4.0, 4.0, 801))))
    r = 0.25
    while True:
        tail = min(V(r), V(-r)) - vmin - (beta * (k - 1) + 1) * math.log1p(2 * r)
        if tail >= target:
            return r
        r += 1.0 / 64


def log_integrand(x: np.ndarray, V: Potential, beta: int) -> np.ndarray:
    """log of prod_{i<j} |x_i - x_j|^beta exp(-sum V(x_i)) along the last axis."""
    x = np.asarray(x, dtype=float)
    k = x.shape[-1]
    out = -V(x).sum(axis=-1)
    for i in range(k):
        for j in range(i + 1, k):
            out = out + beta * np.log(np.abs(x[..., j] - x[..., i]))
    return out


# ----------------------------------------------------------------- tensor rule

def _tensor_log_sum(V: Potential, beta: int, k: int, R: float, nodes: int) -> float:
    """log of int over x_1 < ... < x_k in [-R, R]^k, nested Gauss rules."""
    panels = max(1, nodes // 20)
    order = max(2, nodes // panels)
    t, w = gauss_legendre(order)
    unit_nodes = ((np.arange(panels)[:, None] + 0.5 * (t + 1.0)) / panels).ravel()
    unit_weights = np.tile(w / (2 * panels), panels)

    lo = np.full(1, -R)
    logw = np.zeros(1)
    coords: list[np.ndarray] = []
    for _ in range(k):
        width = R - lo
        new = lo[:, None] + width[:, None] * unit_nodes[None, :]
        new_logw = (logw[:, None] + np.log(width)[:, None] + np.log(unit_weights)[None, :]
                    - V(new))
        for prev in coords:
            new_logw = new_logw + beta * np.log(new - prev[:, None])
        coords = [np.repeat(c, unit_nodes.size) for c in coords] + [new.ravel()]
        logw = new_logw.ravel()
        lo = new.ravel()
    top = logw.max()
    return float(top + math.log(math.fsum(np.exp(logw - top))))


# relative size of the discarded tail beyond the truncation radius
TAIL_TOLERANCE = 1e-14


def _relative_gap(log_gap: float) -> float:
    """Relative resolution gap, never below the truncation tail."""
    return max(abs(math.expm1(log_gap)), TAIL_TOLERANCE)


def _tensor_estimate(V, beta, k, R, nodes):
    nodes = nodes or _TENSOR_NODES[k]
    fine = _tensor_log_sum(V, beta, k, R, nodes)
    coarse = _tensor_log_sum(V, beta, k, R, max(8, (3 * nodes) // 4))
    # ordered region: the 1/k! is absorbed by the k! orderings
    return fine, _relative_gap(coarse - fine), nodes ** k


# ----------------------------------------------------------------- Monte Carlo

@dataclass(frozen=True)
class _Sampler:
    edges: np.ndarray
    cdf: np.ndarray
    log_density: np.ndarray
    log_mass: float


def proposal_temperature(beta: int, k: int) -> float:
    """Temperature T of the proposal exp(-V/T); the repulsion spreads the gas
    beyond exp(-V), and an untempered proposal gives heavy-tailed weights."""
    return 1.0 + beta * (k - 1) / 2.0


def _build_sampler(V: Potential, R: float, temperature: float = 1.0,
                   cells: int = 8192) -> _Sampler:
    edges = np.linspace(-R, R, cells + 1)
    t, w = gauss_legendre(8)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    weights = np.exp(-V(mid + half * t) / temperature)
    mass = half[:, 0] * (weights @ w)
    total = math.fsum(mass)
    cdf = np.cumsum(mass) / total
    cdf[-1] = 1.0
    # piecewise-constant proposal density, normalised on [-R, R]
    log_density = np.log(mass / total) - np.log(edges[1:] - edges[:-1])
    return _Sampler(edges, cdf, log_density, math.log(total))


def _mc_chunk(args) -> tuple[float, float, float, int]:
    sampler, V, beta, k, seed, chunk, n = args
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(beta, k, chunk)))
    u = rng.random((n, k))
    cell = np.searchsorted(sampler.cdf, u, side="right").clip(0, sampler.cdf.size - 1)
    left = sampler.edges[cell]
    x = left + rng.random((n, k)) * (sampler.edges[cell + 1] - left)
    logf = log_integrand(x, V, beta) - sampler.log_density[cell].sum(axis=-1)
    top = float(logf.max())
    s = np.exp(logf - top)
    return top, math.fsum(s), math.fsum(s * s), n


def _mc_estimate(V, beta, k, R, samples, seed, jobs):
    sampler = _build_sampler(V, R, proposal_temperature(beta, k))
    n_chunks = max(1, math.ceil(samples / _CHUNK))
    tasks = [(sampler, V, beta, k, seed, c, _CHUNK) for c in range(n_chunks)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_mc_chunk, tasks))
    else:
        parts = [_mc_chunk(t) for t in tasks]
    top = max(p[0] for p in parts)
    s1 = math.fsum(p[1] * math.exp(p[0] - top) for p in parts)
    s2 = math.fsum(p[2] * math.exp(2 * (p[0] - top)) for p in parts)
    n = sum(p[3] for p in parts)
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0) / (n - 1)
    log_value = math.log(mean) + top - gammaln(k + 1)
    return log_value, math.sqrt(var) / mean, n


# ----------------------------------------------------------------- moments

def _recurrence(x: np.ndarray, omega: np.ndarray, degree: int):
    """Stieltjes coefficients (a_j, b_j) of the monic orthogonal polynomials
    p_0..p_degree for the discrete measure sum omega_i delta_{x_i}."""
    a = np.zeros(degree)
    b = np.zeros(degree)
    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    prev_norm = 1.0
    for j in range(degree):
        norm = omega @ (p * p)
        a[j] = (omega @ (x * p * p)) / norm
        b[j] = norm / prev_norm if j else 0.0
        p_prev, p = p, (x - a[j]) * p - b[j] * p_prev
        prev_norm = norm
    return a, b


def _basis(points: np.ndarray, a: np.ndarray, b: np.ndarray):
    """Values and derivatives of p_0..p_degree at ``points``."""
    degree = a.size
    P = np.zeros((degree + 1, points.size))
    D = np.zeros_like(P)
    P[0] = 1.0
    for j in range(degree):
        P[j + 1] = (points - a[j]) * P[j]
        D[j + 1] = P[j] + (points - a[j]) * D[j]
        if j:
            P[j + 1] -= b[j] * P[j - 1]
            D[j + 1] -= b[j] * D[j - 1]
    return P, D


def _line_rule(R: float, nodes: int):
    """Composite Gauss-Legendre rule on [-R, R]; also returns each node's
    panel index and the panel edges."""
    panels = max(1, nodes // 32)
    order = max(2, nodes // panels)
    t, w = gauss_legendre(order)
    edges = np.linspace(-R, R, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    panel = np.repeat(np.arange(panels), order)
    return (mid + half * t).ravel(), (half * w).ravel(), panel, edges


def _log_pfaffian_abs(A: np.ndarray) -> float:
    sign, logdet = np.linalg.slogdet(A)
    if sign <= 0:
        raise LogGasError("skew moment matrix is singular to working precision")
    return 0.5 * logdet


def _moments_log(V: Potential, beta: int, k: int, R: float, nodes: int) -> float:
    x, wq, panel, edges = _line_rule(R, nodes)
    omega = wq * np.exp(-V(x))
    if k == 1:
        return math.log(omega.sum())
    if beta == 2:
        a, b = _recurrence(x, omega, k - 1)
        P, _ = _basis(x, a, b)
        sign, logdet = np.linalg.slogdet((P * omega) @ P.T)
        return float(logdet)
    if beta == 4:
        a, b = _recurrence(x, omega, 2 * k - 1)
        P, D = _basis(x, a, b)
        A = (P * omega) @ D.T
        return _log_pfaffian_abs(A - A.T)
    # beta = 1, even k: F_ij = int int_{x<y} (p_i(x) p_j(y) - p_j(x) p_i(y)) w(x) w(y).
    # The inner integral G_j(x) = int_x^R p_j w is accumulated from the nearer
    # end of the line (for x < 0 as total - int_{-R}^x), which avoids summing
    # the large alternating tails of p_j w.  Each node contributes a short
    # Gauss rule over the rest of its panel plus exact sums over whole panels.
    a, b = _recurrence(x, omega, k - 1)
    P, _ = _basis(x, a, b)
    starts = np.flatnonzero(np.r_[True, np.diff(panel) != 0])
    per_panel = np.add.reduceat(P * omega, starts, axis=1)
    zero = np.zeros((P.shape[0], 1))
    after = np.concatenate([np.cumsum(per_panel[:, ::-1], axis=1)[:, ::-1][:, 1:], zero], axis=1)
    before = np.concatenate([zero, np.cumsum(per_panel, axis=1)[:, :-1]], axis=1)
    total = per_panel.sum(axis=1)[:, None]
    right = x >= 0.0
    lo = np.where(right, x, edges[panel])
    hi = np.where(right, edges[panel + 1], x)
    t, w = gauss_legendre(48)
    width = 0.5 * (hi - lo)[:, None]
    Y = lo[:, None] + width * (t + 1.0)
    WY = width * w * np.exp(-V(Y))
    PY, _ = _basis(Y.ravel(), a, b)
    piece = (PY.reshape(P.shape[0], x.size, t.size) * WY).sum(axis=2)
    G = np.where(right, piece + after[:, panel], total - (before[:, panel] + piece))
    # orthonormal scaling keeps the skew matrix well conditioned;
    # Pf(D F D) = det(D) Pf(F)
    scale = 1.0 / np.sqrt((P * P) @ omega)
    M = ((P * scale[:, None]) * omega) @ (G * scale[:, None]).T
    return _log_pfaffian_abs(M - M.T) - float(np.log(scale).sum())


def _moments_estimate(V, beta, k, R, nodes):
    nodes = nodes or 192
    fine = _moments_log(V, beta, k, R, nodes)
    coarse = _moments_log(V, beta, k, R, max(32, (2 * nodes) // 3))
    return fine, _relative_gap(coarse - fine), nodes


# ----------------------------------------------------------------- public API

def partition_function(V: Potential, beta: int, k: int, method: str = "tensor-quadrature",
                       *, nodes: int | None = None, samples: int = 1 << 18,
                       seed: int = 0, jobs: int = 1,
                       radius: float | None = None) -> LogGasEstimate:
    """Estimate Z_{V,beta,k} with an error bar.

    ``nodes`` sets the per-dimension resolution of the deterministic methods,
    ``samples`` (rounded up to a whole number of chunks) the Monte Carlo
    sample size.  The line is truncated to [-R, R] with R from
    :func:`truncation_radius` unless ``radius`` is given.
    """
    _check_request(beta, k, method)
    R = float(radius) if radius is not None else truncation_radius(V, beta, k)
    if method == "tensor-quadrature":
        log_value, rel_error, count = _tensor_estimate(V, beta, k, R, nodes)
        used_seed = None
    elif method == "monte-carlo":
        log_value, rel_error, count = _mc_estimate(V, beta, k, R, samples, seed, jobs)
        used_seed = seed
    else:
        log_value, rel_error, count = _moments_estimate(V, beta, k, R, nodes)
        used_seed = None
    value = math.exp(log_value) if log_value < 700 else math.inf
    if not (math.isfinite(log_value) and math.isfinite(rel_error)):
        raise LogGasError(f"non-finite estimate for beta={beta}, k={k}, method={method}")
    return LogGasEstimate(value, log_value, value * rel_error, method, k, beta, count, R,
                          used_seed, rel_error)


def _default_method(k: int) -> str:
    return "tensor-quadrature" if k <= MAX_K["tensor-quadrature"] else "monte-carlo"


@dataclass(frozen=True)
class RatioEstimate:
    """Z_{2V,4,N/2} Z_{V,1,N} / (2^N (N/2)! Z_{2V,2,N}) with propagated error.

    ``rescaled`` multiplies by (N/2)!, i.e. the same ratio with every Z
    taken without its 1/k! prefactor.
    """

    N: int
    value: float
    error: float
    log_value: float
    rescaled: float
    rescaled_error: float
    components: tuple[LogGasEstimate, LogGasEstimate, LogGasEstimate]
    inconclusive: bool


def universality_ratio(N: int, V: Potential, *, method: str | None = None,
                       samples: int = 1 << 18, seed: int = 0, jobs: int = 1,
                       radius_pad: float = 0.0) -> RatioEstimate:
    """The finite-N ratio of the beta = 4, 1 and 2 partition functions.

    ``method=None`` uses tensor quadrature where k <= 4 and Monte Carlo
    otherwise.  ``radius_pad`` widens every truncation radius.
    """
    if N < 2 or N % 2:
        raise LogGasError(f"N must be even and >= 2, got {N}")
    V2 = V.scaled(2.0)
    parts = []
    for W, beta, k in ((V2, 4, N // 2), (V, 1, N), (V2, 2, N)):
        chosen = method or _default_method(k)
        R = truncation_radius(W, beta, k) + radius_pad
        parts.append(partition_function(W, beta, k, chosen, samples=samples, seed=seed,
                                        jobs=jobs, radius=R))
    z4, z1, z2 = parts
    log_factor = N * math.log(2.0) + gammaln(N // 2 + 1)
    log_value = z4.log_value + z1.log_value - z2.log_value - log_factor
    rel = math.sqrt(sum(p.relative_error ** 2 for p in parts))
    value = math.exp(log_value)
    rescaled = math.exp(log_value + gammaln(N // 2 + 1))
    return RatioEstimate(N, value, value * rel, log_value, rescaled, rescaled * rel,
                         (z4, z1, z2), bool(value * rel > value))


@dataclass(frozen=True)
class StudyRow:
    N: int
    ratio: float
    error: float
    rescaled: float
    rescaled_error: float
    det_T: float
    distance: float
    rescaled_distance: float
    inconclusive: bool
    estimates: tuple[LogGasEstimate, ...] = field(repr=False, default=())


def convergence_study(m: int, N_list: Sequence[int], V: Potential | None = None, *,
                      det_T: float | None = None, method: str | None = None,
                      samples: int = 1 << 18, seed: int = 0, jobs: int = 1) -> list[StudyRow]:
    """Ratio against det T^[m-1] for each N in ``N_list``; reports, never asserts."""
    if list(N_list) != sorted(N_list) or any(N % 2 for N in N_list):
        raise LogGasError("N_list must be even and ascending")
    V = V or Potential.monomial(m)
    if det_T is None:
        from .matrices import build_bundle, det_T as _det
        det_T = _det(build_bundle(m))
    rows = []
    for N in N_list:
        r = universality_ratio(N, V, method=method, samples=samples, seed=seed, jobs=jobs)
        rows.append(StudyRow(N, r.value, r.error, r.rescaled, r.rescaled_error, det_T,
                             abs(r.value - det_T), abs(r.rescaled - det_T),
                             r.inconclusive, r.components))
    return rows


def estimate_rows(N: int, estimates: Sequence[LogGasEstimate]) -> list[dict]:
    """CSV rows (N, beta, k, method, value_log, error, seed) for ``estimates``."""
    return [{"N": N, "beta": e.beta, "k": e.k, "method": e.method,
             "value_log": e.log_value, "error": e.error,
             "seed": "" if e.seed is None else e.seed} for e in estimates]
