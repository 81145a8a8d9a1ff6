"""Certificates for the determinant lower bound and its supporting lemmas.

Every check records the computed value, the threshold and the outcome, so a
report can be serialised and compared across runs.  Thresholds carry explicit
slack: ``QUAD_SLACK`` for quantities that pass through quadrature,
``EXACT_SLACK`` for those computed in exact or near-exact arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from .integration import DEFAULT_SPEC, QuadratureSpec, gauss_legendre
from .matrices import (Q_BOUND_CONSTANT, build_bundle, det_T, kprime_matrix,
                       lemma2_check, q_values, rank_one_bound,
                       trace_log_determinant)
from .quadrature import dirichlet_ratio
from .special_functions import (GIBBS_CONSTANT, F_derivatives, F_eval, G_eval,
                                beta_coefficients, distinguished_points,
                                u_eval, u_rational, u_second_derivative,
                                w_eval, w_fourier)

__all__ = [
    "DET_LOWER_BOUND",
    "LAMBDA_BOUND",
    "Q_LOWER_CONSTANT",
    "Check",
    "BoundReport",
    "Lemma3Report",
    "Lemma4Report",
    "FGReport",
    "MapleReport",
    "verify_theorem1",
    "verify_lemma3",
    "verify_lemma4",
    "verify_FG",
    "maple_check",
    "cumulative_w",
]

DET_LOWER_BOUND = 0.0865
LAMBDA_BOUND = Fraction(9135, 10000)
# one-sided lower estimate: -(1/2) * 1.218 / m
Q_LOWER_CONSTANT = -0.609
W_BOUND = 1.218
F_BOUND = 2.607
G_BOUND = 41.3
MAPLE_MARGIN = 0.0129

QUAD_SLACK = 1e-6
EXACT_SLACK = 1e-12
DET_SLACK = 1e-9


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    relation: str
    passed: bool


def _check(name: str, value, relation: str, threshold) -> Check:
    value = float(value)
    threshold = float(threshold)
    ops = {
        "<=": value <= threshold,
        "<": value < threshold,
        ">=": value >= threshold,
        ">": value > threshold,
        "==": value == threshold,
    }
    return Check(name, value, threshold, relation, bool(ops[relation]))


@dataclass
class _Report:
    details: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.details)

    def failures(self) -> list[Check]:
        return [c for c in self.details if not c.passed]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


@dataclass
class BoundReport(_Report):
    m: int = 0
    max_mQ: float = math.nan
    max_signed_mQ: float = math.nan
    min_signed_mQ: float = math.nan
    lambda1_Kprime: float = math.nan
    det_T: float = math.nan
    det_trace_log: float = math.nan
    lemma2_ok: bool = False
    theorem1_ok: bool = False


def verify_theorem1(m: int, spec: QuadratureSpec = DEFAULT_SPEC,
                    stability_check: bool = False) -> BoundReport:
    """Run the Q-sweep, the rank-one bound, the entrywise determinant comparison and the
    direct determinant for one m.

    ``stability_check`` repeats the assembly with tightened quadrature and
    requires the determinant to move by at most 1e-8.
    """
    table = q_values(m, spec)
    signed = np.array([m * v for v in table.values()])
    rank_one = rank_one_bound(m)
    bundle = build_bundle(m, spec, q_table=table)
    det = det_T(bundle)
    lemma2 = lemma2_check(bundle.K_mat, kprime_matrix(m), slack=EXACT_SLACK)
    det_series = trace_log_determinant(bundle.K_mat, 400)
    c = float(Q_BOUND_CONSTANT)
    sharp = 1.5 * GIBBS_CONSTANT

    rep = BoundReport(m=m, max_mQ=float(np.abs(signed).max()),
                      max_signed_mQ=float(signed.max()),
                      min_signed_mQ=float(signed.min()),
                      lambda1_Kprime=rank_one.lambda1_Kprime, det_T=det,
                      det_trace_log=det_series, lemma2_ok=lemma2.precondition_ok and lemma2.holds)
    d = rep.details
    d.append(_check("max_q m|Q(q)| <= 1.827", rep.max_mQ, "<=", c + QUAD_SLACK))
    d.append(_check("max_q m|Q(q)| <= (3/2)(sqrt3/pi + 2/3)", rep.max_mQ, "<=", sharp + QUAD_SLACK))
    d.append(_check("max_q m Q(q) <= 1.827", rep.max_signed_mQ, "<=", c))
    d.append(_check("min_q m Q(q) >= -0.609", rep.min_signed_mQ, ">=", Q_LOWER_CONSTANT - QUAD_SLACK))
    d.append(_check("lambda1(K') <= 0.9135", rep.lambda1_Kprime, "<=", float(LAMBDA_BOUND) + EXACT_SLACK))
    d.append(_check("1 - lambda1(K') >= 0.0865", 1.0 - rep.lambda1_Kprime, ">=", DET_LOWER_BOUND - EXACT_SLACK))
    d.append(_check("lemma2 |K| - K' entrywise", lemma2.max_entry_excess, "<=", EXACT_SLACK))
    d.append(_check("lemma2 r(K') < 1", lemma2.r_Kprime, "<", 1.0))
    d.append(_check("r(K) <= r(K')", lemma2.r_K, "<=", lemma2.r_Kprime + EXACT_SLACK))
    d.append(_check("lemma2 det(I-K) - det(I-K')", lemma2.det_K - lemma2.det_Kprime, ">=", -EXACT_SLACK))
    d.append(_check("det T >= 0.0865", det, ">=", DET_LOWER_BOUND - DET_SLACK))
    d.append(_check("det T - (1 - lambda1(K'))", det - (1.0 - rep.lambda1_Kprime), ">=", -DET_SLACK))
    d.append(_check("|det T (LU) - det T (trace-log)|", abs(det - det_series), "<=", DET_SLACK))
    if stability_check:
        fine = det_T(build_bundle(m, spec.tightened()))
        d.append(_check("|det T - det T (tightened quadrature)|", abs(det - fine), "<=", 1e-8))
    rep.theorem1_ok = rep.passed
    return rep


@dataclass
class Lemma3Report(_Report):
    m: int = 0
    x0: float = math.nan
    x1: float = math.nan
    u_min: float = math.nan
    u_max: float = math.nan
    sign_changes: int = 0
    raw_sign_flips: int = 0
    u_at_x_m_margin: float = math.nan


def _confirmed_transitions(signs: np.ndarray, confirm: int = 3) -> tuple[int, int, int]:
    """Count sign transitions in a +-1 sequence.

    Returns ``(confirmed, raw, first_sign)``; a transition is confirmed when
    the new sign holds for ``confirm`` consecutive points (or until the end).
    """
    raw = int(np.count_nonzero(signs[1:] != signs[:-1]))
    confirmed = 0
    current = signs[0]
    i = 1
    while i < signs.size:
        if signs[i] != current:
            run = signs[i:i + confirm]
            if np.all(run == signs[i]):
                confirmed += 1
                current = signs[i]
        i += 1
    return confirmed, raw, int(signs[0])


def verify_lemma3(m: int, grid_step: float = 1e-4, zero_tol: float = 1e-13) -> Lemma3Report:
    """Numerical check of unimodality and range of u(.; m) on [0, 1].

    Also checks the derived identities at the interior critical point x0:
    the closed expression for u''(x0) and the reconstruction of 1 - x0^2.
    """
    poly = beta_coefficients(m)
    n = int(round(1.0 / grid_step))
    x = np.linspace(0.0, 1.0, n + 1)
    pts = u_eval(x, m, poly)
    du = pts.derivative[1:]
    nonzero = np.abs(du) >= zero_tol
    signs = np.sign(du[nonzero])
    confirmed, raw, first = _confirmed_transitions(signs)

    rep = Lemma3Report(m=m, u_min=float(pts.value.min()), u_max=float(pts.value.max()),
                       sign_changes=confirmed, raw_sign_flips=raw)
    d = rep.details
    d.append(_check("u' negative right of 0", first, "<", 0))
    d.append(_check("u' sign changes (confirmed)", confirmed, "==", 1))
    d.append(_check("|u(0)|", abs(u_eval(0.0, m, poly).value), "<=", EXACT_SLACK))
    d.append(_check("|u(1) - 1/(2m)|", abs(u_eval(1.0, m, poly).value - 1 / (2 * m)), "<=", EXACT_SLACK))
    d.append(_check("|u'(1) - (2/3 + 1/(3m))|",
                    abs(u_eval(1.0, m, poly).derivative - (2 / 3 + 1 / (3 * m))), "<=", 1e-10))
    d.append(_check("min u + 1/(4m)", rep.u_min + 1 / (4 * m), ">", 0.0))
    d.append(_check("max u - 1/(2m)", rep.u_max - 1 / (2 * m), "<=", EXACT_SLACK))

    step = 1e-4
    fd_u2 = (u_eval(step, m, poly).derivative - u_eval(-step, m, poly).derivative) / (2 * step)
    d.append(_check("|u''(0) + 1/(m(2m-3))| (central difference)",
                    abs(fd_u2 + 1.0 / (m * (2 * m - 3))), "<=", 1e-6))

    # critical point x0 and zero crossing x1
    idx = np.flatnonzero((pts.derivative[1:-1] < 0) & (pts.derivative[2:] >= 0))
    if idx.size:
        lo, hi = x[idx[0] + 1], x[idx[0] + 2]
        x0 = brentq(lambda t: u_eval(t, m, poly).derivative, lo, hi, xtol=1e-15)
        rep.x0 = x0
        u0 = u_eval(x0, m, poly).value
        predicted = (4 * m * (m + 1) * u0 - 1) ** 2 / (m * (1 - 2 * m * u0) * (1 - 4 * m * u0))
        # third derivative of u near x0 grows with m
        h = min(1e-5, 1e-4 / m)
        fd = (u_eval(x0 + h, m, poly).derivative - u_eval(x0 - h, m, poly).derivative) / (2 * h)
        d.append(_check("|u''(x0) closed form - finite difference|", abs(predicted - fd), "<=", 1e-5))
        d.append(_check("|u''(x0) closed form - analytic|",
                        abs(predicted - u_second_derivative(x0, m, poly)), "<=", 1e-8))
        one_minus = -(1 - 2 * m * u0) * (1 - 4 * m * u0) / (4 * m * (m + 1) * u0 - 1)
        d.append(_check("|1 - x0^2 reconstructed - 1 + x0^2|", abs(one_minus - (1 - x0 * x0)), "<=", 1e-8))
    else:
        d.append(Check("interior critical point located", math.nan, math.nan, "exists", False))

    crossing = np.flatnonzero((pts.value[1:-1] < 0) & (pts.value[2:] >= 0))
    if crossing.size:
        rep.x1 = brentq(lambda t: u_eval(t, m, poly).value,
                        x[crossing[0] + 1], x[crossing[0] + 2], xtol=1e-15)
        d.append(_check("x0 < x1", rep.x0, "<", rep.x1))

    dp = distinguished_points(m)
    rep.u_at_x_m_margin = u_eval(dp.x_m, m, poly).value + 1 / (4 * m)
    d.append(_check("u(x_m) + 1/(4m)", rep.u_at_x_m_margin, ">", 0.0))
    d.append(_check("mu_m > 1", dp.mu_m, ">", 1.0))
    d.append(_check("mu_m < sqrt(3)", dp.mu_m, "<", math.sqrt(3)))
    return rep


@dataclass
class MapleReport(_Report):
    minimum: float = math.nan
    argmin: int = 0
    terms: dict[int, float] = field(default_factory=dict)


def maple_check(m_max: int = 15) -> MapleReport:
    """min over 2 <= m <= m_max of u(x_m; m) + 1/(4m), in exact arithmetic.

    x_m^2 = (m-1)/(m+2) is rational and h is a polynomial in x^2, so only
    sums and products of rationals are involved.
    """
    terms = {}
    for m in range(2, m_max + 1):
        exact = u_rational(Fraction(m - 1, m + 2), m) + Fraction(1, 4 * m)
        terms[m] = float(exact)
    argmin = min(terms, key=terms.get)
    rep = MapleReport(minimum=terms[argmin], argmin=argmin, terms=terms)
    rep.details.append(_check(f"min_m<= {m_max} u(x_m) + 1/(4m)", rep.minimum, ">", MAPLE_MARGIN))
    for m, v in terms.items():
        floating = u_eval(distinguished_points(m).x_m, m).value + 1 / (4 * m)
        rep.details.append(_check(f"|exact - float| m={m}", abs(v - floating), "<=", EXACT_SLACK))
    return rep


@dataclass
class FGReport(_Report):
    min_F: float = math.nan
    G_sqrt3: float = math.nan
    F_at_1: float = math.nan
    dF_at_1: float = math.nan
    d2F_at_1: float = math.nan
    taylor_lower: float = math.nan
    min_F_minus_G_over_16: float = math.nan


def verify_FG(grid_step: float = 1e-3, spec: QuadratureSpec = DEFAULT_SPEC) -> FGReport:
    """Checks of F and G on a grid of [1, sqrt(3)]."""
    root3 = math.sqrt(3)
    mu = np.append(np.arange(1.0, root3, grid_step), root3)
    F = np.array([F_eval(v, spec) for v in mu])
    G = np.array([G_eval(v, spec) for v in mu])
    G3 = G_eval(root3, spec)
    dF, d2F, _ = F_derivatives(1.0, spec)
    third = np.array([F_derivatives(v, spec)[2] for v in mu])
    # finite-difference third derivative on the grid interior
    fd_third = (F[3:] - 3 * F[2:-1] + 3 * F[1:-2] - F[:-3])[:-1] / grid_step ** 3

    rep = FGReport(min_F=float(F.min()), G_sqrt3=G3, F_at_1=F[0], dF_at_1=dF, d2F_at_1=d2F,
                   taylor_lower=math.e - 0.415 / 2 * (root3 - 1) ** 2,
                   min_F_minus_G_over_16=float((F - G3 / 16).min()))
    d = rep.details
    d.append(_check("min F on [1, sqrt3]", rep.min_F, ">", F_BOUND))
    d.append(_check("G(sqrt3)", G3, "<", G_BOUND))
    d.append(_check("|F(1) - e|", abs(F[0] - math.e), "<=", 1e-10))
    d.append(_check("F'(1)", dF, ">", 2.304))
    d.append(_check("F''(1)", d2F, ">", -0.415))
    d.append(_check("min F''' (analytic)", third.min(), ">=", 0.0))
    d.append(_check("min F''' (finite difference)", fd_third.min(), ">=", 0.0))
    d.append(_check("e - 0.415/2 (sqrt3 - 1)^2", rep.taylor_lower, ">", F_BOUND))
    d.append(_check("min F - G(sqrt3)/16", rep.min_F_minus_G_over_16, ">=", 0.0))
    d.append(_check("41.3/16", G_BOUND / 16, "<", F_BOUND))
    d.append(_check("G nondecreasing on grid", float(np.diff(G).min()), ">=", 0.0))
    return rep


def cumulative_w(x: np.ndarray, q: int, order: int = 16) -> np.ndarray:
    """W at the increasing abscissae ``x`` (with x[0] = 0), accumulating one
    Gauss-Legendre rule per grid interval."""
    x = np.asarray(x, dtype=float)
    t, w = gauss_legendre(order)
    mid = 0.5 * (x[1:] + x[:-1])[:, None]
    half = 0.5 * (x[1:] - x[:-1])[:, None]
    pieces = half[:, 0] * (dirichlet_ratio(mid + half * t, q) @ w)
    return 2.0 / math.pi * np.concatenate([[0.0], np.cumsum(pieces)])


@dataclass
class Lemma4Report(_Report):
    per_q: dict[int, dict[str, float]] = field(default_factory=dict)
    max_W: float = math.nan
    min_W: float = math.nan


def verify_lemma4(q_list=range(3, 202, 2), grid_step: float = 1e-3,
                  spec: QuadratureSpec = DEFAULT_SPEC) -> Lemma4Report:
    """Bounds 0 <= W <= 1.218 on a grid of [0, pi/2] for every q in ``q_list``.

    The grid maximum is refined to the nearest zero of sin(q s) (a critical
    point of W) and re-evaluated there with adaptive quadrature.
    """
    x = np.append(np.arange(0.0, math.pi / 2, grid_step), math.pi / 2)
    rep = Lemma4Report()
    for q in q_list:
        W = cumulative_w(x, q)
        i = int(np.argmax(W))
        lo, hi = x[max(i - 1, 1)], x[min(i + 1, x.size - 1)]
        fa, fb = dirichlet_ratio(lo, q), dirichlet_ratio(hi, q)
        if i > 0 and fa * fb < 0:
            xstar = brentq(lambda s: float(dirichlet_ratio(s, q)), lo, hi, xtol=1e-15)
        else:
            xstar = x[i]
        wstar = w_eval(xstar, q, spec)
        rep.per_q[q] = {
            "grid_max": float(W.max()),
            "grid_min": float(W.min()),
            "argmax": float(xstar),
            "refined_max": wstar,
            "fourier_discrepancy": float(np.abs(W - w_fourier(x, q)).max()),
            "W_pi_over_2": float(W[-1]),
        }
    maxima = [v["refined_max"] for v in rep.per_q.values()] + [v["grid_max"] for v in rep.per_q.values()]
    rep.max_W = float(max(maxima))
    rep.min_W = float(min(v["grid_min"] for v in rep.per_q.values()))
    d = rep.details
    d.append(_check("min W", rep.min_W, ">=", -1e-9))
    d.append(_check("max W", rep.max_W, "<=", W_BOUND))
    d.append(_check("max W - (sqrt3/pi + 2/3)", rep.max_W - GIBBS_CONSTANT, "<=", 1e-9))
    d.append(_check("max |grid quadrature - Fourier closed form|",
                    max(v["fourier_discrepancy"] for v in rep.per_q.values()), "<=", 1e-12))
    d.append(_check("max |W(pi/2) - 1|",
                    max(abs(v["W_pi_over_2"] - 1) for v in rep.per_q.values()), "<=", 1e-10))
    if 3 in rep.per_q:
        d.append(_check("|max W (q=3) - (sqrt3/pi + 2/3)|",
                        abs(rep.per_q[3]["refined_max"] - GIBBS_CONSTANT), "<=", 1e-9))
        d.append(_check("|argmax W (q=3) - pi/3|", abs(rep.per_q[3]["argmax"] - math.pi / 3), "<=", 1e-9))
    return rep
