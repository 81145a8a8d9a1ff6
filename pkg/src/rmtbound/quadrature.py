"""The oscillatory integrals I(q) and Q(q) of the Dirichlet-type kernel.

Production path: the trigonometric form on [0, pi/2] integrated by the
adaptive Gauss-Legendre rule of :mod:`rmtbound.integration`, with at least one
panel per half-period of sin(q s).  Cross-check paths: the arcsin form (via
QUADPACK's algebraic-weight rule) and the form written in terms of u.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate as _scipy_integrate

from .integration import (DEFAULT_SPEC, DomainError, IntegralResult,
                          QuadratureError, QuadratureSpec, integrate)
from .special_functions import HPoly, beta_coefficients, h_eval, u_eval

__all__ = [
    "QuadratureSpec",
    "IntegralResult",
    "QuadratureError",
    "DomainError",
    "DEFAULT_SPEC",
    "integrate",
    "I_of_q",
    "I_of_q_arcsin",
    "Q_of_q",
    "Q_of_q_via_u",
    "check_q_argument",
    "dirichlet_ratio",
]

# below this the removable 0/0 at s = 0 is replaced by its limit
_SINGULAR_CUTOFF = 1e-8


def check_q_argument(q: int, m: int) -> None:
    if m < 2:
        raise DomainError(f"m must be >= 2, got {m}")
    if q % 2 == 0 or not 3 <= q <= 4 * m - 5:
        raise DomainError(f"q must be odd with 3 <= q <= 4m-5 = {4 * m - 5}, got {q}")


def dirichlet_ratio(s: np.ndarray, q: int) -> np.ndarray:
    """sin(q s) / sin(s) with the removable point s = 0 set to q."""
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < _SINGULAR_CUTOFF
    safe = np.where(small, 1.0, s)
    return np.where(small, float(q), np.sin(q * safe) / np.sin(safe))


def _oscillatory_integral(g, q: int, spec: QuadratureSpec) -> IntegralResult:
    spec = spec.with_hint(max(q, spec.oscillation_hint))
    return integrate(lambda s: dirichlet_ratio(s, q) * g(s), 0.0, math.pi / 2, spec)


def I_of_q(q: int, m: int, spec: QuadratureSpec = DEFAULT_SPEC,
           poly: HPoly | None = None) -> float:
    """I(q) = (4/pi) * int_0^{pi/2} sin(q s) / (sin(s) h(cos s)) ds."""
    check_q_argument(q, m)
    poly = poly or beta_coefficients(m)
    res = _oscillatory_integral(lambda s: 1.0 / h_eval(np.cos(s), poly), q, spec)
    return 4.0 / math.pi * res.value


def Q_of_q(q: int, m: int, spec: QuadratureSpec = DEFAULT_SPEC,
           poly: HPoly | None = None) -> float:
    """Q(q) = I(q) + 1/(2m)."""
    return I_of_q(q, m, spec, poly) + 1.0 / (2 * m)


def Q_of_q_via_u(q: int, m: int, spec: QuadratureSpec = DEFAULT_SPEC,
                 poly: HPoly | None = None) -> float:
    """Q(q) as (4/pi) * int_0^{pi/2} sin(q s)/sin(s) * u(cos s) ds."""
    check_q_argument(q, m)
    poly = poly or beta_coefficients(m)
    res = _oscillatory_integral(lambda s: u_eval(np.cos(s), m, poly).value, q, spec)
    return 4.0 / math.pi * res.value


def _cos_q_arcsin_over_sqrt(x: np.ndarray, q: int) -> np.ndarray:
    """cos(q arcsin x) / sqrt(1 - x^2), a polynomial in x for odd q."""
    x = np.asarray(x, dtype=float)
    root = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    theta = np.arcsin(np.clip(x, -1.0, 1.0))
    near_end = root < 1e-6
    direct = np.cos(q * theta) / np.where(near_end, 1.0, root)
    # cos(q theta)/cos(theta) = sin(q pi/2) sin(q s)/sin(s), s = pi/2 - |theta|
    s = math.pi / 2 - np.abs(theta)
    sign = 1.0 if (q // 2) % 2 == 0 else -1.0
    limit = sign * dirichlet_ratio(s, q)
    return np.where(near_end, limit, direct)


def I_of_q_arcsin(q: int, m: int, abs_tol: float = 1e-13,
                  poly: HPoly | None = None) -> float:
    """I(q) from the arcsin form, an independent cross-check of :func:`I_of_q`.

    The integrand is written as g(x) * (1-x)^(-1/2) * (1+x)^(-1/2) with g
    smooth, and the algebraic endpoint weight is integrated exactly by
    QUADPACK's QAWS routine.
    """
    check_q_argument(q, m)
    poly = poly or beta_coefficients(m)

    def g(x):
        return float(_cos_q_arcsin_over_sqrt(x, q) / h_eval(x, poly))

    val, _ = _scipy_integrate.quad(g, -1.0, 1.0, weight="alg", wvar=(-0.5, -0.5),
                                   epsabs=abs_tol, epsrel=1e-13, limit=500)
    return 2.0 / math.pi * math.sin(q * math.pi / 2) * val
