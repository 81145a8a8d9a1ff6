"""The polynomial h, the auxiliary function u, the Gibbs primitive W and the
comparison functions F, G.

All evaluators accept scalars or numpy arrays.  The coefficients of h are
kept as exact rationals and converted to floats once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .integration import DEFAULT_SPEC, DomainError, QuadratureSpec, integrate

__all__ = [
    "HPoly",
    "UPoint",
    "DistinguishedPoints",
    "beta_coefficients",
    "h_eval",
    "h_derivative",
    "h_second_derivative",
    "h_ode_residual",
    "h_integral_form",
    "u_eval",
    "u_second_derivative",
    "u_ode_residual",
    "u_rational",
    "w_eval",
    "w_fourier",
    "exp_square_integral",
    "F_eval",
    "F_derivatives",
    "G_eval",
    "distinguished_points",
    "GIBBS_CONSTANT",
]

# sup of W over x in [0, pi/2] and odd q >= 3, attained at q = 3, x = pi/3
GIBBS_CONSTANT = math.sqrt(3) / math.pi + 2.0 / 3.0


@dataclass(frozen=True)
class HPoly:
    """h(x) = sum_k betas[k] x^(2k) for a fixed m."""

    m: int
    betas: tuple[Fraction, ...]
    coeffs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.array([float(b) for b in self.betas]))


@dataclass(frozen=True)
class UPoint:
    x: float | np.ndarray
    value: float | np.ndarray
    derivative: float | np.ndarray


@dataclass(frozen=True)
class DistinguishedPoints:
    m: int
    x_m: float
    mu_m: float


def _check_m(m: int) -> None:
    if int(m) != m or m < 2:
        raise DomainError(f"m must be an integer >= 2 (T^[m-1] is undefined otherwise), got {m}")


@lru_cache(maxsize=None)
def beta_coefficients(m: int) -> HPoly:
    """Exact coefficients beta_0..beta_{m-1} of h.

    beta_k = 2 * prod_{j=0}^{k} (2m-2j)/(2m-2j-1), built as a running product.
    """
    _check_m(m)
    betas = []
    running = Fraction(2)
    for k in range(m):
        running *= Fraction(2 * m - 2 * k, 2 * m - 2 * k - 1)
        betas.append(running)
    return HPoly(m, tuple(betas))


def _poly(poly: HPoly | int) -> HPoly:
    return poly if isinstance(poly, HPoly) else beta_coefficients(poly)


def _horner(coeffs: np.ndarray, y):
    acc = np.zeros_like(y, dtype=float) + coeffs[-1]
    for c in coeffs[-2::-1]:
        acc = acc * y + c
    return acc


def h_eval(x, poly: HPoly | int):
    """h(x), Horner in x^2."""
    x = np.asarray(x, dtype=float)
    out = _horner(_poly(poly).coeffs, x * x)
    return out if out.ndim else float(out)


def h_derivative(x, poly: HPoly | int):
    """h'(x) = sum_k 2k beta_k x^(2k-1)."""
    p = _poly(poly)
    x = np.asarray(x, dtype=float)
    if p.m == 1:
        return np.zeros_like(x)
    k = np.arange(1, p.m)
    out = x * _horner(2.0 * k * p.coeffs[1:], x * x)
    return out if out.ndim else float(out)


def h_second_derivative(x, poly: HPoly | int):
    p = _poly(poly)
    x = np.asarray(x, dtype=float)
    k = np.arange(1, p.m)
    out = _horner(2.0 * k * (2.0 * k - 1) * p.coeffs[1:], x * x)
    return out if out.ndim else float(out)


def h_ode_residual(x, m: int, poly: HPoly | None = None):
    """x(x^2-1)h' + (2m-1-2(m-1)x^2)h - 4m, identically zero for the true h."""
    p = poly or beta_coefficients(m)
    x = np.asarray(x, dtype=float)
    res = (x * (x * x - 1.0) * h_derivative(x, p)
           + (2 * m - 1 - 2 * (m - 1) * x * x) * h_eval(x, p) - 4 * m)
    return res if np.ndim(res) else float(res)


def h_integral_form(x: float, m: int, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """h(x) from its integral representation, for 0 < x < 1.

    With t = cos(theta) the inner integral becomes
    int_0^{arccos x} cos(theta)^(-2m) d theta, and the prefactor x^(2m-1) is
    absorbed into the integrand so that it stays in [0, 1].
    """
    _check_m(m)
    if not 0.0 < x < 1.0:
        raise DomainError(f"integral form needs 0 < x < 1, got {x}")
    log_x = math.log(x)

    def integrand(theta):
        return np.exp(2 * m * (log_x - np.log(np.cos(theta))))

    res = integrate(integrand, 0.0, math.acos(x), spec)
    return 4 * m * res.value / (x * math.sqrt(1.0 - x * x))


def u_eval(x, m: int, poly: HPoly | None = None) -> UPoint:
    """u(x) = 1/h(x) - (1-x^2)/2 + 1/(4m) and u'(x) = -h'/h^2 + x."""
    p = poly or beta_coefficients(m)
    x = np.asarray(x, dtype=float)
    h = h_eval(x, p)
    value = 1.0 / h - 0.5 * (1.0 - x * x) + 1.0 / (4 * m)
    deriv = -h_derivative(x, p) / (h * h) + x
    if x.ndim == 0:
        return UPoint(float(x), float(value), float(deriv))
    return UPoint(x, value, deriv)


def u_second_derivative(x, m: int, poly: HPoly | None = None):
    p = poly or beta_coefficients(m)
    h = h_eval(x, p)
    dh = h_derivative(x, p)
    return -h_second_derivative(x, p) / h**2 + 2.0 * dh**2 / h**3 + 1.0


def u_ode_residual(x, m: int, poly: HPoly | None = None):
    """x(1-x^2)u' - 4m u^2 + (2(m+1)x^2 + 1 - 2m) u - x^2/(2m)."""
    x = np.asarray(x, dtype=float)
    pt = u_eval(x, m, poly)
    u = pt.value
    res = (x * (1.0 - x * x) * pt.derivative - 4 * m * u * u
           + (2 * (m + 1) * x * x + 1 - 2 * m) * u - x * x / (2 * m))
    return res if np.ndim(res) else float(res)


def u_rational(x_squared: Fraction, m: int) -> Fraction:
    """u exactly, for a rational value of x^2 (only sums and products)."""
    p = beta_coefficients(m)
    y = Fraction(x_squared)
    h = Fraction(0)
    for b in reversed(p.betas):
        h = h * y + b
    return 1 / h - (1 - y) / 2 + Fraction(1, 4 * m)


def _check_q(q: int) -> None:
    if int(q) != q or q < 3 or q % 2 == 0:
        raise DomainError(f"q must be an odd integer >= 3, got {q}")


def w_eval(x: float, q: int, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """W(x) = (2/pi) int_0^x sin(q s)/sin(s) ds by adaptive quadrature."""
    _check_q(q)
    if not 0.0 <= x <= math.pi / 2 + 1e-15:
        raise DomainError(f"W is evaluated on [0, pi/2], got x={x}")
    from .quadrature import dirichlet_ratio

    res = integrate(lambda s: dirichlet_ratio(s, q), 0.0, x, spec.with_hint(q))
    return 2.0 / math.pi * res.value


def w_fourier(x, q: int):
    """Closed form of W from sin(qs)/sin(s) = 1 + 2 sum_{k<=(q-1)/2} cos(2ks)."""
    _check_q(q)
    x = np.asarray(x, dtype=float)
    k = np.arange(1, (q - 1) // 2 + 1)
    tail = (np.sin(2.0 * np.multiply.outer(x, k)) / k).sum(axis=-1)
    out = 2.0 / math.pi * (x + tail)
    return out if out.ndim else float(out)


def exp_square_integral(mu: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """int_0^mu exp(lambda^2) d lambda."""
    if mu < 0:
        raise DomainError(f"mu must be >= 0, got {mu}")
    return integrate(lambda t: np.exp(t * t), 0.0, float(mu), spec).value


def F_eval(mu: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """F(mu) = mu e^{mu^2} + 2(1 - mu^2) int_0^mu e^{l^2} dl."""
    e_int = exp_square_integral(mu, spec)
    return mu * math.exp(mu * mu) + 2.0 * (1.0 - mu * mu) * e_int


def F_derivatives(mu: float, spec: QuadratureSpec = DEFAULT_SPEC) -> tuple[float, float, float]:
    """(F', F'', F''') at mu, differentiated analytically."""
    e_int = exp_square_integral(mu, spec)
    e = math.exp(mu * mu)
    return (3.0 * e - 4.0 * mu * e_int,
            2.0 * mu * e - 4.0 * e_int,
            (4.0 * mu * mu - 2.0) * e)


def G_eval(mu: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """G(mu) = (mu^2/2) (mu e^{mu^2} - int_0^mu e^{l^2} dl)."""
    e_int = exp_square_integral(mu, spec)
    return 0.5 * mu * mu * (mu * math.exp(mu * mu) - e_int)


def distinguished_points(m: int) -> DistinguishedPoints:
    """x_m = sqrt((m-1)/(m+2)) and mu_m = sqrt(2m(1-x_m))."""
    _check_m(m)
    x_m = math.sqrt((m - 1) / (m + 2))
    return DistinguishedPoints(m, x_m, math.sqrt(2 * m * (1.0 - x_m)))
