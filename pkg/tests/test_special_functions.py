import math
from fractions import Fraction

import numpy as np
import pytest

from rmtbound.integration import DomainError
from rmtbound.special_functions import (GIBBS_CONSTANT, HPoly, F_derivatives, F_eval,
                                        G_eval, beta_coefficients, distinguished_points,
                                        exp_square_integral, h_derivative, h_eval,
                                        h_integral_form, h_ode_residual,
                                        h_second_derivative, u_eval, u_ode_residual,
                                        u_rational, u_second_derivative, w_eval, w_fourier)


def test_betas_m2():
    assert beta_coefficients(2).betas == (Fraction(8, 3), Fraction(16, 3))


@pytest.mark.parametrize("m", [2, 3, 7, 20, 60])
def test_betas_sum_and_first(m):
    betas = beta_coefficients(m).betas
    assert sum(betas) == 4 * m
    assert betas[0] == Fraction(4 * m, 2 * m - 1)


@pytest.mark.parametrize("m", [0, 1, -3])
def test_betas_reject_small_m(m):
    with pytest.raises(DomainError):
        beta_coefficients(m)


def test_h_values():
    assert h_eval(0.0, 3) == pytest.approx(12 / 5, abs=1e-15)
    assert h_eval(1.0, 2) == pytest.approx(8.0, abs=1e-14)
    assert h_eval(0.5, 2) == pytest.approx(4.0, abs=1e-14)


def test_h_vectorised_matches_scalar():
    x = np.linspace(0, 1, 11)
    arr = h_eval(x, 5)
    assert arr.shape == x.shape
    assert all(arr[i] == pytest.approx(h_eval(float(v), 5), rel=1e-15) for i, v in enumerate(x))


def test_h_derivatives_against_finite_differences():
    p = beta_coefficients(6)
    x, eps = 0.63, 1e-6
    fd1 = (h_eval(x + eps, p) - h_eval(x - eps, p)) / (2 * eps)
    fd2 = (h_derivative(x + eps, p) - h_derivative(x - eps, p)) / (2 * eps)
    assert h_derivative(x, p) == pytest.approx(fd1, rel=1e-8)
    assert h_second_derivative(x, p) == pytest.approx(fd2, rel=1e-8)


def test_h_ode_residual():
    assert abs(h_ode_residual(0.3, 2)) < 1e-12
    assert abs(h_ode_residual(0.9, 7)) < 1e-10 * 28


def test_h_ode_residual_detects_perturbation():
    p = beta_coefficients(2)
    bumped = HPoly(2, tuple(b + Fraction(1, 10**6) for b in p.betas))
    assert abs(h_ode_residual(0.5, 2, bumped)) > 1e-8


def test_h_integral_form():
    assert h_integral_form(0.5, 2) == pytest.approx(4.0, abs=1e-9)
    assert h_integral_form(0.9, 5) == pytest.approx(h_eval(0.9, 5), abs=1e-9)
    assert h_integral_form(0.999, 2) == pytest.approx(h_eval(0.999, 2), abs=1e-7)


def test_h_integral_form_domain():
    with pytest.raises(DomainError):
        h_integral_form(1.0, 3)


def test_u_values():
    assert u_eval(0.0, 5).value == pytest.approx(0.0, abs=1e-15)
    assert u_eval(0.0, 5).derivative == 0.0
    assert u_eval(1.0, 4).value == pytest.approx(1 / 8, abs=1e-15)
    assert u_eval(0.5, 2).value == pytest.approx(0.0, abs=1e-15)


def test_u_ode_residual():
    assert abs(u_ode_residual(0.4, 2)) < 1e-12
    assert abs(u_ode_residual(0.7, 10)) < 1e-11


@pytest.mark.parametrize("m", [2, 3, 8, 25])
def test_u_second_derivative_at_zero(m):
    step = 1e-4
    fd = (u_eval(step, m).derivative - u_eval(-step, m).derivative) / (2 * step)
    assert fd == pytest.approx(-1 / (m * (2 * m - 3)), abs=1e-6)
    assert u_second_derivative(0.0, m) == pytest.approx(-1 / (m * (2 * m - 3)), abs=1e-12)


def test_u_rational_matches_float():
    assert u_rational(Fraction(1, 4), 2) == 0
    for m in (3, 9):
        y = Fraction(m - 1, m + 2)
        assert float(u_rational(y, m)) == pytest.approx(u_eval(math.sqrt(y), m).value, abs=1e-14)


def test_w_values():
    assert w_eval(math.pi / 2, 5) == pytest.approx(1.0, abs=1e-10)
    assert w_eval(0.0, 7) == 0.0
    assert w_eval(math.pi / 3, 3) == pytest.approx(GIBBS_CONSTANT, abs=1e-9)


def test_w_quadrature_matches_fourier():
    for q in (3, 9, 41):
        for x in (0.1, 0.77, 1.5):
            assert w_eval(x, q) == pytest.approx(w_fourier(x, q), abs=1e-12)


@pytest.mark.parametrize("q", [2, 1, 4])
def test_w_rejects_bad_q(q):
    with pytest.raises(DomainError):
        w_eval(0.5, q)


def test_F_G_values():
    assert F_eval(1.0) == pytest.approx(math.e, abs=1e-10)
    assert G_eval(0.0) == 0.0
    assert G_eval(math.sqrt(3)) < 41.3
    dF, _, _ = F_derivatives(1.0)
    assert dF == pytest.approx(3 * math.e - 4 * exp_square_integral(1.0), abs=1e-14)
    assert dF > 2.304


def test_F_derivatives_against_finite_differences():
    mu, eps = 1.3, 1e-5
    d1, d2, d3 = F_derivatives(mu)
    assert d1 == pytest.approx((F_eval(mu + eps) - F_eval(mu - eps)) / (2 * eps), rel=1e-8)
    assert d2 == pytest.approx((F_derivatives(mu + eps)[0] - F_derivatives(mu - eps)[0]) / (2 * eps), rel=1e-7)
    assert d3 == pytest.approx((F_derivatives(mu + eps)[1] - F_derivatives(mu - eps)[1]) / (2 * eps), rel=1e-7)


def test_exp_square_integral_against_scipy():
    from scipy.special import erfi
    assert exp_square_integral(1.2) == pytest.approx(math.sqrt(math.pi) / 2 * erfi(1.2), rel=1e-13)


def test_distinguished_points():
    dp = distinguished_points(2)
    assert dp.x_m == pytest.approx(0.5, abs=1e-15)
    assert dp.mu_m == pytest.approx(math.sqrt(2), abs=1e-15)
    for m in range(2, 1001):
        mu = distinguished_points(m).mu_m
        assert 1 < mu < math.sqrt(3)
