import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import gamma, gammaln

from rmtbound.loggas import (LogGasError, Potential, convergence_study, log_integrand,
                             partition_function, truncation_radius, universality_ratio)

GAUSS = Potential((0.0, 0.0, 1.0))
QUARTIC = Potential.monomial(2)


def log_gaussian_oracle(beta, k):
    """log of (1/k!) int prod|x_i - x_j|^beta exp(-sum x^2), from Mehta's integral."""
    g = beta / 2
    return (k / 2 * math.log(2 * math.pi)
            + sum(gammaln(1 + j * g) - gammaln(1 + g) for j in range(1, k + 1))
            - (k / 2 + beta * k * (k - 1) / 4) * math.log(2) - gammaln(k + 1))


def gaussian_oracle(beta, k):
    return math.exp(log_gaussian_oracle(beta, k))


def quartic_moment(j, a):
    """int x^(2j) exp(-a x^4) dx."""
    return gamma((2 * j + 1) / 4) / (2 * a ** ((2 * j + 1) / 4))


def test_potential_validation():
    with pytest.raises(LogGasError):
        Potential((0.0, 0.0, -1.0))
    with pytest.raises(LogGasError):
        Potential((0.0, 1.0, 0.0, 1.0))
    assert Potential((1.0, 0.0, 2.0, 0.0)).coefficients == (1.0, 0.0, 2.0)
    assert QUARTIC(2.0) == 16.0


def test_request_validation():
    with pytest.raises(LogGasError):
        partition_function(GAUSS, 3, 2)
    with pytest.raises(LogGasError):
        partition_function(GAUSS, 2, 5, "tensor-quadrature")
    with pytest.raises(LogGasError):
        partition_function(GAUSS, 2, 13, "monte-carlo")
    with pytest.raises(LogGasError):
        universality_ratio(3, QUARTIC)


def test_gaussian_single_particle():
    est = partition_function(GAUSS, 2, 1)
    assert est.value == pytest.approx(math.sqrt(math.pi), abs=1e-10)


def test_gaussian_pair_moment_oracle():
    # (1/2) int int (x^2 - 2xy + y^2) e^{-x^2-y^2} = (1/2)(2 sqrt(pi) sqrt(pi)/2) = pi/2
    for method in ("tensor-quadrature", "moments"):
        est = partition_function(GAUSS, 2, 2, method)
        assert abs(est.value - math.pi / 2) <= max(3 * est.error, 1e-12)
    mc = partition_function(GAUSS, 2, 2, "monte-carlo", samples=1 << 16, seed=1)
    assert abs(mc.value - math.pi / 2) <= 3 * mc.error


@pytest.mark.parametrize("beta,k", [(1, 2), (1, 3), (2, 3), (4, 2), (4, 4), (1, 4)])
def test_tensor_against_mehta_integral(beta, k):
    est = partition_function(GAUSS, beta, k)
    assert abs(est.value / gaussian_oracle(beta, k) - 1) <= max(est.relative_error, 1e-8)


@pytest.mark.parametrize("beta,k", [(1, 8), (2, 9), (4, 7), (1, 20), (1, 24), (2, 25),
                                    (2, 32), (4, 16)])
def test_moments_against_mehta_integral(beta, k):
    est = partition_function(GAUSS, beta, k, "moments")
    gap = abs(est.log_value - log_gaussian_oracle(beta, k))
    assert gap <= 1e-5
    assert gap <= 3 * est.relative_error


def test_moments_limits():
    from rmtbound.loggas import MOMENTS_MAX_K
    for beta, k in MOMENTS_MAX_K.items():
        with pytest.raises(LogGasError):
            partition_function(GAUSS, beta, k + 2, "moments")
    with pytest.raises(LogGasError):
        partition_function(GAUSS, 1, 5, "moments")


def test_huge_partition_function_keeps_finite_log():
    est = partition_function(GAUSS, 2, 32, "moments")
    assert math.isfinite(est.log_value) and math.isfinite(est.relative_error)


def test_quartic_beta1_tensor_vs_monte_carlo():
    t = partition_function(QUARTIC, 1, 2)
    mc = partition_function(QUARTIC, 1, 2, "monte-carlo", samples=1 << 17, seed=11)
    assert abs(t.value - mc.value) <= 3 * math.hypot(t.error, mc.error)


def test_n2_ratio_against_scipy_oracle():
    z4 = quartic_moment(0, 2.0)
    # y < x half of (1/2) int int |x - y| ..., i.e. the whole of Z_{V,1,2}
    z1, _ = integrate.dblquad(lambda y, x: (x - y) * math.exp(-x**4 - y**4),
                              -8, 8, lambda x: -8, lambda x: x, epsabs=1e-13, epsrel=1e-12)
    z2 = quartic_moment(0, 2.0) * quartic_moment(1, 2.0)
    oracle = z4 * z1 / (4 * 1 * z2)
    r = universality_ratio(2, QUARTIC)
    assert r.value == pytest.approx(oracle, rel=1e-9)
    assert all(c.value > 0 and math.isfinite(c.value) for c in r.components)


def test_gaussian_rescaled_ratio_is_one():
    for N in (2, 4, 8):
        r = universality_ratio(N, GAUSS, method="moments")
        assert r.rescaled == pytest.approx(1.0, abs=1e-11)
        assert r.value == pytest.approx(1 / math.factorial(N // 2), rel=1e-11)


def test_ratio_invariant_under_radius_pad():
    a = universality_ratio(4, QUARTIC)
    b = universality_ratio(4, QUARTIC, radius_pad=1.0)
    assert abs(a.value - b.value) <= 3 * math.hypot(a.error, b.error) + 1e-12


def test_monte_carlo_reproducible_and_worker_independent():
    a = partition_function(QUARTIC, 4, 3, "monte-carlo", samples=1 << 16, seed=5)
    b = partition_function(QUARTIC, 4, 3, "monte-carlo", samples=1 << 16, seed=5)
    c = partition_function(QUARTIC, 4, 3, "monte-carlo", samples=1 << 16, seed=5, jobs=2)
    d = partition_function(QUARTIC, 4, 3, "monte-carlo", samples=1 << 16, seed=6)
    assert a == b
    assert a.log_value == pytest.approx(c.log_value, abs=1e-13)
    assert a.value != d.value


def test_log_integrand_permutation_invariant():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(5, 4))
    perm = x[:, [2, 0, 3, 1]]
    for beta in (1, 2, 4):
        assert np.allclose(log_integrand(x, QUARTIC, beta), log_integrand(perm, QUARTIC, beta),
                           rtol=0, atol=1e-13)


def test_truncation_radius_tail_small():
    R = truncation_radius(QUARTIC, 4, 3)
    assert math.exp(-QUARTIC(R)) * (1 + 2 * R) ** (4 * 2 + 1) < 1e-14


def test_convergence_study_table():
    rows = convergence_study(2, [2, 4], method="moments")
    assert len({r.det_T for r in rows}) == 1
    assert all(r.ratio ** 2 >= 0 for r in rows)
    assert rows[0].distance == pytest.approx(abs(rows[0].ratio - rows[0].det_T))
    with pytest.raises(LogGasError):
        convergence_study(2, [4, 2])
