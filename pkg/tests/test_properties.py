"""Randomised checks of identities that hold for every admissible input."""

import math
from fractions import Fraction
from itertools import accumulate

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from rmtbound.matrices import binomial, rank_one_bound, trace_log_determinant, lu_determinant
from rmtbound.quadrature import I_of_q, I_of_q_arcsin, Q_of_q, Q_of_q_via_u
from rmtbound.special_functions import (GIBBS_CONSTANT, beta_coefficients, h_eval,
                                        h_ode_residual, u_eval, u_ode_residual, u_rational,
                                        w_fourier)

ms = st.integers(min_value=2, max_value=60)
unit = st.floats(min_value=0.0, max_value=1.0)


@given(ms)
def test_beta_identities(m):
    betas = beta_coefficients(m).betas
    assert sum(betas) == 4 * m
    assert betas[0] == Fraction(4 * m, 2 * m - 1)
    assert all(b2 > b1 for b1, b2 in zip(betas, betas[1:]))


@given(ms, unit)
def test_h_between_endpoint_values(m, x):
    v = h_eval(x, m)
    assert 4 * m / (2 * m - 1) * (1 - 1e-15) <= v <= 4 * m * (1 + 1e-15)


@given(ms, unit)
def test_ode_residuals_small(m, x):
    assert abs(h_ode_residual(x, m)) <= 1e-12 * 4 * m * m
    assert abs(u_ode_residual(x, m)) <= 1e-12 * m


@given(ms, unit)
def test_u_range(m, x):
    u = u_eval(x, m).value
    assert -1 / (4 * m) < u <= 1 / (2 * m) + 1e-15


@given(ms, st.fractions(min_value=0, max_value=1, max_denominator=50))
def test_u_rational_matches_float(m, y):
    assert float(u_rational(y, m)) == np_approx(u_eval(math.sqrt(y), m).value)


def np_approx(v):
    import pytest
    return pytest.approx(v, abs=1e-13)


@given(st.integers(min_value=1, max_value=150).map(lambda j: 2 * j + 1),
       st.floats(min_value=0.0, max_value=math.pi / 2))
def test_w_bounded(q, x):
    w = w_fourier(x, q)
    assert -1e-12 <= w <= GIBBS_CONSTANT + 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=2, max_value=25).flatmap(
    lambda m: st.tuples(st.just(m), st.integers(min_value=1, max_value=min(20, 2 * m - 3)))))
def test_cross_forms(mq):
    m, j = mq
    q = 2 * j + 1
    assert abs(I_of_q(q, m) - I_of_q_arcsin(q, m)) <= 1e-9
    assert abs(Q_of_q(q, m) - Q_of_q_via_u(q, m)) <= 1e-9
    assert m * abs(Q_of_q(q, m)) <= 1.827


@settings(deadline=None)
@given(st.integers(min_value=2, max_value=300))
def test_lambda1_L_closed_form(m):
    r = rank_one_bound(m)
    assert r.lambda1_L == sum(accumulate(binomial(2 * m - 1, l) for l in range(m - 1)))
    assert r.lambda1_Kprime_exact <= Fraction(9135, 10000)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=8), st.integers(min_value=0, max_value=2**32 - 1))
def test_trace_log_matches_lu_for_contractions(n, seed):
    rng = np.random.default_rng(seed)
    K = rng.uniform(-1, 1, (n, n))
    K *= 0.5 / max(np.abs(np.linalg.eigvals(K)).max(), 1e-3)
    assert abs(trace_log_determinant(K, 80) - lu_determinant(np.eye(n) - K)) <= 1e-12
