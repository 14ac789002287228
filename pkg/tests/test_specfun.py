import math

import mpmath
import numpy as np
import pytest
from scipy import integrate

from abflux import specfun
from abflux.operators import build_Q
from abflux.specfun import DomainError, QuadratureConfig, QuadratureError, Scheme, Weight

EULER_GAMMA = 0.57721566490153286


@pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 2.0, 3.7, 10.0, 25.5, 150.0])
def test_log_gamma_matches_mpmath(x):
    assert specfun.log_gamma(x) == pytest.approx(float(mpmath.loggamma(x)), abs=1e-13, rel=1e-14)


def test_log_gamma_examples():
    assert specfun.log_gamma(1.0) == 0.0
    assert specfun.log_gamma(2.0) == 0.0
    assert specfun.log_gamma(0.5) == pytest.approx(math.log(math.sqrt(math.pi)), abs=1e-14)


@pytest.mark.parametrize("x", [0.0, -1.0, -0.5, float("nan")])
def test_log_gamma_domain(x):
    with pytest.raises(DomainError):
        specfun.log_gamma(x)


@pytest.mark.parametrize("x", [0.2, 1.0, 1.5, 4.0, 12.3, 99.0])
def test_digamma_matches_mpmath(x):
    assert specfun.digamma(x) == pytest.approx(float(mpmath.digamma(x)), abs=1e-13)


def _digamma_series(x, terms=2_000_000):
    # psi(x) = -gamma + sum_k (1/(k+1) - 1/(k+x)); tail is O((x-1)/terms)
    k = np.arange(terms, dtype=float)
    return -EULER_GAMMA + float(np.sum(1.0 / (k + 1) - 1.0 / (k + x)))


@pytest.mark.parametrize("x", [0.5, 1.0, 2.0, 3.25])
def test_digamma_against_truncated_series(x):
    assert specfun.digamma(x) == pytest.approx(_digamma_series(x), abs=5e-6)


def test_digamma_examples():
    assert specfun.digamma(1.0) == pytest.approx(-EULER_GAMMA, abs=1e-15)
    assert specfun.digamma(2.0) == pytest.approx(1 - EULER_GAMMA, abs=1e-15)
    harmonic9 = sum(1.0 / k for k in range(1, 10))
    assert specfun.digamma(10.0) == pytest.approx(harmonic9 - EULER_GAMMA, abs=1e-14)


def test_digamma_domain():
    with pytest.raises(DomainError):
        specfun.digamma(0.0)


def test_laguerre_examples():
    assert specfun.laguerre(0, 1.0, 5.0) == 1.0
    assert specfun.laguerre(1, 1.0, 1.0) == pytest.approx(1.0)
    assert specfun.laguerre(2, 0.0, 2.0) == pytest.approx(-1.0)


@pytest.mark.parametrize("n", range(16))
@pytest.mark.parametrize("alpha", [0.0, 0.3, 1.0, 2.5])
def test_laguerre_recurrence_vs_explicit(n, alpha):
    for x in (0.1, 1.0, 3.0, 7.5):
        ref = specfun.laguerre_explicit(n, alpha, x)
        # the alternating sum cancels; its rounding scale is the sum of |terms| = L_n(-x)
        scale = specfun.laguerre_explicit(n, alpha, -x)
        assert abs(specfun.laguerre(n, alpha, x) - ref) <= 1e-13 * scale


def test_laguerre_vectorized_and_mpmath():
    x = np.linspace(0.0, 30.0, 7)
    vals = specfun.laguerre(12, 1.5, x)
    ref = [float(mpmath.laguerre(12, 1.5, xi)) for xi in x]
    np.testing.assert_allclose(vals, ref, rtol=1e-10, atol=1e-8)


def test_laguerre_negative_degree():
    with pytest.raises(DomainError):
        specfun.laguerre(-1, 0.0, 1.0)


def test_eigenfunction_ground_state_example():
    assert specfun.eigenfunction(0, 0.0, 2.0, 1.0) == pytest.approx(math.sqrt(2) * math.exp(-0.5), abs=1e-12)


def test_eigenfunction_small_r_asymptotics():
    c1 = math.exp(specfun.log_norm_const(1, 1.0, 1.0))
    r = 1e-6
    assert specfun.eigenfunction(1, 1.0, 1.0, r) / r == pytest.approx(2 * c1, rel=1e-5)


@pytest.mark.parametrize("n,s,B", [(0, 0.0, 1.0), (3, 0.5, 2.0), (7, -1.3, 0.5), (20, 2.5, 1.0)])
def test_eigenfunction_normalized_scipy_quad(n, s, B):
    val, _ = integrate.quad(lambda r: specfun.eigenfunction(n, s, B, r) ** 2 * r, 1e-12, np.inf, limit=400)
    assert val == pytest.approx(1.0, abs=1e-8)


def test_eigenfunction_large_index_no_overflow():
    r = np.linspace(0.01, 40.0, 500)
    vals = specfun.eigenfunction(150, 3.0, 1.0, r)
    assert np.all(np.isfinite(vals))


def test_eigenfunction_domain():
    with pytest.raises(DomainError):
        specfun.eigenfunction(0, 1.0, -1.0, 1.0)
    with pytest.raises(DomainError):
        specfun.eigenfunction(0, 1.0, 1.0, 0.0)


@pytest.mark.parametrize("s", [0.3, 1.0, 2.5])
def test_oracle_orthonormality(s):
    for m in range(6):
        for n in range(6):
            val = specfun.oracle_inner_product(m, n, s, 1.0)
            assert val == pytest.approx(1.0 if m == n else 0.0, abs=1e-8)


def test_oracle_hdot_example():
    val = specfun.oracle_inner_product(0, 1, 1.0, 1.0, Weight.HDOT)
    assert val == pytest.approx(1 / math.sqrt(2), abs=1e-8)


@pytest.mark.parametrize("m,n,s,B", [(0, 1, 1.0, 1.0), (2, 5, 0.3, 2.0), (4, 9, -1.7, 0.5)])
def test_oracle_matches_closed_form_q(m, n, s, B):
    oracle = specfun.oracle_inner_product(m, n, s, B, Weight.HDOT)
    closed = build_Q(s, n + 1)[m, n].imag
    assert oracle / (2 * B * (n - m)) == pytest.approx(closed, abs=1e-8)


def test_oracle_rejections():
    with pytest.raises(DomainError):
        specfun.oracle_inner_product(0, 1, 0.0, 1.0, Weight.HDOT)
    with pytest.raises(DomainError):
        specfun.oracle_inner_product(1, 1, 0.5, 1.0, Weight.HDOT)
    with pytest.raises(DomainError):
        specfun.oracle_inner_product(0, 1, 1.0, 0.0)


def test_oracle_raises_when_not_converged():
    cfg = QuadratureConfig(node_count=16, r_max=20.0, scheme=Scheme.GAUSS_LEGENDRE)
    with pytest.raises(QuadratureError):
        specfun.oracle_inner_product(12, 15, 1.0, 1.0, cfg=cfg)


def test_tanh_sinh_scheme_agrees():
    cfg = QuadratureConfig(node_count=400, r_max=20.0, scheme=Scheme.TANH_SINH)
    assert specfun.oracle_inner_product(3, 3, 1.5, 1.0, cfg=cfg) == pytest.approx(1.0, abs=1e-10)
