import math

import numpy as np
import pytest
from scipy import integrate

from abflux import spectral
from abflux.spectral import ModelParams, ZetaFamily, ZetaSpec


def test_eigenvalue_examples():
    assert spectral.eigenvalue(0, 1.0, 1.0) == 3.0
    assert spectral.eigenvalue(0, -1.0, 1.0) == 1.0
    assert spectral.eigenvalue(5, 0.0, 2.0) == 22.0


def test_phase_examples():
    assert spectral.phase(0, 1.0, 1.0) == pytest.approx(2.0)
    assert spectral.phase(0, -1.0, 1.0) == pytest.approx(-1.0)
    assert spectral.phase(4, 0.0, 1.0) == 0.0


@pytest.mark.parametrize("n,s,B", [(0, 0.7, 1.0), (3, 2.0, 0.5), (2, -1.5, 2.0)])
def test_phase_is_integral_of_eigenvalue(n, s, B):
    val, _ = integrate.quad(lambda u: spectral.eigenvalue(n, u, B), 0.0, s)
    assert spectral.phase(n, s, B) == pytest.approx(val, abs=1e-12)


def test_phase_difference_rate_examples():
    assert spectral.phase_difference_rate(0, 1, 1.0) == -2.0
    assert spectral.phase_difference_rate(2, 2, 1.0) == 0.0
    assert spectral.phase_difference_rate(3, 1, 0.5) == 2.0


@pytest.mark.parametrize("s", [-2.0, -0.3, 0.4, 1.7])
def test_phase_differences_linear(s):
    for m, n in [(0, 1), (3, 7), (5, 2)]:
        diff = spectral.phase(m, s, 1.3) - spectral.phase(n, s, 1.3)
        assert diff == pytest.approx(spectral.phase_difference_rate(m, n, 1.3) * s, abs=1e-12)


def test_phase_zeta_identity_matches_phase():
    p = ModelParams(B=1.5)
    for n in (0, 2, 9):
        assert spectral.phase_zeta(n, 0.8, p) == pytest.approx(spectral.phase(n, 0.8, 1.5), abs=1e-10)
    assert spectral.phase_zeta(3, 0.0, p) == 0.0


@pytest.mark.parametrize("zeta", ["cos_perturbed:0.5", "affine:2.0", "affine:0.3"])
def test_phase_zeta_differences_linear(zeta):
    p = ModelParams(B=0.7, zeta=ZetaSpec.parse(zeta))
    s = 1.3
    for m, n in [(0, 1), (4, 1)]:
        diff = spectral.phase_zeta(m, s, p) - spectral.phase_zeta(n, s, p)
        assert diff == pytest.approx(2 * 0.7 * (m - n) * s, abs=1e-10)


def test_omega_zeta_diag_matches_phase_zeta():
    p = ModelParams(B=1.2, N=6, zeta=ZetaSpec.parse("cos_perturbed:0.5"))
    diag = spectral.Omega_zeta_diag(0.9, p)
    ref = [spectral.phase_zeta(n, 0.9, p) for n in range(6)]
    np.testing.assert_allclose(diag, ref, atol=1e-10)


def test_diag_helpers():
    np.testing.assert_allclose(spectral.W_diag(0.5, 3, 2.0), [4.0, 8.0, 12.0])
    np.testing.assert_allclose(spectral.Omega_diag(1.0, 2, 1.0), [2.0, 4.0])


def test_zeta_families():
    z = ZetaSpec.parse("cos_perturbed:0.5")
    assert z.family is ZetaFamily.COS_PERTURBED
    assert z(0.0) == 0.0
    u = 0.7
    assert z(u) == pytest.approx(u + 0.25 * (1 - math.cos(u)))
    h = 1e-6
    assert z.d1(u) == pytest.approx((z(u + h) - z(u - h)) / (2 * h), rel=1e-8)
    assert z.d2(u) == pytest.approx((z.d1(u + h) - z.d1(u - h)) / (2 * h), rel=1e-6)
    assert ZetaSpec().is_identity and ZetaSpec.parse("affine:1").is_identity
    assert ZetaSpec.parse("affine:2").label() == "affine:2"


@pytest.mark.parametrize("text", ["affine:0", "affine:-1", "cos_perturbed:1.0", "nosuch:1"])
def test_zeta_invalid(text):
    with pytest.raises(ValueError):
        ZetaSpec.parse(text)


def test_model_params_validation():
    with pytest.raises(ValueError):
        ModelParams(B=0.0)
    with pytest.raises(ValueError):
        ModelParams(tau=-1.0)
    with pytest.raises(ValueError):
        ModelParams(N=1)
    assert ModelParams(tau=3.0).with_tau(5.0).tau == 5.0


def test_phase_zeta_rejects_negative():
    with pytest.raises(ValueError):
        spectral.phase_zeta(0, -1.0, ModelParams())
