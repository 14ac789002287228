import math

import pytest

from abflux import bounds
from abflux.bounds import BoundCertificate, Grids, Suite
from abflux.spectral import ModelParams, ZetaSpec

SQRT2 = math.sqrt(2)


def test_m_of_s_examples():
    assert bounds.M_of_s(0.0) == pytest.approx(math.pi / 2, abs=1e-15)
    assert bounds.M_of_s(1.0) == pytest.approx(math.pi / 2 + 14, abs=1e-12)
    assert bounds.M_of_s(0.5) == pytest.approx(math.pi / 2 + 6 + 0.25 * 1.5**1.75, abs=1e-12)
    assert bounds.M_of_s(0.5) == pytest.approx(8.0791, abs=1e-4)
    for s in (0.3, 1.7, 4.0):
        assert bounds.M_of_s(-s) == bounds.M_of_s(s)


def test_int_qtau_bound_examples():
    assert bounds.int_Qtau_bound(0.0, 1.0, 1.0) == pytest.approx(math.pi**2 / 6)
    assert bounds.int_Qtau_bound(1.0, 1.0, 10.0) == pytest.approx((1 + (1 + SQRT2) / 8) * math.pi**2 / 60)
    assert bounds.int_Qtau_bound(1.0, 1.0, 10.0) == pytest.approx(0.21414, abs=1e-5)


def test_adiabatic_bound_examples():
    assert bounds.adiabatic_bound(0.0, 2.0, 3.0) == pytest.approx(math.pi**2 / 36)
    assert bounds.adiabatic_bound(1.0, 1.0, 100.0) == pytest.approx(9.4e5, rel=0.01)


@pytest.mark.parametrize("tau", [1.0, 3.0, 17.5])
def test_homogeneity_in_tau(tau):
    for s in (0.0, 0.7, 2.0):
        assert bounds.int_Qtau_bound(s, 1.3, 2 * tau) == bounds.int_Qtau_bound(s, 1.3, tau) / 2
        assert bounds.adiabatic_bound(s, 1.3, 2 * tau) == bounds.adiabatic_bound(s, 1.3, tau) / 2


def test_q_zeta_examples():
    assert bounds.q_zeta(1.0, ZetaSpec()) == pytest.approx(math.pi**2 / 12 * (2 + (1 + SQRT2) / 4), rel=1e-12)
    a, s = 0.6, 1.4
    ref = math.pi**2 / 12 * (2 * a + (1 + SQRT2) * a * a * s / 4)
    assert bounds.q_zeta(s, ZetaSpec.parse(f"affine:{a}")) == pytest.approx(ref, rel=1e-12)
    z = ZetaSpec.parse("cos_perturbed:0.5")
    assert bounds.q_zeta(0.0, z) == pytest.approx(math.pi**2 / 6 * float(z.d1(0.0)))


def test_q_zeta_cos_perturbed_analytic():
    a, s = 0.5, 1.0
    z = ZetaSpec.parse(f"cos_perturbed:{a}")
    sup_d1 = 1 + a / 2 * math.sin(s)
    abs_d2 = a / 2 * math.sin(s)
    sq = s + a * (1 - math.cos(s)) + a * a / 4 * (s / 2 - math.sin(2 * s) / 4)
    ref = math.pi**2 / 12 * (1 + sup_d1 + abs_d2 + (1 + SQRT2) / 4 * sq)
    assert bounds.q_zeta(s, z) == pytest.approx(ref, rel=1e-10)


def test_zeta_bound_identity_reduces():
    p = ModelParams(B=1.0, tau=50.0)
    ref = math.exp(bounds.integral_M(1.0)) * bounds.q_zeta(1.0, ZetaSpec()) / 50.0
    assert bounds.zeta_adiabatic_bound(1.0, p) == pytest.approx(ref)
    assert bounds.zeta_adiabatic_bound(0.0, p) == pytest.approx(bounds.q_zeta(0.0, ZetaSpec()) / 50.0)


def test_zeta_bound_monotone_in_s():
    p = ModelParams(tau=10.0, zeta=ZetaSpec.parse("cos_perturbed:0.5"))
    vals = [bounds.zeta_adiabatic_bound(s, p) for s in (0.0, 0.25, 0.5, 1.0, 1.5)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_integral_m():
    # closed-form part: int (pi/2 + 12v) = pi/2 + 6 on [0, 1]
    assert bounds.integral_M(1.0) > math.pi / 2 + 6
    assert bounds.integral_M(0.0) == 0.0


def test_certificate_record():
    c = BoundCertificate("x", 1.0, 2.0, {"s": 1.0})
    assert c.passed and c.margin == 1.0
    d = c.to_dict()
    assert set(d) == {"name", "context", "numeric_value", "bound_value", "margin", "pass"}
    assert not BoundCertificate("x", 3.0, 2.0).passed
    assert not BoundCertificate("x", float("nan"), 2.0).passed
    assert not BoundCertificate("x", 1.0, 2.0, reason="boom").passed


def test_certify_q_norm_small():
    certs = bounds.certify(Suite.Q_NORM, grids=Grids(s_grid=(1.0,), N=1024))
    assert len(certs) == 1 and certs[0].passed
    assert certs[0].numeric_value < 15.5708


def test_certify_section2_sigma0_small():
    certs = bounds.certify("section2", grids=Grids(sigma_grid=(0.0,), N=256))
    assert bounds.all_pass(certs)
    pi_cert = [c for c in certs if c.name == "section2_combined_sigma0_pi"][0]
    assert pi_cert.numeric_value <= math.pi


def test_certify_sorted_and_parallel_identical():
    g = Grids(s_grid=(3.0, 0.5, 1.0), B_grid=(2.0, 0.5), N=128)
    serial = bounds.report(bounds.certify("x_norms", grids=g))
    threaded = bounds.report(bounds.certify("x_norms", grids=g, workers=4))
    assert serial == threaded
    assert all(c["pass"] for c in serial)


def test_certify_empty_grid():
    with pytest.raises(ValueError):
        bounds.certify("q_norm", grids=Grids(s_grid=()))
    with pytest.raises(ValueError):
        bounds.certify("section2", grids=Grids(sigma_grid=()))


def test_certify_error_becomes_failed_certificate():
    certs = bounds.certify("q_norm", grids=Grids(s_grid=(0.0,), N=16))
    assert not certs[0].passed and "ValueError" in certs[0].reason


def test_certify_unknown_suite():
    with pytest.raises(ValueError):
        bounds.certify("nosuch")
