import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from uavmeta.errors import UndefinedConditionalError
from uavmeta.geometry import (
    asymptotic_association,
    association_probabilities,
    distance_process,
    intensity,
    intensity_measure,
    min_distance_cdf,
    min_distance_pdf,
    power_match_radius,
    serving_distance_cdf,
    serving_distance_pdf,
)
from uavmeta.model import AntennaPattern, Mode, TierId, default_config, los_probability, serving_power

CFG = default_config()
VA = default_config(Mode.VA)


def test_tbs_measure_values():
    assert intensity_measure(CFG, "b", CFG.h_b) == 0.0
    assert intensity_measure(CFG, "b", 10.0) == 0.0
    # π λ_b (r² - h_b²) frozen at r = 1 km
    assert intensity_measure(CFG, "b", 1000.0) == pytest.approx(15.7016800826418, rel=1e-12)


def test_uav_measure_against_mpmath():
    # 2π λ_u ∫_100^1000 p_L(x) x dx, frozen from a 30-digit mpmath quadrature
    assert intensity_measure(CFG, "L", 1000.0) == pytest.approx(8.59283966228565, rel=1e-9)


@given(st.floats(100.0, 5e4))
def test_uav_measures_sum_to_disk(r):
    tot = intensity_measure(CFG, "L", r) + intensity_measure(CFG, "N", r)
    assert tot == pytest.approx(math.pi * CFG.lambda_u * (r * r - CFG.h_u ** 2), rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("k", ["L", "N"])
def test_measure_is_integral_of_intensity(k):
    dp = distance_process(CFG, k)
    for r in (150.0, 800.0, 5000.0):
        val, _ = integrate.quad(lambda x: dp.intensity(x), CFG.h_u, r, epsrel=1e-12, limit=200)
        assert dp.measure(r) == pytest.approx(val, rel=1e-8)


def test_measure_monotone_and_zero_below_altitude():
    r = np.linspace(0.0, 3000.0, 600)
    for k in TierId:
        m = intensity_measure(CFG, k, r)
        assert np.all(np.diff(m) >= 0)
        alt = CFG.h_b if k is TierId.B else CFG.h_u
        assert np.all(m[r <= alt] == 0)


def test_min_distance_median_tbs():
    assert min_distance_cdf(CFG, "b", CFG.h_b) == 0.0
    assert min_distance_cdf(CFG, "b", 211.014501943659) == pytest.approx(0.5, abs=1e-12)


def test_min_distance_pdf_integrates_to_one():
    val, _ = integrate.quad(lambda r: min_distance_pdf(CFG, "b", r), 20.0, 5000.0, limit=200)
    assert val == pytest.approx(1.0, abs=1e-8)


def test_power_match_identity_and_inverse():
    r = np.geomspace(100.0, 1e4, 30)
    assert np.array_equal(power_match_radius(CFG, "L", "L", r), r)
    for cfg in (CFG, VA):
        for k in TierId:
            for ell in TierId:
                alt_k = cfg.h_b if k is TierId.B else cfg.h_u
                alt_l = cfg.h_b if ell is TierId.B else cfg.h_u
                rr = alt_k * np.geomspace(1.01, 100.0, 25)
                chi = power_match_radius(cfg, k, ell, rr)
                assert np.all(np.diff(chi) >= 0)
                free = chi > alt_l * (1 + 1e-9)
                lhs = serving_power(cfg, ell, chi[free])
                rhs = serving_power(cfg, k, rr[free])
                assert np.allclose(lhs, rhs, rtol=1e-10, atol=0)


def test_power_match_isotropic_closed_form():
    # kappa = 1 and equal powers: chi_{L,N}(r) = r^(alpha_L / alpha_N)
    r = np.geomspace(100.0, 1e4, 20)
    chi = power_match_radius(CFG, "L", "N", r)
    want = np.maximum(r ** (2.5 / 4.0), CFG.h_u)
    assert np.allclose(chi, want, rtol=1e-10)


@pytest.mark.parametrize("cfg", [CFG, VA], ids=["SA", "VA"])
def test_association_sums_to_one(cfg):
    a = association_probabilities(cfg)
    assert a.total == pytest.approx(1.0, abs=1e-6)
    assert all(0 <= v <= 1 for v in (a.a_b, a.a_l, a.a_n))


def test_association_without_uavs():
    a = association_probabilities(CFG.replace(lambda_u=1e-18))
    assert a.a_b == pytest.approx(1.0, abs=1e-6)


def test_association_high_uavs_lose():
    assert association_probabilities(CFG.replace(h_u=1e4)).a_b > 0.99


def test_association_power_scale_invariance():
    a = association_probabilities(CFG)
    b = association_probabilities(CFG.replace(p_b=CFG.p_b * 7.0, p_u=CFG.p_u * 7.0))
    assert abs(a.a_b - b.a_b) < 1e-9 and abs(a.a_l - b.a_l) < 1e-9


def test_association_uav_share_monotone_in_density():
    shares = [1 - association_probabilities(CFG.replace(lambda_u=lu)).a_b
              for lu in np.geomspace(1e-7, 1e-3, 9)]
    assert np.all(np.diff(shares) >= -1e-9)


def test_void_factor_matches_min_distance_cdf():
    # the exp(-Λ(χ)) factors are the nearest-distance CCDFs
    from uavmeta.geometry import _measure

    y = np.geomspace(120.0, 3000.0, 15)
    for ell in TierId:
        chi = power_match_radius(CFG, "L", ell, y)
        a = np.exp(-_measure(CFG, ell, chi))
        b = 1.0 - min_distance_cdf(CFG, ell, chi)
        assert np.max(np.abs(a - b)) < 1e-10


@pytest.mark.parametrize("cfg", [CFG, VA], ids=["SA", "VA"])
def test_serving_density_normalised(cfg):
    a = association_probabilities(cfg)
    for k in ("b", "L"):
        assert float(serving_distance_cdf(cfg, k, 1e7)) == pytest.approx(1.0, abs=1e-6)
        lo = cfg.h_b if k == "b" else cfg.h_u
        assert serving_distance_pdf(cfg, k, lo * 0.5) == 0.0
    assert a.a_n > 0


def test_serving_density_integrates_against_scipy():
    val, _ = integrate.quad(lambda y: serving_distance_pdf(CFG, "b", y), CFG.h_b, 20000.0,
                            points=[100, 500, 2000], limit=400)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_serving_density_undefined_tier():
    cfg = CFG.replace(lambda_u=1e-18, h_u=1e5)
    with pytest.raises(UndefinedConditionalError):
        serving_distance_pdf(cfg, "N", 2e5)


def test_lambda_u_limit():
    lim = asymptotic_association(CFG, "lambda_u_inf")
    assert lim.a_n == 0.0
    fin = association_probabilities(CFG.replace(lambda_u=1e-2))
    assert abs(fin.a_b - lim.a_b) < 0.02 and abs(fin.a_l - lim.a_l) < 0.02


def test_lambda_b_limit_with_dominant_tbs():
    cfg = CFG.replace(p_b=1e9)
    assert asymptotic_association(cfg, "lambda_b_inf").a_b == 1.0


def test_lambda_b_limit_matches_dense_tbs():
    lim = asymptotic_association(CFG, "lambda_b_inf")
    fin = association_probabilities(CFG.replace(lambda_b=1e-1))
    assert abs(fin.a_b - lim.a_b) < 0.02


def test_intensity_vanishes_below_altitude():
    assert intensity(CFG, "L", 50.0) == 0.0
    assert intensity(CFG, "L", 150.0) == pytest.approx(
        2 * math.pi * CFG.lambda_u * 150.0 * los_probability(CFG, 150.0), rel=1e-12)


def test_isotropic_va_equals_sa():
    iso = AntennaPattern(theta_3db=1.0, sla_db=0.0)
    a = association_probabilities(CFG.replace(uav_antenna=iso))
    b = association_probabilities(VA.replace(uav_antenna=iso))
    assert abs(a.a_l - b.a_l) < 1e-12
