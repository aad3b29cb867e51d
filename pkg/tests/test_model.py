import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavmeta.errors import DomainError
from uavmeta.model import (
    ENVIRONMENTS,
    AntennaPattern,
    Environment,
    Mode,
    NetworkConfig,
    TierId,
    TierParams,
    antenna_gain,
    default_config,
    fading_mgf,
    los_probability,
    nlos_probability,
    serving_power,
)

CFG = default_config()


# values frozen from a 30-digit mpmath evaluation of the sigmoid
def test_los_overhead_urban():
    assert los_probability(CFG, 100.0) == pytest.approx(0.999975074537903, rel=1e-12)


def test_los_grazing_urban():
    assert los_probability(CFG, 1e7) == pytest.approx(0.0218745825959240, rel=1e-9)


def test_los_below_altitude_rejected():
    with pytest.raises(DomainError):
        los_probability(CFG, 99.0)


@given(st.floats(100.0, 1e6))
def test_los_nlos_complement(r):
    assert los_probability(CFG, r) + nlos_probability(CFG, r) == pytest.approx(1.0, abs=1e-15)


def test_los_strictly_decreasing_in_distance():
    r = np.geomspace(100.0, 1e6, 400)
    p = los_probability(CFG, r)
    assert np.all(np.diff(p) < 0)
    assert np.all((p > 0) & (p < 1))


def test_environment_presets_round_trip():
    assert ENVIRONMENTS["suburban"] == Environment(4.88, 0.43)
    assert ENVIRONMENTS["highrise_urban"] == Environment(27.23, 0.08)
    for env in ENVIRONMENTS.values():
        assert Environment.from_dict(env.to_dict()) == env


@pytest.mark.parametrize("a,b", [(0.0, 0.1), (1.0, -0.1)])
def test_environment_rejects_nonpositive(a, b):
    with pytest.raises(DomainError):
        Environment(a, b)


PAT = AntennaPattern(theta_3db=math.radians(60.0))


def test_gain_boresight_and_3db_point():
    assert antenna_gain(PAT, 0.0) == PAT.g_max
    assert antenna_gain(PAT, PAT.theta_3db / 2) == pytest.approx(10 ** -0.3, rel=1e-14)


def test_gain_floor_beyond_knee():
    knee = PAT.theta_3db * math.sqrt(20 / 12)
    th = np.linspace(knee, math.pi, 50)
    assert np.allclose(antenna_gain(PAT, th), 0.01, rtol=1e-14)


def test_gain_literal_exponent_switch():
    lit = AntennaPattern(theta_3db=math.radians(60.0), literal_gain_exponent=True)
    assert antenna_gain(lit, lit.theta_3db / 2) == pytest.approx(1e-3, rel=1e-14)


def test_gain_domain():
    with pytest.raises(DomainError):
        antenna_gain(PAT, -0.1)
    with pytest.raises(DomainError):
        antenna_gain(PAT, 3.2)


@given(st.floats(0.05, math.pi), st.floats(0.0, 40.0), st.floats(0.1, 10.0))
def test_gain_monotone_and_floored(theta3, sla, gmax):
    pat = AntennaPattern(g_max=gmax, theta_3db=theta3, sla_db=sla)
    th = np.linspace(0.0, math.pi, 300)
    g = antenna_gain(pat, th)
    assert np.all(np.diff(g) <= 0)
    assert np.all(g >= gmax * 10 ** (-sla / 10) * (1 - 1e-14))


@pytest.mark.parametrize("kw", [dict(g_max=0.0), dict(theta_3db=0.0), dict(theta_3db=4.0), dict(sla_db=-1.0)])
def test_pattern_invariants(kw):
    with pytest.raises(DomainError):
        AntennaPattern(**kw)


def test_tier_invariants():
    with pytest.raises(DomainError):
        TierParams(alpha=2.0, kappa=1.0, m_fading=1)
    with pytest.raises(DomainError):
        TierParams(alpha=3.0, kappa=0.0, m_fading=1)
    with pytest.raises(DomainError):
        CFG.with_tier(TierId.B, m_fading=2)


@pytest.mark.parametrize("field", ["lambda_b", "lambda_u", "h_b", "h_u", "p_b", "p_u"])
def test_config_positive_fields(field):
    with pytest.raises(DomainError):
        CFG.replace(**{field: 0.0})


def test_config_dict_round_trip():
    cfg = default_config(Mode.VA, h_u=250.0)
    assert NetworkConfig.from_dict(cfg.to_dict()) == cfg


def test_serving_power_overhead_sa_va():
    tp = CFG.tier(TierId.L)
    want = CFG.p_u * CFG.uav_antenna.g_max * tp.kappa * CFG.h_u ** (-tp.alpha)
    assert serving_power(CFG, "L", CFG.h_u) == pytest.approx(want, rel=1e-15)
    va = CFG.replace(mode=Mode.VA)
    assert serving_power(va, "L", va.h_u) == pytest.approx(want, rel=1e-15)


def test_serving_power_below_altitude():
    with pytest.raises(DomainError):
        serving_power(CFG, "b", 10.0)


@pytest.mark.parametrize("mode", [Mode.SA, Mode.VA])
@pytest.mark.parametrize("k", list(TierId))
def test_serving_power_strictly_decreasing(mode, k):
    cfg = CFG.replace(mode=mode)
    alt = cfg.h_b if k is TierId.B else cfg.h_u
    r = alt * np.geomspace(1.0, 1e4, 500)
    assert np.all(np.diff(serving_power(cfg, k, r)) < 0)


def test_serving_power_isotropic_reduction():
    iso = AntennaPattern(g_max=2.0, theta_3db=1.0, sla_db=0.0)
    cfg = CFG.replace(tbs_antenna=iso, uav_antenna=iso, mode=Mode.VA)
    r = np.geomspace(100.0, 1e5, 20)
    for k in TierId:
        tp = cfg.tier(k)
        p = cfg.p_b if k is TierId.B else cfg.p_u
        assert np.array_equal(serving_power(cfg, k, r), p * 2.0 * tp.kappa * r ** (-tp.alpha))


def test_fading_mgf_values():
    assert fading_mgf(3, 0.0) == 1.0
    assert fading_mgf(1, 1.0) == 0.5
    assert abs(fading_mgf(10_000, 1.0) - math.exp(-1)) < 1e-3
    with pytest.raises(DomainError):
        fading_mgf(1, -1.0)


def test_channel_functions_pure():
    r = np.geomspace(100.0, 1e5, 64)
    a = serving_power(CFG, "N", r)
    b = serving_power(CFG, "N", r.copy())
    assert a.tobytes() == b.tobytes()


@settings(max_examples=50)
@given(st.floats(0.0, 50.0), st.integers(1, 8))
def test_fading_mgf_matches_gamma_mgf(s, m):
    # E[exp(-s h)] for h ~ Gamma(m, 1/m), numerically
    from scipy import integrate, stats

    val, _ = integrate.quad(lambda h: math.exp(-s * h) * stats.gamma.pdf(h, m, scale=1 / m), 0, np.inf)
    assert fading_mgf(m, s) == pytest.approx(val, rel=1e-7, abs=1e-12)
