import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from uavmeta.errors import DomainError, UnsupportedMethodError
from uavmeta.model import AntennaPattern, Mode, TierId, default_config
from uavmeta.moments import (
    alzer_phi,
    asymptotic_moment_check,
    csp_moment,
    csp_moments,
    isotropic_moment,
    mean_local_delay,
    meta_distribution_beta,
    meta_distribution_gilpelaez,
    noise_limited_md,
    noise_limited_moment,
    noise_limited_omega,
    primary_user_moment,
    rayleigh_moment,
)

SA = default_config()
VA = default_config(Mode.VA)


def rayleigh(cfg):
    return cfg.with_tier(TierId.L, m_fading=1).with_tier(TierId.N, m_fading=1)


RAY = rayleigh(VA)


def test_zeroth_moment_is_one():
    assert csp_moment(SA, 1.0, 0).total == 1.0
    assert rayleigh_moment(RAY, 1.0, 0).total == 1.0


def test_small_threshold_gives_certain_success():
    for cfg in (SA, VA):
        assert csp_moment(cfg, 1e-6, 1).total == pytest.approx(1.0, abs=1e-4)


def test_threshold_domain():
    with pytest.raises(DomainError):
        csp_moment(SA, 0.0, 1)
    with pytest.raises(DomainError):
        csp_moment(SA, 1.0, 1.5)


@settings(max_examples=8)
@given(st.floats(-10.0, 15.0), st.floats(0.5, 6.0))
def test_moments_feasible_and_monotone(db, step):
    g1 = 10 ** (db / 10)
    g2 = g1 * 10 ** (step / 10)
    a1, a2 = csp_moments(VA, g1)
    b1, b2 = csp_moments(VA, g2)
    for m1, m2 in ((a1.total, a2.total), (b1.total, b2.total)):
        assert m1 * m1 - 1e-9 <= m2 <= m1 + 1e-9
    assert b1.total <= a1.total + 1e-9 and b2.total <= a2.total + 1e-9


def test_per_tier_moments_combine():
    m = csp_moment(VA, 1.0, 1)
    a = m.association
    comb = sum(a[k] * m.per_tier[str(k)] for k in TierId if a[k] > 1e-6)
    assert comb == pytest.approx(m.total, abs=1e-6)


def test_rayleigh_first_moment_matches_general():
    # M = 1 on every tier: the Alzer expansion is exact at b = 1
    for g in (0.3, 1.0, 4.0):
        a = rayleigh_moment(RAY, g, 1).total
        b = csp_moment(RAY, g, 1).total
        assert a == pytest.approx(b, abs=1e-6)


def test_rayleigh_second_moment_upper_bound():
    # at b = 2 the fading average sits inside the power, an upper estimate of the exact moment
    exact = rayleigh_moment(RAY, 1.0, 2).total
    approx = csp_moment(RAY, 1.0, 2).total
    assert exact <= approx <= rayleigh_moment(RAY, 1.0, 1).total


def test_rayleigh_needs_rayleigh():
    with pytest.raises(UnsupportedMethodError):
        rayleigh_moment(VA, 1.0, 1)
    with pytest.raises(UnsupportedMethodError):
        meta_distribution_gilpelaez(VA, 1.0, [0.5])


def test_alzer_phi_values():
    assert alzer_phi(1) == 1.0
    assert alzer_phi(2) == pytest.approx(2 / math.sqrt(2), rel=1e-15)
    assert alzer_phi(3) == pytest.approx(3 / 6 ** (1 / 3), rel=1e-15)


def test_beta_md_symmetric_median():
    # Beta(2, 2): m1 = 1/2, m2 = 3/10
    md = meta_distribution_beta(0.5, 0.3, [0.0, 0.5, 1.0])
    assert md.values == pytest.approx([1.0, 0.5, 0.0], abs=1e-14)


@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.0, 1.0))
def test_beta_md_matches_scipy(m1, frac, x):
    m2 = m1 * m1 + frac * (m1 - m1 * m1)
    md = meta_distribution_beta(m1, m2, [x])
    k = (m1 - m2) / (m2 - m1 * m1)
    want = stats.beta.sf(x, m1 * k, (1 - m1) * k)
    assert md.values[0] == pytest.approx(want, abs=1e-9)


def test_beta_md_rejects_infeasible():
    with pytest.raises(DomainError):
        meta_distribution_beta(0.5, 0.6, [0.5])
    with pytest.raises(DomainError):
        meta_distribution_beta(1.2, 0.5, [0.5])


def test_md_mean_identity():
    m1, m2 = csp_moments(VA, 1.0)
    xs = np.linspace(0.0, 1.0, 2001)
    md = meta_distribution_beta(m1.total, m2.total, xs)
    assert md.mean() == pytest.approx(m1.total, abs=1e-4)


def test_gilpelaez_shape_and_mean():
    xs = np.linspace(0.0, 1.0, 201)
    md = meta_distribution_gilpelaez(RAY, 1.0, xs)
    assert md.values[0] == 1.0 and md.values[-1] == 0.0
    assert np.all(np.diff(md.values) <= 1e-3)
    assert md.mean() == pytest.approx(rayleigh_moment(RAY, 1.0, 1).total, abs=0.01)


def test_gilpelaez_small_x_tends_to_one():
    assert meta_distribution_gilpelaez(RAY, 1.0, [1e-6]).values[0] > 0.99


def test_noise_limited_omega_exponential():
    for x in (0.1, 0.5, 0.9):
        assert noise_limited_omega(1, x) == pytest.approx(-math.log(x), rel=1e-15)


ALZER_POINTS = [(m, x) for m in (2, 3, 4, 6) for x in (0.05, 0.3, 0.5, 0.8, 0.97)]


@pytest.mark.parametrize("m,x", ALZER_POINTS)
def test_noise_limited_omega_solves_and_respects_alzer(m, x):
    w = noise_limited_omega(m, x)
    assert special.gammaincc(m, m * w) == pytest.approx(x, abs=1e-10)
    # Alzer: Q(m, m w) <= 1 - (1 - e^{-φ w})^m
    assert x <= 1 - (1 - math.exp(-alzer_phi(m) * w)) ** m + 1e-12


def test_noise_limited_omega_domain():
    with pytest.raises(DomainError):
        noise_limited_omega(2, 1.0)


def test_noise_limited_matches_general_without_interference():
    cfg = rayleigh(SA).replace(n0=1e-6)
    for b in (1, 2):
        a = noise_limited_moment(cfg, 1.0, b).total
        c = csp_moment(cfg, 1.0, b, interference=False).total
        assert a == pytest.approx(c, abs=1e-6)


def test_noise_limited_md_is_ccdf():
    cfg = SA.replace(n0=1e-6)
    xs = np.linspace(0.0, 1.0, 51)
    md = noise_limited_md(cfg, 1.0, xs)
    assert md.values[0] == 1.0 and md.values[-1] == 0.0
    assert np.all(np.diff(md.values) <= 1e-12)
    assert md.mean() == pytest.approx(noise_limited_moment(cfg, 1.0, 1).total, abs=0.01)


@pytest.mark.parametrize("base", [SA, VA], ids=["SA", "VA"])
def test_isotropic_equals_flat_pattern(base):
    flat = AntennaPattern(g_max=1.0, theta_3db=1.0, sla_db=0.0)
    cfg = base.replace(tbs_antenna=flat, uav_antenna=flat)
    for b in (1, 2):
        a = isotropic_moment(cfg, 1.0, b).total
        c = csp_moment(cfg, 1.0, b).total
        assert a == pytest.approx(c, abs=1e-6)


def test_isotropic_mode_independent():
    assert isotropic_moment(SA, 1.0, 1).total == pytest.approx(isotropic_moment(VA, 1.0, 1).total, rel=1e-12)


def test_primary_user_beats_typical_user():
    assert primary_user_moment(SA, 1.0, 1).total >= csp_moment(SA, 1.0, 1).total
    assert primary_user_moment(SA, 1.0, 0).total == 1.0


def test_delay_small_threshold():
    d = mean_local_delay(RAY, 1e-4)
    assert not d.diverged and d.value == pytest.approx(1.0, abs=1e-3)


# terrestrial-only, interference-limited, flat antennas: D = exp(c π λ h²) / (1 - c), c = 2γ / (α - 2)
TBS_ONLY = RAY.replace(n0=0.0, lambda_u=1e-14, tbs_antenna=AntennaPattern(theta_3db=1.0, sla_db=0.0))


@pytest.mark.parametrize("gamma", [0.1, 0.25, 0.4])
def test_delay_closed_form_single_tier(gamma):
    c = 2 * gamma / (TBS_ONLY.tier(TierId.B).alpha - 2)
    want = math.exp(c * math.pi * TBS_ONLY.lambda_b * TBS_ONLY.h_b ** 2) / (1 - c)
    d = mean_local_delay(TBS_ONLY, gamma)
    assert not d.diverged and d.value == pytest.approx(want, rel=1e-6)
    # Jensen: E[1/P] >= 1/E[P]
    assert d.value >= 1.0 / rayleigh_moment(TBS_ONLY, gamma, 1).total


def test_delay_phase_transition():
    # finite only below γ = (α - 2) / 2
    assert mean_local_delay(TBS_ONLY, 0.6).diverged
    assert mean_local_delay(RAY.replace(n0=0.0), 1.0).diverged


def test_delay_diverges_when_noisy():
    d = mean_local_delay(RAY.replace(n0=1e-6), 1000.0)
    assert d.diverged and math.isinf(d.value) and d.diagnostic


def test_uniform_gain_underestimates():
    u = SA.replace(interferer_gain="uniform")
    assert csp_moment(u, 1.0, 1).total < csp_moment(SA, 1.0, 1).total


def test_ladder_decays_with_uav_density():
    rep = asymptotic_moment_check(VA, "lambda_u_inf", steps=3, threshold=0.5)
    assert len(rep.values) == 4 and rep.densities[-1] == pytest.approx(VA.lambda_u * 1e3)
    assert all(0 <= v <= 1 for v in rep.values)


def test_ladder_unknown_regime():
    with pytest.raises(DomainError):
        asymptotic_moment_check(VA, "h_u_inf")
