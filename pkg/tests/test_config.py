import math

import pytest

from uavmeta.config import (
    EXTRA_KEYS,
    SCHEMA,
    apply_setting,
    config_hash,
    dump_config,
    get_setting,
    load_config,
    parse_config,
    preset_names,
)
from uavmeta.errors import ConfigError
from uavmeta.model import ENVIRONMENTS, Mode, TierId, default_config

CFG = default_config()


def test_round_trip_defaults():
    cfg, extras = parse_config(dump_config(CFG))
    assert cfg == CFG and extras == {}


def test_round_trip_modified():
    cfg = (CFG.replace(mode=Mode.VA, h_u=333.3, lambda_u=7.5e-6, n0=1e-11, interferer_gain="uniform")
           .with_tier(TierId.N, m_fading=4, alpha=3.7))
    back, extras = parse_config(dump_config(cfg, {"sim.seed": 9}))
    assert back == cfg and extras == {"sim.seed": 9}


def test_boundary_units():
    cfg, _ = parse_config("uav.density_per_km2 = 20\nuav.antenna.beamwidth_deg = 90\nnetwork.noise_dbm = -90\n")
    assert cfg.lambda_u == pytest.approx(2e-5, rel=1e-15)
    assert cfg.uav_antenna.theta_3db == pytest.approx(math.pi / 2, rel=1e-15)
    assert cfg.n0 == pytest.approx(1e-12, rel=1e-12)
    assert get_setting(cfg, "uav.density_per_km2") == pytest.approx(20.0, rel=1e-12)


def test_environment_preset_applied_first():
    cfg, _ = parse_config("environment.mu_a = 1.5\nenvironment.preset = dense_urban\n")
    assert cfg.env.mu_a == 1.5 and cfg.env.mu_b == ENVIRONMENTS["dense_urban"].mu_b


def test_unknown_keys_named():
    with pytest.raises(ConfigError) as exc:
        parse_config("uav.altitude = 5\nfoo.bar = 1\n")
    assert "foo.bar" in str(exc.value) and "uav.altitude" in str(exc.value)


@pytest.mark.parametrize("text", ["uav.altitude_m = -5", "uav.altitude_m = tall", "sim.networks = 2.5",
                                  "network.mode = xa", "uav.los.nakagami_m = 1.5"])
def test_bad_values(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_malformed_and_duplicate():
    with pytest.raises(ConfigError):
        parse_config("uav.altitude_m = 1\nuav.altitude_m = 2\n")


def test_comments_and_extras():
    cfg, extras = parse_config("# note\nsim.networks = 500  # inline\nrun.gamma_db = -5:5:3\n")
    assert cfg == CFG
    assert extras == {"sim.networks": 500, "run.gamma_db": "-5:5:3"}


def test_apply_setting_rejects_unknown():
    with pytest.raises(ConfigError):
        apply_setting(CFG, "uav.speed", "3")


def test_presets_load_by_name():
    names = preset_names()
    assert names == [f"fig{i}" for i in range(3, 10)]
    for n in names:
        cfg, extras = load_config(n)
        assert extras["run.command"] in ("oba", "sweep")
        assert all(k in EXTRA_KEYS for k in extras)


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/config.cfg")


def test_hash_stable_and_sensitive():
    assert config_hash(CFG, {"a": 1}) == config_hash(default_config(), {"a": 1})
    assert config_hash(CFG) != config_hash(CFG.replace(h_u=101.0))


def test_every_key_readable():
    for k in SCHEMA:
        if k != "environment.preset":
            get_setting(CFG, k)
