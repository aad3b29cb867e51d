"""Flat dotted-key configuration files.

A config file is a list of ``key = value`` lines (``#`` starts a comment).
Network keys mirror :class:`~uavmeta.model.NetworkConfig` with field units
at the boundary: densities in 1/km², angles in degrees, gains and
intercepts in dB, noise in dBm.  Keys outside the network schema are
grouped by prefix (``sim.*``, ``run.*``, ``sweep.*``, ``oba.*``) and
returned separately for the command-line front-end.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
import os
from importlib import resources

from .errors import ConfigError, DomainError
from .model import (
    ENVIRONMENTS,
    AntennaPattern,
    Environment,
    Mode,
    NetworkConfig,
    TierId,
    default_config,
)

__all__ = ["SCHEMA", "EXTRA_KEYS", "load_config", "parse_config", "dump_config",
           "apply_setting", "get_setting", "config_hash", "schema_help", "preset_names"]

_SECTION = "uavmeta"


def _db(x):
    return 10.0 ** (float(x) / 10.0)


def _to_db(x):
    return 10.0 * math.log10(x)


# key -> (getter(cfg) -> boundary value, setter(cfg, boundary value) -> cfg, unit, help)
def _tier(k, field):
    return (lambda c: getattr(c.tier(k), field),
            lambda c, v: c.with_tier(k, **{field: v}))


def _ant(which, field, to_b=lambda v: v, from_b=lambda v: v):
    def get(c):
        return to_b(getattr(getattr(c, which), field))

    def put(c, v):
        ant = getattr(c, which)
        fields = {f: getattr(ant, f) for f in ("g_max", "theta_3db", "sla_db", "literal_gain_exponent")}
        fields[field] = from_b(v)
        return c.replace(**{which: AntennaPattern(**fields)})
    return get, put


def _env_get(c, field):
    return getattr(c.env, field)


def _env_put(c, field, v):
    d = c.env.to_dict()
    d[field] = float(v)
    return c.replace(env=Environment.from_dict(d))


def _preset_get(c):
    for name, env in ENVIRONMENTS.items():
        if env == c.env:
            return name
    return "custom"


def _preset_put(c, v):
    v = str(v).strip().lower().replace(" ", "_").replace("-", "_")
    if v not in ENVIRONMENTS:
        raise ConfigError(f"environment.preset: unknown preset {v!r} "
                          f"(choose from {', '.join(ENVIRONMENTS)})")
    return c.replace(env=ENVIRONMENTS[v])


def _bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


_A = {"tbs": "tbs_antenna", "uav": "uav_antenna"}

# (getter, setter, parser, unit, help)
SCHEMA = {
    "network.mode": (lambda c: str(c.mode).lower(), lambda c, v: c.replace(mode=Mode(str(v).upper())),
                     str, "sa|va", "UAV antenna type: steerable (sa) or vertical (va)"),
    "network.interferer_gain": (lambda c: c.interferer_gain, lambda c, v: c.replace(interferer_gain=v),
                                str, "exact|uniform", "interfering UAV gain law"),
    "network.noise_dbm": (lambda c: _to_db(c.n0) + 30.0 if c.n0 > 0 else -math.inf,
                          lambda c, v: c.replace(n0=_db(v - 30.0) if math.isfinite(v) else 0.0),
                          float, "dBm", "noise power (-inf for none)"),
    "environment.preset": (_preset_get, _preset_put, str, "name",
                           "suburban|urban|dense_urban|highrise_urban"),
    "environment.mu_a": (lambda c: _env_get(c, "mu_a"), lambda c, v: _env_put(c, "mu_a", v),
                         float, "-", "LoS sigmoid offset"),
    "environment.mu_b": (lambda c: _env_get(c, "mu_b"), lambda c, v: _env_put(c, "mu_b", v),
                         float, "-", "LoS sigmoid slope"),
    "tbs.density_per_km2": (lambda c: c.lambda_b * 1e6, lambda c, v: c.replace(lambda_b=v / 1e6),
                            float, "1/km^2", "TBS density"),
    "tbs.height_m": (lambda c: c.h_b, lambda c, v: c.replace(h_b=v), float, "m", "TBS antenna height"),
    "tbs.power_w": (lambda c: c.p_b, lambda c, v: c.replace(p_b=v), float, "W", "TBS transmit power"),
    "tbs.pathloss_exponent": (*_tier(TierId.B, "alpha"), float, "-", "TBS path-loss exponent"),
    "tbs.pathloss_intercept_db": ((lambda c: _to_db(c.tier(TierId.B).kappa)),
                                  (lambda c, v: c.with_tier(TierId.B, kappa=_db(v))),
                                  float, "dB", "TBS path-loss intercept"),
    "uav.density_per_km2": (lambda c: c.lambda_u * 1e6, lambda c, v: c.replace(lambda_u=v / 1e6),
                            float, "1/km^2", "UAV density"),
    "uav.altitude_m": (lambda c: c.h_u, lambda c, v: c.replace(h_u=v), float, "m", "UAV altitude"),
    "uav.power_w": (lambda c: c.p_u, lambda c, v: c.replace(p_u=v), float, "W", "UAV transmit power"),
    "uav.los.pathloss_exponent": (*_tier(TierId.L, "alpha"), float, "-", "LoS path-loss exponent"),
    "uav.los.pathloss_intercept_db": ((lambda c: _to_db(c.tier(TierId.L).kappa)),
                                      (lambda c, v: c.with_tier(TierId.L, kappa=_db(v))),
                                      float, "dB", "LoS path-loss intercept"),
    "uav.los.nakagami_m": (*_tier(TierId.L, "m_fading"), int, "-", "LoS Nakagami shape"),
    "uav.nlos.pathloss_exponent": (*_tier(TierId.N, "alpha"), float, "-", "NLoS path-loss exponent"),
    "uav.nlos.pathloss_intercept_db": ((lambda c: _to_db(c.tier(TierId.N).kappa)),
                                       (lambda c, v: c.with_tier(TierId.N, kappa=_db(v))),
                                       float, "dB", "NLoS path-loss intercept"),
    "uav.nlos.nakagami_m": (*_tier(TierId.N, "m_fading"), int, "-", "NLoS Nakagami shape"),
}

for _w in ("tbs", "uav"):
    SCHEMA[f"{_w}.antenna.gain_max_db"] = (*_ant(_A[_w], "g_max", _to_db, _db), float, "dB",
                                           f"{_w.upper()} peak antenna gain")
    SCHEMA[f"{_w}.antenna.beamwidth_deg"] = (*_ant(_A[_w], "theta_3db", math.degrees, math.radians),
                                             float, "deg", f"{_w.upper()} 3 dB beamwidth")
    SCHEMA[f"{_w}.antenna.sla_db"] = (*_ant(_A[_w], "sla_db"), float, "dB",
                                      f"{_w.upper()} sidelobe attenuation limit")
    SCHEMA[f"{_w}.antenna.literal_gain_exponent"] = (*_ant(_A[_w], "literal_gain_exponent", bool, _bool),
                                                     _bool, "bool",
                                                     "apply the attenuation as 10^-A instead of 10^(-A/10)")

# non-network keys accepted in files, with their parsers
EXTRA_KEYS = {
    "run.command": (str, "subcommand a preset is meant for"),
    "run.gamma_db": (str, "SINR threshold(s) in dB: list or start:stop:count"),
    "run.x": (str, "reliability grid: list or start:stop:count"),
    "run.b": (str, "moment orders"),
    "run.method": (str, "meta distribution method"),
    "sim.networks": (int, "Monte Carlo network realizations"),
    "sim.fading_draws": (int, "fading draws per realization"),
    "sim.seed": (int, "master seed"),
    "sim.region_radius_m": (float, "radius of the individually simulated disk"),
    "sim.far_radius_m": (float, "outer radius of the sampled far field (0 disables)"),
    "sweep.param": (str, "swept key"),
    "sweep.values": (str, "explicit values"),
    "sweep.start": (float, "range start"),
    "sweep.stop": (float, "range stop"),
    "sweep.count": (int, "range count"),
    "sweep.spacing": (str, "linear|log"),
    "sweep.metric": (str, "comma-separated metrics"),
    "sweep.modes": (str, "comma-separated modes"),
    "sweep.series_param": (str, "second key held at each of sweep.series_values"),
    "sweep.series_values": (str, "values of the series key"),
    "oba.table": (str, "pdf|gain"),
    "oba.distance_m": (str, "horizontal distances of interferers"),
    "oba.theta_deg": (str, "off-boresight angle grid"),
}


def schema_help() -> str:
    lines = ["network keys:"]
    for k, v in SCHEMA.items():
        lines.append(f"  {k:40s} [{v[3]}] {v[4]}")
    lines.append("other keys:")
    for k, v in EXTRA_KEYS.items():
        lines.append(f"  {k:40s} {v[1]}")
    return "\n".join(lines)


def _parse_value(path, parser, raw):
    try:
        if parser is float:
            return float(raw.strip())
        if parser is int:
            f = float(raw)
            if f != int(f):
                raise ValueError("not an integer")
            return int(f)
        return parser(raw.strip()) if parser is not str else raw.strip()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: cannot parse {raw!r} ({exc})") from exc


def apply_setting(cfg: NetworkConfig, path: str, value) -> NetworkConfig:
    """Return ``cfg`` with the network key ``path`` set to a boundary-unit ``value``."""
    if path not in SCHEMA:
        raise ConfigError(f"unknown network key: {path}")
    _, put, parser, _, _ = SCHEMA[path]
    if isinstance(value, str):
        value = _parse_value(path, parser, value)
    try:
        return put(cfg, value)
    except (DomainError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def get_setting(cfg: NetworkConfig, path: str):
    if path not in SCHEMA:
        raise ConfigError(f"unknown network key: {path}")
    return SCHEMA[path][0](cfg)


def parse_config(text: str, base: NetworkConfig | None = None):
    """Parse config text into ``(NetworkConfig, extras)``.

    Unknown keys raise :class:`ConfigError` naming every offending path.
    ``environment.preset`` is applied before ``environment.mu_a/mu_b``.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None,
                                   strict=True)
    cp.optionxform = str
    try:
        cp.read_string(f"[{_SECTION}]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    items = dict(cp.items(_SECTION))
    unknown = sorted(k for k in items if k not in SCHEMA and k not in EXTRA_KEYS)
    if unknown:
        raise ConfigError("unknown config keys: " + ", ".join(unknown))
    cfg = base or default_config()
    order = sorted((k for k in items if k in SCHEMA), key=lambda k: (k != "environment.preset", k))
    for k in order:
        cfg = apply_setting(cfg, k, items[k])
    extras = {k: _parse_value(k, EXTRA_KEYS[k][0], v) for k, v in items.items() if k in EXTRA_KEYS}
    return cfg, extras


def preset_names():
    return sorted(p.name[:-4] for p in resources.files("uavmeta.presets").iterdir()
                  if p.name.endswith(".cfg"))


def load_config(path, base: NetworkConfig | None = None):
    """Read a config file; a bare bundled preset name such as ``fig5`` also works."""
    if not os.path.exists(path) and str(path).removesuffix(".cfg") in preset_names():
        text = resources.files("uavmeta.presets").joinpath(str(path).removesuffix(".cfg") + ".cfg")
        return parse_config(text.read_text(encoding="utf-8"), base)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base)


def dump_config(cfg: NetworkConfig, extras: dict | None = None) -> str:
    """Serialise to the flat key format; ``parse_config`` reads it back exactly."""
    lines = []
    for k, (get, *_rest) in SCHEMA.items():
        if k == "environment.preset":
            continue
        v = get(cfg)
        lines.append(f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}")
    for k, v in (extras or {}).items():
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: NetworkConfig, extra=None) -> str:
    blob = json.dumps({"config": cfg.to_dict(), "extra": extra}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
