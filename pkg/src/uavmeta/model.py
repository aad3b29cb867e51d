"""Scenario configuration and pointwise channel functions.

Units are SI throughout: metres, transmitters per square metre, watts,
radians, linear gains.  Conversions from km^-2 / dB / degrees happen only at
the configuration boundary (:mod:`uavmeta.config`).
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import DomainError

__all__ = [
    "TierId",
    "Mode",
    "Environment",
    "ENVIRONMENTS",
    "AntennaPattern",
    "TierParams",
    "NetworkConfig",
    "default_config",
    "los_probability",
    "nlos_probability",
    "antenna_gain",
    "serving_power",
    "fading_mgf",
    "altitude",
]

# absolute slack when checking r >= altitude on values that went through sqrt
_ALT_SLACK = 1e-9


class TierId(str, enum.Enum):
    B = "b"  # terrestrial base stations
    L = "L"  # UAVs in line of sight of the typical user
    N = "N"  # UAVs not in line of sight

    def __str__(self):
        return self.value


TIERS = (TierId.B, TierId.L, TierId.N)
UAV_TIERS = (TierId.L, TierId.N)


class Mode(str, enum.Enum):
    SA = "SA"  # steerable: beam tracks the served user
    VA = "VA"  # vertical: beam fixed straight down

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Environment:
    """Sigmoid line-of-sight parameters (offset ``mu_a`` and slope ``mu_b``)."""

    mu_a: float
    mu_b: float

    def __post_init__(self):
        if not (self.mu_a > 0 and self.mu_b > 0):
            raise DomainError("environment parameters must be positive")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(mu_a=float(d["mu_a"]), mu_b=float(d["mu_b"]))


ENVIRONMENTS = {
    "suburban": Environment(4.88, 0.43),
    "urban": Environment(9.61, 0.16),
    "dense_urban": Environment(11.95, 0.14),
    "highrise_urban": Environment(27.23, 0.08),
}


@dataclass(frozen=True)
class AntennaPattern:
    """Vertical-plane gain ``g_max * 10^(-min(12 (θ/θ3dB)^2, sla_db)/10)``.

    With ``literal_gain_exponent`` the attenuation is applied as
    ``10^(-A)`` instead of ``10^(-A/10)``.
    """

    g_max: float = 1.0
    theta_3db: float = math.radians(60.0)
    sla_db: float = 20.0
    literal_gain_exponent: bool = False

    def __post_init__(self):
        if not self.g_max > 0:
            raise DomainError("g_max must be positive")
        if not 0 < self.theta_3db <= math.pi:
            raise DomainError("theta_3db must lie in (0, pi]")
        if not self.sla_db >= 0:
            raise DomainError("sla_db must be non-negative")

    @property
    def floor(self) -> float:
        """Sidelobe gain floor."""
        return self.g_max * self._atten(self.sla_db)

    @property
    def knee(self) -> float:
        """Angle at which the gain reaches the sidelobe floor (may exceed pi)."""
        return self.theta_3db * math.sqrt(self.sla_db / 12.0)

    def _atten(self, a_db):
        return 10.0 ** (-a_db) if self.literal_gain_exponent else 10.0 ** (-a_db / 10.0)

    def gain(self, theta):
        a_db = np.minimum(12.0 * (np.asarray(theta) / self.theta_3db) ** 2, self.sla_db)
        return self.g_max * self._atten(a_db)


@dataclass(frozen=True)
class TierParams:
    alpha: float
    kappa: float = 1.0
    m_fading: int = 1

    def __post_init__(self):
        if not self.alpha > 2:
            raise DomainError("path-loss exponent must exceed 2")
        if not self.kappa > 0:
            raise DomainError("path-loss intercept must be positive")
        if int(self.m_fading) != self.m_fading or self.m_fading < 1:
            raise DomainError("Nakagami shape must be a positive integer")


@dataclass(frozen=True)
class NetworkConfig:
    """Full scenario description; hashable so analyses can be memoised on it.

    ``interferer_gain`` selects how interfering UAV antenna gains are
    averaged: ``"exact"`` uses the off-boresight-angle law implied by
    ``mode``; ``"uniform"`` is the uniform-OBA baseline.
    """

    lambda_b: float = 5e-6
    lambda_u: float = 20e-6
    h_b: float = 20.0
    h_u: float = 100.0
    p_b: float = 30.0
    p_u: float = 10.0
    n0: float = 1e-8
    env: Environment = ENVIRONMENTS["urban"]
    tbs_antenna: AntennaPattern = AntennaPattern(theta_3db=math.radians(160.0))
    uav_antenna: AntennaPattern = AntennaPattern(theta_3db=math.radians(60.0))
    tiers: tuple = field(default=(
        TierParams(alpha=3.0, kappa=1.0, m_fading=1),
        TierParams(alpha=2.5, kappa=1.0, m_fading=3),
        TierParams(alpha=4.0, kappa=1.0, m_fading=2),
    ))
    mode: Mode = Mode.SA
    interferer_gain: str = "exact"

    def __post_init__(self):
        for name in ("lambda_b", "lambda_u", "h_b", "h_u", "p_b", "p_u"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be positive and finite, got {v!r}")
        if not self.n0 >= 0:
            raise DomainError("n0 must be non-negative")
        if isinstance(self.tiers, dict):
            object.__setattr__(self, "tiers", tuple(self.tiers[k] for k in TIERS))
        if len(self.tiers) != 3:
            raise DomainError("one TierParams per tier (b, L, N) is required")
        if self.tiers[0].m_fading != 1:
            raise DomainError("terrestrial links use Rayleigh fading (m_fading = 1)")
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.interferer_gain not in ("exact", "uniform"):
            raise DomainError("interferer_gain must be 'exact' or 'uniform'")

    def tier(self, k) -> TierParams:
        return self.tiers[TIERS.index(TierId(k))]

    def replace(self, **kw) -> "NetworkConfig":
        return replace(self, **kw)

    def with_tier(self, k, **kw) -> "NetworkConfig":
        tiers = list(self.tiers)
        i = TIERS.index(TierId(k))
        tiers[i] = replace(tiers[i], **kw)
        return replace(self, tiers=tuple(tiers))

    def to_dict(self):
        d = {
            "lambda_b": self.lambda_b, "lambda_u": self.lambda_u,
            "h_b": self.h_b, "h_u": self.h_u, "p_b": self.p_b, "p_u": self.p_u,
            "n0": self.n0, "env": self.env.to_dict(),
            "tbs_antenna": asdict(self.tbs_antenna),
            "uav_antenna": asdict(self.uav_antenna),
            "tiers": {str(k): asdict(t) for k, t in zip(TIERS, self.tiers)},
            "mode": str(self.mode), "interferer_gain": self.interferer_gain,
        }
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(
            lambda_b=d["lambda_b"], lambda_u=d["lambda_u"], h_b=d["h_b"], h_u=d["h_u"],
            p_b=d["p_b"], p_u=d["p_u"], n0=d["n0"], env=Environment.from_dict(d["env"]),
            tbs_antenna=AntennaPattern(**d["tbs_antenna"]),
            uav_antenna=AntennaPattern(**d["uav_antenna"]),
            tiers=tuple(TierParams(**d["tiers"][str(k)]) for k in TIERS),
            mode=Mode(d["mode"]), interferer_gain=d.get("interferer_gain", "exact"),
        )


def default_config(mode=Mode.SA, **overrides) -> NetworkConfig:
    """The urban deployment used throughout the numerical study."""
    return NetworkConfig(mode=Mode(mode), **overrides)


def altitude(cfg: NetworkConfig, k) -> float:
    return cfg.h_b if TierId(k) is TierId.B else cfg.h_u


def _check_min_distance(r, alt):
    r = np.asarray(r, dtype=float)
    if np.any(r < alt - _ALT_SLACK * max(alt, 1.0)) or np.any(np.isnan(r)):
        raise DomainError(f"distance below transmitter altitude {alt}")
    return r


def _los(env: Environment, h_u, r):
    ratio = np.minimum(h_u / r, 1.0)
    elev_deg = np.degrees(np.arcsin(ratio))
    return 1.0 / (1.0 + env.mu_a * np.exp(-env.mu_b * (elev_deg - env.mu_a)))


def los_probability(cfg: NetworkConfig, r):
    """Probability that a UAV at 3-D distance ``r`` is in line of sight."""
    r = _check_min_distance(r, cfg.h_u)
    out = _los(cfg.env, cfg.h_u, r)
    return float(out) if out.ndim == 0 else out


def nlos_probability(cfg: NetworkConfig, r):
    r = _check_min_distance(r, cfg.h_u)
    out = 1.0 - _los(cfg.env, cfg.h_u, r)
    return float(out) if out.ndim == 0 else out


def antenna_gain(pattern: AntennaPattern, theta):
    """Linear gain at off-boresight angle ``theta`` (radians, in [0, pi])."""
    t = np.asarray(theta, dtype=float)
    if np.any(t < -1e-12) or np.any(t > math.pi + 1e-12) or np.any(np.isnan(t)):
        raise DomainError("off-boresight angle must lie in [0, pi]")
    out = pattern.gain(np.clip(t, 0.0, math.pi))
    return float(out) if out.ndim == 0 else out


def _vertical_angle(h, r):
    return np.arccos(np.clip(h / r, -1.0, 1.0))


def _serving_power(cfg: NetworkConfig, k: TierId, r):
    """Unchecked, vectorised serving-link average power."""
    tp = cfg.tier(k)
    if k is TierId.B:
        g = cfg.tbs_antenna.gain(_vertical_angle(cfg.h_b, r))
        return cfg.p_b * g * tp.kappa * r ** (-tp.alpha)
    if cfg.mode is Mode.SA:
        g = cfg.uav_antenna.g_max
    else:
        g = cfg.uav_antenna.gain(_vertical_angle(cfg.h_u, r))
    return cfg.p_u * g * tp.kappa * r ** (-tp.alpha)


def serving_power(cfg: NetworkConfig, k, r):
    """Average power received from a serving transmitter of tier ``k``."""
    k = TierId(k)
    r = _check_min_distance(r, altitude(cfg, k))
    out = _serving_power(cfg, k, np.maximum(r, altitude(cfg, k)))
    return float(out) if np.ndim(out) == 0 else out


def fading_mgf(m_fading, s):
    """``E[exp(-s H)]`` for unit-mean gamma fading of shape ``m_fading``."""
    s = np.asarray(s, dtype=float)
    if m_fading < 1:
        raise DomainError("Nakagami shape must be at least 1")
    if np.any(s < 0) or np.any(np.isnan(s)):
        raise DomainError("MGF argument must be non-negative")
    out = (1.0 + s / m_fading) ** (-float(m_fading))
    return float(out) if out.ndim == 0 else out
