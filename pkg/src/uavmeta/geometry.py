"""Distance point processes, association probabilities and serving distances.

The per-tier distance processes are Poisson on the half line; everything in
this module is expressed through their intensity ``λ̄_k(r)`` and measure
``Λ̄_k([0, r])``.  The UAV measures have no closed form, so they are
tabulated once per (environment, altitude) on anchors uniform in
``v = arccosh(r / h_u)`` (a variable in which the LoS sigmoid is analytic),
and completed between anchors by Gauss-Legendre.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import DomainError, NumericError, UndefinedConditionalError
from .model import (
    TIERS,
    UAV_TIERS,
    Environment,
    Mode,
    NetworkConfig,
    TierId,
    _serving_power,
    altitude,
)
from .numerics import QuadratureSpec, gauss_legendre, integrate_adaptive, integrate_sqrt_edge

log = logging.getLogger(__name__)

__all__ = [
    "DistanceProcess",
    "AssociationResult",
    "distance_process",
    "intensity",
    "intensity_measure",
    "min_distance_cdf",
    "min_distance_pdf",
    "power_match_radius",
    "association_probabilities",
    "serving_distance_pdf",
    "serving_distance_cdf",
    "asymptotic_association",
]

R_CAP = 1e6  # fallback integration cap (m)
VOID_EXPONENT = 50.0  # exp(-50) ~ 2e-22 is treated as zero mass
_ASSOC_SPEC = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-12, max_depth=50)


def _acosh_ratio(r, h):
    """``arccosh(r / h)`` accurate for ``r`` just above ``h``."""
    d = (r - h) / h
    return np.log1p(d + np.sqrt(d * (2.0 + d)))


class _UavMeasure:
    """Λ̄_L and Λ̄_N per unit UAV density for one (environment, altitude)."""

    DV = 0.05
    NODES = 10

    def __init__(self, env: Environment, h_u: float):
        self.env, self.h = env, h_u
        self.r_top = max(1e10, 1e6 * h_u)
        self.v_top = math.acosh(self.r_top / h_u)
        n = int(math.ceil(self.v_top / self.DV))
        self.anchors = np.arange(n + 1) * self.DV
        lo, hi = self.anchors[:-1], self.anchors[1:]
        seg_l, seg_n = self._segment(lo, hi)
        self.cum = {
            TierId.L: np.concatenate([[0.0], np.cumsum(seg_l)]),
            TierId.N: np.concatenate([[0.0], np.cumsum(seg_n)]),
        }
        # tail beyond r_top: the LoS probability is constant to ~1e-8 there
        pl_top = self.probs(np.array([self.v_top]))[0][0]
        self.p_top = {TierId.L: pl_top, TierId.N: 1.0 - pl_top}

    def probs(self, v):
        """(p_L, p_N) at ``r = h cosh v`` computed without cancellation."""
        elev = np.degrees(0.5 * np.pi - np.arctan(np.sinh(v)))
        q = self.env.mu_a * np.exp(-self.env.mu_b * (elev - self.env.mu_a))
        return 1.0 / (1.0 + q), q / (1.0 + q)

    def _segment(self, lo, hi):
        x, w = gauss_legendre(self.NODES)
        c = 0.5 * (lo + hi)
        h = 0.5 * (hi - lo)
        v = c[..., None] + h[..., None] * x
        jac = 2.0 * np.pi * self.h ** 2 * np.cosh(v) * np.sinh(v)
        pl, pn = self.probs(v)
        return (h * np.sum(w * pl * jac, axis=-1), h * np.sum(w * pn * jac, axis=-1))

    def __call__(self, k: TierId, r):
        """Measure of ``[0, r]`` for unit density."""
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape)
        inside = (r > self.h) & (r <= self.r_top)
        if np.any(inside):
            v = _acosh_ratio(r[inside], self.h)
            i = np.minimum((v / self.DV).astype(int), self.anchors.size - 2)
            seg = self._segment(self.anchors[i], v)[0 if k is TierId.L else 1]
            out[inside] = self.cum[k][i] + seg
        beyond = r > self.r_top
        if np.any(beyond):
            out[beyond] = (self.cum[k][-1]
                           + np.pi * self.p_top[k] * (r[beyond] ** 2 - self.r_top ** 2))
        return out


@lru_cache(maxsize=128)
def _uav_measure(env: Environment, h_u: float) -> _UavMeasure:
    return _UavMeasure(env, h_u)


def _intensity(cfg: NetworkConfig, k: TierId, r):
    r = np.asarray(r, dtype=float)
    if k is TierId.B:
        return np.where(r >= cfg.h_b, 2.0 * np.pi * cfg.lambda_b * r, 0.0)
    rr = np.maximum(r, cfg.h_u)
    pl, pn = _uav_measure(cfg.env, cfg.h_u).probs(_acosh_ratio(rr, cfg.h_u))
    p = pl if k is TierId.L else pn
    return np.where(r >= cfg.h_u, 2.0 * np.pi * cfg.lambda_u * r * p, 0.0)


def _measure(cfg: NetworkConfig, k: TierId, r):
    r = np.asarray(r, dtype=float)
    if k is TierId.B:
        return np.where(r > cfg.h_b, np.pi * cfg.lambda_b * (r * r - cfg.h_b ** 2), 0.0)
    return cfg.lambda_u * _uav_measure(cfg.env, cfg.h_u)(k, r)


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def intensity(cfg: NetworkConfig, k, r):
    """Density ``λ̄_k(r)`` of the tier-``k`` distance process (per metre)."""
    return _scalar(_intensity(cfg, TierId(k), r))


def intensity_measure(cfg: NetworkConfig, k, r):
    """Expected number of tier-``k`` transmitters within 3-D distance ``r``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("distance must be non-negative")
    return _scalar(_measure(cfg, TierId(k), r))


@dataclass(frozen=True)
class DistanceProcess:
    tier: TierId
    intensity: Callable
    measure: Callable


def distance_process(cfg: NetworkConfig, k) -> DistanceProcess:
    k = TierId(k)
    return DistanceProcess(
        tier=k,
        intensity=lambda r: intensity(cfg, k, r),
        measure=lambda r: intensity_measure(cfg, k, r),
    )


def min_distance_cdf(cfg: NetworkConfig, k, r):
    return _scalar(-np.expm1(-np.asarray(intensity_measure(cfg, k, r))))


def min_distance_pdf(cfg: NetworkConfig, k, r):
    k = TierId(k)
    r = np.asarray(r, dtype=float)
    return _scalar(_intensity(cfg, k, r) * np.exp(-_measure(cfg, k, r)))


# -- power matching -----------------------------------------------------------

def _pattern(cfg: NetworkConfig, k: TierId):
    return cfg.tbs_antenna if k is TierId.B else cfg.uav_antenna


def _angle_dependent(cfg: NetworkConfig, k: TierId) -> bool:
    return k is TierId.B or cfg.mode is Mode.VA


def knee_radius(cfg: NetworkConfig, k: TierId):
    """Distance at which tier ``k``'s serving gain hits the sidelobe floor."""
    if not _angle_dependent(cfg, k):
        return None
    knee = _pattern(cfg, k).knee
    if knee >= 0.5 * math.pi or _pattern(cfg, k).sla_db == 0:
        return None
    return altitude(cfg, k) / math.cos(knee)


def _inverse_power(cfg: NetworkConfig, ell: TierId, target, iters=64):
    """Radius at which tier ``ell`` delivers ``target`` power, clamped at its altitude."""
    target = np.asarray(target, dtype=float)
    alt = altitude(cfg, ell)
    out = np.full(target.shape, alt)
    need = target < _serving_power(cfg, ell, alt)
    if not np.any(need):
        return out
    tgt = target[need]
    tp = cfg.tier(ell)
    pat = _pattern(cfg, ell)
    scale = (cfg.p_b if ell is TierId.B else cfg.p_u) * tp.kappa
    if not _angle_dependent(cfg, ell):
        out[need] = (scale * pat.g_max / tgt) ** (1.0 / tp.alpha)
        return out
    r_floor = (scale * pat.floor / tgt) ** (1.0 / tp.alpha)
    r_knee = knee_radius(cfg, ell)
    res = np.empty(tgt.shape)
    done = np.zeros(tgt.shape, dtype=bool)
    if r_knee is not None:
        done = r_floor >= r_knee
        res[done] = r_floor[done]
    todo = ~done
    if np.any(todo):
        t = tgt[todo]
        lo = np.log(np.maximum(alt, r_floor[todo]))
        hi = np.log(np.maximum((scale * pat.g_max / t) ** (1.0 / tp.alpha), alt))
        if r_knee is not None:
            hi = np.minimum(hi, math.log(r_knee))
        lt = np.log(t)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            above = np.log(_serving_power(cfg, ell, np.exp(mid))) > lt
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        res[todo] = np.exp(0.5 * (lo + hi))
    out[need] = res
    return out


def _chi(cfg: NetworkConfig, k: TierId, ell: TierId, r):
    r = np.asarray(r, dtype=float)
    if k is ell:
        return r.copy()
    return _inverse_power(cfg, ell, _serving_power(cfg, k, np.maximum(r, altitude(cfg, k))))


def power_match_radius(cfg: NetworkConfig, k, ell, r):
    """Distance at which a tier-``ell`` server matches tier ``k`` at distance ``r``.

    Clamped below to tier ``ell``'s altitude when even its closest possible
    transmitter is weaker.
    """
    k, ell = TierId(k), TierId(ell)
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)):
        raise DomainError("distance must be finite")
    if np.any(r < altitude(cfg, k) * (1 - 1e-12)):
        raise DomainError("distance below the serving tier's altitude")
    return _scalar(_chi(cfg, k, ell, r))


# -- association ----------------------------------------------------------------

def _void_exponent(cfg: NetworkConfig, k: TierId, y):
    """Σ_ℓ Λ̄_ℓ([0, χ_{k,ℓ}(y)])."""
    return sum(_measure(cfg, ell, _chi(cfg, k, ell, y)) for ell in TIERS)


def _serving_density(cfg: NetworkConfig, k: TierId, y):
    """``A_k f_{Y0,k}(y)`` (unnormalised serving-distance density)."""
    y = np.asarray(y, dtype=float)
    return _intensity(cfg, k, y) * np.exp(-_void_exponent(cfg, k, y))


@dataclass(frozen=True)
class _Support:
    lo: float
    hi: float
    points: tuple
    tail_exponent: float


@lru_cache(maxsize=256)
def _support(cfg: NetworkConfig, k: TierId) -> _Support:
    """Integration range and kink locations for tier ``k``'s serving distance."""
    lo = altitude(cfg, k)
    hi = 2.0 * lo
    e = float(_void_exponent(cfg, k, hi))
    while e < VOID_EXPONENT and hi < R_CAP:
        hi = min(2.0 * hi, R_CAP)
        e = float(_void_exponent(cfg, k, hi))
    if e < 20.0:
        log.warning("tier %s keeps probability mass exp(-%.3g) beyond %.3g m", k, e, hi)
    pts = set()
    rk = knee_radius(cfg, k)
    if rk is not None:
        pts.add(rk)
    for ell in TIERS:
        if ell is k:
            continue
        alt_l = altitude(cfg, ell)
        # y at which chi_{k,ell} leaves its clamp at the ell altitude
        y_c = float(_inverse_power(cfg, k, np.array([_serving_power(cfg, ell, alt_l)]))[0])
        pts.add(y_c)
        rk_l = knee_radius(cfg, ell)
        if rk_l is not None:
            pts.add(float(_inverse_power(cfg, k, np.array([_serving_power(cfg, ell, rk_l)]))[0]))
    pts = tuple(sorted(p for p in pts if lo * (1 + 1e-12) < p < hi))
    return _Support(lo, hi, pts, e)


@dataclass(frozen=True)
class AssociationResult:
    a_b: float
    a_l: float
    a_n: float
    mode: Mode

    def __getitem__(self, k):
        return {TierId.B: self.a_b, TierId.L: self.a_l, TierId.N: self.a_n}[TierId(k)]

    def as_dict(self):
        return {"b": self.a_b, "L": self.a_l, "N": self.a_n}

    @property
    def total(self):
        return self.a_b + self.a_l + self.a_n


@lru_cache(maxsize=256)
def _tier_association(cfg: NetworkConfig, k: TierId):
    sup = _support(cfg, k)
    # the density has a square-root kink at the altitude
    res = integrate_sqrt_edge(lambda y: _serving_density(cfg, k, y), sup.lo, sup.hi,
                              _ASSOC_SPEC, points=sup.points)
    return float(res.value), res.panels


def association_probabilities(cfg: NetworkConfig) -> AssociationResult:
    """Probability that the typical user is served by each tier."""
    try:
        a = [_tier_association(cfg, k)[0] for k in TIERS]
    except NumericError as exc:
        raise NumericError(f"association quadrature failed: {exc}", where=exc.where) from exc
    return AssociationResult(*a, mode=cfg.mode)


@lru_cache(maxsize=256)
def _cdf_table(cfg: NetworkConfig, k: TierId):
    total, panels = _tier_association(cfg, k)
    x, w = gauss_legendre(20)
    c = 0.5 * (panels[:, 0] + panels[:, 1])
    h = 0.5 * (panels[:, 1] - panels[:, 0])
    seg = h * np.sum(w * _serving_density(cfg, k, c[:, None] + h[:, None] * x), axis=1)
    return panels, np.concatenate([[0.0], np.cumsum(seg)])


def _serving_cdf_unnorm(cfg: NetworkConfig, k: TierId, y):
    """``∫_0^y A_k f_{Y0,k}``, vectorised."""
    panels, cum = _cdf_table(cfg, k)
    y = np.asarray(y, dtype=float)
    yc = np.clip(y, panels[0, 0], panels[-1, 1])
    i = np.clip(np.searchsorted(panels[:, 0], yc, side="right") - 1, 0, len(panels) - 1)
    a = panels[i, 0]
    x, w = gauss_legendre(20)
    c = 0.5 * (a + yc)
    h = 0.5 * (yc - a)
    part = h * np.sum(w * _serving_density(cfg, k, c[..., None] + h[..., None] * x), axis=-1)
    out = cum[i] + part
    return np.where(y >= panels[-1, 1], cum[-1], out)


def _require_assoc(cfg, k):
    a = _tier_association(cfg, k)[0]
    if not a > 0:
        raise UndefinedConditionalError(f"tier {k} is never associated (A_k = 0)")
    return a


def serving_distance_pdf(cfg: NetworkConfig, k, y):
    """Density of the serving distance given association with tier ``k``."""
    k = TierId(k)
    a = _require_assoc(cfg, k)
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("distance must be non-negative")
    return _scalar(_serving_density(cfg, k, y) / a)


def serving_distance_cdf(cfg: NetworkConfig, k, y):
    k = TierId(k)
    a = _require_assoc(cfg, k)
    return _scalar(np.minimum(_serving_cdf_unnorm(cfg, k, y) / a, 1.0))


def asymptotic_association(cfg: NetworkConfig, which: str) -> AssociationResult:
    """Association limits as one tier's density grows without bound.

    ``which`` is ``"lambda_b_inf"`` or ``"lambda_u_inf"``.  For the
    terrestrial limit the serving TBS sits at distance ``h_b``; the UAV
    share is split between L and N by the same race restricted to UAVs
    that beat it.
    """
    if which == "lambda_b_inf":
        lb = _serving_power(cfg, TierId.B, cfg.h_b)
        chi = {ell: float(_inverse_power(cfg, ell, np.array([lb]))[0]) for ell in UAV_TIERS}
        a_b = math.exp(-sum(float(_measure(cfg, ell, chi[ell])) for ell in UAV_TIERS))
        if a_b == 1.0:
            return AssociationResult(1.0, 0.0, 0.0, cfg.mode)
        a = {}
        for k in UAV_TIERS:
            other = TierId.N if k is TierId.L else TierId.L

            def f(y, k=k, other=other):
                e = _measure(cfg, k, y) + _measure(cfg, other, _chi(cfg, k, other, y))
                return _intensity(cfg, k, y) * np.exp(-e)

            hi = chi[k]
            a[k] = float(integrate_sqrt_edge(f, cfg.h_u, hi, _ASSOC_SPEC).value) if hi > cfg.h_u else 0.0
        return AssociationResult(a_b, a[TierId.L], a[TierId.N], cfg.mode)
    if which == "lambda_u_inf":
        chi = float(_chi(cfg, TierId.L, TierId.B, np.array([cfg.h_u]))[0])
        a_b = -math.expm1(-float(_measure(cfg, TierId.B, chi)))
        return AssociationResult(a_b, 1.0 - a_b, 0.0, cfg.mode)
    raise DomainError(f"unknown asymptotic regime {which!r}")
