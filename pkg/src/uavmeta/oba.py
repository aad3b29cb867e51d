"""Off-boresight angles of interfering UAVs and the resulting mean gains.

An interfering UAV at horizontal distance ``l`` from the typical user points
its beam at its own user, at horizontal distance ``t`` and relative azimuth
``α`` (uniform on ``[0, π]`` by symmetry).  The off-boresight angle ``Θ``
towards the typical user then satisfies

    cos Θ = (h² − l t cos α) / sqrt((h² + l²)(h² + t²)),

which is decreasing in ``α``.  Everything below is built on that map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, UndefinedConditionalError
from .geometry import _serving_density, _support, _tier_association
from .model import UAV_TIERS, AntennaPattern, Mode, NetworkConfig, TierId, _serving_power
from .numerics import (
    MonotoneCubic,
    QuadratureSpec,
    gauss_chebyshev,
    gauss_legendre,
    integrate_adaptive,
    panel_rule,
)

__all__ = [
    "ObaSupport",
    "GainProfile",
    "oba_bounds",
    "oba_cdf_given_lt",
    "oba_pdf_given_lt",
    "oba_pdf_given_l",
    "oba_cdf_given_l",
    "mean_gain_given_lt",
    "mean_gain_given_lt_chebyshev",
    "gain_profile",
    "mean_interfering_gain",
    "interfering_power",
    "uniform_baseline_gain",
]

_MIN_ASSOC = 1e-12  # tiers below this association weight are dropped from the mixture


@dataclass(frozen=True)
class ObaSupport:
    theta_min: float
    theta_max: float
    l: float
    t: float
    h_u: float

    @property
    def degenerate(self) -> bool:
        return self.theta_max - self.theta_min <= 1e-15


def _bounds(h, l, t):
    d = np.sqrt((h * h + l * l) * (h * h + t * t))
    lo = np.arccos(np.clip((h * h + l * t) / d, -1.0, 1.0))
    hi = np.arccos(np.clip((h * h - l * t) / d, -1.0, 1.0))
    return lo, hi, d


def _check(h, l, t):
    if not h > 0:
        raise DomainError("UAV altitude must be positive")
    if np.any(np.asarray(l) < 0) or np.any(np.asarray(t) < 0):
        raise DomainError("horizontal distances must be non-negative")


def oba_bounds(h_u, l, t) -> ObaSupport:
    """Support ``[θ_min, θ_max]`` of the off-boresight angle given ``(l, t)``."""
    _check(h_u, l, t)
    lo, hi, _ = _bounds(float(h_u), float(l), float(t))
    if l == 0 or t == 0:
        hi = lo = math.atan2(max(l, t), h_u)
    return ObaSupport(float(lo), float(hi), float(l), float(t), float(h_u))


def oba_cdf_given_lt(h_u, l, t, theta):
    """``P(Θ ≤ θ | l, t)``; a step function when the support is a point."""
    _check(h_u, l, t)
    theta = np.asarray(theta, dtype=float)
    lo, hi, d = _bounds(h_u, l, t)
    if l * t == 0:
        out = (theta >= math.atan2(max(l, t), h_u)).astype(float)
    else:
        arg = np.clip((h_u * h_u - d * np.cos(theta)) / (l * t), -1.0, 1.0)
        out = 1.0 - np.arccos(arg) / math.pi
    return float(out) if out.ndim == 0 else out


def oba_pdf_given_lt(h_u, l, t, theta):
    """Density of ``Θ`` given ``(l, t)`` (zero outside the support)."""
    _check(h_u, l, t)
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape)
    if l * t > 0:
        lo, hi, _ = _bounds(h_u, l, t)
        inside = (theta > lo) & (theta < hi)
        th = theta[inside]
        c = np.cos(th)
        out[inside] = np.sin(th) / (math.pi * np.sqrt((math.cos(lo) - c) * (c - math.cos(hi))))
    return float(out) if out.ndim == 0 else out


# -- mean gain given (l, t) ---------------------------------------------------

def _alpha_kink(h, l, t, d, knee):
    """Azimuth at which ``Θ`` crosses the pattern knee (nan if it never does)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ca = (h * h - d * math.cos(knee)) / (l * t) if knee < math.pi else np.nan
    return np.where((ca > -1) & (ca < 1), np.arccos(np.clip(ca, -1, 1)), np.nan)


def _mean_gain_alpha(pattern: AntennaPattern, h, l, t, n=24):
    """``E_α[G(Θ)]`` by Gauss-Legendre in α, split at the knee crossing.

    ``l`` and ``t`` broadcast against each other.
    """
    l, t = np.broadcast_arrays(np.asarray(l, float), np.asarray(t, float))
    d = np.sqrt((h * h + l * l) * (h * h + t * t))
    a_star = _alpha_kink(h, l, t, d, pattern.knee)
    split = np.where(np.isnan(a_star), 0.5 * math.pi, a_star)
    x, w = gauss_legendre(n)
    lt = (l * t)[..., None]
    dd = d[..., None]
    total = 0.0
    for lo, hi in ((0.0, split), (split, math.pi)):
        lo = np.broadcast_to(lo, split.shape)[..., None]
        hi = np.broadcast_to(hi, split.shape)[..., None]
        a = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x
        th = np.arccos(np.clip((h * h - lt * np.cos(a)) / dd, -1.0, 1.0))
        total = total + 0.5 * (hi[..., 0] - lo[..., 0]) * np.sum(w * pattern.gain(th), axis=-1)
    return total / math.pi


def mean_gain_given_lt(pattern: AntennaPattern, h_u, l, t):
    """Mean gain towards the typical user given ``(l, t)`` (azimuth form)."""
    _check(h_u, l, t)
    out = _mean_gain_alpha(pattern, float(h_u), l, t)
    return float(out) if np.ndim(out) == 0 else out


def mean_gain_given_lt_chebyshev(pattern: AntennaPattern, h_u, l, t, n=8192):
    """Same quantity by Gauss-Chebyshev in ``c = cos θ``.

    Independent of :func:`mean_gain_given_lt`: it integrates the density of
    ``Θ`` directly, whose endpoint singularities are exactly the Chebyshev
    weight.
    """
    _check(h_u, l, t)
    lo, hi, _ = _bounds(h_u, l, t)
    c1, c2 = math.cos(lo), math.cos(hi)
    x, w = gauss_chebyshev(n)
    c = 0.5 * (c1 + c2) + 0.5 * (c1 - c2) * x
    return float(np.sum(w * pattern.gain(np.arccos(np.clip(c, -1, 1)))) / math.pi)


# -- deconditioning over the interferer's own serving distance ---------------

@dataclass(frozen=True)
class _Mixture:
    """Serving-distance law of a UAV-served user, as weights over ``y``."""

    tiers: tuple
    norm: float
    lo: float
    hi: float
    points: tuple


@lru_cache(maxsize=64)
def _mixture(cfg: NetworkConfig) -> _Mixture:
    tiers = tuple(k for k in UAV_TIERS if _tier_association(cfg, k)[0] > _MIN_ASSOC)
    if not tiers:
        raise UndefinedConditionalError("UAVs never serve the typical user (A_b = 1)")
    norm = sum(_tier_association(cfg, k)[0] for k in tiers)
    sups = [_support(cfg, k) for k in tiers]
    lo = cfg.h_u
    hi = max(s.hi for s in sups)
    pts = sorted({p for s in sups for p in (*s.points, s.hi) if lo < p < hi})
    return _Mixture(tiers, norm, lo, hi, tuple(pts))


def _mixture_weight(cfg: NetworkConfig, mix: _Mixture, y):
    y = np.asarray(y, dtype=float)
    return sum(_serving_density(cfg, k, y) for k in mix.tiers) / mix.norm


@lru_cache(maxsize=64)
def _mixture_table(cfg: NetworkConfig, n=15):
    """Composite Gauss-Legendre nodes in ``y`` with mixture weights folded in.

    Panels are the ones accepted by the association quadrature, so kinks of
    the serving-distance density sit on panel edges.
    """
    mix = _mixture(cfg)
    panels = np.concatenate([_tier_association(cfg, k)[1] for k in mix.tiers])
    edges = np.unique(np.concatenate([panels.ravel(), [mix.lo, mix.hi], mix.points]))
    edges = edges[(edges >= mix.lo) & (edges <= mix.hi)]
    y, w = panel_rule(np.column_stack([edges[:-1], edges[1:]]), n)
    w = w * _mixture_weight(cfg, mix, y)
    keep = w > 0
    return y[keep], w[keep]


def _support_roots(h, l, c):
    """Values of ``t ≥ 0`` where ``θ = arccos c`` touches ``θ_min(t)`` or ``θ_max(t)``."""
    qa = l * l - c * c * (h * h + l * l)
    qc = h ** 4 - c * c * h * h * (h * h + l * l)
    roots = []
    for s in (1.0, -1.0):
        qb = s * 2.0 * h * h * l
        if abs(qa) < 1e-14 * (l * l + h * h):
            if qb != 0:
                roots.append(-qc / qb)
            continue
        disc = qb * qb - 4 * qa * qc
        if disc < 0:
            continue
        sq = math.sqrt(disc)
        roots += [(-qb + sq) / (2 * qa), (-qb - sq) / (2 * qa)]
    return sorted(r for r in roots if r > 0)


_PDF_SPEC = QuadratureSpec(abs_tol=1e-10, rel_tol=1e-8, max_depth=24)


def _deconditioned(cfg: NetworkConfig, l, theta, kind):
    """Average the conditional pdf or cdf of ``Θ`` over the interferer's ``t``.

    ``t`` is split where ``θ`` enters or leaves the conditional support and
    each piece is integrated under ``t = t1 + (t2 - t1)(1 - cos φ)/2``, which
    absorbs the inverse-square-root (pdf) and square-root (cdf) edges.
    """
    if cfg.mode is not Mode.SA:
        raise DomainError("the off-boresight law only varies with t for steerable beams")
    l = float(l)
    if l < 0:
        raise DomainError("horizontal distance must be non-negative")
    mix = _mixture(cfg)
    h = cfg.h_u
    t_cap = math.sqrt(mix.hi ** 2 - h * h)
    thetas = np.atleast_1d(np.asarray(theta, dtype=float))
    out = np.zeros(thetas.shape)
    for j, th in enumerate(thetas):
        if l == 0 or th <= 0 or th >= math.pi:
            out[j] = _deconditioned_l0(cfg, mix, l, th, kind)
            continue
        c = math.cos(th)
        edges = [0.0, *[r for r in _support_roots(h, l, c) if r < t_cap], t_cap]
        acc = 0.0
        for t1, t2 in zip(edges[:-1], edges[1:]):
            if t2 - t1 <= 1e-12 * t_cap:
                continue
            lo, hi, _ = _bounds(h, l, 0.5 * (t1 + t2))
            if kind == "pdf" and not lo < th < hi:
                continue
            if kind == "cdf" and th <= lo:
                continue

            def f(phi, t1=t1, t2=t2):
                t = t1 + 0.5 * (t2 - t1) * (1.0 - np.cos(phi))
                dt = 0.5 * (t2 - t1) * np.sin(phi)
                y = np.sqrt(t * t + h * h)
                d = np.sqrt((h * h + l * l) * (h * h + t * t))
                if kind == "pdf":
                    lo_, hi_, _ = _bounds(h, l, t)
                    den = (np.cos(lo_) - c) * (c - np.cos(hi_))
                    val = np.where(den > 0, math.sin(th) / (math.pi * np.sqrt(np.abs(den) + 1e-300)), 0.0)
                else:
                    with np.errstate(divide="ignore", invalid="ignore"):
                        arg = np.clip((h * h - d * c) / (l * t), -1.0, 1.0)
                    val = np.where(t > 0, 1.0 - np.arccos(arg) / math.pi, float(th >= math.atan2(l, h)))
                return val * _mixture_weight(cfg, mix, y) * (t / y) * dt

            acc += float(integrate_adaptive(f, 0.0, math.pi, _PDF_SPEC).value)
        out[j] = acc
    if kind == "cdf":
        out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if np.ndim(theta) == 0 else out


def _deconditioned_l0(cfg, mix, l, th, kind):
    """Typical user below the interferer (``Θ = arctan(t/h)``) or θ on the boundary."""
    h = cfg.h_u
    if kind == "cdf":
        if th <= 0:
            return 0.0
        if th >= math.pi or l > 0:
            return 1.0 if th >= math.pi else 0.0
        if th >= 0.5 * math.pi:
            return 1.0
        t_th = h * math.tan(th)
        y_th = min(math.sqrt(t_th * t_th + h * h), mix.hi)
        pts = [p for p in mix.points if p < y_th]
        res = integrate_adaptive(lambda y: _mixture_weight(cfg, mix, y), mix.lo, y_th,
                                 QuadratureSpec(1e-12, 1e-10), points=pts)
        return float(min(res.value, 1.0))
    if l > 0 or not 0 < th < 0.5 * math.pi:
        return 0.0
    t = h * math.tan(th)
    y = h / math.cos(th)
    if y > mix.hi:
        return 0.0
    return float(_mixture_weight(cfg, mix, y)) * h * math.sin(th) / math.cos(th) ** 2


def oba_pdf_given_l(cfg: NetworkConfig, l, theta):
    """Density of an interfering UAV's off-boresight angle given ``l``.

    The interferer's user distance is drawn from the serving-distance law of
    UAV-served users (the mixture over tiers L and N).
    """
    return _deconditioned(cfg, l, theta, "pdf")


def oba_cdf_given_l(cfg: NetworkConfig, l, theta):
    """``P(Θ ≤ θ | l)`` under the same mixture as :func:`oba_pdf_given_l`."""
    return _deconditioned(cfg, l, theta, "cdf")


# -- mean interfering gain -----------------------------------------------------

@lru_cache(maxsize=32)
def uniform_baseline_gain(pattern: AntennaPattern) -> float:
    """``(1/π) ∫_0^π G(θ) dθ``: the mean gain if the OBA were uniform."""
    knee = pattern.knee
    pts = (knee,) if knee < math.pi else ()
    res = integrate_adaptive(pattern.gain, 0.0, math.pi, QuadratureSpec(1e-15, 1e-13), points=pts)
    return float(res.value) / math.pi


def _sa_mean_gain_direct(cfg: NetworkConfig, r, rule="alpha"):
    """``ḡ_I(r)`` for steerable beams, summed over the tabulated mixture.

    ``rule`` picks the inner average over the azimuth: ``"alpha"`` (split
    Gauss-Legendre) or ``"chebyshev"`` (Gauss-Chebyshev in ``cos θ``).
    """
    y, w = _mixture_table(cfg)
    h = cfg.h_u
    l = math.sqrt(max(r * r - h * h, 0.0))
    t = np.sqrt(np.maximum(y * y - h * h, 0.0))
    if rule == "alpha":
        g = _mean_gain_alpha(cfg.uav_antenna, h, l, t)
    else:
        g = np.array([mean_gain_given_lt_chebyshev(cfg.uav_antenna, h, l, ti) for ti in t])
    return float(np.sum(w * g))


@dataclass(frozen=True)
class GainProfile:
    """Mean interfering UAV gain as a function of 3-D distance ``r``.

    ``mode`` is ``"SA"``, ``"VA"`` or ``"UNIFORM_BASELINE"``.  The SA
    profile is tabulated on knots uniform in ``v = asinh(l / h_u)`` and
    interpolated monotonically (piecewise cubic Hermite) in ``v``; it is flat
    beyond the last knot.
    """

    mode: str
    h_u: float
    pattern: AntennaPattern
    knots: np.ndarray = None
    values: np.ndarray = None
    tolerance: float = 1e-4

    def __post_init__(self):
        if self.knots is not None:
            object.__setattr__(self, "_interp", MonotoneCubic(self.knots, self.values))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.mode == "UNIFORM_BASELINE":
            out = np.full(r.shape, uniform_baseline_gain(self.pattern))
        elif self.mode == "VA":
            out = self.pattern.gain(np.arccos(np.clip(self.h_u / np.maximum(r, self.h_u), -1, 1)))
        else:
            v = np.arcsinh(np.sqrt(np.maximum(r * r - self.h_u ** 2, 0.0)) / self.h_u)
            out = self._interp(v)
        return float(out) if out.ndim == 0 else out


PROFILE_KNOTS = 256
PROFILE_R_MAX = 1e6


@lru_cache(maxsize=64)
def gain_profile(cfg: NetworkConfig) -> GainProfile:
    if cfg.interferer_gain == "uniform":
        return GainProfile("UNIFORM_BASELINE", cfg.h_u, cfg.uav_antenna)
    if cfg.mode is Mode.VA:
        return GainProfile("VA", cfg.h_u, cfg.uav_antenna)
    h = cfg.h_u
    v_max = math.asinh(math.sqrt(max(PROFILE_R_MAX, 10 * h) ** 2 - h * h) / h)
    knots = np.linspace(0.0, v_max, PROFILE_KNOTS)
    vals = np.array([_sa_mean_gain_direct(cfg, h * math.cosh(v)) for v in knots])
    lo, hi = cfg.uav_antenna.floor, cfg.uav_antenna.g_max
    vals = np.clip(vals, lo, hi)
    return GainProfile("SA", h, cfg.uav_antenna, knots, vals)


def mean_interfering_gain(cfg: NetworkConfig, r, direct=False):
    """Mean antenna gain of an interfering UAV at 3-D distance ``r``.

    ``direct=True`` bypasses the tabulated profile (SA only).
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < cfg.h_u * (1 - 1e-12)) or np.any(np.isnan(r_arr)):
        raise DomainError("distance below the UAV altitude")
    if direct and cfg.mode is Mode.SA and cfg.interferer_gain == "exact":
        out = np.vectorize(lambda x: _sa_mean_gain_direct(cfg, float(x)))(r_arr)
        return float(out) if out.ndim == 0 else out
    return gain_profile(cfg)(r_arr)


def _interfering_power(cfg: NetworkConfig, k: TierId, r):
    """Unchecked, vectorised interfering average power."""
    if k is TierId.B:
        return _serving_power(cfg, k, r)
    tp = cfg.tier(k)
    return cfg.p_u * gain_profile(cfg)(r) * tp.kappa * np.asarray(r, float) ** (-tp.alpha)


def interfering_power(cfg: NetworkConfig, k, r):
    """Average power received from an interfering transmitter of tier ``k``."""
    k = TierId(k)
    alt = cfg.h_b if k is TierId.B else cfg.h_u
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < alt * (1 - 1e-12)) or np.any(np.isnan(r_arr)):
        raise DomainError("distance below the tier altitude")
    out = _interfering_power(cfg, k, np.maximum(r_arr, alt))
    return float(out) if np.ndim(out) == 0 else out
