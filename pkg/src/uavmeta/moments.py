"""Moments of the conditional success probability and the meta distribution.

All moment formulas share one building block,

    T_k(c, s, p) = ∫ λ̄_k(y) exp(-Σ_ℓ Λ̄_ℓ(χ_kℓ(y)))
                     · exp(-c γ N0 / l_k(y) - Σ_ℓ U_ℓ(y)) dy,
    U_ℓ(y)      = ∫_{χ_kℓ(y)}^∞ [1 - (1 + s_ℓ γ h_ℓ(r) / l_k(y))^(-p_ℓ)] λ̄_ℓ(r) dr,

evaluated for a batch of parameter triples at once.  The Nakagami moments
use ``c = m φ_k``, ``s_ℓ = m φ_k / M_ℓ``, ``p_ℓ = M_ℓ`` for each term ``m`` of
the binomial expansion; the Rayleigh kernel uses ``c = s_ℓ = 1``, ``p_ℓ = b``
(``b`` may be negative or complex).
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, NumericError, UnsupportedMethodError
from .geometry import (
    AssociationResult,
    _acosh_ratio,
    _chi,
    _intensity,
    _inverse_power,
    _measure,
    _serving_cdf_unnorm,
    _serving_density,
    _support,
    _tier_association,
    association_probabilities,
    knee_radius,
)
from .model import TIERS, UAV_TIERS, Mode, NetworkConfig, TierId, _serving_power, altitude
from .numerics import (
    QuadratureSpec,
    bisect_monotone,
    gauss_legendre,
    integrate_adaptive,
    integrate_sqrt_edge,
    panel_rule,
    reg_inc_beta,
    reg_upper_inc_gamma,
)
from .oba import _interfering_power

log = logging.getLogger(__name__)

__all__ = [
    "MomentResult",
    "MetaDistributionCurve",
    "MDMethod",
    "DelayResult",
    "LadderReport",
    "alzer_phi",
    "csp_moment",
    "csp_moments",
    "rayleigh_moment",
    "meta_distribution_beta",
    "meta_distribution_gilpelaez",
    "mean_local_delay",
    "noise_limited_moment",
    "noise_limited_md",
    "noise_limited_omega",
    "isotropic_moment",
    "primary_user_moment",
    "asymptotic_moment_check",
]

# outer y-integral tolerance; tighter than needed for plotting so that the
# structural reductions can be checked at 1e-6
OUTER_SPEC = QuadratureSpec(abs_tol=1e-10, rel_tol=1e-8, max_depth=30)
_CHUNK = 16  # parameter columns per outer integration (bounds memory)


@dataclass(frozen=True)
class MomentResult:
    gamma: float
    b: object
    per_tier: dict
    total: float
    association: AssociationResult
    variance: float | None = None

    def __float__(self):
        return float(self.total)


class MDMethod(str, enum.Enum):
    BETA = "beta"
    GIL_PELAEZ = "gil_pelaez"
    EMPIRICAL = "empirical"
    NOISE_LIMITED = "noise_limited"  # exact closed form without interference


@dataclass(frozen=True)
class MetaDistributionCurve:
    gamma: float
    xs: np.ndarray
    values: np.ndarray
    method: MDMethod

    def mean(self):
        """Trapezoidal ``∫ F̄(x) dx`` over the grid (equals M_1 on [0, 1])."""
        return float(np.trapezoid(self.values, self.xs))


def alzer_phi(m: int) -> float:
    """``M (M!)^(-1/M)``, the exponent in the Alzer bound for shape ``M``."""
    return m * math.exp(-math.lgamma(m + 1) / m)


# -- inner interference integral -------------------------------------------------

_GL_SEG = 20
_GL_TAIL = 24


def _log_segment(lo, hi, n=_GL_SEG):
    """Nodes/weights of Gauss-Legendre in ``ln r`` over ``[lo, hi]`` (broadcast)."""
    x, w = gauss_legendre(n)
    la, lb = np.log(lo)[..., None], np.log(hi)[..., None]
    u = 0.5 * (la + lb) + 0.5 * (lb - la) * x
    r = np.exp(u)
    return r, 0.5 * (lb - la) * w * r


def _acosh_segment(lo, hi, alt, n=_GL_SEG):
    """Gauss-Legendre in ``v = arccosh(r / alt)`` over ``[lo, hi]``.

    The elevation angle ``arcsin(alt / r)`` has an infinite slope at
    ``r = alt`` but is analytic in ``v``.
    """
    x, w = gauss_legendre(n)
    va, vb = _acosh_ratio(lo, alt)[..., None], _acosh_ratio(hi, alt)[..., None]
    v = 0.5 * (va + vb) + 0.5 * (vb - va) * x
    return alt * np.cosh(v), 0.5 * (vb - va) * w * alt * np.sinh(v)


def _power_tail(lo, q, n=_GL_TAIL):
    """Nodes/weights for ``[lo, ∞)`` under ``r = lo v^(-q)``, ``v ∈ (0, 1]``."""
    x, w = gauss_legendre(n)
    v = 0.5 * (x + 1.0)
    r = lo[..., None] * v ** (-q)
    return r, 0.5 * w * q * r / v


def _inner_nodes(cfg: NetworkConfig, ell: TierId, chi, scale):
    """Quadrature nodes for ``∫_χ^∞ (...) dr`` of interferer tier ``ell``.

    ``chi`` and ``scale`` broadcast; ``scale`` is the distance at which the
    kernel argument is about one (the near/far interference boundary).
    Segments ``[χ, p1]``, ``[p1, p2]``, ``[p2, 100 p2]`` use ``arccosh(r/alt)``
    as variable, and a power-law map covers the tail.
    """
    alpha = cfg.tier(ell).alpha
    alt = altitude(cfg, ell)
    chi, scale = np.broadcast_arrays(chi, scale)
    rk = knee_radius(cfg, ell)
    rk = chi if rk is None else np.full(chi.shape, rk)
    p1 = np.maximum(chi, np.minimum(rk, scale))
    p2 = np.maximum(chi, np.maximum(rk, scale))
    p3 = 100.0 * p2
    parts = [_acosh_segment(chi, p1, alt), _acosh_segment(p1, p2, alt),
             _acosh_segment(p2, p3, alt), _power_tail(p3, 2.0 / (alpha - 2.0))]
    r = np.concatenate([p[0] for p in parts], axis=-1)
    w = np.concatenate([p[1] for p in parts], axis=-1)
    return r, w


def _interference_exponent(cfg, ell, chi, ratio, s, p):
    """``U_ℓ`` for arrays ``chi`` (N,), ``ratio = γ / l_k(y)`` (N,), ``s, p`` (J,).

    Returns an (N, J) array (complex if ``p`` is).
    """
    tp = cfg.tier(ell)
    pmax = cfg.p_b if ell is TierId.B else cfg.p_u
    gmax = (cfg.tbs_antenna if ell is TierId.B else cfg.uav_antenna).g_max
    sabs = np.abs(s)
    scale = (np.maximum(sabs[None, :], 1e-300) * ratio[:, None] * pmax * gmax * tp.kappa) ** (1.0 / tp.alpha)
    r, w = _inner_nodes(cfg, ell, chi[:, None], scale)  # (N, J, Q)
    x = ratio[:, None, None] * _interfering_power(cfg, ell, r)
    log_term = np.log1p(s[None, :, None] * x)
    kern = -np.expm1(-p[None, :, None] * log_term)
    dens = _intensity(cfg, ell, r)
    return np.sum(w * kern * dens, axis=-1)


def _tier_integrand(cfg: NetworkConfig, k: TierId, gamma, c, s, p, interference=True,
                    serving=None):
    """Vectorised integrand of ``T_k`` over ``y``; returns (N, J)."""
    c = np.asarray(c)
    def f(y):
        y = np.asarray(y, dtype=float)
        l_k = _serving_power(cfg, k, y) if serving is None else np.full(y.shape, serving)
        logv = np.log(np.maximum(_intensity(cfg, k, y), 1e-300)) - sum(
            _measure(cfg, ell, _chi(cfg, k, ell, y)) for ell in TIERS)
        expo = logv[:, None] - c[None, :] * (gamma * cfg.n0 / l_k)[:, None]
        if interference:
            ratio = gamma / l_k
            for i, ell in enumerate(TIERS):
                expo = expo - _interference_exponent(cfg, ell, _chi(cfg, k, ell, y), ratio,
                                                     s[:, i], p[:, i])
        out = np.exp(expo)
        return np.where((_intensity(cfg, k, y) > 0)[:, None], out, 0.0)
    return f


def _integrate_tier(cfg, k, gamma, c, s, p, interference=True, hi=None, where=None):
    """``T_k`` for each parameter column; chunks the columns to bound memory."""
    sup = _support(cfg, k)
    hi = sup.hi if hi is None else hi
    pts = tuple(q for q in sup.points if q < hi)
    c = np.atleast_1d(c)
    out = []
    for j0 in range(0, c.size, _CHUNK):
        sl = slice(j0, j0 + _CHUNK)
        f = _tier_integrand(cfg, k, gamma, c[sl], s[sl], p[sl], interference)
        try:
            res = integrate_sqrt_edge(f, sup.lo, hi, OUTER_SPEC, points=pts)
        except NumericError as exc:
            raise NumericError(f"moment quadrature failed for tier {k}: {exc}",
                               where={"tier": str(k), "terms": where, "detail": exc.where}) from exc
        out.append(np.atleast_1d(res.value))
    return np.concatenate(out)


# -- Nakagami moments -------------------------------------------------------------

def _fading(cfg, ell):
    return cfg.tier(ell).m_fading


@lru_cache(maxsize=512)
def _theorem_terms(cfg: NetworkConfig, gamma: float, k: TierId, m_max: int, interference: bool):
    """``T_{k,m}`` for ``m = 0..m_max`` (``T_{k,0} = A_k``)."""
    if m_max == 0 or _tier_association(cfg, k)[0] == 0.0:
        a = _tier_association(cfg, k)[0]
        return np.concatenate([[a], np.zeros(m_max)]) if a == 0.0 else np.array([a])
    phi = alzer_phi(_fading(cfg, k))
    m = np.arange(1, m_max + 1, dtype=float)
    c = m * phi
    mk = np.array([_fading(cfg, ell) for ell in TIERS], dtype=float)
    s = c[:, None] / mk[None, :]
    p = np.broadcast_to(mk, s.shape).copy()
    vals = _integrate_tier(cfg, k, gamma, c, s, p, interference, where=("m", 1, m_max))
    return np.concatenate([[_tier_association(cfg, k)[0]], np.real(vals)])


def _combine(b: int, mk: int, terms):
    """``Σ_n Σ_m C(b,n) C(M n, m) (-1)^(n+m) T_m``."""
    acc = 0.0
    for n in range(b + 1):
        for m in range(mk * n + 1):
            acc += math.comb(b, n) * math.comb(mk * n, m) * (-1) ** (n + m) * terms[m]
    return acc


def _check_gamma(gamma):
    gamma = float(gamma)
    if not (gamma > 0 and math.isfinite(gamma)):
        raise DomainError("SINR threshold must be positive and finite")
    return gamma


def _result(cfg, gamma, b, unnorm, assoc, variance=None):
    per = {}
    for k in TIERS:
        a = assoc[k]
        per[str(k)] = float(unnorm[k] / a) if a > 0 else float("nan")
    total = sum(unnorm.values())
    if np.isrealobj(total):
        total = float(total)
    return MomentResult(gamma, b, per, total, assoc, variance)


def csp_moment(cfg: NetworkConfig, gamma, b: int, interference: bool = True) -> MomentResult:
    """``b``-th moment of the conditional success probability (Nakagami fading).

    Uses the Alzer bound on the gamma CDF and a binomial expansion, so it is
    exact for Rayleigh serving links at ``b = 1`` and an upper estimate
    otherwise.  ``interference=False`` drops every interference term.
    """
    gamma = _check_gamma(gamma)
    if int(b) != b or b < 0:
        raise DomainError("csp_moment needs a non-negative integer order")
    b = int(b)
    assoc = association_probabilities(cfg)
    if b == 0:
        return MomentResult(gamma, 0, {str(k): 1.0 for k in TIERS}, 1.0, assoc)
    unnorm = {}
    for k in TIERS:
        mk = _fading(cfg, k)
        terms = _theorem_terms(cfg, gamma, k, mk * b, bool(interference))
        unnorm[k] = _combine(b, mk, terms) if assoc[k] > 0 else 0.0
    return _result(cfg, gamma, b, unnorm, assoc)


def csp_moments(cfg: NetworkConfig, gamma, interference=True):
    """``(M_1, M_2)`` with the variance filled in on the second result."""
    m1 = csp_moment(cfg, gamma, 1, interference)
    m2 = csp_moment(cfg, gamma, 2, interference)
    var = m2.total - m1.total ** 2
    return m1, MomentResult(m2.gamma, 2, m2.per_tier, m2.total, m2.association, var)


# -- Rayleigh kernel -----------------------------------------------------------

def _require_rayleigh(cfg, what):
    if any(_fading(cfg, k) != 1 for k in TIERS):
        raise UnsupportedMethodError(f"{what} needs Rayleigh fading on every tier; "
                                     "use the beta approximation instead")


def _rayleigh_terms(cfg, gamma, k, bs, hi=None):
    bs = np.atleast_1d(np.asarray(bs))
    s = np.ones((bs.size, 3), dtype=float)
    p = np.repeat(bs[:, None], 3, axis=1)
    return _integrate_tier(cfg, k, gamma, bs, s.astype(bs.dtype), p, True, hi=hi,
                           where=("b", bs.tolist()[:3]))


def rayleigh_moment(cfg: NetworkConfig, gamma, b) -> MomentResult:
    """Exact ``b``-th moment under Rayleigh fading; ``b`` real or complex."""
    gamma = _check_gamma(gamma)
    _require_rayleigh(cfg, "rayleigh_moment")
    assoc = association_probabilities(cfg)
    if b == 0:
        return MomentResult(gamma, 0, {str(k): 1.0 for k in TIERS}, 1.0, assoc)
    unnorm = {}
    for k in TIERS:
        if assoc[k] == 0:
            unnorm[k] = 0.0
            continue
        v = _rayleigh_terms(cfg, gamma, k, np.array([b]))[0]
        unnorm[k] = v if np.iscomplexobj(b) else float(np.real(v))
    return _result(cfg, gamma, b, unnorm, assoc)


# -- meta distribution ---------------------------------------------------------

def meta_distribution_beta(m1, m2, xs, gamma=float("nan")) -> MetaDistributionCurve:
    """CCDF of the CSP from a beta law with the given first two moments."""
    m1, m2 = float(m1), float(m2)
    xs = np.asarray(xs, dtype=float)
    if not 0 < m1 < 1:
        raise DomainError("first moment must lie in (0, 1)")
    var = m2 - m1 * m1
    if var < -1e-12 or m2 > m1 + 1e-12:
        raise DomainError("moment pair violates m1^2 <= m2 <= m1")
    if var < 1e-12:
        values = (xs < m1).astype(float)
    else:
        k = (m1 - m2) / var
        values = 1.0 - reg_inc_beta(np.clip(xs, 0.0, 1.0), m1 * k, (1.0 - m1) * k)
    return MetaDistributionCurve(gamma, xs, np.asarray(values, dtype=float), MDMethod.BETA)


GP_T_MAX = 400.0
GP_T_DENSE = 24.0     # knots are uniform (step GP_STEP) below this, geometric above
GP_STEP = 0.25
GP_RATIO = 1.07


@lru_cache(maxsize=64)
def _fixed_outer_rule(cfg: NetworkConfig, k: TierId, n=15):
    """Gauss-Legendre nodes on the association panels of tier ``k``."""
    return panel_rule(_tier_association(cfg, k)[1], n)


def _rayleigh_terms_fixed(cfg, gamma, k, bs):
    """Rayleigh kernel on a fixed outer rule; used for oscillatory complex ``b``."""
    y, w = _fixed_outer_rule(cfg, k)
    out = []
    for j0 in range(0, bs.size, _CHUNK):
        b = bs[j0:j0 + _CHUNK]
        s = np.ones((b.size, 3), dtype=b.dtype)
        p = np.repeat(b[:, None], 3, axis=1)
        f = _tier_integrand(cfg, k, gamma, b, s, p, True)
        out.append(w @ f(y))
    return np.concatenate(out)


def _hermite(x, y, xq):
    """Cubic Hermite interpolation with three-point derivative estimates (complex ok)."""
    h = np.diff(x)
    d = np.empty_like(y)
    d1 = np.diff(y) / h
    d[1:-1] = (h[:-1] * d1[1:] + h[1:] * d1[:-1]) / (h[:-1] + h[1:])
    d[0], d[-1] = d1[0], d1[-1]
    i = np.clip(np.searchsorted(x, xq, side="right") - 1, 0, x.size - 2)
    hh = h[i]
    s = (xq - x[i]) / hh
    return ((1 + 2 * s) * (1 - s) ** 2 * y[i] + s * (1 - s) ** 2 * hh * d[i]
            + s * s * (3 - 2 * s) * y[i + 1] + s * s * (s - 1) * hh * d[i + 1])


def _gp_knots(t_max=GP_T_MAX):
    lo = np.arange(0.0, GP_T_DENSE, GP_STEP)
    n = int(math.ceil(math.log(t_max / GP_T_DENSE) / math.log(GP_RATIO)))
    return np.concatenate([lo, GP_T_DENSE * GP_RATIO ** np.arange(n + 1)])


def _gp_moments(cfg, gamma, t_max=GP_T_MAX):
    """``M_{it}`` on interpolation knots in ``t`` (``M_0 = 1`` exactly).

    Returns the knots, the values and the residual ``|M_{it}| / t`` at the
    last knot.
    """
    assoc = association_probabilities(cfg)
    t = _gp_knots(t_max)
    mit = np.zeros(t.shape, dtype=complex)
    for k in TIERS:
        if assoc[k] > 0:
            mit[1:] += _rayleigh_terms_fixed(cfg, gamma, k, 1j * t[1:])
    mit[0] = 1.0
    return t, mit, float(abs(mit[-1]) / t[-1])


def meta_distribution_gilpelaez(cfg: NetworkConfig, gamma, xs, **kw) -> MetaDistributionCurve:
    """Exact CCDF of the CSP by Gil-Pelaez inversion (Rayleigh fading only).

    ``M_{it}`` is evaluated once on interpolation knots in ``t`` (uniform up
    to 24, geometric up to 400) and reused for every ``x``; the inversion
    integral runs on a fine Gauss-Legendre grid over the interpolant.
    """
    gamma = _check_gamma(gamma)
    _require_rayleigh(cfg, "Gil-Pelaez inversion")
    xs = np.asarray(xs, dtype=float)
    knots, mit, resid = _gp_moments(cfg, gamma, **kw)
    if resid > 1e-4:
        log.warning("Gil-Pelaez truncated with |M_it|/t = %.2g at t = %.3g", resid, knots[-1])
    # the inversion integrand is finely resolved in t; M_it is interpolated
    edges = np.concatenate([np.arange(0.0, GP_T_DENSE, 0.1),
                            np.geomspace(GP_T_DENSE, knots[-1], 1500)])
    t, w = panel_rule(np.column_stack([edges[:-1], edges[1:]]), 6)
    m = _hermite(knots, mit, t)
    lx = np.log(np.clip(xs.ravel(), 1e-300, None))
    integ = np.imag(np.exp(-1j * np.outer(lx, t)) * m[None, :]) / t[None, :]
    gp = 0.5 + (integ @ w) / math.pi
    vals = np.where(xs.ravel() <= 0, 1.0, np.where(xs.ravel() >= 1, 0.0, gp)).reshape(xs.shape)
    vals = np.clip(vals, 0.0, 1.0)
    return MetaDistributionCurve(gamma, xs, vals, MDMethod.GIL_PELAEZ)


# -- mean local delay ----------------------------------------------------------

@dataclass(frozen=True)
class DelayResult:
    value: float
    diverged: bool
    diagnostic: str = ""
    per_tier: dict = field(default_factory=dict)

    def __float__(self):
        return self.value


PROBE_RATIO = 1.25
PROBE_RUN = 5


def _delay_log_integrand(cfg, gamma, k, y):
    f = _tier_integrand(cfg, k, gamma, np.array([-1.0]), np.ones((1, 3)), -np.ones((1, 3)))
    with np.errstate(over="ignore"):
        v = f(np.atleast_1d(y))[:, 0]
    return np.log(np.maximum(v, 1e-300))


def _delay_probe(cfg, gamma, k):
    """Probe the ``b = -1`` integrand on a geometric ladder up to the cap.

    Returns ``(diverged, diagnostic, y_end)`` where ``y_end`` is a point past
    which the integrand is negligible.
    """
    from .geometry import R_CAP

    alt = altitude(cfg, k)
    ys = alt * PROBE_RATIO ** np.arange(1, int(math.log(R_CAP / alt) / math.log(PROBE_RATIO)) + 1)
    lv = _delay_log_integrand(cfg, gamma, k, ys)
    if not np.all(np.isfinite(lv)):
        i = int(np.argmax(~np.isfinite(lv)))
        return True, f"tier {k}: b=-1 integrand overflows at y = {ys[i]:.4g} m", None
    peak = int(np.argmax(lv))
    run = 0
    for i in range(peak + 1, lv.size):
        run = run + 1 if lv[i] > lv[i - 1] else 0
        if run >= PROBE_RUN:
            return True, (f"tier {k}: b=-1 integrand grows over {PROBE_RUN} probes "
                          f"ending at y = {ys[i]:.4g} m"), None
    if lv[-1] > lv[peak] - 60.0:
        return True, f"tier {k}: b=-1 integrand has not decayed by y = {ys[-1]:.4g} m", None
    below = np.nonzero((np.arange(lv.size) > peak) & (lv < lv[peak] - 60.0))[0]
    return False, "", float(ys[below[0]])


def mean_local_delay(cfg: NetworkConfig, gamma) -> DelayResult:
    """Mean number of attempts until success (``-1``-st CSP moment).

    Rayleigh fading only.  A divergent integrand gives ``value = inf`` with a
    diagnostic instead of an exception.
    """
    gamma = _check_gamma(gamma)
    _require_rayleigh(cfg, "mean_local_delay")
    assoc = association_probabilities(cfg)
    total = 0.0
    per = {}
    for k in TIERS:
        if assoc[k] == 0:
            continue
        diverged, diag, y_end = _delay_probe(cfg, gamma, k)
        if diverged:
            return DelayResult(math.inf, True, diag, per)
        hi = max(y_end, _support(cfg, k).hi)
        try:
            v = float(np.real(_rayleigh_terms(cfg, gamma, k, np.array([-1.0]), hi=hi)[0]))
        except NumericError as exc:
            return DelayResult(math.inf, True, f"tier {k}: quadrature blew up ({exc})", per)
        per[str(k)] = v / assoc[k]
        total += v
    return DelayResult(total, False, "", per)


# -- noise-limited networks -----------------------------------------------------

def noise_limited_moment(cfg: NetworkConfig, gamma, b) -> MomentResult:
    """Moments when interference is negligible: exact gamma-CDF success."""
    gamma = _check_gamma(gamma)
    assoc = association_probabilities(cfg)
    unnorm = {}
    for k in TIERS:
        if assoc[k] == 0:
            unnorm[k] = 0.0
            continue
        mk = _fading(cfg, k)
        sup = _support(cfg, k)

        def f(y, k=k, mk=mk):
            x = gamma * cfg.n0 * mk / _serving_power(cfg, k, y)
            q = reg_upper_inc_gamma(mk, np.minimum(x, 1e6))
            return _serving_density(cfg, k, y) * np.asarray(q) ** b

        unnorm[k] = float(integrate_sqrt_edge(f, sup.lo, sup.hi, OUTER_SPEC, points=sup.points).value)
    return _result(cfg, gamma, b, unnorm, assoc)


def noise_limited_omega(m: int, x: float) -> float:
    """``ω`` solving ``Q(m, m ω) = x`` (normalised success threshold)."""
    x = float(x)
    if not 0 < x < 1:
        raise DomainError("reliability must lie in (0, 1)")
    if m == 1:
        return -math.log(x)
    # Q(m, m w) decreases from 1 to 0 in w
    return bisect_monotone(lambda w: reg_upper_inc_gamma(m, m * w), x, (0.0, 1.0), rtol=1e-13)


def noise_limited_md(cfg: NetworkConfig, gamma, xs) -> MetaDistributionCurve:
    """Meta distribution in a noise-limited network (exact)."""
    gamma = _check_gamma(gamma)
    if not cfg.n0 > 0:
        raise DomainError("noise-limited meta distribution needs n0 > 0")
    xs = np.asarray(xs, dtype=float)
    assoc = association_probabilities(cfg)
    vals = np.zeros(xs.shape)
    for i, x in enumerate(xs.ravel()):
        if x <= 0:
            vals.flat[i] = 1.0
            continue
        if x >= 1:
            continue
        acc = 0.0
        for k in TIERS:
            if assoc[k] == 0:
                continue
            w = noise_limited_omega(_fading(cfg, k), x)
            y_max = float(_inverse_power(cfg, k, np.array([gamma * cfg.n0 / w]))[0])
            if gamma * cfg.n0 / w >= _serving_power(cfg, k, altitude(cfg, k)):
                continue
            acc += float(_serving_cdf_unnorm(cfg, k, y_max))
        vals.flat[i] = min(acc, 1.0)
    return MetaDistributionCurve(gamma, xs, vals, MDMethod.NOISE_LIMITED)


# -- isotropic antennas ------------------------------------------------------------

def _iso_consts(cfg: NetworkConfig, k: TierId):
    p = cfg.p_b if k is TierId.B else cfg.p_u
    g = (cfg.tbs_antenna if k is TierId.B else cfg.uav_antenna).g_max
    return p * g * cfg.tier(k).kappa, cfg.tier(k).alpha


def isotropic_moment(cfg: NetworkConfig, gamma, b: int) -> MomentResult:
    """Nakagami moments with every antenna at its peak gain in all directions.

    Independent of the beam mode.  Power matching and interferer powers use
    the closed forms ``χ = η^(1/α_ℓ) y^(α_k/α_ℓ)`` and ``h_ℓ(r)/l_k(y) =
    η r^(-α_ℓ) y^(α_k)`` (clamped at the tier altitude).
    """
    gamma = _check_gamma(gamma)
    if int(b) != b or b < 0:
        raise DomainError("isotropic_moment needs a non-negative integer order")
    b = int(b)
    alt = {k: altitude(cfg, k) for k in TIERS}
    const = {k: _iso_consts(cfg, k) for k in TIERS}

    def chi(k, ell, y):
        eta = const[ell][0] / const[k][0]
        return np.maximum(eta ** (1 / const[ell][1]) * y ** (const[k][1] / const[ell][1]), alt[ell])

    def density(k, y):
        return _intensity(cfg, k, y) * np.exp(-sum(_measure(cfg, ell, chi(k, ell, y)) for ell in TIERS))

    def u_term(k, ell, y, c):
        eta = const[ell][0] / const[k][0]
        mk = _fading(cfg, ell)
        lo = chi(k, ell, y)
        out = np.zeros((y.size, c.size))
        alpha = const[ell][1]
        for j, cj in enumerate(c):
            scale = (cj / mk * gamma * eta * y ** const[k][1]) ** (1 / alpha)
            r, w = _iso_nodes(lo, scale, alpha, alt[ell])
            x = cj / mk * gamma * eta * r ** (-alpha) * (y ** const[k][1])[:, None]
            kern = -np.expm1(-mk * np.log1p(x))
            out[:, j] = np.sum(w * kern * _intensity(cfg, ell, r), axis=-1)
        return out

    assoc_vals, unnorm = {}, {}
    for k in TIERS:
        lo = alt[k]
        hi = _support(cfg, k).hi
        pts = [float(chi(ell, k, np.array(alt[ell]))) for ell in TIERS if ell is not k]
        pts = [q for q in pts if lo < q < hi]
        a_k = float(integrate_sqrt_edge(lambda y, k=k: density(k, y), lo, hi, OUTER_SPEC, points=pts).value)
        assoc_vals[k] = a_k
        mk = _fading(cfg, k)
        if b == 0 or a_k == 0:
            unnorm[k] = a_k if b == 0 else 0.0
            continue
        c = np.arange(1, mk * b + 1) * alzer_phi(mk)

        def f(y, k=k, c=c):
            y = np.asarray(y, float)
            pk, ak = const[k]
            l_k = pk * y ** (-ak)
            e = -np.outer(gamma * cfg.n0 / l_k, c)
            for ell in TIERS:
                e = e - u_term(k, ell, y, c)
            return density(k, y)[:, None] * np.exp(e)

        t = integrate_sqrt_edge(f, lo, hi, OUTER_SPEC, points=pts).value
        unnorm[k] = _combine(b, mk, np.concatenate([[a_k], np.atleast_1d(t)]))
    assoc = AssociationResult(assoc_vals[TierId.B], assoc_vals[TierId.L], assoc_vals[TierId.N], cfg.mode)
    if b == 0:
        return MomentResult(gamma, 0, {str(k): 1.0 for k in TIERS}, 1.0, assoc)
    return _result(cfg, gamma, b, unnorm, assoc)


def _iso_nodes(lo, scale, alpha, alt):
    p1 = np.maximum(lo, scale)
    p2 = 100.0 * p1
    parts = [_acosh_segment(lo, p1, alt), _acosh_segment(p1, p2, alt),
             _acosh_segment(p2, 100.0 * p2, alt), _power_tail(100.0 * p2, 2.0 / (alpha - 2.0))]
    return (np.concatenate([q[0] for q in parts], axis=-1),
            np.concatenate([q[1] for q in parts], axis=-1))


# -- UAV hovering above the user ------------------------------------------------------

def primary_user_moment(cfg: NetworkConfig, gamma, b: int) -> MomentResult:
    """Moments for a user served by a LoS UAV hovering directly overhead.

    The serving link has fixed power ``P_u G_u(0) κ_L h_u^(-α_L)``; every
    transmitter of every tier (other than the server) interferes, starting
    from its tier altitude.
    """
    gamma = _check_gamma(gamma)
    if int(b) != b or b < 0:
        raise DomainError("primary_user_moment needs a non-negative integer order")
    b = int(b)
    assoc = AssociationResult(0.0, 1.0, 0.0, cfg.mode)
    if b == 0:
        return MomentResult(gamma, 0, {str(k): 1.0 for k in TIERS}, 1.0, assoc)
    k = TierId.L
    mk = _fading(cfg, k)
    l0 = cfg.p_u * cfg.uav_antenna.g_max * cfg.tier(k).kappa * cfg.h_u ** (-cfg.tier(k).alpha)
    m = np.arange(1, mk * b + 1, dtype=float)
    c = m * alzer_phi(mk)
    mks = np.array([_fading(cfg, ell) for ell in TIERS], dtype=float)
    expo = -c * gamma * cfg.n0 / l0
    ratio = np.array([gamma / l0])
    for i, ell in enumerate(TIERS):
        u = _interference_exponent(cfg, ell, np.array([altitude(cfg, ell)]), ratio,
                                   c / mks[i], np.full(c.shape, mks[i]))
        expo = expo - u[0]
    terms = np.concatenate([[1.0], np.exp(expo)])
    val = _combine(b, mk, terms)
    return MomentResult(gamma, b, {"b": float("nan"), "L": val, "N": float("nan")}, val, assoc)


# -- density ladders ---------------------------------------------------------------

@dataclass(frozen=True)
class LadderReport:
    which: str
    densities: tuple
    values: tuple
    passed: bool
    message: str


def asymptotic_moment_check(cfg: NetworkConfig, which: str, b: int = 1, gamma: float = 1.0,
                            steps: int = 4, threshold: float = 1e-3) -> LadderReport:
    """Evaluate ``M_b`` along a ×10 density ladder and check its decay.

    Passes when the values are strictly decreasing after their maximum and the
    top rung is below ``threshold``.
    """
    if which not in ("lambda_b_inf", "lambda_u_inf"):
        raise DomainError(f"unknown asymptotic regime {which!r}")
    name = "lambda_b" if which == "lambda_b_inf" else "lambda_u"
    base = getattr(cfg, name)
    dens, vals = [], []
    for i in range(steps + 1):
        c = cfg.replace(**{name: base * 10.0 ** i})
        dens.append(base * 10.0 ** i)
        vals.append(csp_moment(c, gamma, b).total)
    peak = int(np.argmax(vals))
    tail = vals[peak:]
    mono = all(x2 < x1 for x1, x2 in zip(tail[:-1], tail[1:]))
    ok = mono and vals[-1] < threshold
    msg = "decays" if ok else (
        "not monotone beyond the peak" if not mono else f"top rung {vals[-1]:.3g} >= {threshold:g}")
    return LadderReport(which, tuple(dens), tuple(vals), ok, msg)
