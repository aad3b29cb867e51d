"""Monte Carlo simulator of the UAV-assisted downlink.

Each network realization is drawn from its own counter-based stream
(Philox keyed by ``(seed, index)``), so aggregates do not depend on how
realizations are split across worker processes.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, EmptyNetworkError
from .geometry import AssociationResult, _serving_cdf_unnorm, _support, _tier_association
from .model import (
    TIERS,
    UAV_TIERS,
    Mode,
    NetworkConfig,
    TierId,
    _los,
    _serving_power,
)
from .numerics import gauss_legendre
from .oba import _mixture, mean_interfering_gain

log = logging.getLogger(__name__)

__all__ = [
    "Realization",
    "SimBatch",
    "EmpiricalMD",
    "DelayEstimate",
    "rng_for",
    "sample_network",
    "estimate_csp",
    "simulate",
    "empirical_md",
    "empirical_association",
    "empirical_delay",
    "worker_count",
]

REGION_RADIUS = 2000.0
FAR_RADIUS = 20000.0
_FADING_STREAM = 1
_USER_STREAM = 2
_FAR_STREAM = 3
_TAIL_DRAWS = 4096


def rng_for(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    """Generator for realization ``index`` (``stream`` separates geometry and fading)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index), int(stream)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class Realization:
    """One sampled network around the typical user at the origin.

    Transmitters inside ``region_radius`` are kept individually.  The
    annulus out to ``far_radius`` is kept only as per-link average powers
    (``far_powers``) and fading shapes, and everything beyond it enters as
    the deterministic mean ``tail_power``.
    """

    tbs_positions: np.ndarray
    uav_positions: np.ndarray
    los_labels: np.ndarray
    user_distance: np.ndarray  # t: horizontal distance of each UAV's own user
    user_azimuth: np.ndarray   # absolute azimuth of that user seen from the UAV
    serving: tuple | None      # (TierId, 3-D distance, index within its tier array)
    seed: int
    index: int
    region_radius: float = REGION_RADIUS
    far_powers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    far_shapes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    tail_power: float = 0.0
    pinned: bool = False       # serving UAV forced to hover over the origin

    @property
    def tbs_distance(self):
        return np.sqrt(np.sum(self.tbs_positions ** 2, axis=1))

    @property
    def uav_distance(self):
        return np.sqrt(np.sum(self.uav_positions ** 2, axis=1))

    @property
    def interferer_user(self):
        """Per-UAV ``(t, alpha)``: own-user distance and its angle to the origin direction, in [0, pi]."""
        to_origin = np.arctan2(-self.uav_positions[:, 1], -self.uav_positions[:, 0])
        d = np.abs(np.angle(np.exp(1j * (self.user_azimuth - to_origin))))
        return self.user_distance, d


def _uniform_annulus(rng, n, r_in, r_out):
    r = np.sqrt(r_in ** 2 + (r_out ** 2 - r_in ** 2) * rng.random(n))
    phi = 2.0 * math.pi * rng.random(n)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def _place(cfg, rng, r_in, r_out):
    area = math.pi * (r_out ** 2 - r_in ** 2)
    tbs = _uniform_annulus(rng, rng.poisson(cfg.lambda_b * area), r_in, r_out)
    uav = _uniform_annulus(rng, rng.poisson(cfg.lambda_u * area), r_in, r_out)
    r_u = np.sqrt(np.sum(uav ** 2, axis=1) + cfg.h_u ** 2)
    los = rng.random(r_u.size) < _los(cfg.env, cfg.h_u, r_u)
    return tbs, uav, los


@lru_cache(maxsize=32)
def _user_distance_table(cfg: NetworkConfig, n=4096):
    """Inverse CDF of a UAV-served user's serving distance, tabulated in ``y``."""
    mix = _mixture(cfg)
    ys = [np.geomspace(mix.lo, mix.hi, n)]
    for k in mix.tiers:
        ys.append(_tier_association(cfg, k)[1].ravel())
    y = np.unique(np.concatenate(ys))
    y = y[(y >= mix.lo) & (y <= mix.hi)]
    cdf = sum(_serving_cdf_unnorm(cfg, k, y) for k in mix.tiers) / mix.norm
    cdf = np.maximum.accumulate(np.clip(cdf, 0.0, 1.0))
    cdf[0] = 0.0
    cdf[-1] = 1.0
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    return cdf[keep], y[keep]


def _draw_user_distance(cfg, rng, n):
    cdf, y = _user_distance_table(cfg)
    yy = np.interp(rng.random(n), cdf, y)
    return np.sqrt(np.maximum(yy * yy - cfg.h_u ** 2, 0.0))


def _associate(cfg, tbs, uav, los):
    """Strongest-average-power server; ties resolved in the order b, L, N."""
    best = None
    r_b = np.sqrt(np.sum(tbs ** 2, axis=1) + cfg.h_b ** 2)
    r_u = np.sqrt(np.sum(uav ** 2, axis=1) + cfg.h_u ** 2)
    cand = []
    if r_b.size:
        p = _serving_power(cfg, TierId.B, r_b)
        i = int(np.argmax(p))
        cand.append((p[i], TierId.B, r_b[i], i))
    for k, mask in ((TierId.L, los), (TierId.N, ~los)):
        idx = np.nonzero(mask)[0]
        if idx.size:
            p = _serving_power(cfg, k, r_u[idx])
            j = int(np.argmax(p))
            cand.append((p[j], k, r_u[idx[j]], int(idx[j])))
    for c in cand:
        if best is None or c[0] > best[0]:
            best = c
    return None if best is None else (best[1], float(best[2]), best[3])


def _beam_angle(h, pos, t, psi):
    """Off-boresight angle towards the origin of UAVs at ``pos`` serving users at ``(t, psi)``."""
    ox, oy = -pos[..., 0], -pos[..., 1]
    ux, uy = t * np.cos(psi), t * np.sin(psi)
    num = ox * ux + oy * uy + h * h
    den = np.sqrt((ox * ox + oy * oy + h * h) * (t * t + h * h))
    return np.arccos(np.clip(num / den, -1.0, 1.0))


def _uav_gains(cfg, pos, t, psi, gain_mode):
    l = np.sqrt(np.sum(pos ** 2, axis=1))
    if gain_mode == "mean":
        return mean_interfering_gain(cfg, np.sqrt(l * l + cfg.h_u ** 2))
    if cfg.mode is Mode.VA:
        theta = np.arctan2(l, cfg.h_u)
    else:
        theta = _beam_angle(cfg.h_u, pos, t, psi)
    return cfg.uav_antenna.gain(theta)


def _uav_interference(cfg, pos, los, gains):
    r = np.sqrt(np.sum(pos ** 2, axis=1) + cfg.h_u ** 2)
    tl, tn = cfg.tier(TierId.L), cfg.tier(TierId.N)
    kap = np.where(los, tl.kappa, tn.kappa)
    alp = np.where(los, tl.alpha, tn.alpha)
    return cfg.p_u * gains * kap * r ** (-alp), np.where(los, tl.m_fading, tn.m_fading)


@lru_cache(maxsize=32)
def _tail_power(cfg: NetworkConfig, r_far: float, gain_mode: str, n=96):
    """Mean interference from all transmitters beyond horizontal distance ``r_far``.

    Uses ``l = r_far / u**2`` with Gauss-Legendre in ``u``.  The SA gain at
    each distance is averaged over a fixed sample of own-user geometries.
    """
    x, w = gauss_legendre(n)
    u = 0.5 * (x + 1.0)
    l = r_far / (u * u)
    jac = 0.5 * w * 2.0 * r_far / u ** 3
    r_b = np.sqrt(l * l + cfg.h_b ** 2)
    dens_b = 2.0 * math.pi * cfg.lambda_b * l * _serving_power(cfg, TierId.B, r_b)
    r_u = np.sqrt(l * l + cfg.h_u ** 2)
    p_l = _los(cfg.env, cfg.h_u, r_u)
    if gain_mode == "mean" or cfg.mode is Mode.VA:
        pos = np.column_stack([l, np.zeros_like(l)])
        g = _uav_gains(cfg, pos, np.zeros_like(l), np.zeros_like(l), gain_mode)
    else:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(0)))
        t = _draw_user_distance(cfg, rng, _TAIL_DRAWS)
        psi = 2.0 * math.pi * rng.random(_TAIL_DRAWS)
        pos = np.stack([np.broadcast_to(l[:, None], (n, _TAIL_DRAWS)),
                        np.zeros((n, _TAIL_DRAWS))], axis=-1)
        g = cfg.uav_antenna.gain(_beam_angle(cfg.h_u, pos, t[None, :], psi[None, :])).mean(axis=1)
    tl, tn = cfg.tier(TierId.L), cfg.tier(TierId.N)
    pw = cfg.p_u * g * (p_l * tl.kappa * r_u ** (-tl.alpha) + (1 - p_l) * tn.kappa * r_u ** (-tn.alpha))
    dens_u = 2.0 * math.pi * cfg.lambda_u * l * pw
    return float(np.sum(jac * (dens_b + dens_u)))


def sample_network(cfg: NetworkConfig, region_radius: float = REGION_RADIUS, seed: int = 0,
                   index: int = 0, user_geometry: bool = True, explicit_users: bool = False,
                   user_density: float = 1e-4, pin_serving_uav: bool = False,
                   far_radius: float | None = FAR_RADIUS, gain_mode: str = "sampled",
                   allow_small_region: bool = False) -> Realization:
    """Draw one network realization.

    ``user_geometry`` draws each UAV's own-user position and the far field
    (both only matter for interference).  ``explicit_users`` replaces the
    drawn distance by the nearest point of an independent user PPP of
    density ``user_density``.  ``pin_serving_uav`` places a LoS UAV at the
    origin's zenith and makes it the server.  ``far_radius=None`` truncates
    the network at ``region_radius``.  ``gain_mode="mean"`` gives every
    interfering UAV its mean gain instead of the sampled beam gain.
    """
    if not region_radius > 0:
        raise DomainError("region radius must be positive")
    if region_radius < REGION_RADIUS and not allow_small_region:
        raise DomainError(f"region radius below {REGION_RADIUS:g} m needs allow_small_region=True")
    if gain_mode not in ("sampled", "mean"):
        raise DomainError("gain_mode must be 'sampled' or 'mean'")
    if far_radius is not None and far_radius <= region_radius:
        raise DomainError("far_radius must exceed region_radius")
    rng = rng_for(seed, index)
    tbs, uav, los = _place(cfg, rng, 0.0, region_radius)
    if pin_serving_uav:
        uav = np.vstack([[0.0, 0.0], uav])
        los = np.concatenate([[True], los])
    n_u = uav.shape[0]
    t = np.zeros(n_u)
    psi = np.zeros(n_u)
    sa = cfg.mode is Mode.SA and gain_mode == "sampled"
    if user_geometry and sa and n_u:
        if explicit_users:
            urng = rng_for(seed, index, _USER_STREAM)
            # users over a margin so that UAVs near the edge still find theirs
            big = region_radius + 1000.0
            users = _uniform_annulus(urng, urng.poisson(user_density * math.pi * big ** 2), 0.0, big)
            if users.shape[0]:
                d = uav[:, None, :] - users[None, :, :]
                j = np.argmin(np.sum(d * d, axis=2), axis=1)
                off = users[j] - uav
                t = np.sqrt(np.sum(off * off, axis=1))
                psi = np.arctan2(off[:, 1], off[:, 0])
        else:
            t = _draw_user_distance(cfg, rng, n_u)
            psi = 2.0 * math.pi * rng.random(n_u)
    if pin_serving_uav:
        serving = (TierId.L, float(cfg.h_u), 0)
    else:
        serving = _associate(cfg, tbs, uav, los)
    real = Realization(tbs, uav, los, t, psi, serving, int(seed), int(index), float(region_radius),
                       pinned=pin_serving_uav)
    if user_geometry and far_radius is not None:
        frng = rng_for(seed, index, _FAR_STREAM)
        ftbs, fuav, flos = _place(cfg, frng, region_radius, far_radius)
        ft = fpsi = np.zeros(fuav.shape[0])
        if sa:
            ft = _draw_user_distance(cfg, frng, fuav.shape[0])
            fpsi = 2.0 * math.pi * frng.random(fuav.shape[0])
        fb = _serving_power(cfg, TierId.B, np.sqrt(np.sum(ftbs ** 2, axis=1) + cfg.h_b ** 2))
        fu, fm = _uav_interference(cfg, fuav, flos, _uav_gains(cfg, fuav, ft, fpsi, gain_mode))
        real.far_powers = np.concatenate([fb, fu])
        real.far_shapes = np.concatenate([np.ones(fb.size, dtype=int), fm.astype(int)])
        real.tail_power = _tail_power(cfg, float(far_radius), gain_mode)
    return real


def _link_budget(cfg: NetworkConfig, real: Realization, gain_mode="sampled"):
    """Serving power and per-link interferer powers / fading shapes inside the region."""
    if real.serving is None:
        raise EmptyNetworkError(f"realization {real.index} has no transmitter")
    k0, r0, i0 = real.serving
    l0 = float(_serving_power(cfg, k0, np.array([r0]))[0])
    r_b = np.sqrt(np.sum(real.tbs_positions ** 2, axis=1) + cfg.h_b ** 2)
    i_b = _serving_power(cfg, TierId.B, r_b)
    gains = _uav_gains(cfg, real.uav_positions, real.user_distance, real.user_azimuth, gain_mode)
    i_u, m_u = _uav_interference(cfg, real.uav_positions, real.los_labels, gains)
    keep_b = np.ones(r_b.size, dtype=bool)
    keep_u = np.ones(i_u.size, dtype=bool)
    if k0 is TierId.B:
        keep_b[i0] = False
    else:
        keep_u[i0] = False
    powers = np.concatenate([i_b[keep_b], i_u[keep_u]])
    shapes = np.concatenate([np.ones(int(keep_b.sum()), dtype=int), m_u[keep_u].astype(int)])
    return l0, cfg.tier(k0).m_fading, powers, shapes


def _gamma_draws(rng, shapes, n):
    """Unit-mean gamma fading, one row per link."""
    out = np.empty((shapes.size, n))
    for m in np.unique(shapes):
        rows = shapes == m
        if m == 1:
            out[rows] = rng.standard_exponential((int(rows.sum()), n))
        else:
            out[rows] = rng.standard_gamma(float(m), (int(rows.sum()), n)) / m
    return out


def estimate_csp(real: Realization, cfg: NetworkConfig, gamma, n_fading: int = 1000,
                 exact: bool = False, gain_mode: str = "sampled"):
    """Conditional success probability of the typical link in ``real``.

    ``gamma`` may be an array.  With ``exact=True`` (Rayleigh serving link)
    the fading average is done in closed form instead of by sampling.  The
    far-field aggregate is drawn from a gamma law matching its conditional
    mean and variance.
    """
    gam = np.atleast_1d(np.asarray(gamma, dtype=float))
    l0, m0, powers, shapes = _link_budget(cfg, real, gain_mode)
    base = cfg.n0 + real.tail_power
    if exact:
        if m0 != 1:
            raise DomainError("exact conditional success needs a Rayleigh serving link")
        p = np.concatenate([powers, real.far_powers])
        m = np.concatenate([shapes, real.far_shapes])
        x = gam[:, None] * p[None, :] / (l0 * m[None, :])
        out = np.exp(-gam * base / l0 - np.sum(m[None, :] * np.log1p(x), axis=1))
    else:
        if n_fading < 100:
            raise DomainError("n_fading must be at least 100")
        rng = rng_for(real.seed, real.index, _FADING_STREAM)
        h0 = _gamma_draws(rng, np.array([m0]), n_fading)[0]
        interf = powers @ _gamma_draws(rng, shapes, n_fading) if powers.size else np.zeros(n_fading)
        if real.far_powers.size:
            mu = float(real.far_powers.sum())
            var = float(np.sum(real.far_powers ** 2 / real.far_shapes))
            interf = interf + rng.gamma(mu * mu / var, var / mu, n_fading)
        out = np.mean((h0 * l0)[None, :] > gam[:, None] * (base + interf)[None, :], axis=1)
    return float(out[0]) if np.ndim(gamma) == 0 else out


# -- batches ----------------------------------------------------------------------

@dataclass
class SimBatch:
    """Per-network results of a Monte Carlo run, in realization order."""

    gammas: np.ndarray
    tiers: np.ndarray        # serving tier code per network: 0=b, 1=L, 2=N, -1 empty
    distances: np.ndarray    # serving distance (nan if empty)
    csp: np.ndarray          # (n_networks, n_gammas); empty networks count as 0
    n_fading: int
    seed: int
    meta: dict = field(default_factory=dict)

    @property
    def n_networks(self):
        return self.tiers.size


def worker_count(requested=None) -> int:
    """Worker processes to use: the request capped by ``UAVMETA_THREADS`` and the CPU count."""
    cap = os.environ.get("UAVMETA_THREADS")
    n = requested or (int(cap) if cap else 1)
    if cap:
        n = min(n, int(cap))
    return max(1, min(n, os.cpu_count() or 1))


def _run_chunk(args):
    cfg, gammas, start, stop, n_fading, seed, radius, opts = args
    n = stop - start
    tiers = np.full(n, -1, dtype=np.int8)
    dist = np.full(n, np.nan)
    csp = np.zeros((n, len(gammas)))
    code = {TierId.B: 0, TierId.L: 1, TierId.N: 2}
    need_csp = len(gammas) > 0
    for j, idx in enumerate(range(start, stop)):
        real = sample_network(cfg, radius, seed, idx, user_geometry=need_csp,
                              explicit_users=opts["explicit_users"],
                              pin_serving_uav=opts["pin_serving_uav"],
                              far_radius=opts["far_radius"], gain_mode=opts["gain_mode"],
                              allow_small_region=True)
        if real.serving is None:
            continue
        tiers[j] = code[real.serving[0]]
        dist[j] = real.serving[1]
        if need_csp:
            csp[j] = estimate_csp(real, cfg, gammas, n_fading, exact=opts["exact"],
                                  gain_mode=opts["gain_mode"])
    return tiers, dist, csp


def simulate(cfg: NetworkConfig, gammas=(), n_networks: int = 1000, n_fading: int = 1000,
             seed: int = 0, region_radius: float = REGION_RADIUS, workers=None,
             exact: bool = False, explicit_users: bool = False,
             pin_serving_uav: bool = False, far_radius: float | None = FAR_RADIUS,
             gain_mode: str = "sampled") -> SimBatch:
    """Run ``n_networks`` realizations and collect association and CSP samples.

    Results are identical for any number of workers: every realization has
    its own stream and chunks are reassembled in index order.
    """
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    if region_radius < REGION_RADIUS:
        log.info("region radius %.0f m is below the %.0f m default", region_radius, REGION_RADIUS)
    opts = {"exact": exact, "explicit_users": explicit_users, "pin_serving_uav": pin_serving_uav,
            "far_radius": far_radius, "gain_mode": gain_mode}
    nw = worker_count(workers)
    size = max(1, math.ceil(n_networks / (4 * nw)))
    jobs = [(cfg, gammas, s, min(s + size, n_networks), n_fading, seed, region_radius, opts)
            for s in range(0, n_networks, size)]
    if nw == 1 or len(jobs) == 1:
        parts = [_run_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=nw) as ex:
            parts = list(ex.map(_run_chunk, jobs))
    tiers = np.concatenate([p[0] for p in parts])
    dist = np.concatenate([p[1] for p in parts])
    csp = np.concatenate([p[2] for p in parts])
    n_empty = int(np.sum(tiers < 0))
    if n_empty:
        log.warning("%d of %d realizations had no transmitter", n_empty, n_networks)
    return SimBatch(gammas, tiers, dist, csp, n_fading, int(seed),
                    {"region_radius": region_radius, "n_empty": n_empty, **opts})


@dataclass
class EmpiricalMD:
    gamma: float
    csp_samples: np.ndarray
    xs: np.ndarray
    values: np.ndarray
    n_networks: int
    n_fading: int

    @property
    def coverage(self):
        return float(np.mean(self.csp_samples))

    def moment(self, b):
        return float(np.mean(self.csp_samples ** b))

    def standard_error(self):
        """Largest binomial standard error of the empirical CCDF."""
        return 0.5 / math.sqrt(self.n_networks)


def md_from_samples(samples, xs, gamma=float("nan"), n_fading=0) -> EmpiricalMD:
    """Empirical CCDF ``P(CSP > x)``; set to 1 at ``x <= 0`` (the true CSP is positive)."""
    xs = np.asarray(xs, dtype=float)
    s = np.sort(np.asarray(samples, dtype=float))
    vals = 1.0 - np.searchsorted(s, xs, side="right") / s.size
    vals = np.where(xs <= 0, 1.0, vals)
    return EmpiricalMD(float(gamma), np.asarray(samples), xs, vals, s.size, n_fading)


def empirical_md(cfg: NetworkConfig, gamma, xs, n_networks: int = 10_000, n_fading: int = 1000,
                 seed: int = 0, **kw) -> EmpiricalMD:
    if n_networks < 1000:
        raise DomainError("n_networks must be at least 1000")
    batch = simulate(cfg, [gamma], n_networks, n_fading, seed, **kw)
    return md_from_samples(batch.csp[:, 0], xs, gamma, n_fading)


def empirical_association(cfg: NetworkConfig, n_networks: int = 100_000, seed: int = 0,
                          **kw) -> AssociationResult:
    """Fraction of realizations served by each tier (empty ones are dropped)."""
    batch = simulate(cfg, (), n_networks, 100, seed, **kw)
    t = batch.tiers[batch.tiers >= 0]
    frac = [float(np.mean(t == i)) for i in range(3)]
    return AssociationResult(*frac, mode=cfg.mode)


@dataclass(frozen=True)
class DelayEstimate:
    value: float
    truncated_fraction: float
    n_networks: int
    csp_floor: float


def delay_from_samples(csp, csp_floor=1e-3) -> DelayEstimate:
    csp = np.asarray(csp, dtype=float)
    keep = csp >= csp_floor
    val = float(np.mean(1.0 / csp[keep])) if np.any(keep) else math.inf
    return DelayEstimate(val, float(1.0 - keep.mean()), csp.size, csp_floor)


def empirical_delay(cfg: NetworkConfig, gamma, n_networks: int = 10_000, n_fading: int = 1000,
                    seed: int = 0, csp_floor: float = 1e-3, exact: bool | None = None,
                    **kw) -> DelayEstimate:
    """Truncated estimator ``mean(1/CSP)`` over realizations with CSP ≥ ``csp_floor``.

    Uses the closed-form conditional success probability when every tier is
    Rayleigh (``exact=None`` picks it automatically).
    """
    if exact is None:
        exact = all(cfg.tier(k).m_fading == 1 for k in TIERS)
    batch = simulate(cfg, [gamma], n_networks, n_fading, seed, exact=exact, **kw)
    return delay_from_samples(batch.csp[:, 0], csp_floor)
