"""Command-line front-end: ``uavmeta <command> [options]``.

Every command reads an optional flat config file (``--config``), applies
``--set key=value`` overrides, and writes a table as CSV (default) or JSON.
Thresholds are given in dB and converted once on input.

Exit codes: 0 success, 1 failed ``validate --strict``, 2 configuration or
input error, 3 numerical failure, 4 divergent mean local delay.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .config import EXTRA_KEYS, SCHEMA, apply_setting, config_hash, load_config, schema_help
from .errors import (
    ConfigError,
    DomainError,
    EmptyNetworkError,
    NumericError,
    UnsupportedMethodError,
)
from .geometry import association_probabilities
from .model import TIERS, Mode, default_config
from .moments import (
    csp_moment,
    csp_moments,
    isotropic_moment,
    mean_local_delay,
    meta_distribution_beta,
    meta_distribution_gilpelaez,
    noise_limited_md,
    noise_limited_moment,
    primary_user_moment,
    rayleigh_moment,
)
from .oba import mean_interfering_gain, oba_cdf_given_l, oba_pdf_given_l, uniform_baseline_gain
from .sim import FAR_RADIUS, REGION_RADIUS, md_from_samples, simulate, worker_count

log = logging.getLogger("uavmeta")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERIC, EXIT_DIVERGED = 0, 1, 2, 3, 4

MODES = {
    "sa": (Mode.SA, "exact"),
    "va": (Mode.VA, "exact"),
    "sa_uniform": (Mode.SA, "uniform"),
    "va_uniform": (Mode.VA, "uniform"),
}
METRICS = ("association", "coverage", "moments", "md", "delay")
PSEUDO_KEYS = ("gamma_db", "x", "deployment.uav_ratio", "deployment.total_density_per_km2")

# acceptance tolerances used by ``validate``
TOL_ASSOC, TOL_MOMENT, TOL_MD = 0.01, 0.02, 0.05

COLUMNS_HELP = """\
columns:
  assoc      mode, a_b, a_l, a_n, total
  coverage   gamma_db, m1, m1_b, m1_l, m1_n
  moments    gamma_db, b, model, m, m_b, m_l, m_n
  meta       gamma_db, x, fbar, method
  delay      gamma_db, delay, diverged, diagnostic
  oba        pdf:  distance_m, theta_deg, pdf, cdf, pdf_uniform
             gain: distance_m, mean_gain, mean_gain_uniform
  simulate   gamma_db, m1, m2, variance, se_m1, a_b, a_l, a_n, networks
  sweep      [series key], mode, <param>, then per metric:
             association: a_b, a_l, a_n | coverage: m1 | moments: m1, m2, variance
             md: fbar | delay: delay, diverged
  validate   mode, quantity, analytic, empirical, abs_diff, tolerance, status
"""


class Diverged(Exception):
    """Raised after output is written when a delay diverged."""


# -- parsing helpers ------------------------------------------------------------

def parse_grid(text) -> np.ndarray:
    """``start:stop:count`` (inclusive linear grid) or a comma-separated list."""
    text = str(text).strip()
    try:
        if ":" in text:
            a, b, n = text.split(":")
            n = int(n)
            if n < 1:
                raise ValueError("count must be positive")
            return np.round(np.linspace(float(a), float(b), n), 12)
        vals = [float(v) for v in text.replace(" ", ",").split(",") if v]
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from exc
    if not vals:
        raise ConfigError("empty value list")
    return np.array(vals)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def _clean(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    return v


@dataclass
class Table:
    columns: list
    rows: list

    def add(self, **kw):
        self.rows.append([_clean(kw.get(c)) for c in self.columns])


def write_table(table: Table, fmt: str, meta: dict, out):
    if fmt == "json":
        rows = [dict(zip(table.columns, r)) for r in table.rows]
        text = json.dumps({"meta": meta, "rows": rows}, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(table.columns)
        for r in table.rows:
            w.writerow(["" if v is None else v for v in r])
        text = buf.getvalue()
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# -- config assembly --------------------------------------------------------------

def build_config(args):
    extras = {}
    cfg = default_config()
    if args.config:
        cfg, extras = load_config(args.config)
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        if k in SCHEMA:
            cfg = apply_setting(cfg, k, v)
        elif k in EXTRA_KEYS:
            extras[k] = v
        else:
            raise ConfigError(f"unknown config key: {k}")
    if args.rayleigh:
        for k in TIERS:
            cfg = cfg.with_tier(k, m_fading=1)
    if getattr(args, "mode", None):
        m, g = MODES[args.mode]
        cfg = cfg.replace(mode=m, interferer_gain=g)
    return cfg, extras


def _opt(args, name, extras, key, default):
    v = getattr(args, name, None)
    if v is not None:
        return v
    return extras.get(key, default)


def _meta(cfg, args, extra):
    return {
        "command": args.command,
        "config_hash": config_hash(cfg, extra),
        "config": cfg.to_dict(),
        "parameters": {k: _clean(v) if not isinstance(v, (list, tuple)) else [_clean(x) for x in v]
                       for k, v in extra.items()},
        "versions": {"uavmeta": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
    }


# -- commands -----------------------------------------------------------------------

def cmd_assoc(args, cfg, extras):
    t = Table(["mode", "a_b", "a_l", "a_n", "total"], [])
    a = association_probabilities(cfg)
    t.add(mode=str(cfg.mode).lower(), a_b=a.a_b, a_l=a.a_l, a_n=a.a_n, total=a.total)
    return t, {}


def cmd_coverage(args, cfg, extras):
    g_db = parse_grid(_opt(args, "gamma_db", extras, "run.gamma_db", "-10:10:11"))
    t = Table(["gamma_db", "m1", "m1_b", "m1_l", "m1_n"], [])
    for g in g_db:
        r = csp_moment(cfg, float(db_to_linear(g)), 1)
        t.add(gamma_db=g, m1=r.total, m1_b=r.per_tier["b"], m1_l=r.per_tier["L"], m1_n=r.per_tier["N"])
    return t, {"gamma_db": list(g_db)}


_MOMENT_MODELS = {
    "nakagami": csp_moment,
    "rayleigh": rayleigh_moment,
    "isotropic": isotropic_moment,
    "noise_limited": noise_limited_moment,
    "primary_user": primary_user_moment,
}


def cmd_moments(args, cfg, extras):
    g_db = parse_grid(_opt(args, "gamma_db", extras, "run.gamma_db", "0"))
    bs = parse_grid(_opt(args, "b", extras, "run.b", "1,2"))
    model = args.model
    fn = _MOMENT_MODELS[model]
    t = Table(["gamma_db", "b", "model", "m", "m_b", "m_l", "m_n"], [])
    for g in g_db:
        for b in bs:
            bb = int(b) if model != "rayleigh" and float(b).is_integer() else float(b)
            r = fn(cfg, float(db_to_linear(g)), bb)
            pt = r.per_tier
            t.add(gamma_db=g, b=bb, model=model, m=float(np.real(r.total)),
                  m_b=float(np.real(pt["b"])), m_l=float(np.real(pt["L"])), m_n=float(np.real(pt["N"])))
    return t, {"gamma_db": list(g_db), "b": list(bs), "model": model}


def cmd_meta(args, cfg, extras):
    g_db = float(parse_grid(_opt(args, "gamma_db", extras, "run.gamma_db", "0"))[0])
    xs = parse_grid(_opt(args, "x", extras, "run.x", "0:1:101"))
    method = _opt(args, "method", extras, "run.method", "beta")
    gamma = float(db_to_linear(g_db))
    if method == "beta":
        m1, m2 = csp_moments(cfg, gamma)
        curve = meta_distribution_beta(m1.total, m2.total, xs, gamma)
    elif method in ("gp", "gil_pelaez"):
        curve = meta_distribution_gilpelaez(cfg, gamma, xs)
    elif method == "noise_limited":
        curve = noise_limited_md(cfg, gamma, xs)
    else:
        raise ConfigError(f"unknown meta method {method!r} (beta, gp, noise_limited)")
    t = Table(["gamma_db", "x", "fbar", "method"], [])
    for x, v in zip(curve.xs, curve.values):
        t.add(gamma_db=g_db, x=x, fbar=v, method=curve.method.value)
    return t, {"gamma_db": g_db, "x": list(xs), "method": method}


def cmd_delay(args, cfg, extras):
    g_db = parse_grid(_opt(args, "gamma_db", extras, "run.gamma_db", "0"))
    t = Table(["gamma_db", "delay", "diverged", "diagnostic"], [])
    diverged = False
    for g in g_db:
        d = mean_local_delay(cfg, float(db_to_linear(g)))
        diverged |= d.diverged
        t.add(gamma_db=g, delay=d.value, diverged=int(d.diverged), diagnostic=d.diagnostic)
    return t, {"gamma_db": list(g_db), "diverged": diverged}


def cmd_oba(args, cfg, extras):
    table = _opt(args, "table", extras, "oba.table", "pdf")
    dist = parse_grid(_opt(args, "distance", extras, "oba.distance_m", "50,100,200,500"))
    if table == "pdf":
        th_deg = parse_grid(_opt(args, "theta_deg", extras, "oba.theta_deg", "0:180:181"))
        th = np.radians(th_deg)
        t = Table(["distance_m", "theta_deg", "pdf", "cdf", "pdf_uniform"], [])
        for l in dist:
            pdf = oba_pdf_given_l(cfg, float(l), th)
            cdf = oba_cdf_given_l(cfg, float(l), th)
            for a, p, c in zip(th_deg, np.atleast_1d(pdf), np.atleast_1d(cdf)):
                t.add(distance_m=l, theta_deg=a, pdf=p, cdf=c, pdf_uniform=1.0 / math.pi)
        return t, {"table": table, "distance_m": list(dist), "theta_deg": list(th_deg)}
    if table == "gain":
        r = np.sqrt(dist ** 2 + cfg.h_u ** 2)
        g = np.atleast_1d(mean_interfering_gain(cfg, r))
        base = uniform_baseline_gain(cfg.uav_antenna)
        t = Table(["distance_m", "mean_gain", "mean_gain_uniform"], [])
        for l, v in zip(dist, g):
            t.add(distance_m=l, mean_gain=v, mean_gain_uniform=base)
        return t, {"table": table, "distance_m": list(dist)}
    raise ConfigError(f"unknown oba table {table!r} (pdf, gain)")


def _sim_opts(args, extras):
    far = float(_opt(args, "far_radius", extras, "sim.far_radius_m", FAR_RADIUS))
    return dict(
        n_networks=int(_opt(args, "networks", extras, "sim.networks", 10_000)),
        n_fading=int(_opt(args, "fading", extras, "sim.fading_draws", 1000)),
        seed=int(_opt(args, "seed", extras, "sim.seed", 0)),
        region_radius=float(_opt(args, "region_radius", extras, "sim.region_radius_m", REGION_RADIUS)),
        far_radius=far if far > 0 else None,
    )


def cmd_simulate(args, cfg, extras):
    g_db = parse_grid(_opt(args, "gamma_db", extras, "run.gamma_db", "0"))
    opts = _sim_opts(args, extras)
    batch = simulate(cfg, db_to_linear(g_db), workers=args.workers, exact=args.exact,
                     gain_mode=args.gain_mode, explicit_users=args.explicit_users,
                     pin_serving_uav=args.pin_serving_uav, **opts)
    tiers = batch.tiers[batch.tiers >= 0]
    frac = [float(np.mean(tiers == i)) for i in range(3)]
    t = Table(["gamma_db", "m1", "m2", "variance", "se_m1", "a_b", "a_l", "a_n", "networks"], [])
    for j, g in enumerate(g_db):
        s = batch.csp[:, j]
        m1, m2 = float(s.mean()), float(np.mean(s * s))
        t.add(gamma_db=g, m1=m1, m2=m2, variance=m2 - m1 * m1, se_m1=float(s.std() / math.sqrt(s.size)),
              a_b=frac[0], a_l=frac[1], a_n=frac[2], networks=s.size)
    return t, {"gamma_db": list(g_db), **opts, "exact": args.exact, "gain_mode": args.gain_mode,
               "explicit_users": args.explicit_users, "pin_serving_uav": args.pin_serving_uav}


# -- sweeps ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple
    metrics: tuple
    modes: tuple
    series_param: str | None = None
    series_values: tuple = (None,)

    def __post_init__(self):
        if not self.values:
            raise ConfigError("sweep needs at least one value")
        for p in (self.param, self.series_param):
            if p is not None and p not in SCHEMA and p not in PSEUDO_KEYS:
                raise ConfigError(f"sweep parameter does not resolve: {p}")
        for m in self.metrics:
            if m not in METRICS:
                raise ConfigError(f"unknown metric {m!r} (choose from {', '.join(METRICS)})")
        for m in self.modes:
            if m not in MODES:
                raise ConfigError(f"unknown mode {m!r} (choose from {', '.join(MODES)})")


def _sweep_values(args, extras):
    vals = _opt(args, "values", extras, "sweep.values", None)
    if args.linear or args.log:
        a, b, n = args.linear or args.log
        spacing = "linear" if args.linear else "log"
    elif vals is None and "sweep.start" in extras:
        a, b, n = extras["sweep.start"], extras["sweep.stop"], extras["sweep.count"]
        spacing = extras.get("sweep.spacing", "linear")
    elif vals is not None:
        return tuple(float(v) for v in parse_grid(vals))
    else:
        raise ConfigError("sweep needs --values, --linear or --log")
    n = int(n)
    if n < 1:
        raise ConfigError("sweep count must be positive")
    if spacing == "log":
        if not (float(a) > 0 and float(b) > 0):
            raise ConfigError("log sweep needs positive endpoints")
        return tuple(np.geomspace(float(a), float(b), n).tolist())
    if spacing != "linear":
        raise ConfigError(f"unknown sweep spacing {spacing!r}")
    return tuple(np.linspace(float(a), float(b), n).tolist())


def _series_values(raw, param):
    if raw is None:
        return (None,)
    items = [v.strip() for v in str(raw).split(",") if v.strip()]
    if param in PSEUDO_KEYS or (param in SCHEMA and SCHEMA[param][2] is not str):
        return tuple(float(v) for v in items)
    return tuple(items)


def _apply_point(cfg, ctx, key, value):
    if key is None:
        return cfg
    if key in ("gamma_db", "x", "deployment.total_density_per_km2"):
        ctx[key] = float(value)
        return cfg
    if key == "deployment.uav_ratio":
        rho = float(value)
        if not 0 < rho < 1:
            raise ConfigError("deployment.uav_ratio must lie strictly between 0 and 1")
        ctx[key] = rho
        return cfg
    return apply_setting(cfg, key, value)


def _finish_point(cfg, ctx):
    if "deployment.uav_ratio" in ctx:
        tot = ctx.get("deployment.total_density_per_km2", (cfg.lambda_b + cfg.lambda_u) * 1e6) / 1e6
        rho = ctx["deployment.uav_ratio"]
        cfg = cfg.replace(lambda_b=(1 - rho) * tot, lambda_u=rho * tot)
    return cfg


def _sweep_point(job):
    base, spec, mode, sval, pval, ctx0 = job
    ctx = dict(ctx0)
    m, g = MODES[mode]
    cfg = base.replace(mode=m, interferer_gain=g)
    cfg = _apply_point(cfg, ctx, spec.series_param, sval)
    cfg = _apply_point(cfg, ctx, spec.param, pval)
    cfg = _finish_point(cfg, ctx)
    gamma = float(db_to_linear(ctx["gamma_db"]))
    row = {"mode": mode, spec.param: pval}
    if spec.series_param is not None:
        row[spec.series_param] = sval
    if "association" in spec.metrics:
        a = association_probabilities(cfg)
        row.update(a_b=a.a_b, a_l=a.a_l, a_n=a.a_n)
    need_m2 = "moments" in spec.metrics or "md" in spec.metrics
    if need_m2:
        m1, m2 = csp_moments(cfg, gamma)
        row.update(m1=m1.total, m2=m2.total, variance=m2.total - m1.total ** 2)
        if "md" in spec.metrics:
            row["fbar"] = float(meta_distribution_beta(m1.total, m2.total, [ctx["x"]], gamma).values[0])
    elif "coverage" in spec.metrics:
        row["m1"] = csp_moment(cfg, gamma, 1).total
    if "delay" in spec.metrics:
        d = mean_local_delay(cfg, gamma)
        row.update(delay=d.value, diverged=int(d.diverged))
    return row


def sweep_columns(spec: SweepSpec):
    cols = ([spec.series_param] if spec.series_param else []) + ["mode", spec.param]
    if "association" in spec.metrics:
        cols += ["a_b", "a_l", "a_n"]
    if "moments" in spec.metrics or "md" in spec.metrics:
        cols += ["m1", "m2", "variance"]
    elif "coverage" in spec.metrics:
        cols += ["m1"]
    if "md" in spec.metrics:
        cols += ["fbar"]
    if "delay" in spec.metrics:
        cols += ["delay", "diverged"]
    return cols


def run_sweep(cfg, spec: SweepSpec, gamma_db=0.0, x=0.9, workers=None):
    """Evaluate a sweep; rows are ordered by (series, mode, value) whatever the worker count."""
    ctx = {"gamma_db": float(gamma_db), "x": float(x)}
    jobs = [(cfg, spec, mode, s, v, ctx)
            for s in spec.series_values for mode in spec.modes for v in spec.values]
    nw = worker_count(workers)
    if nw == 1:
        rows = [_sweep_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=nw) as ex:
            rows = list(ex.map(_sweep_point, jobs))
    t = Table(sweep_columns(spec), [])
    for r in rows:
        t.add(**r)
    return t


def cmd_sweep(args, cfg, extras):
    param = _opt(args, "param", extras, "sweep.param", None)
    if param is None:
        raise ConfigError("sweep needs --param")
    metrics = tuple(m.strip() for m in _opt(args, "metric", extras, "sweep.metric", "coverage").split(","))
    modes = tuple(m.strip() for m in _opt(args, "modes", extras, "sweep.modes", "sa,va").split(","))
    sp = _opt(args, "series_param", extras, "sweep.series_param", None)
    sv = _series_values(_opt(args, "series_values", extras, "sweep.series_values", None), sp)
    if sp is None:
        sv = (None,)
    spec = SweepSpec(param, _sweep_values(args, extras), metrics, modes, sp, sv)
    g_db = float(parse_grid(_opt(args, "gamma_db", extras, "run.gamma_db", "0"))[0])
    x = float(parse_grid(_opt(args, "x", extras, "run.x", "0.9"))[0])
    t = run_sweep(cfg, spec, g_db, x, args.workers)
    return t, {"param": param, "values": list(spec.values), "metrics": list(metrics),
               "modes": list(modes), "series_param": sp, "series_values": list(sv),
               "gamma_db": g_db, "x": x}


# -- validation -------------------------------------------------------------------------

def validate_rows(cfg, gamma_db, n_networks, n_fading, seed, modes, workers=None, **sim_kw):
    """Analytic vs Monte Carlo comparison at one threshold, one block per mode."""
    t = Table(["mode", "quantity", "analytic", "empirical", "abs_diff", "tolerance", "status"], [])
    gamma = float(db_to_linear(gamma_db))
    xs = np.linspace(0.0, 1.0, 101)
    for mode in modes:
        m, g = MODES[mode]
        c = cfg.replace(mode=m, interferer_gain=g)
        a = association_probabilities(c)
        m1, m2 = csp_moments(c, gamma)
        beta = meta_distribution_beta(m1.total, m2.total, xs, gamma)
        batch = simulate(c, [gamma], n_networks, n_fading, seed, workers=workers, **sim_kw)
        tiers = batch.tiers[batch.tiers >= 0]
        s = batch.csp[:, 0]
        emp = md_from_samples(s, xs, gamma, n_fading)
        checks = [
            ("a_b", a.a_b, float(np.mean(tiers == 0)), TOL_ASSOC),
            ("a_l", a.a_l, float(np.mean(tiers == 1)), TOL_ASSOC),
            ("a_n", a.a_n, float(np.mean(tiers == 2)), TOL_ASSOC),
            ("m1", m1.total, float(s.mean()), TOL_MOMENT),
            ("m2", m2.total, float(np.mean(s * s)), TOL_MOMENT),
        ]
        for q, an, em, tol in checks:
            d = abs(an - em)
            t.add(mode=mode, quantity=q, analytic=an, empirical=em, abs_diff=d, tolerance=tol,
                  status="pass" if d <= tol else "fail")
        sup = float(np.max(np.abs(beta.values - emp.values)))
        t.add(mode=mode, quantity="md_sup_distance", analytic=None, empirical=None, abs_diff=sup,
              tolerance=TOL_MD, status="pass" if sup < TOL_MD else "fail")
    return t


def cmd_validate(args, cfg, extras):
    g_db = float(parse_grid(_opt(args, "gamma_db", extras, "run.gamma_db", "0"))[0])
    opts = _sim_opts(args, extras)
    modes = tuple(m.strip() for m in (args.modes or "sa,va").split(","))
    for m in modes:
        if m not in MODES:
            raise ConfigError(f"unknown mode {m!r}")
    n, f, s = opts.pop("n_networks"), opts.pop("n_fading"), opts.pop("seed")
    t = validate_rows(cfg, g_db, n, f, s, modes, args.workers, **opts)
    failed = any(r[-1] == "fail" for r in t.rows)
    return t, {"gamma_db": g_db, "networks": n, "fading": f, "seed": s, "modes": list(modes),
               **opts, "failed": failed}


COMMANDS = {
    "assoc": cmd_assoc,
    "coverage": cmd_coverage,
    "moments": cmd_moments,
    "meta": cmd_meta,
    "delay": cmd_delay,
    "oba": cmd_oba,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--workers", type=int, help="worker processes (capped by UAVMETA_THREADS)")
    common.add_argument("--rayleigh", action="store_true",
                        help="force Rayleigh fading (Nakagami m = 1) on every tier")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="uavmeta", description=__doc__.split("\n")[0],
                                epilog=COLUMNS_HELP + "\n" + schema_help(),
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"uavmeta {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_, epilog=COLUMNS_HELP,
                              formatter_class=argparse.RawDescriptionHelpFormatter)

    def mode_opt(sp):
        sp.add_argument("--mode", choices=tuple(MODES), help="beam mode and interferer gain law")

    sp = add("assoc", "association probabilities")
    mode_opt(sp)
    sp = add("coverage", "coverage probability over thresholds")
    mode_opt(sp)
    sp.add_argument("--gamma-db", help="thresholds (list or start:stop:count)")
    sp = add("moments", "CSP moments")
    mode_opt(sp)
    sp.add_argument("--gamma-db")
    sp.add_argument("--b", help="moment orders")
    sp.add_argument("--model", choices=tuple(_MOMENT_MODELS), default="nakagami")
    sp = add("meta", "meta distribution curve")
    mode_opt(sp)
    sp.add_argument("--gamma-db")
    sp.add_argument("--x", help="reliability grid, e.g. 0:1:101")
    sp.add_argument("--method", choices=("beta", "gp", "noise_limited"))
    sp = add("delay", "mean local delay (Rayleigh fading)")
    mode_opt(sp)
    sp.add_argument("--gamma-db")
    sp = add("oba", "off-boresight angle law and mean interfering gain")
    mode_opt(sp)
    sp.add_argument("--table", choices=("pdf", "gain"))
    sp.add_argument("--distance", help="horizontal interferer distances in m")
    sp.add_argument("--theta-deg", help="angle grid in degrees")

    def sim_opts(sp):
        sp.add_argument("--networks", type=int)
        sp.add_argument("--fading", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--region-radius", type=float)
        sp.add_argument("--far-radius", type=float, help="0 truncates the network at the region radius")

    sp = add("simulate", "Monte Carlo estimates")
    mode_opt(sp)
    sp.add_argument("--gamma-db")
    sim_opts(sp)
    sp.add_argument("--exact", action="store_true", help="closed-form fading average (Rayleigh)")
    sp.add_argument("--gain-mode", choices=("sampled", "mean"), default="sampled")
    sp.add_argument("--explicit-users", action="store_true")
    sp.add_argument("--pin-serving-uav", action="store_true")
    sp = add("sweep", "parameter sweep")
    sp.add_argument("--param", help="swept key: a config key, gamma_db, x, deployment.uav_ratio, ...")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--values")
    g.add_argument("--linear", nargs=3, metavar=("START", "STOP", "COUNT"))
    g.add_argument("--log", nargs=3, metavar=("START", "STOP", "COUNT"))
    sp.add_argument("--metric", help=f"comma list of {', '.join(METRICS)}")
    sp.add_argument("--modes", help=f"comma list of {', '.join(MODES)}")
    sp.add_argument("--series-param")
    sp.add_argument("--series-values")
    sp.add_argument("--gamma-db")
    sp.add_argument("--x")
    sp = add("validate", "analytic vs Monte Carlo report")
    sp.add_argument("--gamma-db")
    sp.add_argument("--modes", help="comma list of modes (default sa,va)")
    sim_opts(sp)
    sp.add_argument("--strict", action="store_true", help="exit 1 if any check fails")
    return p


def _join_negative(argv):
    # "--gamma-db -10:10:5" would otherwise be read as an unknown option
    out = []
    for tok in argv:
        if (out and out[-1].startswith("--") and "=" not in out[-1]
                and len(tok) > 1 and tok[0] == "-" and (tok[1].isdigit() or tok[1] == ".")):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def run(argv=None) -> int:
    """Execute one command; returns the process exit code."""
    parser = _parser()
    argv = _join_negative(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg, extras = build_config(args)
        table, extra = COMMANDS[args.command](args, cfg, extras)
        write_table(table, args.format, _meta(cfg, args, extra), args.out)
    except (ConfigError, DomainError, UnsupportedMethodError) as exc:
        print(f"uavmeta: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, EmptyNetworkError) as exc:
        print(f"uavmeta: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if extra.get("diverged"):
        print("uavmeta: mean local delay diverged", file=sys.stderr)
        return EXIT_DIVERGED
    if args.command == "validate" and args.strict and extra.get("failed"):
        return EXIT_FAILED
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
