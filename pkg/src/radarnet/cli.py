"""Command-line runner: ``radarnet <command> [flags]``.

Every command writes CSV (or JSON) files into ``run.out`` together with a
``<command>.manifest.json`` sidecar holding the config snapshot, seed,
version, wall-clock time and SHA-256 digests of the outputs.

Exit codes: 0 success, 1 numerical failure or failed validation,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import analytic as an
from . import cox
from . import geometry as geo
from . import metadist as md
from . import optimize as op
from .config import PRESETS, ConfigError, ExperimentConfig, build_config
from .quadrature import QuadratureError

SCHEMA = "v1"
BASE_REALIZATIONS = 100000


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int
    version: str
    wall_clock_s: float
    outputs: dict = field(default_factory=dict)

    def write(self, out_dir: Path):
        path = out_dir / f"{self.command}.manifest.json"
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


class Outputs:
    """Collects written files for the manifest."""

    def __init__(self, out_dir: Path):
        self.dir = out_dir
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files = []

    def path(self, name) -> Path:
        p = self.dir / name
        self.files.append(p)
        return p

    def csv(self, name, header, rows):
        with open(self.path(name), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows([_fmt(x) for x in row] for row in rows)

    def json(self, name, obj):
        self.path(name).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n",
                                   encoding="utf-8")

    def digests(self):
        return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in self.files}


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return int(x)
    return x


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    raise TypeError(f"not serializable: {type(x).__name__}")


# ---------------------------------------------------------------------------
# commands


def cmd_analytic(cfg: ExperimentConfig, out: Outputs, args):
    sc = cfg.scenario()
    msc = cfg.scenario(md=True)
    row = [op.evaluate(k, sc) for k in ("l_k", "n_k", "p_D", "n_D", "delay")]
    m1 = an.moment(1, msc.thresholds, msc.model, msc.sector(), msc.radio, msc.res)
    out.csv("analytic.csv", ["l_k", "n_k", "p_D", "n_D", "delay", "M_1"], [row + [m1]])
    orders = list(range(1, cfg.run.n_moments + 1)) + [-1]
    rows = [(b, an.moment(b, msc.thresholds, msc.model, msc.sector(), msc.radio, msc.res)) for b in orders]
    out.csv("moments.csv", ["b", "M_b"], rows)
    if cfg.sweep.grid:
        obj = cfg.sweep.objective
        ctx = msc if obj == "percentile_reliability" else sc
        res = op.sweep(obj, cfg.sweep.parameter, sorted(cfg.sweep.grid), ctx, cfg.run.threads)
        res.write_csv(out.path("analytic_sweep.csv"))
    return 0


def _simulate(cfg: ExperimentConfig, threads=None):
    model, radio = cfg.network_model(), cfg.radio_params()
    sector = geo.SectorSpec.ego(math.radians(cfg.geometry.omega_deg) / 2, model.reach)
    return cox.simulate(model, sector, radio, cfg.geometry.R, cfg.run.n_realizations, cfg.run.seed,
                        threads=cfg.run.threads if threads is None else threads)


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        return math.inf, math.inf
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.nan


def cmd_simulate(cfg: ExperimentConfig, out: Outputs, args):
    sample = _simulate(cfg)
    radio, R = cfg.radio_params(), cfg.geometry.R
    det, mdt = cfg.detection_thresholds(), cfg.md_thresholds()
    sir = cox.sir_values(sample, radio, R)
    hit = (sir > det.beta).astype(float)
    ps_det = cox.conditional_sf_values(sample, radio, det.beta_sf, R)
    ps = cox.conditional_sf_values(sample, radio, mdt.beta_sf, R)
    summary = [("p_D_sir", *_mean_se(hit)), ("p_D_conditional", *_mean_se(ps_det)),
               ("mean_p_sf", *_mean_se(ps))]
    out.csv("simulate_summary.csv", ["quantity", "estimate", "se"], summary)
    orders = list(range(1, cfg.run.n_moments + 1)) + [-1]
    with np.errstate(divide="ignore"):
        rows = [(b, *_mean_se(ps ** b)) for b in orders]
    out.csv("simulate_moments.csv", ["b", "estimate", "se"], rows)
    t_grid = np.linspace(0.0, 1.0, cfg.metadist.t_points)
    curve = md.MetaDistCurve(t_grid, cox.empirical_ccdf(ps, t_grid), "empirical", mdt.beta_sf)
    md.write_curves_csv(out.path("simulate_curve.csv"), [curve])
    return 0


def read_moments_csv(path) -> md.MomentVector:
    """``b,M_b`` rows (positive orders 1..n are used; others ignored)."""
    if not os.path.isfile(path):
        raise UsageError(f"--from-moments: file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "b" not in rows[0] or "M_b" not in rows[0]:
        raise UsageError(f"--from-moments: {path} needs columns b,M_b")
    try:
        pairs = sorted((int(float(r["b"])), float(r["M_b"])) for r in rows if float(r["b"]) >= 1)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"--from-moments: {path}: {exc}") from None
    beta_sf = float(rows[0].get("beta_sf") or math.nan)
    orders = [b for b, _ in pairs]
    if orders != list(range(1, len(orders) + 1)):
        raise UsageError(f"--from-moments: {path} must list orders 1..n without gaps")
    return md.MomentVector(beta_sf, orders, [v for _, v in pairs])


def _analytic_moments(cfg, n) -> md.MomentVector:
    sc = cfg.scenario(md=True)
    orders = np.arange(1, n + 1)
    vals = an.moments(orders, sc.thresholds, sc.model, sc.sector(), sc.radio, sc.res)
    return md.MomentVector(sc.thresholds.beta_sf, orders, vals)


def cmd_metadist(cfg: ExperimentConfig, out: Outputs, args):
    t_grid = np.linspace(0.0, 1.0, cfg.metadist.t_points)
    ks_orders = sorted(set(int(n) for n in cfg.metadist.ks_orders))
    if args.from_moments:
        mv = read_moments_csv(args.from_moments)
    else:
        mv = _analytic_moments(cfg, max([cfg.run.n_moments] + ks_orders))
    n = min(cfg.run.n_moments, mv.n)
    curves = [md.cm_reconstruct(mv.truncated(n), t_grid)]
    gp = emp = None
    if cfg.metadist.gp and not args.from_moments:
        sc = cfg.scenario(md=True)
        fn, atom = an.imaginary_moment_fn(sc.thresholds, sc.model, sc.sector(), sc.radio, sc.res)
        gp = md.gp_invert(fn, t_grid, atom=atom)
        curves.append(gp)
    if cfg.metadist.empirical:
        sample = _simulate(cfg)
        ps = cox.conditional_sf_values(sample, cfg.radio_params(), cfg.thresholds.beta_sf, cfg.geometry.R)
        emp = md.MetaDistCurve(t_grid, cox.empirical_ccdf(ps, t_grid), "empirical", cfg.thresholds.beta_sf)
        curves.append(emp)
    md.write_curves_csv(out.path("curves.csv"), curves)
    rows = []
    for k in ks_orders:
        if k > mv.n:
            continue
        try:
            c = md.cm_reconstruct(mv.truncated(k), t_grid)
        except (md.InconsistentMoments, ValueError):
            continue
        rows.append((k, md.ks_distance(c, emp) if emp else "", md.ks_distance(c, gp) if gp else ""))
    if rows:
        out.csv("ks.csv", ["n_moments", "ks_empirical", "ks_gp"], rows)
    if cfg.metadist.beta_sweep_dB and not args.from_moments:
        prow = []
        for b_dB in cfg.metadist.beta_sweep_dB:
            sub = cfg.copy()
            sub.thresholds.beta_sf = an.Thresholds.from_beta_dB(b_dB).beta_sf
            c = md.cm_reconstruct(_analytic_moments(sub, cfg.run.n_moments), t_grid)
            for level in cfg.metadist.levels:
                prow.append((b_dB, sub.thresholds.beta_sf, level, md.percentile_reliability(c, level)))
        out.csv("percentiles.csv", ["beta_dB", "beta_sf", "level", "t_sf"], prow)
    return 0


def cmd_optimize(cfg: ExperimentConfig, out: Outputs, args):
    o = cfg.optimize
    targets = ["beamwidth", "transmit_probability"] if o.target == "both" else [o.target]

    def solve(target, sc):
        if target == "beamwidth":
            return op.optimal_beamwidth(sc, tuple(o.omega_range), o.points, threads=cfg.run.threads)
        return op.optimal_transmit_probability(sc, tuple(o.p_range), o.points, threads=cfg.run.threads)

    if not o.outer_grid:
        for target in targets:
            solve(target, cfg.scenario()).write_csv(out.path(f"optimize_{target}.csv"))
        return 0
    series = o.series or [{}]
    for target in targets:
        rows = []
        for i, overrides in enumerate(series):
            sub = cfg.copy()
            for k, v in overrides.items():
                sub.set(k, v)
            sub.validate()
            base = sub.scenario()
            for x in sorted(o.outer_grid):
                r = solve(target, base.with_param(o.outer_parameter, x))
                label = ";".join(f"{k}={v}" for k, v in overrides.items())
                rows.append((i, label, o.outer_parameter, x, r.argopt, r.opt_value, r.multimodal))
        out.csv(f"optimize_{target}_vs_{o.outer_parameter}.csv",
                ["series", "overrides", "param", "value", "argopt", "opt_value", "multimodal"], rows)
    return 0


def _check(name, value, reference, tol, kind="abs", note=""):
    if value is None or reference is None:
        return {"name": name, "value": value, "reference": reference, "tolerance": tol,
                "kind": kind, "passed": None, "note": note or "skipped"}
    err = abs(value - reference) if kind == "abs" else abs(value - reference) / abs(reference)
    return {"name": name, "value": value, "reference": reference, "tolerance": tol, "kind": kind,
            "error": err, "passed": bool(err <= tol), "note": note}


def cmd_validate(cfg: ExperimentConfig, out: Outputs, args):
    checks = []
    n = cfg.run.n_realizations
    scale = max(1.0, math.sqrt(BASE_REALIZATIONS / n))
    budget = {"n_realizations": n, "reduced": n < BASE_REALIZATIONS, "tolerance_scale": scale}

    # moment sequence consistency
    try:
        mv = read_moments_csv(args.from_moments) if args.from_moments else _analytic_moments(cfg, cfg.run.n_moments)
        md.check_moments(mv)
        checks.append({"name": "moments_consistent", "passed": True, "note": f"{mv.n} moments"})
    except md.InconsistentMoments as exc:
        mv = None
        checks.append({"name": "moments_consistent", "passed": False, "note": str(exc)})

    sc, msc = cfg.scenario(), cfg.scenario(md=True)
    sample = _simulate(cfg)
    radio, R = cfg.radio_params(), cfg.geometry.R
    sir = cox.sir_values(sample, radio, R)
    p_mc, p_se = _mean_se((sir > sc.thresholds.beta).astype(float))
    checks.append(_check("p_D_vs_mc", op.evaluate("p_D", sc), p_mc, 1e-2 * scale,
                         note=f"MC standard error {p_se:.2e}"))
    ps = cox.conditional_sf_values(sample, radio, msc.thresholds.beta_sf, R)
    m1 = an.moment(1, msc.thresholds, msc.model, msc.sector(), radio, msc.res)
    checks.append(_check("M_1_vs_mc", m1, float(ps.mean()), 1e-2 * scale))
    mneg = an.moment(-1, msc.thresholds, msc.model, msc.sector(), radio, msc.res)
    if math.isfinite(mneg):
        checks.append(_check("M_-1_vs_mc", mneg, float(np.mean(1.0 / ps)), 0.05 * scale, kind="rel"))
    else:
        checks.append(_check("M_-1_vs_mc", None, None, 0.05, note="M_-1 diverges (p = 1); skipped"))
    lengths = cox.mc_sector_lengths(sc.model, sc.half_bw, R, min(n, 20000), cfg.run.seed + 1)
    l_mean, l_se = _mean_se(lengths)
    l_an = op.evaluate("l_k", sc) - R
    checks.append(_check("l_k_vs_mc", l_an, l_mean, max(0.01, 3 * l_se / l_mean), kind="rel",
                         note="ego street excluded on both sides"))
    if mv is not None and not args.from_moments:
        t_grid = np.linspace(0.0, 1.0, cfg.metadist.t_points)
        cm = md.cm_reconstruct(mv, t_grid)
        emp = md.MetaDistCurve(t_grid, cox.empirical_ccdf(ps, t_grid), "empirical", msc.thresholds.beta_sf)
        # the bounds must bracket the empirical CCDF up to a 99% DKW band
        band = math.sqrt(math.log(2 / 0.01) / (2 * ps.size))
        viol = float(np.max(np.maximum(cm.lower - emp.F, emp.F - cm.upper)))
        checks.append(_check("cm_bounds_bracket_empirical", max(viol, 0.0), 0.0, band,
                             note=f"CM with {mv.n} moments; K-S of the midpoint {md.ks_distance(cm, emp):.4f}"))
    passed = all(c["passed"] is not False for c in checks)
    report = {"schema": SCHEMA, "command": "validate", "passed": passed, "budget": budget, "checks": checks}
    out.json("validate.json", report)
    for c in checks:
        tag = "SKIP" if c["passed"] is None else ("PASS" if c["passed"] else "FAIL")
        print(f"{tag}  {c['name']}  {c.get('note', '')}")
    return 0 if passed else 1


def _global_point(real: cox.Realization, line_index: int, v: float):
    """Global coordinates of an interferer stored as ``(line, v)``."""
    ego = real.ego
    if line_index == 0:
        return 0.0, ego.apex[1] + v
    local = geo.to_ego_frame(real.lines[line_index], ego)
    x, y = local.point_at(geo._v_to_t(local.theta, local.r, v))
    return float(x + ego.apex[0]), float(y + ego.apex[1])


def cmd_dump_realization(cfg: ExperimentConfig, out: Outputs, args):
    model, radio = cfg.network_model(), cfg.radio_params()
    sector = geo.SectorSpec.ego(math.radians(cfg.geometry.omega_deg) / 2, model.reach)
    real = cox.sample_realization(model, sector, radio, cfg.run.seed, cfg.geometry.R)
    half = model.reach
    cx, cy = real.ego.apex
    rows = []
    for i, L in enumerate(real.lines):
        # clip to the square window of half-side ``reach`` around the ego radar
        p = L.point_at(0.0)
        d = L.direction
        t_lo, t_hi = -math.inf, math.inf
        for k, c in ((0, cx), (1, cy)):
            if abs(d[k]) < 1e-15:
                if abs(p[k] - c) > half:
                    t_lo, t_hi = 1.0, 0.0
                continue
            a, b = (c - half - p[k]) / d[k], (c + half - p[k]) / d[k]
            t_lo, t_hi = max(t_lo, min(a, b)), min(t_hi, max(a, b))
        if t_hi <= t_lo:
            continue
        (x0, y0), (x1, y1) = p + t_lo * d, p + t_hi * d
        rows.append((i, L.theta, L.r, x0, y0, x1, y1))
    out.csv("realization_lines.csv", ["line", "theta", "r", "x0", "y0", "x1", "y1"], rows)
    pts = []
    for it in real.interferers:
        x, y = _global_point(real, it.line_index, it.v)
        pts.append((it.line_index, x, y, it.w, it.active))
    out.csv("realization_points.csv", ["line", "x", "y", "distance", "active"], pts)
    return 0


COMMANDS = {
    "analytic": cmd_analytic,
    "simulate": cmd_simulate,
    "metadist": cmd_metadist,
    "optimize": cmd_optimize,
    "validate": cmd_validate,
    "dump-realization": cmd_dump_realization,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML experiment config")
    common.add_argument("--set", metavar="K=V", action="append", default=[], dest="overrides",
                        help="override section.key=value (repeatable)")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--preset", metavar="NAME", help=f"named preset ({', '.join(sorted(PRESETS))})")
    common.add_argument("--threads", type=int, help="worker threads")
    parser = argparse.ArgumentParser(prog="radarnet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name in ("metadist", "validate"):
            p.add_argument("--from-moments", metavar="CSV", help="read moments (b,M_b) instead of computing them")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "from_moments"):
        args.from_moments = None
    try:
        cfg = build_config(args.config, args.preset, args.overrides, args.seed, args.out, args.threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Outputs(Path(cfg.run.out))
    start = time.perf_counter()
    try:
        code = COMMANDS[args.command](cfg, out, args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (QuadratureError, ArithmeticError, md.InconsistentMoments) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    manifest = RunManifest(args.command, cfg.to_dict(), cfg.run.seed, __version__,
                           round(time.perf_counter() - start, 3), out.digests())
    manifest.write(out.dir)
    return code


if __name__ == "__main__":
    sys.exit(main())
