"""Command-line front end: construction, simulation and verification runs
with reproducible config echo and output digests.

Exit codes: 0 all checks pass, 2 config or input error, 3 verification
failure, 4 resource cap exceeded.
"""

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import activescalar, fields, flow, measures, scenarios
from .geometry import (
    alpha_for_dimension,
    attractor_approx,
    derive_constants,
    separation_check,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3
EXIT_RESOURCE = 4


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


class Run:
    """Collects outputs and check verdicts, then writes the manifest."""

    def __init__(self, command, cfg, outdir):
        self.command = command
        self.cfg = dict(cfg)
        self.outdir = outdir
        self.files = []
        self.checks = {}
        self.t0 = time.time()
        os.makedirs(outdir, exist_ok=True)

    def write_text(self, name, text):
        path = os.path.join(self.outdir, name)
        with open(path, "w") as f:
            f.write(text)
        self.files.append(path)
        return path

    def add_file(self, path):
        self.files.append(path)

    def check(self, name, ok, **info):
        self.checks[name] = dict(info, passed=bool(ok))
        return ok

    def finish(self):
        manifest = {
            "command": self.command,
            "config": self.cfg,
            "wall_clock_s": round(time.time() - self.t0, 3),
            "checks": self.checks,
            "outputs": {
                os.path.basename(p): _sha256(p) for p in self.files
            },
        }
        path = os.path.join(self.outdir, self.command.replace(" ", "_") + "_manifest.json")
        with open(path, "w") as f:
            json.dump(manifest, f, indent=1)
        all_ok = all(c["passed"] for c in self.checks.values())
        return EXIT_OK if all_ok else EXIT_VERIFY


def _resolve_alpha(args):
    if getattr(args, "h", None) is not None:
        return alpha_for_dimension(args.h)
    return args.alpha


def _load_config(args):
    """Defaults < config file < explicit flags; returns the merged dict."""
    cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as f:
            cfg.update(json.load(f))
    for k, v in vars(args).items():
        if k in ("func", "config") or v is None:
            continue
        cfg[k] = v
    return cfg


def cmd_attractor(args):
    cfg = _load_config(args)
    alpha = _resolve_alpha(args)
    cfg["alpha_resolved"] = alpha
    params = derive_constants(alpha)
    run = Run("attractor", cfg, args.out)
    try:
        approx = attractor_approx(params, args.depth)
    except ResourceWarning as e:
        print("resource cap: %s" % e, file=sys.stderr)
        return EXIT_RESOURCE
    run.write_text("attractor.json", approx.to_json())
    run.write_text("attractor.csv", approx.to_csv())
    rep = separation_check(params, min(args.depth, 4) or 1)
    run.write_text("separation.json", rep.to_json())
    run.check("separation", rep.ok, violations=len(rep.violations))
    print("attractor: %d segments, separation %s"
          % (len(approx), "pass" if rep.ok else "FAIL"))
    return run.finish()


def cmd_flow(args):
    cfg = _load_config(args)
    run = Run("flow " + args.subcheck, cfg, args.out)
    icfg = flow.IntegratorConfig(dt=args.dt)
    if args.subcheck == "verify-contraction":
        reports = flow.verify_contraction(args.alpha, args.depth, icfg)
        worst = max(r.endpoint_error for r in reports)
        run.write_text("contraction.json", flow.report_json(reports))
        run.check("contraction", worst < args.tol, worst_error=worst, tol=args.tol)
        print("contraction: worst endpoint error %.3g (tol %g)" % (worst, args.tol))
    elif args.subcheck == "collapse":
        rep = flow.enclosure_check(args.alpha, xi=args.xi, kmax=args.k, cfg=icfg)
        run.write_text("enclosure.json", flow.report_json(rep))
        run.check("enclosure", rep.ok, max_excess=rep.max_excess)
        print("collapse enclosure: max excess %.3g (slack %g)"
              % (rep.max_excess, rep.slack))
    elif args.subcheck == "full-dim":
        rep = flow.full_dim_scale_check(args.kmax, icfg)
        run.write_text("full_dim.json", flow.report_json(rep))
        ok = rep.tip_error < 1e-4 and rep.block_error < 1e-3
        run.check("full_dim", ok, tip_error=rep.tip_error,
                  block_error=rep.block_error)
        print("full-dim: tip error %.3g, block error %.3g"
              % (rep.tip_error, rep.block_error))
    else:
        print("unknown flow check %r" % args.subcheck, file=sys.stderr)
        return EXIT_CONFIG
    return run.finish()


def cmd_slit(args, ribbon=False):
    cfg = _load_config(args)
    name = "ribbon" if ribbon else "slit"
    run = Run(name, cfg, args.out)
    solver = activescalar.solve_ribbon if ribbon else activescalar.solve_slit
    try:
        hist = solver(args.N, args.eps, args.dt, args.T)
    except (ValueError, RuntimeError) as e:
        print("%s: %s" % (name, e), file=sys.stderr)
        return EXIT_CONFIG if isinstance(e, ValueError) else EXIT_VERIFY
    run.write_text(name + "_history.csv", activescalar.history_csv(hist))
    run.write_text(name + "_invariants.json", json.dumps(hist.to_dict(), indent=1))
    ok = hist.bound_excess <= 0.05
    run.check("collapse_bound", ok, bound_excess=hist.bound_excess)
    print("%s: bound excess %.3g, oddness defect %.3g"
          % (name, hist.bound_excess, hist.max_odd))
    return run.finish()


def cmd_residual(args):
    cfg = _load_config(args)
    run = Run("residual", cfg, args.out)
    levels = list(range(args.refine))
    res, orders = scenarios.convergence_order(args.scenario, levels=levels)
    run.write_text(
        "residual.json",
        json.dumps({"scenario": args.scenario, "residual_max": res,
                    "orders": orders}, indent=1),
    )
    ok = all(o >= 1.0 for o in orders) if orders else True
    run.check("residual_order", ok, orders=orders)
    print("residual (%s): maxima %s, orders %s" % (args.scenario, res, orders))
    return run.finish()


def cmd_dimension(args):
    cfg = _load_config(args)
    run = Run("dimension", cfg, args.out)
    if args.input:
        if not os.path.exists(args.input):
            print("no such input file: %s" % args.input, file=sys.stderr)
            return EXIT_CONFIG
        pts = np.loadtxt(args.input, delimiter=",", skiprows=1, ndmin=2)
        pts = pts[:, :2]
        scales = 2.0 ** -np.arange(2, 2 + args.scales)
    else:
        pts = measures.attractor_point_sample(args.alpha, args.depth)
        scales = measures.attractor_scales(args.alpha)
    rep = measures.box_dimension(pts, scales)
    run.write_text("dimension.json", rep.to_json())
    if args.expect is not None:
        ok = abs(rep.slope - args.expect) <= args.tol
        run.check("dimension", ok, slope=rep.slope, expect=args.expect)
    else:
        run.check("dimension", True, slope=rep.slope)
    print("dimension: slope %.4f" % rep.slope)
    return run.finish()


def cmd_field_sample(args):
    cfg = _load_config(args)
    run = Run("field-sample", cfg, args.out)
    kinds = {
        "fundamental-u": lambda: fields.fundamental_u_handle(args.alpha),
        "series-U": lambda: fields.series_U_handle(args.alpha),
        "collapse-W": lambda: fields.collapse_W_handle(args.alpha, args.xi),
        "aux-nu": fields.aux_nu_handle,
        "combined-V": fields.combined_V_handle,
        "full-Vtilde": fields.full_Vtilde_handle,
    }
    if args.field not in kinds:
        print("unknown field kind %r" % args.field, file=sys.stderr)
        return EXIT_CONFIG
    handle = kinds[args.field]()
    from .geometry import Rect

    half = args.extent
    gs = fields.sample_field(handle, Rect((0.0, 0.0), (half, half)), args.h, args.t)
    run.write_text("field.csv", gs.to_csv())
    bpath = os.path.join(args.out, "field.bin")
    gs.to_binary(bpath)
    run.add_file(bpath)
    run.check("sampled", True, shape=list(gs.values.shape))
    print("field-sample: %s grid %s" % (args.field, gs.values.shape[:2]))
    return run.finish()


def build_parser():
    p = argparse.ArgumentParser(
        prog="fractalflow",
        description="Fractal advection and active-scalar collapse toolkit",
    )
    p.add_argument("--threads", type=int,
                   default=int(os.environ.get("FA_THREADS", "0")),
                   help="worker threads (0 = machine default)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file (flags override)")
        sp.add_argument("--out", default=".", help="output directory")

    a = sub.add_parser("attractor", help="emit attractor segments + separation")
    a.add_argument("--alpha", type=float, default=0.6)
    a.add_argument("--h", type=float, dest="h")
    a.add_argument("--depth", type=int, default=6)
    common(a)
    a.set_defaults(func=cmd_attractor)

    f = sub.add_parser("flow", help="trajectory verifications")
    f.add_argument("subcheck",
                   choices=["verify-contraction", "collapse", "full-dim"])
    f.add_argument("--alpha", type=float, default=0.6)
    f.add_argument("--depth", type=int, default=3)
    f.add_argument("--xi", type=float, default=None)
    f.add_argument("--k", type=int, default=3)
    f.add_argument("--kmax", type=int, default=3)
    f.add_argument("--dt", type=float, default=1e-3)
    f.add_argument("--tol", type=float, default=1e-5)
    common(f)
    f.set_defaults(func=cmd_flow)

    s = sub.add_parser("slit", help="slit collapse run")
    s.add_argument("--N", type=int, default=400)
    s.add_argument("--eps", type=float, default=1e-3)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--T", type=float, default=2.1)
    common(s)
    s.set_defaults(func=cmd_slit)

    r = sub.add_parser("ribbon", help="ribbon collapse run")
    r.add_argument("--N", type=int, default=400)
    r.add_argument("--eps", type=float, default=1e-3)
    r.add_argument("--dt", type=float, default=1e-3)
    r.add_argument("--T", type=float, default=1.1)
    common(r)
    r.set_defaults(func=lambda a: cmd_slit(a, ribbon=True))

    w = sub.add_parser("residual", help="weak-advection residual study")
    w.add_argument("--scenario", choices=["advected", "slit", "ribbon"],
                   default="advected")
    w.add_argument("--refine", type=int, default=2)
    common(w)
    w.set_defaults(func=cmd_residual)

    d = sub.add_parser("dimension", help="box-counting dimension")
    d.add_argument("--input", help="CSV of points (x,y per row)")
    d.add_argument("--alpha", type=float, default=0.6)
    d.add_argument("--depth", type=int, default=10)
    d.add_argument("--scales", type=int, default=6)
    d.add_argument("--expect", type=float, default=None)
    d.add_argument("--tol", type=float, default=0.1)
    common(d)
    d.set_defaults(func=cmd_dimension)

    g = sub.add_parser("field-sample", help="sample a field on a grid")
    g.add_argument("--field", default="fundamental-u")
    g.add_argument("--alpha", type=float, default=0.6)
    g.add_argument("--xi", type=float, default=None)
    g.add_argument("--t", type=float, default=0.5)
    g.add_argument("--h", type=float, default=0.05)
    g.add_argument("--extent", type=float, default=2.5)
    common(g)
    g.set_defaults(func=cmd_field_sample)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse uses code 2 for usage errors already
        raise
    try:
        return args.func(args)
    except ValueError as e:
        print("config error: %s" % e, file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
