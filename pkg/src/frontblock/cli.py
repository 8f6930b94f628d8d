"""Command line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure
(or an Inconclusive verdict under ``--strict``). Every invocation appends a
JSON line to ``<out>/manifest.jsonl``.
"""
from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time
import warnings

import numpy as np

from . import __version__
from . import config as cfgmod
from . import geometry as geo
from .errors import ConfigError, FrontblockError, NumericalFailure
from .evolve import estimate_speed, init_entire, run
from .grid import CoarseGridWarning, Grid
from .lab import INCONCLUSIVE, UNDETERMINED, cauchy, classify, predict, threshold_scan
from .nonlinearity import make_cubic
from .radial import find_R0, find_R1, solve_ball
from .steady import energy, minimize_blocking
from .wave1d import ShiftFunction, solve_wave

FMT = "%.12g"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _num(v) -> str:
    if isinstance(v, str):
        return v
    if v is None:
        return ""
    return FMT % v


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(_num(v) for v in r) + "\n")


def _versions() -> dict:
    out = {"python": platform.python_version(), "numpy": np.__version__, "frontblock": __version__}
    for mod in ("scipy", "numba"):
        try:
            out[mod] = __import__(mod).__version__
        except ImportError:
            out[mod] = None
    return out


# --------------------------------------------------------------------------
# configuration assembly
# --------------------------------------------------------------------------

def _preset_params(pairs) -> dict:
    out = {}
    for p in pairs or []:
        if "=" not in p:
            raise UsageError(f"--param expects key=value, got {p!r}")
        k, v = p.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def _config(args) -> cfgmod.RunConfig:
    raw = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = cfgmod.parse(fh.read())
        raw = cfg.to_dict()
    if getattr(args, "a", None) is not None:
        raw.setdefault("nonlinearity", {"kind": "cubic"})
        raw["nonlinearity"] = {"kind": "cubic", "a": args.a,
                               **({"scale": args.scale} if getattr(args, "scale", None) else {})}
    if getattr(args, "preset", None):
        raw["domain"] = {"preset": args.preset, **_preset_params(getattr(args, "param", None))}
    if getattr(args, "dx", None) is not None:
        raw["dx"] = args.dx
    stop = dict(raw.get("stop", {}))
    if getattr(args, "until", None):
        stop["rule"] = args.until
    if getattr(args, "t_max", None) is not None:
        stop["t_max"] = args.t_max
    if getattr(args, "x1_target", None) is not None:
        stop["x1_target"] = args.x1_target
    if stop:
        raw["stop"] = stop
    if getattr(args, "T", None) is not None:
        raw.setdefault("init", {})
        raw["init"] = {**raw["init"], "T": args.T}
    out = dict(raw.get("output", {}))
    out["dir"] = args.out
    if getattr(args, "vtk", False):
        out["vtk"] = True
    if getattr(args, "snapshots_every", None) is not None:
        out["snapshots_every"] = args.snapshots_every
    raw["output"] = out
    return cfgmod.from_dict(raw)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_wave1d(args, cfg, outdir):
    b = cfg.bistable()
    w = solve_wave(b, tol=cfg.tolerances["shoot"])
    print(f"c = {FMT % w.c}")
    print(f"lambda = {FMT % w.lam}")
    path = os.path.join(outdir, "wave_profile.csv")
    write_csv(path, ["z", "phi", "dphi"], zip(w.z, w.phi, w.dphi))
    return {"c": w.c, "lambda": w.lam}, [path], False


def cmd_ball(args, cfg, outdir):
    b = cfg.bistable()
    tol = cfg.tolerances["ball"]
    R0 = find_R0(b, args.N, tol)
    R1 = find_R1(b, args.N, args.delta, tol)
    print(f"R0 = {FMT % R0}")
    print(f"R1 = {FMT % R1}")
    R = args.R if args.R is not None else 2 * R0
    ball = solve_ball(b, R, args.N)
    files = []
    res = {"R0": R0, "R1": R1, "R": R}
    if ball is None:
        print(f"no positive solution on the ball of radius {FMT % R}")
        res["center_value"] = None
    else:
        print(f"w(0) = {FMT % ball.center_value} on R = {FMT % R}")
        path = os.path.join(outdir, "ball_profile.csv")
        write_csv(path, ["r", "w"], zip(ball.r, ball.w))
        files.append(path)
        res["center_value"] = ball.center_value
    path = os.path.join(outdir, "thresholds.csv")
    write_csv(path, ["N", "delta", "R0", "R1"], [(args.N, args.delta, R0, R1)])
    files.append(path)
    return res, files, False


def _build(cfg):
    spec = cfg.domain_spec()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", CoarseGridWarning)
        g = Grid.build(spec, cfg.dx)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return spec, g


def _simulate(cfg, outdir, tag="simulate"):
    b = cfg.bistable()
    spec, g = _build(cfg)
    w = solve_wave(b, tol=cfg.tolerances["shoot"])
    s = ShiftFunction.for_wave(w, cfg.init["M"])
    u0 = init_entire(g, w, s, cfg.init["T"])
    st = cfg.stop
    snap = cfg.output["snapshots_every"]
    traj, u = run(g, u0, b, st["rule"], t_max=st["t_max"], x1_target=st["x1_target"],
                  tol_stat=cfg.tolerances["stat"], snapshot_every=snap,
                  dt=cfg.dt_factor * g.dx**2 / 4 if cfg.dt_factor != 0.9 else None)
    c = cfg.classify
    out = classify(traj, u, g, c["u_lo"], c["u_hi"], c["u_mid"], c["tail_fraction"])
    try:
        # keep clear of both walls: the Neumann reflection biases the slope
        speed = estimate_speed(traj, x_range=(spec.x1_min + 5.0, spec.x1_max - 5.0))
    except ValueError:
        speed = float("nan")
    files = []
    if cfg.output["csv"]:
        p = os.path.join(outdir, f"{tag}_trajectory.csv")
        write_csv(p, ["t", "front", "min", "max"], zip(traj.times, traj.fronts, traj.mins, traj.maxs))
        files.append(p)
        p = os.path.join(outdir, f"{tag}_axis.csv")
        g.write_axis_csv(p, u.values)
        files.append(p)
    if cfg.output["vtk"]:
        p = os.path.join(outdir, f"{tag}_final.vtk")
        g.write_vtk(p, u.values)
        files.append(p)
        for k, sn in enumerate(traj.snapshots):
            p = os.path.join(outdir, f"{tag}_snap_{k:04d}.vtk")
            g.write_vtk(p, sn.values)
            files.append(p)
    print(f"verdict = {out.verdict}")
    print(f"stop = {traj.stop} at t = {FMT % u.t}")
    print(f"speed = {FMT % speed} (1D c = {FMT % w.c})")
    res = {"verdict": out.verdict, "stop": traj.stop, "t": u.t, "speed": speed, "c": w.c,
           "tail_max": out.right_tail_max, "min": out.global_min, "bounds": list(traj.bounds)}
    return res, files, out.verdict == INCONCLUSIVE


def cmd_simulate(args, cfg, outdir):
    return _simulate(cfg, outdir)


def cmd_classify(args, cfg, outdir):
    if cfg.stop["rule"] != "stationary":
        cfg.stop["rule"] = "stationary"
    return _simulate(cfg, outdir, tag="classify")


def cmd_steady(args, cfg, outdir):
    b = cfg.bistable()
    spec, g = _build(cfg)
    res = minimize_blocking(g, b, args.a_cut, args.b_cut, args.r_cut, tol=cfg.tolerances["stat"],
                            delta=args.delta, keep_energies=False)
    rep = res.report
    tail = res.tail_max(args.b_cut + 1.0)
    print(f"J = {FMT % rep.J} (ramp {FMT % res.report_w0.J})")
    print(f"H1 distance from ramp = {FMT % res.distance}")
    print(f"max beyond b_cut + 1 = {FMT % tail}")
    files = []
    p = os.path.join(outdir, "energy.csv")
    write_csv(p, ["J", "dirichlet", "potential", "measure", "J_ramp", "distance", "tail_max"],
              [(rep.J, rep.dirichlet, rep.potential, rep.measure, res.report_w0.J, res.distance, tail)])
    files.append(p)
    p = os.path.join(outdir, "minimizer.vtk")
    res.grid.write_vtk(p, res.field.values, name="w")
    files.append(p)
    return {"J": rep.J, "distance": res.distance, "tail_max": tail}, files, False


def cmd_predict(args, cfg, outdir):
    b = cfg.bistable()
    spec = cfg.domain_spec()
    R0 = find_R0(b, 2, cfg.tolerances["ball"])
    R1 = find_R1(b, 2, args.delta, cfg.tolerances["ball"])
    pr = predict(spec, b, R0, R1)
    print(f"prediction = {pr.verdict}")
    if pr.rule:
        print(f"rule = {pr.rule}")
    for n in pr.notes:
        print(f"note: {n}")
    return {"verdict": pr.verdict, "rule": pr.rule, "notes": pr.notes, "R0": R0, "R1": R1}, [], \
        pr.verdict == UNDETERMINED and args.strict_undetermined


def cmd_scan(args, cfg, outdir):
    b = cfg.bistable()
    params = _preset_params(args.param)
    fam_name = args.family
    maker = geo.PRESETS.get(fam_name)
    if maker is None:
        raise UsageError(f"unknown family {fam_name!r}")
    key = {"abrupt_widen": "r", "narrow_passage": "eps", "hourglass": "waist"}.get(fam_name)
    if key is None:
        raise UsageError(f"family {fam_name!r} has no passage parameter to scan")

    def family(eps):
        return maker(**{**params, key: eps})

    res = threshold_scan(_Family(maker, params, key), b, args.eps_lo, args.eps_hi, cfg.dx,
                         resolution=args.resolution, budget=args.budget, workers=args.workers)
    p = os.path.join(outdir, "phase_table.csv")
    write_csv(p, ["eps", "verdict", "speed", "tail_max"],
              [(q.eps, q.verdict, q.speed, q.tail_max) for q in sorted(res.probes, key=lambda q: q.eps)])
    if res.bracket:
        print(f"bracket = [{FMT % res.bracket[0]}, {FMT % res.bracket[1]}]")
    else:
        print("no blocked/propagating bracket between the end points")
    return {"bracket": res.bracket, "monotone": res.monotone}, [p], res.bracket is None


class _Family:
    """Picklable ``eps -> DomainSpec`` for process pools."""

    def __init__(self, maker, params, key):
        self.maker, self.params, self.key = maker, params, key

    def __call__(self, eps):
        return self.maker(**{**self.params, self.key: eps})


def cmd_cauchy(args, cfg, outdir):
    b = cfg.bistable()
    spec, g = _build(cfg)
    u0 = np.where((g.x1 >= args.x_from) & (g.x1 <= args.x_to), args.level, 0.0)
    out, traj, u = cauchy(g, u0, b, a=args.x_to + g.dx, t_max=cfg.stop["t_max"],
                          tol_stat=cfg.tolerances["stat"])
    print(f"verdict = {out.verdict}")
    p = os.path.join(outdir, "cauchy_trajectory.csv")
    write_csv(p, ["t", "front", "min", "max"], zip(traj.times, traj.fronts, traj.mins, traj.maxs))
    return {"verdict": out.verdict, "tail_max": out.right_tail_max}, [p], out.verdict == INCONCLUSIVE


COMMANDS = {
    "wave1d": cmd_wave1d, "ball": cmd_ball, "simulate": cmd_simulate, "steady": cmd_steady,
    "classify": cmd_classify, "predict": cmd_predict, "scan": cmd_scan, "cauchy": cmd_cauchy,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="frontblock", description="Bistable fronts in cylinder-like domains.")
    common = _Parser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--strict", action="store_true", help="exit 2 on inconclusive outcomes")
    common.add_argument("--a", type=float, help="cubic threshold a in (0, 1)")
    common.add_argument("--scale", type=float, help="multiply f by this factor")
    dom = _Parser(add_help=False)
    dom.add_argument("--preset", choices=sorted(geo.PRESETS))
    dom.add_argument("--param", action="append", metavar="KEY=VALUE", help="preset parameter")
    dom.add_argument("--dx", type=float)
    run_ = _Parser(add_help=False)
    run_.add_argument("--until", choices=["stationary", "front_reached", "t_max", "either"])
    run_.add_argument("--t-max", dest="t_max", type=float)
    run_.add_argument("--x1-target", dest="x1_target", type=float)
    run_.add_argument("--T", type=float, help="initialisation time (negative)")
    run_.add_argument("--vtk", action="store_true")
    run_.add_argument("--snapshots-every", dest="snapshots_every", type=float)

    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.add_parser("wave1d", parents=[common], help="1D front speed and profile")
    sp = sub.add_parser("ball", parents=[common], help="radial ball problem and R0, R1")
    sp.add_argument("--R", type=float)
    sp.add_argument("--N", type=int, default=2)
    sp.add_argument("--delta", type=float, default=0.05)
    sub.add_parser("simulate", parents=[common, dom, run_], help="evolve the entire solution")
    sub.add_parser("classify", parents=[common, dom, run_], help="evolve to stationarity and classify")
    sp = sub.add_parser("steady", parents=[common, dom], help="blocking minimiser behind a passage")
    sp.add_argument("--a-cut", dest="a_cut", type=float, required=True)
    sp.add_argument("--b-cut", dest="b_cut", type=float, required=True)
    sp.add_argument("--r-cut", dest="r_cut", type=float)
    sp.add_argument("--delta", type=float, default=0.5)
    sp = sub.add_parser("predict", parents=[common, dom], help="verdict from the geometry alone")
    sp.add_argument("--delta", type=float, default=0.05)
    sp.add_argument("--strict-undetermined", action="store_true")
    sp = sub.add_parser("scan", parents=[common, dom], help="passage-width threshold scan")
    sp.add_argument("--family", default="abrupt_widen")
    sp.add_argument("--eps-lo", dest="eps_lo", type=float, required=True)
    sp.add_argument("--eps-hi", dest="eps_hi", type=float, required=True)
    sp.add_argument("--resolution", type=float, default=0.05)
    sp.add_argument("--budget", type=int, default=16)
    sp.add_argument("--workers", type=int, default=1)
    sp = sub.add_parser("cauchy", parents=[common, dom, run_], help="run from a box of initial data")
    sp.add_argument("--x-from", dest="x_from", type=float, default=-12.0)
    sp.add_argument("--x-to", dest="x_to", type=float, default=-2.0)
    sp.add_argument("--level", type=float, default=1.0)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    started = time.time()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help(sys.stderr)
            return 1
        cfg = _config(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    outdir = cfg.output["dir"]
    os.makedirs(outdir, exist_ok=True)
    code, result, files = 0, {}, []
    try:
        result, files, inconclusive = COMMANDS[args.command](args, cfg, outdir)
        if inconclusive and args.strict:
            code = 2
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = 1
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        code, result = 2, {"error": type(exc).__name__, "message": str(exc)}
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code, result = 1, {"error": type(exc).__name__, "message": str(exc)}
    except FrontblockError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        code, result = 2, {"error": type(exc).__name__, "message": str(exc)}
    entry = {
        "command": args.command, "argv": argv, "config_hash": cfg.digest(), "config": cfg.to_dict(),
        "versions": _versions(), "numba": os.environ.get("FRONTBLOCK_NUMBA", "1"),
        "started": started, "wall_time": time.time() - started, "exit_code": code,
        "outputs": files, "result": result,
    }
    with open(os.path.join(outdir, "manifest.jsonl"), "a") as fh:
        fh.write(json.dumps(entry, default=_json_default, sort_keys=True) + "\n")
    return code


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
