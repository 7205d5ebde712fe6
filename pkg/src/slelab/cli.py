"""slelab command line.

Each subcommand resolves its parameters from defaults, then a JSON config
file, then flags, writes its outputs to ``--out`` and a manifest.json that
can be passed back as ``--config`` to reproduce the run.

Exit codes: 0 success, 2 a built-in check failed, 1 runtime error,
64 malformed command line or config.
"""
import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__

EXIT_OK, EXIT_ERROR, EXIT_CHECK, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


# name -> (type, default, help); None default means "not set"
PARAMS = {
    "sle-trace": {
        "kappa": (float, None, "SLE parameter (exclusive with theta)"),
        "theta": (float, None, "theta = kappa / 4"),
        "dt": (float, 1e-3, "Loewner step"),
        "horizon": (float, 1.0, "final capacity time"),
        "n_paths": (int, 1, "number of traces"),
        "seed": (int, 0, "random seed"),
    },
    "capacity-check": {
        "n_drivings": (int, 20, "random driving functions"),
        "min_steps": (int, 10, ""),
        "max_steps": (int, 100000, ""),
        "seed": (int, 0, ""),
        "tol": (float, 1e-12, "allowed |Time - t|"),
    },
    "restriction": {
        "kappa": (float, 8 / 3, ""),
        "hull": (str, "half-disk:2,1", "half-disk:x0,rad or slit:x0,height"),
        "paths": (int, 20000, ""),
        "seed": (int, 0, ""),
        "eps": (float, 0.1, "step control: duration eps^2 d^2"),
        "horizon": (float, 1e9, ""),
    },
    "martingale": {
        "kappa": (float, 2.0, ""),
        "hull": (str, "half-disk:2,1", ""),
        "checkpoints": (_floats, [0.1, 0.5, 1.0, 2.0], "comma separated times"),
        "paths": (int, 20000, ""),
        "seed": (int, 0, ""),
        "eps": (float, 0.1, ""),
    },
    "liouville": {
        "n": (int, 20, "random tuples or configurations"),
        "seed": (int, 0, ""),
        "grid": (int, 512, "cells per side of the square grid"),
        "half": (float, 6.0, "half side of the square grid"),
        "bumps": (int, 3, "bumps per metric on the round background"),
        "beta": (float, 0.01, "cubic coefficient (schiffer)"),
    },
    "schiffer": {
        "beta": (float, 0.01, "f(x) = x + beta x^3"),
        "t_values": (_floats, [1e-4, 2e-4, 4e-4], ""),
        "radius": (float, 0.3, "contour radius"),
        "nodes": (int, 512, ""),
    },
    "annulus": {
        "boundary_file": (str, None, "outer (and optionally inner) closed polyline CSV"),
        "inner_file": (str, None, "inner closed polyline CSV"),
        "inner_radius": (float, 0.5, "inner circle radius when no inner curve is given"),
        "n_theta": (int, 64, "starting angular resolution"),
        "tol": (float, 1e-4, ""),
    },
    "loop-coords": {
        "curve_file": (str, None, "closed polyline CSV (x, y rows) around 0"),
        "shape": (str, "circle:1", "circle:r, ellipse:a,b or cubic:A,beta when no file"),
        "K": (int, 8, "truncation order"),
    },
    "ising": {
        "width": (int, 64, ""),
        "height": (int, 64, ""),
        "beta": (float, 0.5 * math.log(1 + math.sqrt(2)), "inverse temperature"),
        "n_interfaces": (int, 200, "independent chains, one interface each"),
        "seed": (int, 0, ""),
        "thermalization": (int, 3000, "sweeps before sampling"),
        "sweeps": (int, 50, "sweeps between samples"),
        "geometry": (str, "conformal", "conformal or affine box-to-H map"),
    },
}

LIOUVILLE_MODES = ("cocycle", "bridge", "residue", "foursphere", "schiffer")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="slelab", description="SLE / Liouville / restriction laboratory")
    p.add_argument("--version", action="version", version=f"slelab {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name, params in PARAMS.items():
        sp = sub.add_parser(name)
        if name == "liouville":
            sp.add_argument("mode", choices=LIOUVILLE_MODES)
        if name == "annulus":
            sp.add_argument("action", choices=("modulus",))
        for key, (typ, _, hlp) in params.items():
            sp.add_argument("--" + key.replace("_", "-"), dest=key, type=typ,
                            default=argparse.SUPPRESS, help=hlp)
        sp.add_argument("--config", default=None, help="JSON config or manifest")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (default LAB_THREADS or all cores)")
        sp.add_argument("--svg", action="store_true", help="also write SVG figures")
    return p


def _load_config(path, name):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read config {path}: {e}")
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    if "config" in cfg and "subcommand" in cfg:
        if cfg["subcommand"] != name:
            raise UsageError(f"manifest is for {cfg['subcommand']!r}, not {name!r}")
        cfg = cfg["config"]
    params = PARAMS[name]
    out = {}
    for k, v in cfg.items():
        if k in ("mode", "action"):
            out[k] = v
            continue
        if k not in params:
            raise UsageError(f"unknown config key {k!r}")
        typ = params[k][0]
        try:
            out[k] = None if v is None else typ(v)
        except (TypeError, ValueError) as e:
            raise UsageError(f"bad value for {k}: {e}")
    return out


def resolve(args):
    """Defaults < config file < flags."""
    name = args.subcommand
    cfg = {k: d for k, (_, d, _) in PARAMS[name].items()}
    if args.config:
        fc = _load_config(args.config, name)
        for k in ("mode", "action"):
            fc.pop(k, None)
        cfg.update(fc)
    for k in PARAMS[name]:
        if hasattr(args, k):
            cfg[k] = getattr(args, k)
    return cfg


def _threads(args):
    n = args.threads
    if n is None and os.environ.get("LAB_THREADS"):
        try:
            n = int(os.environ["LAB_THREADS"])
        except ValueError:
            raise UsageError("LAB_THREADS must be an integer")
    if n is not None and n < 1:
        raise UsageError("--threads must be positive")
    return n


def _set_threads(n):
    import numba
    if n is not None:
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    return numba.get_num_threads()


class Run:
    """Output directory bookkeeping."""

    def __init__(self, out, svg):
        self.out = out
        self.svg = svg
        self.files = []
        os.makedirs(out, exist_ok=True)

    def path(self, name):
        p = os.path.join(self.out, name)
        self.files.append(name)
        return p

    def json(self, name, obj):
        with open(self.path(name), "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")

    def figure(self, fig, stem):
        from .plotting import save
        for p in save(fig, os.path.join(self.out, stem), self.svg):
            self.files.append(os.path.basename(p))


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o).__name__)


# ---------------------------------------------------------------- commands

def cmd_sle_trace(cfg, run):
    from . import loewner, sle
    from .plotting import driving_figure, trace_figure
    if cfg["kappa"] is not None and cfg["theta"] is not None:
        raise UsageError("give exactly one of kappa and theta")
    if cfg["theta"] is not None:
        params = sle.params_from_theta(cfg["theta"])
    else:
        params = sle.params_from_kappa(cfg["kappa"] if cfg["kappa"] is not None else 8 / 3)
    worst = 0.0
    rows = []
    for i in range(cfg["n_paths"]):
        d = sle.sample_driving(params, cfg["dt"], cfg["horizon"], cfg["seed"], i)
        tr = loewner.trace(d)
        state = loewner.evolve(d)
        err = abs(loewner.capacity_time(state) - d.horizon)
        worst = max(worst, err)
        loewner.write_trace_csv(run.path(f"trace_{i:04d}.csv"), tr, d.times)
        loewner.write_driving_csv(run.path(f"driving_{i:04d}.csv"), d)
        rows.append(dict(path_id=i, n_steps=len(d), capacity=loewner.capacity_time(state),
                         tip=[float(tr[-1].real), float(tr[-1].imag)]))
        if i == 0:
            run.figure(trace_figure(tr, f"SLE, kappa = {params.kappa:g}"), "trace")
            run.figure(driving_figure(d.times, d.values, params.kappa), "driving")
    ok = worst <= 1e-12 * max(1.0, cfg["horizon"])
    run.json("summary.json", dict(kappa=params.kappa, c=params.c, h=params.h, paths=rows,
                                  max_capacity_error=worst, ok=ok))
    return ok


def cmd_capacity_check(cfg, run):
    from . import loewner
    rng = np.random.Generator(np.random.Philox(cfg["seed"]))
    lo, hi = math.log(cfg["min_steps"]), math.log(cfg["max_steps"])
    rows = []
    for i in range(cfg["n_drivings"]):
        n = int(round(math.exp(rng.uniform(lo, hi)))) if i else cfg["max_steps"]
        dt = rng.uniform(0.1, 2.0, n) / n
        w = np.cumsum(rng.normal(0, 1, n) * np.sqrt(dt))
        d = loewner.DrivingFunction(w, dt)
        state = loewner.evolve(d)
        t = d.horizon
        rows.append(dict(n_steps=n, t=t, time=loewner.capacity_time(state),
                         error=abs(loewner.capacity_time(state) - t)))
    worst = max(r["error"] for r in rows)
    ok = worst <= cfg["tol"]
    run.json("summary.json", dict(rows=rows, max_error=worst, tol=cfg["tol"], ok=ok))
    return ok


def _mc_config(cfg):
    from .restriction import MCConfig
    return MCConfig(eps=cfg["eps"])


def cmd_restriction(cfg, run):
    from . import restriction, sle
    hull = restriction.parse_hull(cfg["hull"])
    params = sle.params_from_kappa(cfg["kappa"])
    res = restriction.avoidance_mc(hull, cfg["paths"], cfg["seed"], cfg["horizon"],
                                   _mc_config(cfg), params)
    target = res.table.r0
    z = (res.p_hat - target) / res.stderr if res.stderr > 0 else float("inf")
    ok = abs(res.p_hat - target) <= 3 * res.stderr if params.c == 0 else True
    run.json("summary.json", dict(p_hat=res.p_hat, stderr=res.stderr, target=target, z=z,
                                  regret=res.regret, mean_r=res.mean_r, horizon=res.horizon,
                                  kappa=params.kappa, c=params.c, h=params.h, ok=ok))
    restriction.write_martingale_csv(run.path("paths.csv"), res.table)
    return ok


def cmd_martingale(cfg, run):
    from . import restriction, sle
    from .plotting import martingale_figure
    hull = restriction.parse_hull(cfg["hull"])
    params = sle.params_from_kappa(cfg["kappa"])
    alpha = restriction.mapping_out(hull)
    tab = restriction.martingale_mc(params, hull, cfg["checkpoints"], cfg["paths"],
                                    cfg["seed"], _mc_config(cfg))
    r0 = float(alpha.jet0.d1.real) ** params.h
    ok = tab.flat() and abs(tab.r0 - r0) <= 1e-12
    restriction.write_martingale_csv(run.path("martingale.csv"), tab)
    with open(run.path("summary.json"), "w") as fh:
        fh.write(restriction.summary_json(tab, kappa=params.kappa, c=params.c, h=params.h,
                                          r0_closed_form=r0, ok=ok))
        fh.write("\n")
    run.figure(martingale_figure(tab), "martingale")
    return ok


def cmd_liouville(cfg, run, mode):
    from . import liouville as lv
    grid = lv.SquareGrid(cfg["half"], cfg["grid"])
    if mode == "cocycle":
        c, a = lv.cocycle_residuals(cfg["n"], cfg["seed"], grid, cfg["bumps"])
        out = dict(value=c, target=0.0, error=c, alpha_error=a, ok=c <= 1e-8 and a <= 1e-10)
    elif mode == "bridge":
        r = lv.bridge_residuals(cfg["n"], cfg["seed"], grid)
        out = dict(value=float(r.max()), target=0.0, error=float(r.max()), ok=bool(r.max() <= 1e-5))
    elif mode == "residue":
        e = lv.pole_residue_errors(pairs=lv.coordinate_pairs(cfg["n"], cfg["seed"]))
        v = lv.vanishing_integral_values(n_pairs=cfg["n"], seed=cfg["seed"] + 1)
        out = dict(value=float(e.max()), target=0.0, error=float(e.max()),
                   vanishing_integral_max=float(np.abs(v).max()), ok=bool(e.max() <= 1e-6 and np.abs(v).max() <= 1e-8))
    elif mode == "foursphere":
        rows = lv.four_sphere_agreement()
        bump = lv.four_sphere_bump_check(min(cfg["n"], 5), cfg["seed"])
        err = float(np.max(np.abs(rows[:, 0] - rows[:, 1])))
        err_b = float(np.max(np.abs(bump[:, 0] - bump[:, 1])))
        out = dict(value=rows[:, 1].tolist(), target=rows[:, 0].tolist(), error=err,
                   bump_error=err_b, ok=err <= 1e-6 and err_b <= 1e-6)
    else:
        r = lv.schiffer_derivative(lv.cubic(cfg["beta"]))
        out = dict(value=r.slope, target=cfg["beta"] / 2, error=r.rel_error,
                   ok=r.rel_error <= 0.01)
    out["mode"] = mode
    run.json("summary.json", out)
    return out["ok"]


def cmd_schiffer(cfg, run):
    from . import liouville as lv
    from .plotting import schiffer_figure
    r = lv.schiffer_derivative(lv.cubic(cfg["beta"]), cfg["t_values"], cfg["radius"], cfg["nodes"])
    ok = abs(r.slope - cfg["beta"] / 2) <= 0.01 * abs(cfg["beta"] / 2)
    run.json("summary.json", dict(beta=cfg["beta"], slope=r.slope, target=cfg["beta"] / 2,
                                  schwarzian_over_12=r.target, rel_error=r.rel_error,
                                  t=r.t, rho=r.rho, ok=ok))
    run.figure(schiffer_figure(r), "schiffer")
    return ok


def _csv_blocks(path):
    """Closed polylines from (x, y) rows; blank lines separate curves."""
    blocks, cur = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.replace(",", " ").split()
            if not parts:
                if cur:
                    blocks.append(np.array(cur))
                    cur = []
                continue
            try:
                cur.append(complex(float(parts[0]), float(parts[1])))
            except (ValueError, IndexError):
                continue
    if cur:
        blocks.append(np.array(cur))
    return blocks


def cmd_annulus(cfg, run):
    from . import annulus as an
    from .plotting import annulus_figure
    if cfg["boundary_file"]:
        blocks = _csv_blocks(cfg["boundary_file"])
        if not blocks:
            raise UsageError("boundary file holds no points")
        outer = an.Polyline(blocks[0])
        if cfg["inner_file"]:
            inner = an.Polyline(_csv_blocks(cfg["inner_file"])[0])
            dom = an.AnnularDomain(outer, inner)
        elif len(blocks) > 1:
            dom = an.AnnularDomain(outer, an.Polyline(blocks[1]))
        else:
            c = np.mean(blocks[0])
            dom = an.AnnularDomain(outer, an.Circle(complex(c), cfg["inner_radius"]), complex(c))
    else:
        dom = an.concentric(cfg["inner_radius"])
    t, sol = an.modulus(dom, cfg["n_theta"], cfg["tol"], return_solution=True)
    target = cfg["inner_radius"] if not cfg["boundary_file"] else None
    ok = True if target is None else abs(t - target) <= 1e-3
    run.json("summary.json", dict(t=t, energy=sol.energy, n_theta=len(sol.theta),
                                  center=[dom.center.real, dom.center.imag],
                                  target=target, ok=ok))
    run.figure(annulus_figure(sol), "annulus")
    return ok


def _shape(text):
    from . import loopspace as lp
    kind, _, args = text.partition(":")
    vals = _floats(args) if args else []
    if kind == "circle":
        return lp.CircleLoop(vals[0] if vals else 1.0)
    if kind == "ellipse":
        return lp.joukowski_ellipse(*vals)
    if kind == "cubic":
        return lp.cubic_loop(*vals)
    raise UsageError(f"unknown shape {kind!r}")


def cmd_loop_coords(cfg, run):
    from . import loopspace as lp
    from .plotting import loop_figure
    if cfg["curve_file"]:
        blocks = _csv_blocks(cfg["curve_file"])
        if not blocks:
            raise UsageError("curve file holds no points")
        loop = lp.PolylineLoop(blocks[0])
    else:
        loop = _shape(cfg["shape"])
    c = lp.coords(loop, cfg["K"])
    P = lp.neretin_P2(loop, cfg["K"])
    out = c.to_json()
    out.update({"P_-2": P[0], "P'_-2": P[1], "P_2": P[2], "P'_2": P[3], "K": cfg["K"]})
    ok = bool(c.AB <= 1 + 1e-8 and c.de_branges_ok())
    out["ok"] = ok
    run.json("coords.json", out)
    pts = loop.points(2048) if not isinstance(loop, lp.PolylineLoop) else loop.pts
    run.figure(loop_figure(np.asarray(pts), c), "loop")
    return ok


def cmd_ising(cfg, run):
    from . import walls
    from .plotting import ising_figure, variogram_figure
    spec = walls.LatticeSpec(cfg["width"], cfg["height"], cfg["beta"], cfg["sweeps"],
                             cfg["thermalization"], cfg["seed"], n_chains=cfg["n_interfaces"])
    S = walls.simulate(spec)
    paths = [walls.extract_interface(s) for s in S]
    os.makedirs(os.path.join(run.out, "interfaces"), exist_ok=True)
    for i, p in enumerate(paths):
        walls.write_interface_csv(run.path(f"interfaces/interface_{i:04d}.csv"), p, cfg["geometry"])
    np.savetxt(run.path("spins_0000.csv"), S[0].T, fmt="%d", delimiter=",")
    summary = dict(width=spec.width, height=spec.height, beta=spec.beta,
                   n_interfaces=len(paths), mean_edges=float(np.mean([p.n_edges for p in paths])))
    ok = True
    if len(paths) >= 100:
        d = walls.diffusivity(paths, seed=cfg["seed"], geometry=cfg["geometry"])
        summary.update(d.to_json())
        if abs(spec.beta - walls.BETA_C) < 1e-12:
            ok = 2.4 <= d.kappa <= 3.6 and d.r2 > 0.9
            summary["band"] = [2.4, 3.6]
        run.figure(variogram_figure(d), "variogram")
    else:
        summary["kappa_hat"] = None
        summary["note"] = "fewer than 100 interfaces: no estimate"
    summary["ok"] = ok
    run.json("summary.json", summary)
    run.figure(ising_figure(S[0], paths[0]), "ising")
    return ok


COMMANDS = {
    "sle-trace": cmd_sle_trace,
    "capacity-check": cmd_capacity_check,
    "restriction": cmd_restriction,
    "martingale": cmd_martingale,
    "schiffer": cmd_schiffer,
    "annulus": cmd_annulus,
    "loop-coords": cmd_loop_coords,
    "ising": cmd_ising,
}


def run(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve(args)
        threads = _threads(args)
    except UsageError as e:
        print(f"slelab: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    name = args.subcommand
    t0 = time.time()
    try:
        n_threads = _set_threads(threads)
        out = Run(args.out, args.svg)
        if name == "liouville":
            ok = cmd_liouville(cfg, out, args.mode)
        else:
            ok = COMMANDS[name](cfg, out)
    except UsageError as e:
        print(f"slelab: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # noqa: BLE001
        print(f"slelab: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR
    manifest = dict(subcommand=name, config=cfg, version=__version__, threads=n_threads,
                    svg=args.svg, outputs=sorted(out.files), ok=bool(ok),
                    started=time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(t0)),
                    wall_clock_s=round(time.time() - t0, 3))
    if name == "liouville":
        manifest["config"] = dict(cfg, mode=args.mode)
    if name == "annulus":
        manifest["config"] = dict(cfg, action=args.action)
    with open(os.path.join(args.out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")
    return EXIT_OK if ok else EXIT_CHECK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
