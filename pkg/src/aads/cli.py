"""Command-line front door.

Every subcommand is a thin adapter over the library: parse/validate the
run configuration, call one library operation, write the declared CSV/JSON
artifacts (byte-stable: 17-significant-digit decimals, sorted keys, LF
endings) and optional matplotlib figures.  No numeric logic lives here.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.  Partial
outputs are removed on failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from ._num import fibonacci_directions, write_csv, write_json
from .errors import AadsError, ConstructionError, PreconditionError

_CONFIG_KEYS = {
    "spacetime": {"model", "d", "R", "m", "point", "Lambda", "out"},
    "geodesic": {"model", "d", "R", "m", "chart", "init", "max_affine",
                 "jacobi", "out", "fig"},
    "timedelay": {"d", "R", "m", "directions", "tau", "out", "csv", "fig"},
    "fermat": {"d", "R", "point", "generators", "sign", "out", "fig"},
    "fg": {"boundary", "d", "order", "out", "fig"},
    "timefunction": {"frame", "d", "half_width", "points", "out"},
    "surface-gravity": {"frame", "d", "half_width", "side", "out", "fig"},
    "volume": {"d", "radius", "seed", "n", "out"},
    "penrose": {"model", "d", "R", "out", "fig"},
}


def _merge_config(args, parser):
    """--config file.json merges under explicit flags (flags win)."""
    if not getattr(args, "config", None):
        return args
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot read config: {exc}")
    allowed = _CONFIG_KEYS[args.command]
    unknown = set(cfg) - allowed
    if unknown:
        parser.error(f"unknown config keys for '{args.command}': {sorted(unknown)}")
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if getattr(args, dest, None) == subparser.get_default(dest):
            setattr(args, dest, value)
    return args


def _floats(text):
    return np.array([float(v) for v in str(text).split(",")])


def _family(args):
    from .models import ads, flat, schwarzschild
    model = getattr(args, "model", "ads")
    if model in ("ads", "ads_global", "ads_poincare", "ads_closure"):
        fam = ads(args.d, getattr(args, "R", 1.0))
        primary = {"ads": "global", "ads_global": "global",
                   "ads_poincare": "poincare", "ads_closure": "esu"}[model]
        return fam, fam.charts[primary]
    if model == "schwarzschild_ads":
        fam = schwarzschild(args.d, getattr(args, "R", 1.0), getattr(args, "m", 0.1))
        return fam, fam.charts["static"]
    if model == "minkowski":
        mdl = flat(args.d)
        return None, mdl
    raise ConstructionError(f"unknown model '{model}'")


# ---------------------------------------------------------------------------
# subcommand runners
# ---------------------------------------------------------------------------

def _run_spacetime(args):
    from .tensor import curvature_at, einstein_residual, metric_at, weyl_trace_norm
    _, model = _family(args)
    x = _floats(args.point)
    p = model.point(*x)
    lam = args.Lambda if args.Lambda is not None else \
        -(args.d - 1) * (args.d - 2) / (2.0 * getattr(args, "R", 1.0) ** 2)
    g = metric_at(model, p)
    bundle = curvature_at(model, p)
    out = {
        "chart": model.chart_id,
        "point": list(x),
        "metric": [[g[i, j] for j in range(model.dimension)]
                   for i in range(model.dimension)],
        "scalar_curvature": bundle.scalar,
        "einstein_residual": einstein_residual(model, p, lam),
        "weyl_max": float(np.max(np.abs(bundle.weyl))),
        "weyl_trace_norm": weyl_trace_norm(bundle, np.linalg.inv(g)),
        "Lambda": lam,
    }
    write_json(args.out, out)
    return [args.out]


def _run_geodesic(args):
    from .geodesics import GeodesicState, integrate
    fam, model = _family(args)
    if args.chart and fam is not None:
        model = fam.charts[args.chart]
    xv = [_floats(part) for part in args.init.split(";")]
    state = GeodesicState(model.point(*xv[0]), xv[1])
    traj = integrate(model, state, {"max_affine": args.max_affine,
                                    "boundary_event": True},
                     jacobi=args.jacobi)
    traj.to_csv(args.out)
    outputs = [args.out]
    if args.fig:
        from .plotting import trajectory_figure
        trajectory_figure(traj, args.fig)
        outputs.append(args.fig)
    return outputs


def _run_timedelay(args):
    from .experiments import time_delay
    from .models import BoundaryPoint, schwarzschild
    fam = schwarzschild(args.d, args.R, args.m)
    e = np.zeros(args.d - 1)
    e[0] = 1.0
    rep = time_delay(fam, BoundaryPoint(args.tau, e), args.directions)
    write_json(args.out, rep.to_json())
    outputs = [args.out]
    if args.csv:
        write_csv(args.csv, ["impact", "delay", "angular_miss", "tau_arrival"],
                  rep.rows())
        outputs.append(args.csv)
    if args.fig:
        from .plotting import delay_figure
        delay_figure(rep, args.fig)
        outputs.append(args.fig)
    return outputs


def _run_fermat(args):
    from .experiments import fermat_potential
    from .models import ads
    fam = ads(args.d, args.R)
    stereo = fam.charts["esu_stereo"]
    x = _floats(args.point)
    thetas = fibonacci_directions(args.generators, args.d - 1)
    taus = fermat_potential(stereo, stereo.point(*x), thetas, args.sign)
    rows = [list(th) + [tau] for th, tau in zip(thetas, taus)]
    write_csv(args.out, [f"theta{i}" for i in range(args.d - 1)] + ["tau"], rows)
    outputs = [args.out]
    if args.fig:
        from .plotting import fermat_figure
        fermat_figure(thetas, taus, args.fig)
        outputs.append(args.fig)
    return outputs


def _run_fg(args):
    from .fg import BoundaryData, fg_expand, fg_constraint_residual
    rep = {"esu": "analytic_esu", "minkowski": "analytic_minkowski"}.get(args.boundary)
    if rep is None:
        raise ConstructionError(f"unknown boundary '{args.boundary}'")
    data = BoundaryData(d=args.d, representation=rep, e_a=0.0, e_b=0.0)
    table = fg_expand(data, args.order)
    out = table.to_json()
    ham, mom = fg_constraint_residual(table, data)
    out["constraint_residuals"] = {"hamiltonian": ham, "momentum": mom}
    write_json(args.out, out)
    outputs = [args.out]
    if args.fig:
        from .plotting import fg_decay_figure
        fg_decay_figure(table, args.fig)
        outputs.append(args.fig)
    return outputs


def _frame_of(args):
    from .modular import ads_wedge_frame, flat_frame
    if args.frame == "flat":
        return flat_frame(args.d)
    if args.frame == "ads":
        return ads_wedge_frame(args.d, args.half_width)
    raise ConstructionError(f"unknown frame '{args.frame}'")


def _run_timefunction(args):
    from .modular import modular_field, time_function
    frame = _frame_of(args)
    rows = []
    for chunk in args.points.split(";"):
        x = _floats(chunk)
        lam = time_function(frame, frame.model.point(*x))
        T, norm, div, resid = modular_field(frame, frame.model.point(*x))
        rows.append(list(x) + [lam, norm, div, resid])
    d = frame.model.dimension
    write_csv(args.out, [f"x{i}" for i in range(d)]
              + ["lambda", "norm_T", "div_T", "killing_residual"], rows)
    return [args.out]


def _run_surface_gravity(args):
    from .modular import horizon_sequence, kappa_csv, surface_gravity
    frame = _frame_of(args)
    pts = horizon_sequence(frame, args.side)
    res = surface_gravity(frame, pts, args.side)
    kappa_csv(res, args.out)
    outputs = [args.out]
    if args.fig:
        from .plotting import kappa_figure
        kappa_figure(res, args.fig)
        outputs.append(args.fig)
    return outputs


def _run_volume(args):
    from .models import BoundaryPoint, flat, minkowski_to_boundary
    from .regions import DiamondSpec, diamond_volume
    model = flat(args.d)
    pR = minkowski_to_boundary(np.array([-args.radius] + [0.0] * (args.d - 2)))
    qR = minkowski_to_boundary(np.array([args.radius] + [0.0] * (args.d - 2)))
    vol, err = diamond_volume(model, DiamondSpec(pR, qR),
                              {"seed": args.seed, "n": args.n})
    write_json(args.out, {"experiment": "diamond_volume", "d": args.d,
                          "radius": args.radius, "seed": args.seed, "n": args.n,
                          "volume": vol, "standard_error": err})
    return [args.out]


def _run_penrose(args):
    from .geodesics import GeodesicState, integrate
    from .models import ads
    fam = ads(args.d, args.R)
    stereo = fam.charts["esu_stereo"]
    dim = stereo.dimension
    # boundary lines and a numerically integrated radial null ray
    taus = np.linspace(0.0, np.pi, 81)
    polylines = [("boundary (chi=+pi/2)", taus, np.full_like(taus, np.pi / 2)),
                 ("boundary (chi=-pi/2)", taus, np.full_like(taus, -np.pi / 2))]
    x0 = np.zeros(dim)
    x0[1] = -(1.0 - 1e-9)          # launch at the chi = -pi/2 boundary
    v = np.zeros(dim)
    v[0] = 1.0
    v[1] = 0.5 * (1.0 + x0[1] ** 2)    # null: dt = 2 dxi/(1+xi^2)
    traj = integrate(stereo, GeodesicState(stereo.point(*x0), v),
                     {"max_affine": 50.0, "boundary_event": True})
    lams = np.linspace(0.0, traj.final_affine, 200)
    ray_t = []
    ray_chi = []
    for lam in lams:
        x = traj.coords(lam)
        xi = x[1]
        ray_t.append(x[0])
        ray_chi.append(2.0 * np.arctan(xi))
    polylines.append(("radial null ray", np.array(ray_t), np.array(ray_chi)))
    rows = []
    for k, (label, tt, cc) in enumerate(polylines):
        for t, c in zip(tt, cc):
            rows.append([k, label, float(t), float(c)])
    write_csv(args.out, ["polyline", "label", "tau", "chi"], rows)
    outputs = [args.out]
    if args.fig:
        from .plotting import penrose_figure
        penrose_figure(polylines, args.fig,
                       title=f"AdS d={args.d} conformal diagram")
        outputs.append(args.fig)
    return outputs


_REQUIRED = {
    "spacetime": ("point", "out"), "geodesic": ("init", "out"),
    "timedelay": ("out",), "fermat": ("point", "out"), "fg": ("out",),
    "timefunction": ("points", "out"), "surface-gravity": ("side", "out"),
    "volume": ("seed", "out"), "penrose": ("out",),
}

_RUNNERS = {
    "spacetime": _run_spacetime, "geodesic": _run_geodesic,
    "timedelay": _run_timedelay, "fermat": _run_fermat, "fg": _run_fg,
    "timefunction": _run_timefunction, "surface-gravity": _run_surface_gravity,
    "volume": _run_volume, "penrose": _run_penrose,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="aads",
        description="Numerical laboratory for asymptotically anti-de Sitter geometry")
    parser.add_argument("--threads", type=int, default=0,
                        help="BLAS thread cap (default: all; env AADS_THREADS)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config merged under flags (flags win)")
        p.add_argument("--d", type=int, default=4)
        p.add_argument("--R", type=float, default=1.0)

    p = sub.add_parser("spacetime", help="metric and curvature at a point")
    common(p)
    p.add_argument("--model", default="ads")
    p.add_argument("--m", type=float, default=0.1)
    p.add_argument("--point", help="comma-separated coordinates")
    p.add_argument("--Lambda", type=float, default=None)
    p.add_argument("--out")

    p = sub.add_parser("geodesic", help="integrate a geodesic to CSV")
    common(p)
    p.add_argument("--model", default="ads")
    p.add_argument("--m", type=float, default=0.1)
    p.add_argument("--chart", default=None)
    p.add_argument("--init", help="'x0,x1,..;v0,v1,..'")
    p.add_argument("--max-affine", type=float, default=5.0, dest="max_affine")
    p.add_argument("--jacobi", action="store_true")
    p.add_argument("--out")
    p.add_argument("--fig", default=None)

    p = sub.add_parser("timedelay", help="null-fan gravitational time delay")
    common(p)
    p.add_argument("--m", type=float, default=0.1)
    p.add_argument("--directions", type=int, default=50)
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--out")
    p.add_argument("--csv", default=None)
    p.add_argument("--fig", default=None)

    p = sub.add_parser("fermat", help="Fermat potentials over the generators")
    common(p)
    p.add_argument("--point", help="stereographic-chart coordinates")
    p.add_argument("--generators", type=int, default=16)
    p.add_argument("--sign", choices=("future", "past"), default="future")
    p.add_argument("--out")
    p.add_argument("--fig", default=None)

    p = sub.add_parser("fg", help="near-boundary expansion coefficients")
    common(p)
    p.add_argument("--boundary", choices=("esu", "minkowski"), default="esu")
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--out")
    p.add_argument("--fig", default=None)

    p = sub.add_parser("timefunction", help="modular time function and field")
    common(p)
    p.add_argument("--frame", choices=("flat", "ads"), default="flat")
    p.add_argument("--half-width", type=float, default=0.6, dest="half_width")
    p.add_argument("--points", help="'x0,..;x0,..' probe list")
    p.add_argument("--out")

    p = sub.add_parser("surface-gravity", help="kappa along a wedge horizon")
    common(p)
    p.add_argument("--frame", choices=("flat", "ads"), default="ads")
    p.add_argument("--half-width", type=float, default=0.6, dest="half_width")
    p.add_argument("--side", choices=("past", "future"))
    p.add_argument("--out")
    p.add_argument("--fig", default=None)

    p = sub.add_parser("volume", help="Monte Carlo diamond volume")
    common(p)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int, default=10**6)
    p.add_argument("--out")

    p = sub.add_parser("penrose", help="conformal diagram polylines")
    common(p)
    p.add_argument("--model", default="ads")
    p.add_argument("--out")
    p.add_argument("--fig", default=None)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads:
        os.environ.setdefault("OMP_NUM_THREADS", str(args.threads))
    elif os.environ.get("AADS_THREADS"):
        os.environ.setdefault("OMP_NUM_THREADS", os.environ["AADS_THREADS"])
    args = _merge_config(args, parser)
    for key in _REQUIRED[args.command]:
        if getattr(args, key.replace("-", "_"), None) is None:
            parser.error(f"'{args.command}' requires --{key} (flag or config)")
    outputs = [getattr(args, k, None) for k in ("out", "csv", "fig")]

    def cleanup():
        for p in outputs:
            if p and os.path.exists(p):
                os.unlink(p)

    try:
        _RUNNERS[args.command](args)
    except (ConstructionError, PreconditionError) as exc:
        cleanup()
        print(f"aads: config error: {exc}", file=sys.stderr)
        return 2
    except AadsError as exc:
        cleanup()
        print(f"aads: numeric failure: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:   # unexpected breakage still reads as numeric failure
        cleanup()
        print(f"aads: numeric failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
