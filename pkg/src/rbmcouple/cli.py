"""Command-line entry point.

Exit codes: 0 success, 2 invalid config or arguments, 3 simulation error.
"""

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .cone import GLOBAL, WINDOWED, ConePointQuery, find_cone_points
from .errors import CouplingError, InvalidConfig
from .harness import load_config, run_experiment
from .ltmeasure import LocalTimeMeasure, overlap_statistic
from .mirror import MirrorTrajectory
from .reflect import ReflectedPath
from .stripmap import eval_f, eval_g, frame_at, identity_sweep

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

_NAMED_DOMAINS = {
    "disk": {"kind": "disk", "center": [0.0, 0.0], "radius": 1.0},
    "square": {"kind": "square", "side": 1.0},
    "halfplane": {"kind": "halfplane"},
}


def _domain_arg(text, alpha=None):
    if text is None:
        return None
    if text == "wedge":
        return {"kind": "wedge", "alpha": alpha if alpha is not None else math.pi / 4}
    if text in _NAMED_DOMAINS:
        return _NAMED_DOMAINS[text]
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"--domain: expected a name or JSON object, got {text!r}") from exc
    if not isinstance(d, dict):
        raise InvalidConfig("--domain JSON must be an object")
    return d


def _point(text):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected 'x,y', got {text!r}") from exc
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected 'x,y', got {text!r}")
    return vals


def _common(p):
    p.add_argument("--config", help="JSON experiment config; flags override its fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int)
    p.add_argument("--dump-paths", action="store_true", default=None)


def _overrides(a, **extra):
    o = dict(
        seed=a.seed, trials=a.trials, dt=a.dt, horizon=a.horizon, workers=a.workers,
        dump_paths=a.dump_paths, output_dir=a.out,
    )
    o.update(extra)
    return o


def _run(cfg):
    s = run_experiment(cfg)
    print(s.stable_json(), end="")
    return EXIT_OK


def cmd_run(a):
    if a.config is None:
        raise InvalidConfig("run needs --config")
    return _run(load_config(a.config, **_overrides(a)))


def cmd_sync(a):
    spec = None
    if a.center is not None or a.radius is not None:
        spec = {"grid": {"center": a.center or [0.0, 0.0], "radius": a.radius or 0.05, "m": 3}}
    cfg = load_config(
        a.config or {"experiment": "syncFlow"},
        **_overrides(a, domain=_domain_arg(a.domain), eps_bd=a.eps_bd, start_spec=spec),
    )
    return _run(cfg)


def cmd_mirror(a):
    dom = _domain_arg(a.domain, a.alpha)
    base = {"experiment": "theorem3", "domain": _domain_arg("wedge", a.alpha)}
    if dom is not None and dom.get("kind") == "halfplane":
        base = {"experiment": "mirrorHalfplane", "domain": dom}
    elif dom is not None:
        base["domain"] = dom
    spec = None
    if (a.x0 is None) != (a.y0 is None):
        raise InvalidConfig("--x0 and --y0 go together")
    if a.x0 is not None:
        spec = {"points": [a.x0, a.y0]}
    cfg = load_config(
        a.config or base,
        **_overrides(a, eps_bd=a.eps_bd, delta=a.delta, k_max=a.k_max, start_spec=spec),
    )
    return _run(cfg)


def cmd_cones(a):
    if a.path is None:
        spec = {"axis": list(a.axis)} if a.axis else None
        cfg = load_config(
            a.config or {"experiment": "coneCensus", "dt": 1e-4},
            **_overrides(a, cone_angle=a.angle, start_spec=spec),
        )
        return _run(cfg)
    data = np.loadtxt(a.path, delimiter=",", skiprows=1, ndmin=2)
    pts = data[:, 1:3]
    q = ConePointQuery(a.angle or 2 * math.pi / 3, tuple(a.axis or (1.0, 0.0)), a.mode, a.window)
    idx = find_cone_points(pts, q)
    t = data[idx, 0] if len(idx) else np.array([])
    print(json.dumps({"count": int(len(idx)), "indices": idx.tolist(), "times": t.tolist()}))
    return EXIT_OK


def cmd_overlap(a):
    if a.x_path is None:
        cfg = load_config(a.config or {"experiment": "singularityTrend", "domain": {"kind": "halfplane"}},
                          **_overrides(a, eps_bd=a.eps_bd))
        return _run(cfg)
    if a.y_path is None:
        raise InvalidConfig("--x-path needs --y-path")
    px, py = ReflectedPath.from_csv(a.x_path), ReflectedPath.from_csv(a.y_path)
    mx, my = LocalTimeMeasure.from_path(px), LocalTimeMeasure.from_path(py)
    up = min(len(mx.increments), len(my.increments))
    hs = a.h or [0.2, 0.1, 0.05, 0.025]
    print(json.dumps({"h": hs, "overlap": [overlap_statistic(mx, my, h, up) for h in hs]}))
    return EXIT_OK


def cmd_strip(a):
    if a.trajectory is None:
        print(json.dumps(identity_sweep(a.frames, a.points, a.seed or 0)))
        return EXIT_OK
    alpha = a.alpha if a.alpha is not None else math.pi / 4
    tr = MirrorTrajectory.from_csv(a.trajectory)
    rows = []
    for k in range(len(tr.X)):
        fr = frame_at(tr, k, alpha)
        z = res = math.nan + 0j
        if fr is not None:
            try:
                z = eval_f(fr, complex(*tr.X[k]))
                res = abs(eval_g(fr, complex(*tr.Y[k])) - z)
            except CouplingError:
                fr = None
        rows.append([k, fr.beta if fr else math.nan, fr.H if fr else math.nan, z.real, z.imag, abs(res)])
    out = Path(a.out) if a.out else None
    header = ["step", "beta", "H", "ZstarRe", "ZstarIm", "residual"]
    if out:
        out.mkdir(parents=True, exist_ok=True)
    fh = open(out / "strip.csv", "w", newline="") if out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows([[r[0]] + [repr(float(v)) for v in r[1:]] for r in rows])
    finally:
        if out:
            fh.close()
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="rbmcouple", description="Reflected Brownian motion couplings")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("run", help="run an experiment from a JSON config")
    _common(s)
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("simulate-sync", help="synchronous flow: simultaneous boundary visits")
    _common(s)
    s.add_argument("--domain")
    s.add_argument("--eps-bd", type=float)
    s.add_argument("--center", type=_point)
    s.add_argument("--radius", type=float)
    s.set_defaults(func=cmd_sync)

    s = sub.add_parser("simulate-mirror", help="mirror coupling in a half-plane or wedge")
    _common(s)
    s.add_argument("--domain")
    s.add_argument("--alpha", type=float)
    s.add_argument("--x0", type=_point)
    s.add_argument("--y0", type=_point)
    s.add_argument("--eps-bd", type=float)
    s.add_argument("--delta", type=float)
    s.add_argument("--k-max", type=int)
    s.set_defaults(func=cmd_mirror)

    s = sub.add_parser("detect-cones", help="cone points of a path CSV, or a census")
    _common(s)
    s.add_argument("--path", help="CSV with columns t,x,y,...")
    s.add_argument("--angle", type=float, help="cone half-angle")
    s.add_argument("--axis", type=_point)
    s.add_argument("--mode", choices=[GLOBAL, WINDOWED], default=GLOBAL)
    s.add_argument("--window", type=int, default=2)
    s.set_defaults(func=cmd_cones)

    s = sub.add_parser("measure-overlap", help="local-time overlap of two paths, or the trend experiment")
    _common(s)
    s.add_argument("--x-path")
    s.add_argument("--y-path")
    s.add_argument("--h", type=float, nargs="+")
    s.add_argument("--eps-bd", type=float)
    s.set_defaults(func=cmd_overlap)

    s = sub.add_parser("strip-check", help="strip-map identities, or per-step diagnostics of a trajectory")
    _common(s)
    s.add_argument("--trajectory", help="mirror trajectory CSV")
    s.add_argument("--alpha", type=float)
    s.add_argument("--frames", type=int, default=1000)
    s.add_argument("--points", type=int, default=1000)
    s.set_defaults(func=cmd_strip)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvalidConfig as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CouplingError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
