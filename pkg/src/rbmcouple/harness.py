"""Config-driven Monte Carlo experiments with deterministic outputs.

Every trial draws its noise from ``SeedSpec(seed, trial_index, stream)``,
so results depend only on the config and never on scheduling.  Outputs
are ``summary.json`` and ``trials.csv`` (byte-stable), ``timing.json``
(wall clock) and, optionally, per-path CSVs under ``paths/``.
"""

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from scipy import stats

from .cone import ConePointQuery, find_cone_points
from .errors import InvalidConfig, InvalidInput
from .geometry import HalfPlane, Wedge, domain_from_dict
from .ltmeasure import LocalTimeMeasure, overlap_statistic, stopping_time_T
from .mirror import detect_theorem3_event, simulate_halfplane_mirror, simulate_polygon_mirror
from .noise import STREAM_AUX, STREAM_MAIN, PathGrid, SeedSpec, sample_increments
from .reflect import detect_simultaneous_boundary, grid_starts, simulate_flow, simulate_reflected
from .stripmap import beta_window, build_frame, drift_bound_check

EXPERIMENTS = ("syncFlow", "coneCensus", "singularityTrend", "mirrorHalfplane", "theorem3")

# start-pair offsets for the theorem3 sweep: (fraction of A - H back toward H, height)
DEFAULT_SWEEP = ((0.15, 0.03), (0.3, 0.03), (0.3, 0.06), (0.5, 0.05))


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)

    experiment: Literal["syncFlow", "coneCensus", "singularityTrend", "mirrorHalfplane", "theorem3"]
    domain: dict = Field(default_factory=lambda: {"kind": "disk", "center": [0.0, 0.0], "radius": 1.0})
    dt: float = 1e-3
    horizon: float = 1.0
    trials: int = 100
    seed: int = 0
    eps_bd: float = Field(0.01, alias="epsBd")
    eps_ang: float = Field(0.05, alias="epsAng")
    delta: float = 0.05
    k_max: int = Field(10_000, alias="kMax")
    start_spec: dict = Field(default_factory=dict, alias="startSpec")
    output_dir: Optional[str] = Field(None, alias="outputDir")
    cone_angle: float = Field(2 * math.pi / 3, alias="coneAngle")
    h_values: tuple = Field((0.2, 0.1, 0.05, 0.025), alias="hValues")
    workers: int = 1
    dump_paths: bool = Field(False, alias="dumpPaths")

    @field_validator("dt", "eps_bd", "eps_ang", "delta")
    @classmethod
    def _positive(cls, v):
        if not v > 0:
            raise ValueError("must be positive")
        return v

    @field_validator("trials", "workers", "k_max")
    @classmethod
    def _at_least_one(cls, v):
        if v < 1:
            raise ValueError("must be at least 1")
        return v

    @model_validator(mode="after")
    def _horizon(self):
        if self.horizon < self.dt:
            raise ValueError("horizon must be at least dt")
        if self.experiment == "coneCensus" and not 0 < self.cone_angle < math.pi:
            raise ValueError("coneAngle must lie in (0, pi)")
        return self

    @property
    def grid(self):
        return PathGrid.from_horizon(self.dt, self.horizon)

    def echo(self):
        """Config fields that determine the results (no paths, no pool size)."""
        d = self.model_dump(by_alias=True, exclude={"output_dir", "workers", "dump_paths"})
        d["hValues"] = list(d["hValues"])
        return d


def load_config(source=None, **overrides):
    """Build a config from a JSON file or dict, then apply non-``None`` overrides."""
    data = {}
    if isinstance(source, (str, Path)):
        try:
            data = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidConfig(f"cannot read config {source}: {exc}") from exc
    elif source is not None:
        data = dict(source)
    alias = {f: (i.alias or f) for f, i in ExperimentConfig.model_fields.items()}
    for k, v in overrides.items():
        if v is not None:
            data[alias.get(k, k)] = v
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        msgs = "; ".join(f"{'.'.join(map(str, e['loc'])) or 'config'}: {e['msg']}" for e in exc.errors())
        raise InvalidConfig(msgs) from exc


class RunSummary(BaseModel):
    experiment: str
    trials: int
    successes: int
    estimate: float
    wilsonLow95: float
    wilsonHigh95: float
    wallClockSeconds: float = 0.0
    configEcho: dict
    metrics: dict = Field(default_factory=dict)

    def stable_json(self):
        d = self.model_dump(exclude={"wallClockSeconds"})
        return json.dumps(d, indent=2, sort_keys=True) + "\n"


def wilson_interval(k, n, conf=0.95):
    if n < 1 or not 0 <= k <= n:
        raise InvalidInput(f"need 0 <= k <= n and n >= 1, got k={k}, n={n}")
    if not 0 < conf < 1:
        raise InvalidInput("confidence level must lie in (0, 1)")
    z = float(stats.norm.ppf(0.5 + conf / 2))
    p = k / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    low = 0.0 if k == 0 else max(0.0, centre - half)
    high = 1.0 if k == n else min(1.0, centre + half)
    return low, high


# --------------------------------------------------------------------------
# per-experiment trials; each returns (row dict, success, extras, dumps)


def _points(spec, key, default):
    pts = spec.get(key, default)
    return np.asarray(pts, dtype=float)


def _sync_trial(cfg, dom, i):
    g = cfg.start_spec.get("grid", {})
    starts = grid_starts(g.get("center", (0.0, 0.0)), g.get("radius", 0.05), g.get("m", 3))
    if "points" in cfg.start_spec:
        starts = _points(cfg.start_spec, "points", None)
    noise = sample_increments(SeedSpec(cfg.seed, i, STREAM_MAIN), cfg.grid)
    flow = simulate_flow(dom, starts, noise, band=cfg.eps_bd)
    k = detect_simultaneous_boundary(flow, band=cfg.eps_bd)
    row = {"hitStep": -1 if k is None else k, "hitTime": math.nan if k is None else k * cfg.dt}
    return row, k is not None, {}, [("member", m) for m in flow.members]


def _cone_trial(cfg, dom, i):
    p = sample_increments(SeedSpec(cfg.seed, i, STREAM_MAIN), cfg.grid).path
    axis = cfg.start_spec.get("axis", (1.0, 0.0))
    t = find_cone_points(p, ConePointQuery(cfg.cone_angle, tuple(axis)))
    t = t[t < cfg.grid.n]
    row = {
        "coneCount": int(t.size),
        "firstConeTime": float(t[0] * cfg.dt) if t.size else math.nan,
        "lastConeTime": float(t[-1] * cfg.dt) if t.size else math.nan,
    }
    return row, bool(t.size), {"last": row["lastConeTime"]}, []


def _singularity_trial(cfg, dom, i):
    pts = _points(cfg.start_spec, "points", [[0.0, 0.05], [0.3, 0.05]])
    a = simulate_reflected(dom, pts[0], sample_increments(SeedSpec(cfg.seed, i, STREAM_MAIN), cfg.grid))
    b = simulate_reflected(dom, pts[1], sample_increments(SeedSpec(cfg.seed, i, STREAM_AUX), cfg.grid))
    T = stopping_time_T(a, b, dom, cfg.eps_bd, cfg.eps_ang)
    up_to = cfg.grid.n if T is None else T
    mx, my = LocalTimeMeasure.from_path(a), LocalTimeMeasure.from_path(b)
    row = {"T": -1 if T is None else T}
    ov = None
    if up_to > 0 and (mx.mass(0, up_to) > 0 or my.mass(0, up_to) > 0):
        ov = [overlap_statistic(mx, my, h, up_to) for h in cfg.h_values]
    for h, v in zip(cfg.h_values, ov or [math.nan] * len(cfg.h_values)):
        row[f"overlap_h{h:g}"] = v
    ok = ov is not None and ov[-1] < ov[0]
    return row, ok, {"overlaps": ov}, [("x", a), ("y", b)]


def _mirror_hp_trial(cfg, dom, i):
    pts = _points(cfg.start_spec, "points", [[-0.5, 0.3], [0.5, 0.3]])
    tr = simulate_halfplane_mirror(dom, pts[0], pts[1], SeedSpec(cfg.seed, i), cfg.grid)
    b = tr.beta[np.isfinite(tr.beta)]
    mono = float(np.max(np.diff(np.abs(b - math.pi / 2)))) if b.size > 1 else 0.0
    h = tr.hinge[np.isfinite(tr.hinge[:, 0])]
    row = {
        "coupledStep": -1 if tr.coupled_index is None else tr.coupled_index,
        "symmetryResidual": tr.symmetry_residual(),
        "hingeDrift": float(np.max(np.ptp(h, axis=0))) if len(h) else 0.0,
        "angleIncreaseMax": mono,
        "finalHeightX": float(dom.signed_distance(tr.X[-1])),
    }
    return row, tr.coupled_index is not None, {}, [("mirror", tr)]


def sweep_pairs(cfg):
    """Mirror-symmetric start pairs near ``(A, A')`` of the configured frame."""
    sw = cfg.start_spec.get("sweep", {})
    if "points" in cfg.start_spec:
        pts = _points(cfg.start_spec, "points", None).reshape(-1, 2, 2)
        return [(p[0], p[1]) for p in pts]
    alpha = float(cfg.domain.get("alpha", math.pi / 4))
    lo, hi = alpha, math.pi / 4 + alpha / 2
    fr = build_frame(alpha, float(sw.get("H", 1.0)), float(sw.get("beta0", 0.5 * (lo + hi))))
    dom = Wedge(alpha)
    pairs = []
    for u, v in sw.get("offsets", DEFAULT_SWEEP):
        x = np.array([fr.A - u * (fr.A - fr.H), v])
        y = np.asarray(fr.reflect(complex(*x)))
        y = np.array([y.real, y.imag])
        if dom.signed_distance(x) <= 0 or dom.signed_distance(y) <= 0:
            raise InvalidConfig(f"sweep offset ({u}, {v}) gives a start outside the wedge")
        pairs.append((x, y))
    return pairs


def _theorem3_trial(cfg, dom, i, pairs):
    pair, j = divmod(i, cfg.trials)
    x, y = pairs[pair]
    tr = simulate_polygon_mirror(
        dom, x, y, SeedSpec(cfg.seed, i), cfg.grid, cfg.k_max, cfg.eps_bd, stop_coupled=True
    )
    ev = detect_theorem3_event(tr, dom.alpha, cfg.eps_bd, cfg.delta)
    row = {
        "pair": pair,
        "pairTrial": j,
        "endReason": tr.end_reason,
        "phases": len(tr.phases),
        "eventStep": -1 if ev.step_index is None else ev.step_index,
        "radialGap": ev.radial_gap,
    }
    extras = {"pair": pair}
    if ev.occurred:
        cut = _truncate(tr, ev.step_index)
        rep = drift_bound_check(cut, None, beta_window(dom.alpha), alpha=dom.alpha)
        n = rep.steps_x + rep.steps_y
        extras["drift"] = (n, int(round(rep.fraction_nonpositive * n)) if n else 0)
    return row, ev.occurred, extras, [("mirror", tr)]


def _truncate(tr, k):
    s = slice(0, k + 1)
    return replace(
        tr, X=tr.X[s], Y=tr.Y[s], Lx=tr.Lx[s], Ly=tr.Ly[s], mirror_base=tr.mirror_base[s],
        mirror_angle=tr.mirror_angle[s], hinge=tr.hinge[s], beta=tr.beta[s], phase_id=tr.phase_id[s],
    )


# --------------------------------------------------------------------------


def _domain(cfg):
    try:
        dom = domain_from_dict(cfg.domain)
    except InvalidInput as exc:
        raise InvalidConfig(f"domain: {exc}") from exc
    need = {"singularityTrend": HalfPlane, "mirrorHalfplane": HalfPlane, "theorem3": Wedge}
    want = need.get(cfg.experiment)
    if want is not None and not isinstance(dom, want):
        raise InvalidConfig(f"domain: {cfg.experiment} needs a {want.__name__}")
    return dom


def _aggregate(cfg, results, pairs):
    succ = [r[1] for r in results]
    metrics = {}
    if cfg.experiment == "coneCensus":
        last = np.array([r[2]["last"] for r in results])
        metrics["fractionWithConePointAfter0.1"] = float(np.mean(np.nan_to_num(last, nan=-1.0) >= 0.1))
    elif cfg.experiment == "singularityTrend":
        ov = np.array([r[2]["overlaps"] for r in results if r[2]["overlaps"] is not None])
        metrics["seedsUsed"] = int(len(ov))
        if len(ov):
            means = ov.mean(axis=0)
            metrics["meanOverlap"] = [float(m) for m in means]
            if len(cfg.h_values) >= 3:
                fit = stats.linregress(np.log(cfg.h_values), means)
                metrics["slopeLogH"] = float(fit.slope)
                metrics["slopeTStat"] = float(fit.slope / fit.stderr) if fit.stderr > 0 else math.inf
            metrics["strictlyDecreasing"] = bool(np.all(np.diff(means[np.argsort(cfg.h_values)]) > 0))
    elif cfg.experiment == "theorem3":
        per = []
        steps = ok = 0
        for p in range(len(pairs)):
            k = sum(r[1] for r in results if r[2]["pair"] == p)
            lo, hi = wilson_interval(k, cfg.trials)
            per.append(
                {"x": [float(v) for v in pairs[p][0]], "y": [float(v) for v in pairs[p][1]],
                 "successes": int(k), "wilsonLow95": float(lo), "wilsonHigh95": float(hi)}
            )
        for r in results:
            if "drift" in r[2]:
                steps += r[2]["drift"][0]
                ok += r[2]["drift"][1]
        metrics["pairs"] = per
        metrics["driftSteps"] = steps
        metrics["driftFractionNonPositive"] = ok / steps if steps else None
    return succ, metrics


def _csv_text(rows):
    keys = list(rows[0].keys()) if rows else ["trial", "success"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(keys)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in (r[k] for k in keys)])
    return buf.getvalue()


def _overlap_long(cfg, results):
    rows = []
    for row, _, _ in results:
        for h in cfg.h_values:
            rows.append({"seed": row["trial"], "h": float(h), "overlap": row[f"overlap_h{h:g}"], "T_index": row["T"]})
    return _csv_text(rows)


def run_experiment(cfg, out_dir=None):
    """Run all trials, write artifacts when an output directory is set, return the summary."""
    if not isinstance(cfg, ExperimentConfig):
        cfg = load_config(cfg)
    t0 = time.perf_counter()
    dom = _domain(cfg)
    pairs = sweep_pairs(cfg) if cfg.experiment == "theorem3" else []
    fn = {
        "syncFlow": _sync_trial,
        "coneCensus": _cone_trial,
        "singularityTrend": _singularity_trial,
        "mirrorHalfplane": _mirror_hp_trial,
    }.get(cfg.experiment)
    if fn is None:
        def fn(c, d, i):
            return _theorem3_trial(c, d, i, pairs)
    total = cfg.trials * max(1, len(pairs))
    out = Path(out_dir or cfg.output_dir) if (out_dir or cfg.output_dir) else None
    dump = out / "paths" if (out is not None and cfg.dump_paths) else None
    if dump is not None:
        dump.mkdir(parents=True, exist_ok=True)

    def task(i):
        row, ok, extras, paths = fn(cfg, dom, i)
        if dump is not None:
            for j, (name, p) in enumerate(paths):
                p.to_csv(dump / f"trial{i:06d}_{j}_{name}.csv")
        return {"trial": i, "success": int(bool(ok)), **row}, bool(ok), extras

    if cfg.workers == 1:
        results = [task(i) for i in range(total)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(task, range(total)))
    succ, metrics = _aggregate(cfg, results, pairs)
    k = int(sum(succ))
    lo, hi = wilson_interval(k, total)
    summary = RunSummary(
        experiment=cfg.experiment, trials=total, successes=k, estimate=k / total,
        wilsonLow95=lo, wilsonHigh95=hi, wallClockSeconds=time.perf_counter() - t0,
        configEcho=cfg.echo(), metrics=metrics,
    )
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_text(summary.stable_json())
        (out / "trials.csv").write_text(_csv_text([r[0] for r in results]))
        if cfg.experiment == "singularityTrend":
            (out / "overlap.csv").write_text(_overlap_long(cfg, results))
        (out / "timing.json").write_text(json.dumps({"wallClockSeconds": summary.wallClockSeconds}) + "\n")
    return summary
