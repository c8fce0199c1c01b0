"""Command-line front end.

Every calibration subcommand reads its inputs, resolves parameters
(built-in defaults, then the ``--config`` file, then ``--set`` overrides)
and writes one JSON report.  Exit status: 0 on success, 1 when the data
cannot be calibrated (an error report with a machine-readable code is
written), 2 for usage problems such as a missing input file (no report).
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import math
import shutil
import sys
from pathlib import Path

import numpy as np

from . import io, sim
from .camera import CameraCalibrator, vp_observations_from_lines
from .exceptions import CalibrationError
from .geom import circular_mean, circular_std
from .gnss import GnssCalibrator
from .lidar import LidarCalibrator
from .radar import RadarPositionCalibrator, RadarVelocityCalibrator
from .trajectory import extract_straight_segments

SCHEMA_VERSION = 1

METHODS = ("camera", "lidar", "gnss", "radar-velocity", "radar-position")

# Angles are given in degrees here (keys ending in _deg) and converted when
# the estimators are built.
DEFAULTS = {
    "camera": {
        "window_n": 100,
        "std_threshold": 0.005,
        "roll_model": "projective",
        "line_threshold": 1e-3,
        "line_iterations": 200,
    },
    "lidar": {
        "r_min": 2.0,
        "r_max": 50.0,
        "ransac_runs": 5,
        "ransac_iterations": 200,
        "inlier_tol": 0.05,
        "refine_angle_range_deg": 0.5,
        "refine_d_range": 0.05,
        "refine_samples": 100,
        "refine_rounds": 3,
        "downsample": 10,
        "max_yaw_rate": 0.05,
        "v_min_sq": 9.0,
        "c_max": 0.01,
        "spline_degree": 3,
        "pos_sigma": 0.0,
    },
    "gnss": {"v_min_sq": 4.0, "c_max": 0.01, "spline_degree": 3, "pos_sigma": 0.0},
    "radar-velocity": {
        "A_deg": 45.0,
        "n_step_deg": 5.0,
        "residual_tol": 0.5,
        "iterations": 500,
        "burn_in": 0.25,
        "psi_init_deg": "",
    },
    "radar-position": {
        "e": 0.02,
        "d_min": 1.0,
        "min_track_frames": 5,
        "segment_min_length": 50.0,
        "segment_max_heading_dev_deg": 5.0,
        "rdp_tolerance": 0.5,
    },
    "consistency": {"segment_length": 60.0, "min_segments": 2},
}


class UsageError(Exception):
    """Bad command line or configuration; exit status 2."""


# --------------------------------------------------------------------------
# parameters


def _coerce(default, raw: str, key: str):
    try:
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError as exc:
        raise UsageError(f"parameter {key}: cannot parse {raw!r}") from exc
    return raw.strip()


def resolve_params(section: str, config: configparser.ConfigParser | None, overrides) -> dict:
    params = dict(DEFAULTS[section])
    sources = []
    if config is not None and config.has_section(section):
        sources.extend(config[section].items())
    sources.extend(overrides)
    for key, raw in sources:
        if key not in params:
            raise UsageError(f"unknown parameter {key!r} for {section}")
        params[key] = _coerce(params[key], raw, key)
    return params


def _parse_sets(items) -> list[tuple[str, str]]:
    out = []
    for it in items or []:
        if "=" not in it:
            raise UsageError(f"--set expects KEY=VALUE, got {it!r}")
        k, v = it.split("=", 1)
        out.append((k.strip(), v))
    return out


def _route_sets(sets, method: str, extra: tuple = ()) -> dict:
    """Assign ``--set`` entries to parameter sections.

    ``section.key`` goes to that section.  A bare key goes to ``method``
    unless only one of the ``extra`` sections knows it.
    """
    sections = (method, *extra)
    out = {s: [] for s in sections}
    for k, v in sets:
        if "." in k:
            sec, key = k.split(".", 1)
            if sec not in out:
                raise UsageError(f"--set {k}: section {sec!r} does not apply here (expected one of {', '.join(sections)})")
            out[sec].append((key, v))
            continue
        owner = method
        if k not in DEFAULTS[method]:
            owner = next((s for s in extra if k in DEFAULTS[s]), method)
        out[owner].append((k, v))
    return out


def _load_config(path) -> configparser.ConfigParser | None:
    if path is None:
        return None
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {p}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read(p)
    except configparser.Error as exc:
        raise UsageError(f"bad config file: {exc}") from exc
    return cp


# --------------------------------------------------------------------------
# inputs


def _input_path(args, config, name: str, required: bool = True):
    val = getattr(args, name, None)
    if val is None and config is not None and config.has_section("inputs"):
        val = config["inputs"].get(name)
    if val is None:
        if required:
            raise UsageError(f"missing input --{name.replace('_', '-')}")
        return None
    p = Path(val)
    if not p.exists():
        raise UsageError(f"input not found: {p}")
    return p


def load_inputs(method: str, args, config, params, seed: int = 0) -> dict:
    """Read the files a method needs.  Missing files are usage errors."""
    if method == "camera":
        intr = io.read_intrinsics(_input_path(args, config, "intrinsics"))
        vp = _input_path(args, config, "vp", required=False)
        lines = _input_path(args, config, "lines", required=False)
        if vp is None and lines is None:
            raise UsageError("camera needs --vp or --lines")
        if vp is not None:
            obs = io.read_vp(vp)
        else:
            t, segs = io.read_lines(lines)
            obs = vp_observations_from_lines(t, segs, params["line_threshold"], params["line_iterations"], seed)
        poses = _input_path(args, config, "poses", required=False)
        return {"obs": obs, "intrinsics": intr, "poses": io.read_poses(poses) if poses else None}
    if method == "lidar":
        return {
            "poses": io.read_poses(_input_path(args, config, "poses")),
            "frames": io.read_lidar_dir(_input_path(args, config, "lidar_dir")),
        }
    if method == "gnss":
        return {"poses": io.read_poses(_input_path(args, config, "poses"))}
    if method in ("radar-velocity", "radar-position"):
        return {"radar": io.read_radar(_input_path(args, config, "radar"))}
    raise UsageError(f"unknown method {method!r}")


def _time_span(method: str, inputs: dict) -> tuple[float, float]:
    if method == "camera":
        t = inputs["obs"].t
    elif method in ("lidar", "gnss"):
        t = inputs["poses"].t
    else:
        t = inputs["radar"].t
    if len(t) == 0:
        raise CalibrationError("input has no samples")
    return float(np.min(t)), float(np.max(t))


def slice_inputs(method: str, inputs: dict, t0: float, t1: float) -> dict:
    """Inputs restricted to ``t0 <= t < t1``."""
    out = dict(inputs)
    if inputs.get("poses") is not None:
        p = inputs["poses"]
        out["poses"] = p[(p.t >= t0) & (p.t < t1)]
    if method == "camera":
        o = inputs["obs"]
        out["obs"] = o[(o.t >= t0) & (o.t < t1)]
    elif method == "lidar":
        out["frames"] = [f for f in inputs["frames"] if t0 <= f.t < t1]
    elif method.startswith("radar"):
        r = inputs["radar"]
        out["radar"] = r[(r.t >= t0) & (r.t < t1)]
    return out


def _trajectory(method: str, inputs: dict):
    """(t, xy) of the platform, used to find straight stretches."""
    if method.startswith("radar"):
        r = inputs["radar"]
        t, first = np.unique(r.t, return_index=True)
        return t, np.column_stack([r.ego_x[first], r.ego_y[first]])
    p = inputs.get("poses")
    if p is None:
        return None
    return p.t, p.xy


# --------------------------------------------------------------------------
# running calibrators


def _with_deg(d: dict, keys) -> dict:
    out = dict(d)
    for k in keys:
        v = d.get(k)
        out[f"{k}_deg"] = None if v is None or not math.isfinite(v) else math.degrees(v)
    return out


def run_method(method: str, inputs: dict, params: dict, seed: int) -> tuple[dict, dict]:
    """Run one calibrator; returns (result, extras).  Raises CalibrationError."""
    rad = math.radians
    if method == "camera":
        est = CameraCalibrator(params["window_n"], params["std_threshold"], params["roll_model"])
        if len(inputs["obs"]) == 0:
            raise CalibrationError("no camera observations")
        est.fit(inputs["obs"], inputs["intrinsics"])
        emissions = [
            _with_deg(
                {"t": e.t, "roll": e.roll, "pitch": e.pitch, "yaw": e.yaw, "window_std": e.window_std, "frame_count": e.frame_count},
                ("roll", "pitch", "yaw"),
            )
            for e in est.estimates_
        ]
        res = {"roll": est.roll_, "pitch": est.pitch_, "yaw": est.yaw_, "frame_count": est.n_frames_, "emission_count": len(emissions)}
        return _with_deg(res, ("roll", "pitch", "yaw")), {"emissions": emissions}
    if method == "lidar":
        kw = {k: v for k, v in params.items() if not k.endswith("_deg")}
        kw["refine_angle_range"] = rad(params["refine_angle_range_deg"])
        est = LidarCalibrator(**kw, seed=seed).fit(inputs["frames"], inputs["poses"])
        stds = dict(est.stds_)
        res = {"roll": est.roll_, "pitch": est.pitch_, "yaw": est.yaw_, "z": est.z_, "frames_used": est.frames_used_}
        res = _with_deg(res, ("roll", "pitch", "yaw"))
        res["stds"] = _with_deg(stds, ("roll", "pitch", "yaw"))
        return res, {}
    if method == "gnss":
        est = GnssCalibrator(params["v_min_sq"], params["c_max"], params["spline_degree"], params["pos_sigma"]).fit(inputs["poses"])
        res = {"yaw_offset": est.yaw_offset_, "used_count": est.used_count_, "dispersion": est.dispersion_}
        return _with_deg(res, ("yaw_offset", "dispersion")), {}
    if method == "radar-velocity":
        init = params["psi_init_deg"]
        est = RadarVelocityCalibrator(
            rad(params["A_deg"]),
            rad(params["n_step_deg"]),
            params["residual_tol"],
            params["iterations"],
            params["burn_in"],
            None if init in ("", None) else rad(float(init)),
        ).fit(inputs["radar"])
        e = est.estimate_
        res = {"yaw": e.yaw, "coarse_yaw": est.coarse_yaw_, "method": "velocity", "iterations": e.iterations, "confidence_sum": None}
        return _with_deg(res, ("yaw", "coarse_yaw")), {"trace": e.trace}
    if method == "radar-position":
        est = RadarPositionCalibrator(
            params["e"],
            params["d_min"],
            params["min_track_frames"],
            params["segment_min_length"],
            rad(params["segment_max_heading_dev_deg"]),
            params["rdp_tolerance"],
        ).fit(inputs["radar"])
        res = {"yaw": est.yaw_, "method": "position", "objects_used": est.objects_used_, "confidence_sum": est.confidence_sum_}
        return _with_deg(res, ("yaw",)), {}
    raise UsageError(f"unknown method {method!r}")


ANGLE_KEYS = {
    "camera": ("roll", "pitch", "yaw"),
    "lidar": ("roll", "pitch", "yaw"),
    "gnss": ("yaw_offset",),
    "radar-velocity": ("yaw",),
    "radar-position": ("yaw",),
}


def _angle_stats(values: np.ndarray) -> dict:
    v = values[np.isfinite(values)]
    if v.size < 2:
        return {"mean": None, "std": None, "mean_deg": None, "std_deg": None}
    m, s = circular_mean(v), circular_std(v)
    return {"mean": m, "std": s, "mean_deg": math.degrees(m), "std_deg": math.degrees(s)}


def consistency(method: str, inputs: dict, params: dict, cparams: dict, seed: int) -> dict:
    """Per-segment calibration and the spread of the estimates.

    Segments are consecutive complete windows of ``segment_length``
    seconds.  A segment is "straight" when it lies entirely inside one of
    the straight stretches of the platform trajectory.
    """
    L = cparams["segment_length"]
    if L <= 0:
        raise UsageError("segment_length must be positive")
    t0, t1 = _time_span(method, inputs)
    n = int(math.floor((t1 - t0) / L + 1e-9))
    if n < max(2, cparams["min_segments"]):
        raise CalibrationError(f"only {n} complete segments of {L} s; need at least 2")
    traj = _trajectory(method, inputs)
    spans = []
    if traj is not None and len(traj[0]) >= 2:
        spans = extract_straight_segments(*traj)
    segments = []
    for k in range(n):
        a, b = t0 + k * L, t0 + (k + 1) * L
        straight = None if traj is None else any(s.contains(a, b) for s in spans)
        entry = {"index": k, "t_start": a, "t_end": b, "straight": straight}
        try:
            res, _ = run_method(method, slice_inputs(method, inputs, a, b), params, seed)
            entry.update(status="ok", result=res)
        except CalibrationError as exc:
            entry.update(status="error", error={"code": exc.code, "message": str(exc)})
        segments.append(entry)
    ok = [s for s in segments if s["status"] == "ok"]
    if len(ok) < 2:
        raise CalibrationError(f"only {len(ok)} segments calibrated successfully; need at least 2")
    keys = ANGLE_KEYS[method]
    stats_all, stats_straight = {}, {}
    straight_ok = [s for s in ok if s["straight"]]
    for key in keys:
        stats_all[key] = _angle_stats(np.array([s["result"][key] for s in ok], dtype=float))
        stats_straight[key] = _angle_stats(np.array([s["result"][key] for s in straight_ok], dtype=float))
    if method == "lidar":
        for group, stats in ((ok, stats_all), (straight_ok, stats_straight)):
            z = np.array([s["result"]["z"] for s in group], dtype=float)
            stats["z"] = {"mean": float(z.mean()), "std": float(z.std())} if z.size >= 2 else {"mean": None, "std": None}
    return {
        "segment_count": n,
        "segments_ok": len(ok),
        "straight_segment_count": len(straight_ok),
        "segments": segments,
        "all": stats_all,
        "straight": stats_straight,
    }


# --------------------------------------------------------------------------
# simulate


def simulate(spec: sim.ScenarioSpec, outdir: Path, sensors) -> dict:
    outdir.mkdir(parents=True, exist_ok=True)
    files = {}
    if "gnss" in sensors:
        io.write_poses(outdir / "gnss_poses.csv", sim.gen_gnss(spec))
        files["gnss_poses"] = "gnss_poses.csv"
    if "lidar" in sensors:
        ld = sim.gen_lidar(spec)
        io.write_poses(outdir / "lidar_poses.csv", ld.poses)
        io.write_lidar_dir(outdir / "lidar", ld.frames)
        files["lidar_poses"] = "lidar_poses.csv"
        files["lidar_dir"] = "lidar"
    if "radar" in sensors:
        io.write_radar(outdir / "radar.csv", sim.gen_radar(spec))
        files["radar"] = "radar.csv"
    if "camera" in sensors:
        obs = sim.gen_camera(spec)
        io.write_vp(outdir / "camera_vp.csv", obs)
        io.write_intrinsics(outdir / "intrinsics.txt", spec.camera.intrinsics)
        files["camera_vp"] = "camera_vp.csv"
        files["intrinsics"] = "intrinsics.txt"
        if spec.camera.lines_per_frame > 0:
            t, lines = sim.gen_camera_lines(spec)
            io.write_lines(outdir / "camera_lines.csv", t, lines)
            files["camera_lines"] = "camera_lines.csv"
    truth = sim.truth_dict(spec)
    truth["schema_version"] = SCHEMA_VERSION
    truth["files"] = files
    io.write_json(outdir / "truth.json", truth)
    return truth


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [<method>] parameter sections and optional [inputs]")
    common.add_argument("--output", required=True, help="report JSON path (directory for simulate)")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default 0; for simulate, the scenario's seed)")
    common.add_argument("--trace", help="write the convergence trace CSV here (radar-velocity)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="parameter override; repeatable")

    inputs = argparse.ArgumentParser(add_help=False)
    inputs.add_argument("--poses")
    inputs.add_argument("--lidar-dir", dest="lidar_dir")
    inputs.add_argument("--radar")
    inputs.add_argument("--vp")
    inputs.add_argument("--lines")
    inputs.add_argument("--intrinsics")

    parser = argparse.ArgumentParser(prog="vehcalib", description="Sensor-to-vehicle rotation calibration")
    sub = parser.add_subparsers(dest="command", required=True)
    for m in METHODS:
        sub.add_parser(m, parents=[common, inputs])
    s = sub.add_parser("simulate", parents=[common])
    s.add_argument("--scenario", help="scenario INI; defaults to --config")
    s.add_argument("--sensors", default="gnss,lidar,radar,camera", help="comma-separated subset to generate")
    c = sub.add_parser("consistency", parents=[common, inputs])
    c.add_argument("--method", required=True, choices=METHODS)
    c.add_argument("--segment-length", dest="segment_length", type=float)
    return parser


def _report_base(command: str, method: str, params: dict, args) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "method": method,
        "seed": 0 if args.seed is None else args.seed,
        "params": params,
    }


def _dispatch(args) -> int:
    config = _load_config(args.config)
    seed = 0 if args.seed is None else args.seed
    sets = _parse_sets(args.set)
    out = Path(args.output)

    if args.command == "simulate":
        path = args.scenario or args.config
        if path is None:
            raise UsageError("simulate needs --scenario or --config")
        p = Path(path)
        if not p.is_file():
            raise UsageError(f"scenario file not found: {p}")
        sensors = [s.strip() for s in args.sensors.split(",") if s.strip()]
        bad = set(sensors) - set(sim.SENSORS)
        if bad:
            raise UsageError(f"unknown sensors {sorted(bad)}")
        try:
            spec = sim.parse_scenario(p.read_text())
        except CalibrationError as exc:
            raise UsageError(str(exc)) from exc
        if args.seed is not None:
            spec = dataclasses.replace(spec, rng_seed=args.seed)
        simulate(spec, out, sensors)
        shutil.copyfile(p, out / "scenario.ini")
        return 0

    method = args.method if args.command == "consistency" else args.command
    routed = _route_sets(sets, method, ("consistency",) if args.command == "consistency" else ())
    params = resolve_params(method, config, routed[method])
    report = _report_base(args.command, method, params, args)
    if args.command == "consistency":
        cparams = resolve_params("consistency", config, routed["consistency"])
        if args.segment_length is not None:
            cparams["segment_length"] = args.segment_length
        report["consistency_params"] = cparams
    try:
        inputs = load_inputs(method, args, config, params, seed)
    except CalibrationError as exc:
        report.update(status="error", error={"code": exc.code, "message": str(exc)})
        io.write_json(out, report)
        return 1
    try:
        if args.command == "consistency":
            report["result"] = consistency(method, inputs, params, cparams, seed)
        else:
            result, extras = run_method(method, inputs, params, seed)
            report["result"] = result
            if "emissions" in extras:
                report["emissions"] = extras["emissions"]
            if args.trace and "trace" in extras:
                io.write_trace(args.trace, extras["trace"])
    except CalibrationError as exc:
        report.update(status="error", error={"code": exc.code, "message": str(exc)})
        io.write_json(out, report)
        return 1
    report["status"] = "ok"
    io.write_json(out, report)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except UsageError as exc:
        print(f"vehcalib: error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"vehcalib: error: file not found: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
