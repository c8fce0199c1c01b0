"""Acceptance checks, one recorded PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
the "acceptance criteria" section of the terminal summary.
"""

from __future__ import annotations

import json
import math
import time

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from vehcalib import sim
from vehcalib.camera import CameraCalibrator, mount_from_observation
from vehcalib.cli import main
from vehcalib.geom import circular_mean, circular_std, euler_to_matrix, matrix_to_euler, rodrigues, wrap_angle
from vehcalib.lidar import LidarCalibrator, PlaneModel, refine_plane_random_search
from vehcalib.radar import RadarPoints, RadarVelocityCalibrator, calibrate_radar_position, refine_yaw_iterative, yaw_from_pair
from vehcalib.trajectory import fit_spline

DEG = math.pi / 180


def deg(x):
    return math.degrees(x)


def run_cli(argv):
    code = main([str(a) for a in argv])
    return code


# 1 ---------------------------------------------------------------------------


def radar_scene(yaw_deg, seed, duration=30.0, noise=None):
    return sim.ScenarioSpec(
        [sim.Primitive("straight", 10, duration)],
        mounts={"radar": sim.Mount.from_degrees(yaw_deg)},
        noise=noise or sim.NoiseSpec(radar_doppler=0.1),
        radar=sim.RadarSimConfig(fov=120 * DEG, max_range=30.0),
        rng_seed=seed,
    )


def test_radar_velocity_accuracy(criterion):
    worst_err, worst_time = 0.0, 0.0
    parts = []
    for k, yaw in enumerate((0.0, 10.0, 20.0)):
        p = sim.gen_radar(radar_scene(yaw, seed=100 + k))
        t0 = time.perf_counter()
        est = RadarVelocityCalibrator(A=45 * DEG, n_step=5 * DEG).fit(p)
        elapsed = time.perf_counter() - t0
        err = abs(deg(wrap_angle(est.yaw_ - yaw * DEG)))
        parts.append(f"{yaw:g}->{deg(est.yaw_):.4f}")
        worst_err = max(worst_err, err)
        worst_time = max(worst_time, elapsed)
    ok = worst_err < 0.15 and worst_time < 5.0
    criterion(1, ok, f"velocity method {', '.join(parts)} deg; max error {worst_err:.4f} deg (< 0.15), max runtime {worst_time:.2f} s (< 5)")


# 2 ---------------------------------------------------------------------------


def test_radar_refine_convergence(criterion):
    truth = 10 * DEG
    p = sim.gen_radar(radar_scene(10.0, seed=7))
    est = refine_yaw_iterative(p.frames(), truth - 5 * DEG, iterations=1000)
    err = np.abs(wrap_angle(np.asarray(est.trace) - truth))
    outside = np.flatnonzero(err > 0.2 * DEG)
    settle = 1 if outside.size == 0 else int(outside[-1]) + 2  # 1-based first iteration of the final in-band run
    ok = settle <= 500
    criterion(2, ok, f"trace from 5 deg error enters and stays within 0.2 deg at iteration {settle} (<= 500, checked to 1000); final {deg(est.yaw):.4f} deg")


# 3 ---------------------------------------------------------------------------


def test_radar_position_dispersion(criterion):
    truth = 3 * DEG
    noise = sim.NoiseSpec(radar_azimuth=0.2 * DEG, radar_range=0.05, radar_doppler=0.5)
    ests = []
    for seed in range(20):
        spec = radar_scene(3.0, seed=seed, duration=20.0, noise=noise)  # 200 m at 10 m/s
        ests.append(calibrate_radar_position(sim.gen_radar(spec)).yaw)
    std = deg(circular_std(ests))
    mean_err = abs(deg(wrap_angle(circular_mean(ests) - truth)))
    ok = std <= 0.5 and mean_err <= 0.5
    criterion(3, ok, f"position method over 20 runs: circular std {std:.4f} deg (<= 0.5), mean error {mean_err:.4f} deg (<= 0.5)")


# 4 ---------------------------------------------------------------------------


def test_camera_round_trip(criterion):
    intr = sim.CameraSimConfig().intrinsics
    rng = np.random.default_rng(2024)
    worst = 0.0
    for ypr in rng.uniform(-10, 10, (1000, 3)) * DEG:
        vp, hl = sim.camera_observation(euler_to_matrix(*ypr), intr)
        e = mount_from_observation(vp, hl, intr)
        worst = max(worst, float(np.max(np.abs(wrap_angle(np.array([e.yaw, e.pitch, e.roll]) - ypr)))))

    mount = sim.Mount.from_degrees(2.0, -1.5, 0.8)
    spec = sim.ScenarioSpec(
        [sim.Primitive("straight", 10, 120)],
        mounts={"camera": mount},
        noise=sim.NoiseSpec(camera_vp=2.0),
        rng_seed=5,
    )
    c = CameraCalibrator(window_n=100, std_threshold=0.005).fit(sim.gen_camera(spec), intr)
    errs = np.abs(wrap_angle(np.array([c.roll_, c.pitch_, c.yaw_]) - [mount.roll, mount.pitch, mount.yaw]))
    noisy = deg(float(errs.max()))
    ok = worst < 1e-9 and noisy <= 0.2 and len(c.estimates_) > 0
    criterion(4, ok, f"1000 noiseless mounts max error {worst:.2e} rad (< 1e-9); 2 px VP noise windowed error {noisy:.4f} deg (<= 0.2), {len(c.estimates_)} gated emissions")


# 5 ---------------------------------------------------------------------------

LIDAR_SCENARIO = """
[scenario]
seed = 21

[route]
segments =
    straight speed=10 duration=80
    arc speed=5 radius=20 angle_deg=90
    straight speed=12 duration=70
    arc speed=5 radius=-25 angle_deg=90
    straight speed=10 duration=70

[mount.lidar]
roll_deg = 1
pitch_deg = 2
yaw_deg = 3
height = 1.9

[noise]
lidar_plane = 0.01
lidar_yaw_deg = 0.1

[rates]
lidar = 2

[lidar]
points = 2000
clutter = 0.2
"""


def test_lidar_pipeline(criterion, tmp_path):
    (tmp_path / "s.ini").write_text(LIDAR_SCENARIO)
    out = tmp_path / "sim"
    assert run_cli(["simulate", "--scenario", tmp_path / "s.ini", "--output", out, "--sensors", "lidar"]) == 0
    inputs = ["--poses", out / "lidar_poses.csv", "--lidar-dir", out / "lidar", "--set", "downsample=2"]
    assert run_cli(["lidar", *inputs, "--output", tmp_path / "full.json"]) == 0
    assert run_cli(["consistency", "--method", "lidar", *inputs, "--segment-length", 60, "--output", tmp_path / "c.json"]) == 0
    full = json.loads((tmp_path / "full.json").read_text())["result"]
    cons = json.loads((tmp_path / "c.json").read_text())["result"]
    e_roll = abs(full["roll_deg"] - 1.0)
    e_pitch = abs(full["pitch_deg"] - 2.0)
    e_yaw = abs(full["yaw_deg"] - 3.0)
    e_z = abs(full["z"] - 1.9)
    s_pitch = cons["all"]["pitch"]["std_deg"]
    s_yaw = cons["all"]["yaw"]["std_deg"]
    s_z = cons["all"]["z"]["std"]
    ok = (
        e_roll <= 0.05 and e_pitch <= 0.05 and e_yaw <= 0.1 and e_z <= 0.01
        and cons["segments_ok"] >= 2 and s_pitch <= 0.1 and s_yaw <= 0.1 and s_z <= 0.06
    )
    criterion(
        5,
        ok,
        f"lidar errors roll {e_roll:.4f} / pitch {e_pitch:.4f} deg (<= 0.05), yaw {e_yaw:.4f} deg (<= 0.1), z {e_z:.4f} m (<= 0.01); "
        f"{cons['segments_ok']} one-minute segments std pitch {s_pitch:.4f} / yaw {s_yaw:.4f} deg (<= 0.1), z {s_z:.4f} m (<= 0.06)",
    )


# 6 ---------------------------------------------------------------------------

GNSS_SCENARIO = """
[scenario]
seed = 8

[route]
segments =
    straight speed=12 duration=100
    arc speed=6 radius=30 angle_deg=90
    straight speed=15 duration=90
    arc speed=5 radius=-20 angle_deg=180
    straight speed=10 duration=80
    arc speed=6 radius=25 angle_deg=90
    straight speed=14 duration=100
    arc speed=5 radius=15 angle_deg=360
    straight speed=12 duration=200

[mount.gnss]
yaw_deg = 2

[noise]
gnss_yaw_deg = 0.1
"""


def test_gnss_minute_consistency(criterion, tmp_path):
    (tmp_path / "s.ini").write_text(GNSS_SCENARIO)
    out = tmp_path / "sim"
    assert run_cli(["simulate", "--scenario", tmp_path / "s.ini", "--output", out, "--sensors", "gnss"]) == 0
    duration = json.loads((out / "truth.json").read_text())["duration"]
    assert run_cli(["consistency", "--method", "gnss", "--poses", out / "gnss_poses.csv", "--segment-length", 60, "--output", tmp_path / "c.json"]) == 0
    cons = json.loads((tmp_path / "c.json").read_text())["result"]
    stats = cons["all"]["yaw_offset"]
    std, mean_err = stats["std_deg"], abs(stats["mean_deg"] - 2.0)
    ok = duration >= 600 and std <= 0.1 and mean_err <= 0.05
    criterion(6, ok, f"gnss {duration / 60:.1f} min, {cons['segments_ok']} segments: circular std {std:.4f} deg (<= 0.1), mean error {mean_err:.4f} deg (<= 0.05)")


# 7 ---------------------------------------------------------------------------

ROLL_SCENARIO = """
[scenario]
seed = 12
turn_roll_gain = {gain!r}

[route]
segments =
    straight speed=10 duration=130
    arc speed=5 radius=20 duration=40
    straight speed=10 duration=130
    arc speed=5 radius=-20 duration=40
    straight speed=10 duration=130
    arc speed=5 radius=20 duration=40

[mount.camera]
roll_deg = 0.5
pitch_deg = -1
yaw_deg = 1.5

[noise]
camera_vp = 1.0
camera_hl = 0.002
gnss_yaw_deg = 0.1
"""


def test_turn_roll_consistency(criterion, tmp_path):
    (tmp_path / "s.ini").write_text(ROLL_SCENARIO.format(gain=sim.PLACEHOLDER_TURN_ROLL_GAIN))
    out = tmp_path / "sim"
    assert run_cli(["simulate", "--scenario", tmp_path / "s.ini", "--output", out, "--sensors", "camera,gnss"]) == 0
    argv = [
        "consistency", "--method", "camera",
        "--vp", out / "camera_vp.csv", "--intrinsics", out / "intrinsics.txt", "--poses", out / "gnss_poses.csv",
        "--segment-length", 60, "--output", tmp_path / "c.json",
    ]
    assert run_cli(argv) == 0
    cons = json.loads((tmp_path / "c.json").read_text())["result"]
    s_all = cons["all"]["roll"]["std_deg"]
    s_straight = cons["straight"]["roll"]["std_deg"]
    ok = s_all is not None and s_straight is not None and s_straight < s_all
    criterion(
        7,
        ok,
        f"camera roll std all {s_all:.4f} deg over {cons['segments_ok']} segments vs straight-only {s_straight:.4f} deg over {cons['straight_segment_count']}",
    )


# 8 ---------------------------------------------------------------------------

angle = st.floats(-math.pi, math.pi, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(angle, st.floats(-1.5, 1.5), angle, st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: np.linalg.norm(v) > 1e-3))
def _geom_round_trip(yaw, pitch, roll, axis):
    R = euler_to_matrix(yaw, pitch, roll)
    assert np.allclose(R @ R.T, np.eye(3), atol=1e-9)
    assert abs(np.linalg.det(R) - 1) < 1e-9
    assert np.allclose(euler_to_matrix(*matrix_to_euler(R)), R, atol=1e-9)
    Q = rodrigues(np.asarray(axis) / np.linalg.norm(axis), yaw)
    assert np.allclose(Q @ Q.T, np.eye(3), atol=1e-9)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def _spline_derivatives(seed):
    rng = np.random.default_rng(seed)
    t = np.linspace(0, 100, 1001)
    xy = np.column_stack([8 * t, 2 * t])
    for f, a in zip(rng.uniform(0.01, 0.1, 3), rng.uniform(5, 50, (3, 2))):
        xy = xy + np.outer(np.sin(2 * np.pi * f * t), a)
    sp = fit_spline(t, xy)
    tq = rng.uniform(1, 99, 50)
    h1, h2 = 1e-5, 1e-4
    for axis in range(2):
        pos = lambda s: sp.position(s)[..., axis]
        fd1 = (pos(tq + h1) - pos(tq - h1)) / (2 * h1)
        fd2 = (pos(tq + h2) - 2 * pos(tq) + pos(tq - h2)) / h2**2
        assert np.abs(sp.derivative(tq, 1)[axis] - fd1).max() < 1e-6
        assert np.abs(sp.derivative(tq, 2)[axis] - fd2).max() < 1e-4


def _detection(ego, heading, target, psi):
    dx, dy = target[0] - ego[0], target[1] - ego[1]
    az = wrap_angle(math.atan2(dy, dx) - heading - psi)
    return RadarPoints.from_rows([(0.0, 0, math.hypot(dx, dy), az, 0.0, 10.0, ego[0], ego[1])])


@settings(max_examples=300, deadline=None)
@given(st.floats(1.5, 50), st.floats(-100, 100), st.floats(-100, 100).filter(lambda y: abs(y) > 0.5), st.floats(-40, 40), angle)
def _pair_geometry(d, ox, oy, psi_deg, heading):
    c, s = math.cos(heading), math.sin(heading)
    p0, pi = (0.0, 0.0), (d * c, d * s)
    target = (pi[0] + ox * c - oy * s, pi[1] + ox * s + oy * c)
    r0 = math.hypot(target[0] - p0[0], target[1] - p0[1])
    ri = math.hypot(ox, oy)
    if abs(oy) / r0 < 1e-3 or abs(oy) / ri < 1e-3:
        return
    psi = psi_deg * DEG
    est = yaw_from_pair(_detection(p0, heading, target, psi), _detection(pi, heading, target, psi))
    assert abs(wrap_angle(est - psi)) < 1e-9


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-0.5, 0.5), min_size=2, max_size=30), angle, st.integers(-3, 3))
def _circular_invariance(values, offset, turns):
    a = np.asarray(values)
    shifted = a + offset + 2 * math.pi * turns
    assert abs(wrap_angle(circular_mean(shifted) - circular_mean(a) - offset)) < 1e-9
    assert abs(circular_std(shifted) - circular_std(a)) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 2.0), st.floats(-0.3, 0.3))
def _refine_monotone(seed, tilt_deg, dshift):
    rng = np.random.default_rng(seed)
    ground = np.column_stack([rng.uniform(-20, 20, (300, 2)), np.full(300, -1.8) + rng.normal(0, 0.01, 300)])
    clutter = np.column_stack([rng.uniform(-20, 20, (100, 2)), rng.uniform(-1.5, 1.0, 100)])
    P = np.vstack([ground, clutter])
    start = PlaneModel(rodrigues([0, 1, 0], tilt_deg * DEG) @ np.array([0, 0, 1.0]), 1.8 + dshift)
    _, hist = refine_plane_random_search(P, start, rng_seed=seed, return_history=True)
    assert all(b >= a for a, b in zip(hist, hist[1:]))


def _determinism():
    spec = sim.ScenarioSpec(
        [sim.Primitive("straight", 10, 15), sim.Primitive("arc", 5, radius=20, duration=5), sim.Primitive("straight", 10, 15)],
        mounts={"lidar": sim.Mount.from_degrees(3, 2, 1, 1.9), "radar": sim.Mount.from_degrees(5)},
        noise=sim.NoiseSpec(lidar_plane=0.02, lidar_yaw=0.002, radar_doppler=0.2, radar_azimuth=0.003, camera_vp=2.0),
        lidar=sim.LidarSimConfig(points=300, clutter=0.3),
        radar=sim.RadarSimConfig(movers=3, outlier_fraction=0.05),
        rng_seed=31,
    )

    def run():
        ld = sim.gen_lidar(spec)
        rp = sim.gen_radar(spec)
        lc = LidarCalibrator(downsample=3, seed=4).fit(ld.frames, ld.poses)
        return (
            lc.roll_, lc.pitch_, lc.yaw_, lc.z_,
            RadarVelocityCalibrator().fit(rp).yaw_,
            calibrate_radar_position(rp).yaw,
            CameraCalibrator(window_n=20, std_threshold=0.01).fit(sim.gen_camera(spec), spec.camera.intrinsics).yaw_,
        )

    assert run() == run()


def test_property_suites(criterion):
    checks = {
        "geometry round trips and orthonormality": _geom_round_trip,
        "spline derivatives vs finite differences": _spline_derivatives,
        "pair geometry vs planar oracle": _pair_geometry,
        "circular statistics wrap invariance": _circular_invariance,
        "plane refinement monotonicity": _refine_monotone,
        "seeded pipeline determinism": _determinism,
    }
    failed = []
    for name, fn in checks.items():
        try:
            fn()
        except Exception as exc:  # report every failing property, not just the first
            failed.append(f"{name} ({type(exc).__name__})")
    detail = f"{len(checks) - len(failed)}/{len(checks)} property suites hold"
    if failed:
        detail += "; failing: " + ", ".join(failed)
    criterion(8, not failed, detail)
