"""Synthetic drives with known sensor mounts.

A scenario is a route (straight / arc / stop pieces driven at constant
speed), a mount per sensor, noise levels and sensor rates.  The route is
evaluated in closed form, so every generator samples the exact ground
truth at its own timestamps.

World frame: x east, y north, z up, road surface at z = 0.  The vehicle
origin sits on the road; a sensor sits ``height`` above it.  Optional body
roll in turns is ``turn_roll_gain * yaw_rate`` (rad per rad/s).
"""

from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .camera import CAM_FROM_VEHICLE, Intrinsics, VPObservations
from .exceptions import InvalidInputError
from .geom import EulerYPR, euler_to_matrix, rot_x, rot_z, wrap_angle
from .lidar import PointCloudFrame
from .radar import RadarPoints
from .trajectory import Poses

SENSORS = ("gnss", "lidar", "radar", "camera")

# Placeholder body-roll gain: 0.5 deg of roll at 0.05 rad/s of yaw rate.
PLACEHOLDER_TURN_ROLL_GAIN = math.radians(0.5) / 0.05


@dataclass(frozen=True)
class Primitive:
    """One route piece.

    ``kind`` is ``"straight"``, ``"arc"`` or ``"stop"``.  Arcs take a signed
    ``radius`` (positive turns left) and either ``duration`` or the turned
    ``angle`` (radians, magnitude).
    """

    kind: str
    speed: float = 0.0
    duration: float | None = None
    radius: float | None = None
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in ("straight", "arc", "stop"):
            raise InvalidInputError(f"unknown route primitive {self.kind!r}")
        if self.speed < 0:
            raise InvalidInputError("speed must be non-negative")
        if self.kind == "stop" and self.speed != 0:
            raise InvalidInputError("stop primitive has zero speed")
        if self.kind == "arc":
            if not self.radius:
                raise InvalidInputError("arc needs a non-zero radius")
            if self.speed <= 0:
                raise InvalidInputError("arc needs a positive speed")
            if (self.duration is None) == (self.angle is None):
                raise InvalidInputError("arc needs exactly one of duration and angle")
        elif self.duration is None:
            raise InvalidInputError(f"{self.kind} needs a duration")
        if self.duration is not None and self.duration <= 0:
            raise InvalidInputError("duration must be positive")

    @property
    def length(self) -> float:
        """Duration in seconds."""
        if self.duration is not None:
            return float(self.duration)
        return abs(self.angle) * abs(self.radius) / self.speed

    @property
    def yaw_rate(self) -> float:
        if self.kind != "arc":
            return 0.0
        return self.speed / self.radius


@dataclass(frozen=True)
class Mount:
    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0
    height: float = 0.0

    @property
    def euler(self) -> EulerYPR:
        return EulerYPR(self.yaw, self.pitch, self.roll)

    def matrix(self) -> np.ndarray:
        """Vehicle-from-sensor rotation."""
        return euler_to_matrix(self.yaw, self.pitch, self.roll)

    @classmethod
    def from_degrees(cls, yaw=0.0, pitch=0.0, roll=0.0, height=0.0) -> "Mount":
        return cls(math.radians(yaw), math.radians(pitch), math.radians(roll), height)


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian sigmas; angles in radians, lengths in metres, pixels for VP."""

    gnss_pos: float = 0.0
    gnss_yaw: float = 0.0
    lidar_pos: float = 0.0
    lidar_yaw: float = 0.0
    lidar_plane: float = 0.0
    lidar_range: float = 0.0
    radar_range: float = 0.0
    radar_azimuth: float = 0.0
    radar_doppler: float = 0.0
    camera_vp: float = 0.0
    camera_hl: float = 0.0
    camera_line: float = 0.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if v < 0:
                raise InvalidInputError(f"noise sigma {k} must be >= 0")


@dataclass(frozen=True)
class Rates:
    gnss: float = 10.0
    lidar: float = 10.0
    radar: float = 20.0
    camera: float = 10.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if v <= 0:
                raise InvalidInputError(f"rate {k} must be positive")


@dataclass(frozen=True)
class LidarSimConfig:
    points: int = 2000
    r_min: float = 2.0
    r_max: float = 40.0
    clutter: float = 0.0
    clutter_height: tuple[float, float] = (0.3, 3.0)


@dataclass(frozen=True)
class RadarSimConfig:
    fov: float = math.radians(120.0)
    max_range: float = 30.0
    landmark_spacing: float = 5.0
    lateral: tuple[float, float] = (3.0, 15.0)
    movers: int = 0
    mover_speed: tuple[float, float] = (2.0, 8.0)
    outlier_fraction: float = 0.0
    # (landmark index, t_start, t_end) windows during which a landmark is hidden
    occlusions: tuple = ()


@dataclass(frozen=True)
class CameraSimConfig:
    fx: float = 1000.0
    fy: float = 1000.0
    cx: float = 640.0
    cy: float = 360.0
    lines_per_frame: int = 0

    @property
    def intrinsics(self) -> Intrinsics:
        return Intrinsics(self.fx, self.fy, self.cx, self.cy)


@dataclass(frozen=True)
class ScenarioSpec:
    route: tuple
    mounts: dict = field(default_factory=dict)
    noise: NoiseSpec = NoiseSpec()
    rates: Rates = Rates()
    lidar: LidarSimConfig = LidarSimConfig()
    radar: RadarSimConfig = RadarSimConfig()
    camera: CameraSimConfig = CameraSimConfig()
    start: tuple[float, float, float] = (0.0, 0.0, 0.0)
    turn_roll_gain: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        route = tuple(self.route)
        if not route:
            raise InvalidInputError("route is empty")
        object.__setattr__(self, "route", route)
        mounts = {s: Mount() for s in SENSORS}
        mounts.update(self.mounts)
        object.__setattr__(self, "mounts", mounts)

    @property
    def duration(self) -> float:
        return float(sum(p.length for p in self.route))

    def mount(self, sensor: str) -> Mount:
        return self.mounts[sensor]

    def rng(self, sensor: str) -> np.random.Generator:
        """Independent stream per sensor, so generators can run in any order."""
        return np.random.default_rng([self.rng_seed, SENSORS.index(sensor) + 1])


# --------------------------------------------------------------------------
# Ground truth


@dataclass
class Truth:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    speed: np.ndarray
    yaw_rate: np.ndarray
    body_roll: np.ndarray

    @property
    def xy(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])


def _piece_starts(spec: ScenarioSpec):
    x, y, h = spec.start
    t = 0.0
    starts = []
    for p in spec.route:
        starts.append((t, x, y, h))
        T = p.length
        if p.kind == "straight":
            x += p.speed * T * math.cos(h)
            y += p.speed * T * math.sin(h)
        elif p.kind == "arc":
            h1 = h + p.yaw_rate * T
            x += p.radius * (math.sin(h1) - math.sin(h))
            y -= p.radius * (math.cos(h1) - math.cos(h))
            h = h1
        t += T
    return starts


def evaluate_route(spec: ScenarioSpec, t) -> Truth:
    """Exact vehicle state at arbitrary times in ``[0, duration]``."""
    t = np.asarray(t, dtype=float).reshape(-1)
    if t.size and (t.min() < -1e-9 or t.max() > spec.duration + 1e-9):
        raise InvalidInputError("time outside the route duration")
    starts = _piece_starts(spec)
    t0s = np.array([s[0] for s in starts])
    idx = np.clip(np.searchsorted(t0s, t, side="right") - 1, 0, len(starts) - 1)
    x = np.empty_like(t)
    y = np.empty_like(t)
    h = np.empty_like(t)
    v = np.empty_like(t)
    w = np.empty_like(t)
    for k, p in enumerate(spec.route):
        sel = idx == k
        if not np.any(sel):
            continue
        ts, xs, ys, hs = starts[k]
        tau = t[sel] - ts
        v[sel] = p.speed
        w[sel] = p.yaw_rate
        if p.kind == "arc":
            hk = hs + p.yaw_rate * tau
            x[sel] = xs + p.radius * (np.sin(hk) - math.sin(hs))
            y[sel] = ys - p.radius * (np.cos(hk) - math.cos(hs))
            h[sel] = hk
        else:
            x[sel] = xs + p.speed * tau * math.cos(hs)
            y[sel] = ys + p.speed * tau * math.sin(hs)
            h[sel] = hs
    return Truth(t, x, y, h, v, w, spec.turn_roll_gain * w)


def sample_times(spec: ScenarioSpec, rate: float) -> np.ndarray:
    n = int(math.floor(spec.duration * rate + 1e-9))
    return np.arange(n + 1) / rate


def gen_trajectory(spec: ScenarioSpec, rate: float = 100.0) -> Truth:
    """Dense ground truth sampled at ``rate`` Hz (heading unwrapped)."""
    return evaluate_route(spec, sample_times(spec, rate))


# --------------------------------------------------------------------------
# Pose streams


def _sensor_poses(spec: ScenarioSpec, sensor: str, rate: float, pos_sigma: float, yaw_sigma: float) -> Poses:
    rng = spec.rng(sensor)
    tr = evaluate_route(spec, sample_times(spec, rate))
    n = len(tr.t)
    xyz = np.column_stack([tr.x, tr.y, np.zeros(n)])
    if pos_sigma > 0:
        xyz[:, :2] += rng.normal(0.0, pos_sigma, (n, 2))
    yaw_noise = rng.normal(0.0, yaw_sigma, n) if yaw_sigma > 0 else np.zeros(n)
    M = spec.mount(sensor).matrix()
    R = np.array([rot_z(h + e) @ rot_x(br) @ M for h, e, br in zip(tr.heading, yaw_noise, tr.body_roll)])
    return Poses.from_rotations(tr.t, xyz, R)


def gen_gnss(spec: ScenarioSpec) -> Poses:
    """GNSS/INS poses: truth position and heading plus the mount yaw, with noise."""
    return _sensor_poses(spec, "gnss", spec.rates.gnss, spec.noise.gnss_pos, spec.noise.gnss_yaw)


@dataclass
class LidarData:
    poses: Poses
    frames: list
    clutter_masks: list = field(repr=False)


def gen_lidar(spec: ScenarioSpec, with_poses: bool = True) -> LidarData:
    """LiDAR poses plus ground-plane frames in the sensor frame.

    Each frame samples a ground annulus uniformly by area in the road-level
    frame, replaces a ``clutter`` fraction of points with obstacles above
    the road, and maps everything into the sensor frame with the vehicle
    body roll and the mount.
    """
    cfg = spec.lidar
    noise = spec.noise
    poses = _sensor_poses(spec, "lidar", spec.rates.lidar, noise.lidar_pos, noise.lidar_yaw) if with_poses else None
    rng = np.random.default_rng([spec.rng_seed, 100])
    tr = evaluate_route(spec, sample_times(spec, spec.rates.lidar))
    mount = spec.mount("lidar")
    Mt = mount.matrix().T
    offset = np.array([0.0, 0.0, mount.height])
    frames, masks = [], []
    for t, br in zip(tr.t, tr.body_roll):
        n = cfg.points
        r = np.sqrt(rng.uniform(cfg.r_min**2, cfg.r_max**2, n))
        phi = rng.uniform(-np.pi, np.pi, n)
        z = rng.normal(0.0, noise.lidar_plane, n) if noise.lidar_plane > 0 else np.zeros(n)
        clutter = rng.uniform(size=n) < cfg.clutter if cfg.clutter > 0 else np.zeros(n, dtype=bool)
        k = int(clutter.sum())
        if k:
            z[clutter] = rng.uniform(*cfg.clutter_height, k)
        p_level = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
        p_vehicle = p_level @ rot_x(br) if br else p_level
        pts = (p_vehicle - offset) @ Mt.T
        if noise.lidar_range > 0:
            dist = np.linalg.norm(pts, axis=1, keepdims=True)
            pts = pts + rng.normal(0.0, noise.lidar_range, (n, 1)) * pts / dist
        frames.append(PointCloudFrame(float(t), pts))
        masks.append(clutter)
    return LidarData(poses, frames, masks)


# --------------------------------------------------------------------------
# Radar


def make_landmarks(spec: ScenarioSpec, spacing: float | None = None, lateral=None, rng_seed=None) -> np.ndarray:
    """Static point targets on both sides of the route, every ``spacing`` m."""
    spacing = spec.radar.landmark_spacing if spacing is None else spacing
    lat_lo, lat_hi = spec.radar.lateral if lateral is None else lateral
    rng = np.random.default_rng([spec.rng_seed, 200] if rng_seed is None else rng_seed)
    tr = gen_trajectory(spec, 100.0)
    step = np.hypot(np.diff(tr.x), np.diff(tr.y))
    s = np.concatenate([[0.0], np.cumsum(step)])
    marks = np.arange(0.0, s[-1], spacing)
    idx = np.searchsorted(s, marks)
    out = []
    for i in idx:
        c, sn = math.cos(tr.heading[i]), math.sin(tr.heading[i])
        for side in (1.0, -1.0):
            off = side * rng.uniform(lat_lo, lat_hi)
            along = rng.uniform(-0.5, 0.5) * spacing
            out.append((tr.x[i] + along * c - off * sn, tr.y[i] + along * sn + off * c))
    return np.array(out).reshape(-1, 2)


def _movers(spec: ScenarioSpec, rng: np.random.Generator):
    cfg = spec.radar
    if cfg.movers == 0:
        return np.zeros((0, 2)), np.zeros((0, 2))
    tr = gen_trajectory(spec, 10.0)
    pick = rng.integers(0, len(tr.t), cfg.movers)
    ahead = rng.uniform(5.0, cfg.max_range, cfg.movers)
    ang = tr.heading[pick] + rng.uniform(-0.5, 0.5, cfg.movers) * cfg.fov
    p0 = np.column_stack([tr.x[pick] + ahead * np.cos(ang), tr.y[pick] + ahead * np.sin(ang)])
    speed = rng.uniform(*cfg.mover_speed, cfg.movers)
    direction = rng.uniform(-np.pi, np.pi, cfg.movers)
    vel = speed[:, None] * np.column_stack([np.cos(direction), np.sin(direction)])
    # place movers so they pass that point at the sampled time
    p0 = p0 - vel * tr.t[pick, None]
    return p0, vel


def gen_radar(spec: ScenarioSpec, landmarks=None) -> RadarPoints:
    """Radar detections of static landmarks (plus optional movers/outliers).

    Azimuth is measured from the sensor forward axis; Doppler is the closing
    speed.  A landmark gets a fresh track id each time it becomes visible.
    """
    cfg = spec.radar
    noise = spec.noise
    rng = spec.rng("radar")
    psi = spec.mount("radar").yaw
    if landmarks is None:
        landmarks = make_landmarks(spec)
    landmarks = np.asarray(landmarks, dtype=float).reshape(-1, 2)
    mover_p0, mover_v = _movers(spec, rng)
    n_static = len(landmarks)
    tr = evaluate_route(spec, sample_times(spec, spec.rates.radar))
    occl = [(int(i), float(a), float(b)) for i, a, b in cfg.occlusions]

    n_obj = n_static + len(mover_p0)
    current = np.full(n_obj, -1, dtype=np.int64)
    next_id = 0
    rows = []
    for k, t in enumerate(tr.t):
        ego = np.array([tr.x[k], tr.y[k]])
        h, v = tr.heading[k], tr.speed[k]
        v_ego = v * np.array([math.cos(h), math.sin(h)])
        pos = np.vstack([landmarks, mover_p0 + mover_v * t]) if len(mover_p0) else landmarks
        vel = np.vstack([np.zeros_like(landmarks), mover_v]) if len(mover_p0) else np.zeros_like(landmarks)
        rel = pos - ego
        rng_true = np.hypot(rel[:, 0], rel[:, 1])
        bearing = np.arctan2(rel[:, 1], rel[:, 0]) - h
        theta = wrap_angle(bearing - psi)
        visible = (np.abs(theta) <= cfg.fov / 2) & (rng_true <= cfg.max_range) & (rng_true > 0)
        for i, a, b in occl:
            if a <= t <= b and i < n_obj:
                visible[i] = False
        rel_v = vel - v_ego
        closing = -np.einsum("ij,ij->i", rel, rel_v) / np.maximum(rng_true, 1e-12)
        for i in np.flatnonzero(visible):
            if current[i] < 0:
                current[i] = next_id
                next_id += 1
            rows.append((t, current[i], rng_true[i], theta[i], closing[i], v, ego[0], ego[1]))
        current[~visible] = -1
    arr = np.array(rows, dtype=float).reshape(-1, 8)
    m = len(arr)
    if m:
        if noise.radar_range > 0:
            arr[:, 2] = np.abs(arr[:, 2] + rng.normal(0.0, noise.radar_range, m))
        if noise.radar_azimuth > 0:
            arr[:, 3] = wrap_angle(arr[:, 3] + rng.normal(0.0, noise.radar_azimuth, m))
        if noise.radar_doppler > 0:
            arr[:, 4] += rng.normal(0.0, noise.radar_doppler, m)
    if cfg.outlier_fraction > 0 and m:
        k = rng.binomial(m, cfg.outlier_fraction)
        src = rng.integers(0, m, k)
        out = arr[src].copy()
        out[:, 1] = 1_000_000 + np.arange(k)
        out[:, 2] = rng.uniform(1.0, cfg.max_range, k)
        out[:, 3] = rng.uniform(-cfg.fov / 2, cfg.fov / 2, k)
        out[:, 4] = rng.uniform(-out[:, 5] - 5.0, out[:, 5] + 5.0)
        arr = np.vstack([arr, out])
        arr = arr[np.lexsort((arr[:, 1], arr[:, 0]))]
    return RadarPoints.from_rows(arr)


# --------------------------------------------------------------------------
# Camera


def _camera_from_vehicle(mount_matrix: np.ndarray, body_roll: float) -> np.ndarray:
    # road-level direction -> vehicle (undo body roll) -> sensor -> optical axes
    return CAM_FROM_VEHICLE @ mount_matrix.T @ rot_x(body_roll).T


def _image(K: np.ndarray, C: np.ndarray, d: np.ndarray) -> np.ndarray:
    p = K @ (C @ d)
    return p[:2] / p[2]


def camera_observation(mount_matrix: np.ndarray, intrinsics: Intrinsics, body_roll: float = 0.0):
    """Exact VP and horizon angle for one camera attitude."""
    C = _camera_from_vehicle(mount_matrix, body_roll)
    K = intrinsics.K
    vp = _image(K, C, np.array([1.0, 0.0, 0.0]))
    a = _image(K, C, np.array([1.0, 0.25, 0.0]))
    b = _image(K, C, np.array([1.0, -0.25, 0.0]))
    left, right = (a, b) if a[0] < b[0] else (b, a)
    hl = math.atan2(-(right[1] - left[1]), right[0] - left[0])
    return vp, hl


def gen_camera(spec: ScenarioSpec) -> VPObservations:
    """Per-frame VP (pixels) and on-screen horizon angle, with noise."""
    rng = spec.rng("camera")
    intr = spec.camera.intrinsics
    tr = evaluate_route(spec, sample_times(spec, spec.rates.camera))
    M = spec.mount("camera").matrix()
    n = len(tr.t)
    vp = np.empty((n, 2))
    hl = np.empty(n)
    for k, br in enumerate(tr.body_roll):
        vp[k], hl[k] = camera_observation(M, intr, br)
    if spec.noise.camera_vp > 0:
        vp += rng.normal(0.0, spec.noise.camera_vp, (n, 2))
    if spec.noise.camera_hl > 0:
        hl += rng.normal(0.0, spec.noise.camera_hl, n)
    return VPObservations(tr.t, vp, hl)


def gen_camera_lines(spec: ScenarioSpec, observations: VPObservations | None = None):
    """Lane-like segments converging on each frame's VP.

    Returns ``(t, lines)`` with one row ``(u1, v1, u2, v2)`` per segment.
    Endpoint noise is ``noise.camera_line`` pixels.
    """
    rng = np.random.default_rng([spec.rng_seed, 300])
    obs = gen_camera(replace(spec, noise=replace(spec.noise, camera_vp=0.0))) if observations is None else observations
    m = max(spec.camera.lines_per_frame, 2)
    ts, segs = [], []
    for t, vp in zip(obs.t, obs.vp):
        ang = rng.uniform(math.radians(15), math.radians(165), m)
        d0 = rng.uniform(40.0, 150.0, m)
        d1 = d0 + rng.uniform(80.0, 250.0, m)
        u = np.cos(ang)
        v = np.sin(ang)
        seg = np.column_stack([vp[0] + d0 * u, vp[1] + d0 * v, vp[0] + d1 * u, vp[1] + d1 * v])
        if spec.noise.camera_line > 0:
            seg = seg + rng.normal(0.0, spec.noise.camera_line, seg.shape)
        ts.extend([t] * m)
        segs.append(seg)
    return np.array(ts), np.vstack(segs)


# --------------------------------------------------------------------------
# Scenario files (INI)


def _parse_route(text: str) -> tuple:
    route = []
    for line in text.strip().splitlines():
        tokens = line.split("#", 1)[0].split()
        if not tokens:
            continue
        kind, kv = tokens[0], {}
        for tok in tokens[1:]:
            if "=" not in tok:
                raise InvalidInputError(f"route token {tok!r} is not key=value")
            k, v = tok.split("=", 1)
            kv[k] = float(v)
        if "angle_deg" in kv:
            kv["angle"] = math.radians(kv.pop("angle_deg"))
        unknown = set(kv) - {"speed", "duration", "radius", "angle"}
        if unknown:
            raise InvalidInputError(f"unknown route keys {sorted(unknown)}")
        route.append(Primitive(kind, **kv))
    return tuple(route)


def _deg(section, key, default=0.0) -> float:
    return math.radians(section.getfloat(key, default))


def parse_scenario(text: str) -> ScenarioSpec:
    """Build a :class:`ScenarioSpec` from INI text; see README for the schema."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise InvalidInputError(f"bad scenario file: {exc}") from exc
    if not cp.has_section("route"):
        raise InvalidInputError("scenario has no [route] section")
    sc = cp["scenario"] if cp.has_section("scenario") else cp["DEFAULT"]
    mounts = {}
    for s in SENSORS:
        name = f"mount.{s}"
        if cp.has_section(name):
            m = cp[name]
            mounts[s] = Mount(_deg(m, "yaw_deg"), _deg(m, "pitch_deg"), _deg(m, "roll_deg"), m.getfloat("height", 0.0))
    noise_kw = {}
    if cp.has_section("noise"):
        for k, v in cp["noise"].items():
            if k.endswith("_deg"):
                noise_kw[k[:-4]] = math.radians(float(v))
            else:
                noise_kw[k] = float(v)
    rates = Rates(**{k: float(v) for k, v in cp["rates"].items()}) if cp.has_section("rates") else Rates()
    lidar = LidarSimConfig()
    if cp.has_section("lidar"):
        s = cp["lidar"]
        lidar = LidarSimConfig(
            s.getint("points", lidar.points),
            s.getfloat("r_min", lidar.r_min),
            s.getfloat("r_max", lidar.r_max),
            s.getfloat("clutter", lidar.clutter),
        )
    radar = RadarSimConfig()
    if cp.has_section("radar"):
        s = cp["radar"]
        radar = RadarSimConfig(
            _deg(s, "fov_deg", 120.0),
            s.getfloat("max_range", radar.max_range),
            s.getfloat("landmark_spacing", radar.landmark_spacing),
            (s.getfloat("lateral_min", radar.lateral[0]), s.getfloat("lateral_max", radar.lateral[1])),
            s.getint("movers", radar.movers),
            radar.mover_speed,
            s.getfloat("outlier_fraction", radar.outlier_fraction),
        )
    camera = CameraSimConfig()
    if cp.has_section("camera"):
        s = cp["camera"]
        camera = CameraSimConfig(
            s.getfloat("fx", camera.fx),
            s.getfloat("fy", camera.fy),
            s.getfloat("cx", camera.cx),
            s.getfloat("cy", camera.cy),
            s.getint("lines_per_frame", camera.lines_per_frame),
        )
    try:
        return ScenarioSpec(
            route=_parse_route(cp["route"].get("segments", "")),
            mounts=mounts,
            noise=NoiseSpec(**noise_kw),
            rates=rates,
            lidar=lidar,
            radar=radar,
            camera=camera,
            start=(sc.getfloat("x0", 0.0), sc.getfloat("y0", 0.0), _deg(sc, "heading0_deg")),
            turn_roll_gain=sc.getfloat("turn_roll_gain", 0.0),
            rng_seed=sc.getint("seed", 0),
        )
    except TypeError as exc:
        raise InvalidInputError(f"bad scenario file: {exc}") from exc


def truth_dict(spec: ScenarioSpec) -> dict:
    """Declared mounts and run metadata, in radians and degrees."""
    mounts = {}
    for s, m in spec.mounts.items():
        mounts[s] = {
            "yaw": m.yaw,
            "pitch": m.pitch,
            "roll": m.roll,
            "height": m.height,
            "yaw_deg": math.degrees(m.yaw),
            "pitch_deg": math.degrees(m.pitch),
            "roll_deg": math.degrees(m.roll),
        }
    return {
        "mounts": mounts,
        "duration": spec.duration,
        "seed": spec.rng_seed,
        "turn_roll_gain": spec.turn_roll_gain,
    }
