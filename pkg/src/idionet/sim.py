"""Fixed-timestep 2D micro-simulator: kinematics, IR ring, camera, trial loop."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .behaviors import wanderer_policy
from .frames import (
    CAMERA_COLS,
    CAMERA_FOV,
    CAMERA_ROWS,
    IR_ANGLES,
    IR_MAX,
    IR_OBSTACLE,
    SPEED_UNIT,
    TICK,
    SensorFrame,
    WheelCommand,
)
from .world import BODY_RADIUS, WorldSpec, sample_pose

WHEEL_RADIUS = 0.0205
AXLE = 0.053
# readings fade to ~140 here; anything under IR_OBSTACLE is ignored downstream
IR_RANGE = 0.12
# reading = IR_MAX * exp(-d / IR_DECAY) crosses IR_OBSTACLE just inside 0.1 m;
# the half-unit offset keeps the floored reading at 0.1 m strictly below it
IR_DECAY = 0.1 / math.log(IR_MAX / (IR_OBSTACLE - 0.5))
SUCCESS_PIXELS = 40
SUCCESS_STREAK = 3
BROAD_CELL = 0.1

_COL_WIDTH = CAMERA_FOV / CAMERA_COLS
# column 0 is the left edge of the image, i.e. the largest CCW bearing
COLUMN_ANGLES = tuple(CAMERA_FOV / 2 - _COL_WIDTH * (k + 0.5) for k in range(CAMERA_COLS))
_IR_COS = tuple(math.cos(a) for a in IR_ANGLES)
_IR_SIN = tuple(math.sin(a) for a in IR_ANGLES)
_IR_DIRS = tuple(zip(_IR_COS, _IR_SIN))
_TWO_PI = 2.0 * math.pi


def ir_reading(d: float) -> int:
    """IR value for an obstacle ``d`` metres from the sensor face."""
    if d >= IR_RANGE:
        return 0
    return min(IR_MAX, int(IR_MAX * math.exp(-max(d, 0.0) / IR_DECAY)))


@dataclass(frozen=True, slots=True)
class RobotPose:
    x: float
    y: float
    heading: float
    radius: float = BODY_RADIUS


def _wrap(a: float) -> float:
    if a > math.pi or a <= -math.pi:
        a = (a + math.pi) % _TWO_PI - math.pi
        if a <= -math.pi:
            a += _TWO_PI
    return a


def _integrate(x: float, y: float, h: float, left: float, right: float, dt: float):
    vl = left * SPEED_UNIT * WHEEL_RADIUS
    vr = right * SPEED_UNIT * WHEEL_RADIUS
    v = 0.5 * (vl + vr)
    w = (vr - vl) / AXLE
    if v != 0.0:
        hm = h + 0.5 * w * dt
        x += v * dt * math.cos(hm)
        y += v * dt * math.sin(hm)
    return x, y, _wrap(h + w * dt)


def step_kinematics(pose: RobotPose, cmd: WheelCommand, dt: float = TICK) -> RobotPose:
    """Unicycle update of a differential-drive body; no collision handling."""
    x, y, h = _integrate(pose.x, pose.y, pose.heading, cmd.left, cmd.right, dt)
    return RobotPose(x, y, h, pose.radius)


# --- ray casts ---------------------------------------------------------------

def _ray_circle(sx, sy, dx, dy, cx, cy, r, t_max):
    ox, oy = sx - cx, sy - cy
    c = ox * ox + oy * oy - r * r
    if c <= 0.0:
        return 0.0
    b = ox * dx + oy * dy
    if b >= 0.0:
        return t_max
    disc = b * b - c
    if disc < 0.0:
        return t_max
    t = -b - math.sqrt(disc)
    return t if t < t_max else t_max


def _ray_box(sx, sy, dx, dy, box, t_max):
    x0, y0, x1, y1 = box
    t0, t1 = 0.0, t_max
    if dx != 0.0:
        a, b = (x0 - sx) / dx, (x1 - sx) / dx
        if a > b:
            a, b = b, a
        if a > t0:
            t0 = a
        if b < t1:
            t1 = b
    elif not x0 <= sx <= x1:
        return t_max
    if dy != 0.0:
        a, b = (y0 - sy) / dy, (y1 - sy) / dy
        if a > b:
            a, b = b, a
        if a > t0:
            t0 = a
        if b < t1:
            t1 = b
    elif not y0 <= sy <= y1:
        return t_max
    return t0 if t0 <= t1 else t_max


class Arena:
    """Static geometry of a world with a coarse cell index for local queries."""

    def __init__(self, world: WorldSpec):
        self.world = world
        self.width, self.height = world.width, world.height
        self.target = world.target
        # the target is solid too
        self.circles = list(world.circles) + [world.target]
        self.boxes = list(world.boxes)
        self.nx = max(1, int(math.ceil(self.width / BROAD_CELL)))
        self.ny = max(1, int(math.ceil(self.height / BROAD_CELL)))
        reach = BODY_RADIUS + IR_RANGE + BROAD_CELL
        self.cells = {}
        for ix in range(self.nx):
            for iy in range(self.ny):
                cx, cy = (ix + 0.5) * BROAD_CELL, (iy + 0.5) * BROAD_CELL
                circ = tuple(c for c in self.circles
                             if math.hypot(cx - c[0], cy - c[1]) <= reach + c[2])
                box = tuple(b for b in self.boxes if _box_dist(cx, cy, b) <= reach)
                self.cells[ix, iy] = (circ, box)
        self._wall_reach = BODY_RADIUS + IR_RANGE

    def nearby(self, x: float, y: float):
        ix = min(self.nx - 1, max(0, int(x / BROAD_CELL)))
        iy = min(self.ny - 1, max(0, int(y / BROAD_CELL)))
        return self.cells[ix, iy]

    def blocked(self, x: float, y: float, others=()) -> bool:
        r = BODY_RADIUS
        if x < r or y < r or x > self.width - r or y > self.height - r:
            return True
        circles, boxes = self.nearby(x, y)
        for cx, cy, cr in circles:
            rr = cr + r
            dx, dy = x - cx, y - cy
            if dx * dx + dy * dy < rr * rr:
                return True
        for x0, y0, x1, y1 in boxes:
            dx = x - (x0 if x < x0 else x1 if x > x1 else x)
            dy = y - (y0 if y < y0 else y1 if y > y1 else y)
            if dx * dx + dy * dy < r * r:
                return True
        rr = 4.0 * r * r
        for ox, oy in others:
            if (x - ox) ** 2 + (y - oy) ** 2 < rr:
                return True
        return False

    def ir(self, x: float, y: float, h: float, others=()) -> tuple:
        """Eight IR readings for a robot at (x, y, h); ``others`` are robot centres."""
        cell_circles, cell_boxes = self.nearby(x, y)
        r = BODY_RADIUS
        reach = r + IR_RANGE
        circles = [c for c in cell_circles if (c[0] - x) ** 2 + (c[1] - y) ** 2 < (reach + c[2]) ** 2]
        circles += [(ox, oy, r) for ox, oy in others
                    if (ox - x) ** 2 + (oy - y) ** 2 < (reach + r) ** 2]
        boxes = [b for b in cell_boxes
                 if b[0] - reach < x < b[2] + reach and b[1] - reach < y < b[3] + reach]
        wr = self._wall_reach
        walls = x < wr or y < wr or x > self.width - wr or y > self.height - wr
        if not circles and not boxes and not walls:
            return (0,) * 8
        ch, sh = math.cos(h), math.sin(h)
        W, H = self.width, self.height
        exp, sqrt = math.exp, math.sqrt
        rng_max, decay = IR_RANGE, IR_DECAY
        out = []
        for ca, sa in _IR_DIRS:
            dx = ch * ca - sh * sa
            dy = sh * ca + ch * sa
            sx, sy = x + r * dx, y + r * dy
            t = rng_max
            if walls:
                if dx > 1e-12:
                    u = (W - sx) / dx
                elif dx < -1e-12:
                    u = -sx / dx
                else:
                    u = t
                if u < t:
                    t = u
                if dy > 1e-12:
                    u = (H - sy) / dy
                elif dy < -1e-12:
                    u = -sy / dy
                else:
                    u = t
                if u < t:
                    t = u
            for cx, cy, cr in circles:
                ox, oy = sx - cx, sy - cy
                c = ox * ox + oy * oy - cr * cr
                if c <= 0.0:
                    t = 0.0
                    continue
                b = ox * dx + oy * dy
                if b < 0.0:
                    disc = b * b - c
                    if disc >= 0.0:
                        u = -b - sqrt(disc)
                        if u < t:
                            t = u
            for b in boxes:
                t = _ray_box(sx, sy, dx, dy, b, t)
            if t <= 0.0:
                out.append(IR_MAX)
            elif t >= rng_max:
                out.append(0)
            else:
                out.append(int(IR_MAX * exp(-t / decay)))
        return tuple(out)

    def camera(self, x: float, y: float, h: float, others=()) -> tuple[int, float | None]:
        """Pixel count and normalized horizontal offset of the target blob."""
        tx, ty, tr = self.target
        dx, dy = tx - x, ty - y
        dist = math.hypot(dx, dy)
        if dist <= tr:
            return CAMERA_COLS * CAMERA_ROWS, 0.0
        bearing = _wrap(math.atan2(dy, dx) - h)
        half = math.asin(tr / dist)
        fov = CAMERA_FOV / 2
        if bearing - half > fov or bearing + half < -fov:
            return 0, None
        occluders = self._occluders(x, y, h, dist, bearing, half, others)
        lit = []
        for k, a in enumerate(COLUMN_ANGLES):
            if abs(a - bearing) <= half and not any(lo <= a <= hi for lo, hi in occluders):
                lit.append(k)
        if not lit:
            return 0, None
        centre = (CAMERA_COLS - 1) / 2
        offset = (sum(lit) / len(lit) - centre) / centre
        return len(lit) * CAMERA_ROWS, offset

    def _occluders(self, x, y, h, dist, bearing, half, others):
        """Angular intervals (relative to heading) of shapes nearer than the target."""
        spans = []
        lo_t, hi_t = bearing - half, bearing + half
        for cx, cy, cr in self.circles[:-1] + [(ox, oy, BODY_RADIUS) for ox, oy in others]:
            d = math.hypot(cx - x, cy - y)
            if d - cr >= dist or d <= cr:
                continue
            b = _wrap(math.atan2(cy - y, cx - x) - h)
            w = math.asin(cr / d)
            if b + w >= lo_t and b - w <= hi_t:
                spans.append((b - w, b + w))
        for box in self.boxes:
            if _box_dist(x, y, box) >= dist:
                continue
            x0, y0, x1, y1 = box
            angs = [_wrap(math.atan2(cy - y, cx - x) - bearing - h) for cx, cy in
                    ((x0, y0), (x0, y1), (x1, y0), (x1, y1))]
            lo, hi = min(angs) + bearing, max(angs) + bearing
            if hi - lo < math.pi and hi >= lo_t and lo <= hi_t:
                spans.append((lo, hi))
        return spans


def _box_dist(x, y, box):
    x0, y0, x1, y1 = box
    dx = x - min(max(x, x0), x1)
    dy = y - min(max(y, y0), y1)
    return math.hypot(dx, dy)


def sense(arena: Arena, pose, others=(), tick: int = 0) -> SensorFrame:
    x, y, h = pose.x, pose.y, pose.heading
    ir = arena.ir(x, y, h, others)
    pixels, offset = arena.camera(x, y, h, others)
    return SensorFrame(ir, pixels, offset, tick)


# --- trial bookkeeping -------------------------------------------------------

class CollisionCounter:
    """Counts contact onsets; a contact held over many ticks counts once."""

    def __init__(self):
        self.count = 0
        self._touching = False

    def update(self, contact: bool) -> bool:
        onset = contact and not self._touching
        if onset:
            self.count += 1
        self._touching = contact
        return onset


class SuccessDetector:
    """Fires after three consecutive frames with more than 40 target pixels."""

    def __init__(self, pixels: int = SUCCESS_PIXELS, streak: int = SUCCESS_STREAK):
        self.pixels, self.streak = pixels, streak
        self.run = 0

    def update(self, pixel_count: int) -> bool:
        self.run = self.run + 1 if pixel_count > self.pixels else 0
        return self.run >= self.streak


@dataclass
class Caps:
    time: float = 4000.0
    collisions: int = 100

    @property
    def max_ticks(self) -> int:
        return math.ceil(self.time / TICK - 1e-9)


FAIL_TIME, FAIL_COLLISIONS, FAIL_BOTH, FAIL_ERROR = "time", "collisions", "both", "error"


@dataclass
class TrialResult:
    tau: float
    c: int
    completed: bool
    fail_time: bool = False
    fail_collisions: bool = False
    idio_diff_rate: float = 0.0
    fitness: float | None = None
    ticks: int = 0
    error: str | None = None

    @property
    def fail_reason(self) -> str:
        if self.error is not None:
            return FAIL_ERROR
        if self.fail_time and self.fail_collisions:
            return FAIL_BOTH
        if self.fail_time:
            return FAIL_TIME
        if self.fail_collisions:
            return FAIL_COLLISIONS
        return ""


def fitness(tau: float, c: int, rho: float = 8.0) -> float:
    """Trial cost: collisions weighted by ``rho`` plus time, halved. Lower is better."""
    return (rho * c + tau) / 2.0


def _as_policy(controller) -> Callable[[SensorFrame], WheelCommand]:
    if hasattr(controller, "command"):
        return controller.command
    if callable(controller):
        return controller
    raise TypeError("controller must be callable or expose command(frame)")


class _Body:
    __slots__ = ("x", "y", "heading")

    def __init__(self, x, y, h):
        self.x, self.y, self.heading = x, y, h


def _advance(arena: Arena, body: _Body, cmd: WheelCommand, others) -> bool:
    """Move ``body`` one tick; a move that would penetrate leaves it in place. Returns contact."""
    x, y, h = _integrate(body.x, body.y, body.heading, cmd.left, cmd.right, TICK)
    body.heading = h
    if (x != body.x or y != body.y) and arena.blocked(x, y, others):
        return True
    body.x, body.y = x, y
    return False


def run_trial(controller, world: WorldSpec, caps: Caps = Caps(), rng: np.random.Generator | None = None,
              rho: float = 8.0, trace: Callable[[dict], None] | None = None,
              start: tuple[float, float, float] | None = None) -> TrialResult:
    """Run one mission until success or a cap.

    ``controller`` is a callable ``frame -> WheelCommand`` or an object with
    a ``command`` method. Spawn poses and the wandering robot draw from
    ``rng``; the controller owns its own randomness.
    """
    rng = np.random.default_rng() if rng is None else rng
    arena = Arena(world)
    policy = _as_policy(controller)
    tx, ty, _ = world.target
    if start is None:
        start = sample_pose(world, world.mission_zone, rng, min_target_distance=world.min_separation)
    mission = _Body(*start)
    wanderer = None
    if world.has_wanderer:
        wanderer = _Body(*sample_pose(world, world.wanderer_zone, rng, occupied=[(mission.x, mission.y)]))
        w_rng = rng.spawn(1)[0]
    collisions = CollisionCounter()
    done = SuccessDetector()
    max_ticks = caps.max_ticks

    def result(tick, completed, error=None):
        tau = tick * TICK
        c = collisions.count
        fail_c = c > caps.collisions
        fail_t = not completed and error is None and tick >= max_ticks
        diff = float(getattr(controller, "diff_rate", 0.0))
        return TrialResult(tau, c, completed, fail_t, fail_c, diff,
                           fitness(tau, c, rho) if completed else None, tick, error)

    for tick in range(max_ticks):
        mothers = ((wanderer.x, wanderer.y),) if wanderer else ()
        frame = SensorFrame(arena.ir(mission.x, mission.y, mission.heading, mothers),
                            *arena.camera(mission.x, mission.y, mission.heading, mothers), tick)
        if done.update(frame.pixel_count):
            return result(tick + 1, True)
        try:
            cmd = policy(frame)
        except Exception as exc:  # noqa: BLE001 - a broken controller ends the trial
            return result(tick, False, error=f"{type(exc).__name__}: {exc}")
        contact = _advance(arena, mission, cmd, mothers)
        if wanderer is not None:
            others = ((mission.x, mission.y),)
            wframe = SensorFrame(arena.ir(wanderer.x, wanderer.y, wanderer.heading, others))
            wcmd = wanderer_policy(wframe, w_rng)
            if _advance(arena, wanderer, wcmd, others):
                # the wanderer ran into the mission robot
                if (wanderer.x - mission.x) ** 2 + (wanderer.y - mission.y) ** 2 < (2 * BODY_RADIUS + 0.005) ** 2:
                    contact = True
        collisions.update(contact)
        if trace is not None:
            rec = {"tick": tick, "x": mission.x, "y": mission.y, "heading": mission.heading,
                   "pixels": frame.pixel_count, "left": cmd.left, "right": cmd.right}
            info = getattr(controller, "trace_info", None)
            if info is not None:
                rec.update(info())
            trace(rec)
        if collisions.count > caps.collisions:
            return result(tick + 1, False)
    return result(max_ticks, False)
