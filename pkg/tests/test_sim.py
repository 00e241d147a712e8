import math

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from idionet.frames import CAMERA_FOV, IR_COLLISION, IR_OBSTACLE, STOP, TICK, SensorFrame, WheelCommand
from idionet.immune import classify_antigen
from idionet.sim import (
    COLUMN_ANGLES,
    FAIL_COLLISIONS,
    FAIL_ERROR,
    FAIL_TIME,
    Arena,
    Caps,
    CollisionCounter,
    RobotPose,
    SuccessDetector,
    fitness,
    ir_reading,
    run_trial,
    sense,
    step_kinematics,
)
from idionet.world import BODY_RADIUS, WorldSpec, build_world


def empty_world(w=2.0, h=2.0, circles=(), boxes=(), target=(1.9, 1.9, 0.05), wanderer=False):
    zone = (0.0, 0.0, w, h)
    return WorldSpec("test", w, h, list(circles), list(boxes), target, zone, zone if wanderer else None)


# --- kinematics --------------------------------------------------------------

class TestKinematics:
    def test_straight(self):
        p = step_kinematics(RobotPose(1.0, 1.0, 0.3), WheelCommand(200, 200))
        assert p.heading == 0.3
        d = 200 * 0.00683 * 0.0205 * TICK
        assert math.hypot(p.x - 1.0, p.y - 1.0) == pytest.approx(d)
        assert math.atan2(p.y - 1.0, p.x - 1.0) == pytest.approx(0.3)

    def test_spin_in_place(self):
        p = step_kinematics(RobotPose(1.0, 1.0, 0.0), WheelCommand(-150, 150))
        assert (p.x, p.y) == (1.0, 1.0) and p.heading > 0

    def test_stop(self):
        p0 = RobotPose(0.5, 0.7, -1.2)
        assert step_kinematics(p0, STOP) == p0

    def test_no_heading_drift(self):
        p = RobotPose(0.0, 0.0, 0.7)
        for _ in range(10000):
            p = step_kinematics(p, WheelCommand(333, 333))
        assert p.heading == 0.7

    @given(st.floats(-400, 400), st.floats(-400, 400), st.floats(-math.pi, math.pi))
    @example(-math.pi, -math.pi, -math.pi)
    def test_heading_wrapped(self, left, right, h):
        p = step_kinematics(RobotPose(1.0, 1.0, h), WheelCommand(left, right))
        assert -math.pi < p.heading <= math.pi


# --- sensing -----------------------------------------------------------------

class TestIR:
    def test_calibration(self):
        assert ir_reading(0.1) < IR_OBSTACLE <= ir_reading(0.099)
        assert ir_reading(0.0) >= IR_COLLISION
        assert ir_reading(0.12) == 0

    @given(st.floats(0, 0.2), st.floats(0, 0.2))
    def test_monotone(self, a, b):
        if a < b:
            assert ir_reading(a) >= ir_reading(b)

    def test_far_obstacle_is_clear(self):
        # pillar surface 0.12 m from the sensor face on the heading
        r = 0.05
        world = empty_world(circles=[(1.0 + BODY_RADIUS + 0.12 + r, 1.0, r)])
        frame = sense(Arena(world), RobotPose(1.0, 1.0, 0.0))
        assert max(frame.ir) < IR_OBSTACLE
        assert classify_antigen(frame) in (0, 1)

    def test_touching_left(self):
        # box flush against the body on the left (+90 degrees, sensor 5)
        world = empty_world(boxes=[(0.9, 1.0 + BODY_RADIUS, 1.1, 1.2)])
        frame = sense(Arena(world), RobotPose(1.0, 1.0, 0.0))
        assert frame.ir[5] >= IR_COLLISION
        assert classify_antigen(frame) == 7

    def test_wall_reading_matches_distance(self):
        world = empty_world()
        d = 0.05
        frame = sense(Arena(world), RobotPose(2.0 - BODY_RADIUS - d, 1.0, 0.0))
        # sensors at +-17 degrees sit on the body rim and see the wall obliquely
        a = math.radians(17)
        expected = ir_reading((d + BODY_RADIUS * (1 - math.cos(a))) / math.cos(a))
        assert frame.ir[0] == frame.ir[7] == expected


def lit_columns_oracle(dist, r, bearing=0.0):
    """Count 15 column centres that fall inside the disc's angular extent."""
    half = math.asin(r / dist)
    width = CAMERA_FOV / 15
    cols = [CAMERA_FOV / 2 - width * (k + 0.5) for k in range(15)]
    return sum(abs(a - bearing) <= half for a in cols)


class TestCamera:
    def test_column_layout(self):
        assert COLUMN_ANGLES[0] > 0 > COLUMN_ANGLES[-1]
        assert COLUMN_ANGLES[7] == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("dist", [0.2, 0.3, 0.35, 0.36, 0.5, 1.0])
    def test_rasterization_oracle(self, dist):
        r = 0.05
        world = empty_world(target=(1.0 + dist, 1.0, r))
        pixels, offset = Arena(world).camera(1.0, 1.0, 0.0)
        assert pixels == 3 * lit_columns_oracle(dist, r)
        if pixels:
            assert offset == pytest.approx(0.0, abs=1e-12)

    def test_success_distance(self):
        # centred, the blob exceeds 40 pixels only when all 15 columns are lit
        r = 0.05
        stop = r / math.sin(COLUMN_ANGLES[0])
        arena = lambda d: Arena(empty_world(target=(1.0 + d, 1.0, r)))
        assert arena(stop * 0.999).camera(1.0, 1.0, 0.0)[0] == 45
        assert arena(stop * 1.001).camera(1.0, 1.0, 0.0)[0] <= 40

    def test_offset_sign(self):
        r = 0.05
        world = empty_world(target=(1.5, 1.05, r))   # slightly to the left
        pixels, offset = Arena(world).camera(1.0, 1.0, 0.0)
        assert pixels > 0 and offset < 0

    def test_outside_fov(self):
        world = empty_world(target=(1.0, 1.5, 0.05))   # 90 degrees to the left
        assert Arena(world).camera(1.0, 1.0, 0.0) == (0, None)

    def test_occlusion(self):
        world = empty_world(circles=[(1.3, 1.0, 0.1)], target=(1.8, 1.0, 0.05))
        assert Arena(world).camera(1.0, 1.0, 0.0) == (0, None)
        # a robot in the line of sight also hides the target
        world = empty_world(target=(1.8, 1.0, 0.05))
        assert Arena(world).camera(1.0, 1.0, 0.0, others=[(1.3, 1.0)])[0] == 0


# --- trial bookkeeping -------------------------------------------------------

def test_debounce_held_contact():
    cc = CollisionCounter()
    for _ in range(50):
        cc.update(True)
    assert cc.count == 1
    cc.update(False)
    cc.update(True)
    assert cc.count == 2


def test_success_streak():
    det = SuccessDetector()
    fired = [det.update(p) for p in (41, 41, 39, 41, 41, 41)]
    assert fired == [False] * 5 + [True]


@pytest.mark.parametrize("c,tau,f", [(1, 562, 285.0), (0, 0, 0.0), (2, 659, 337.5)])
def test_fitness(c, tau, f):
    assert fitness(tau, c) == f


def test_max_ticks():
    assert Caps().max_ticks == 125000


def test_never_moves_fails_on_time():
    world = build_world("world1", np.random.default_rng(0))
    res = run_trial(lambda f: STOP, world, Caps(), np.random.default_rng(1))
    assert res.fail_time and not res.completed and res.fail_reason == FAIL_TIME
    assert res.tau == pytest.approx(4000.0) and res.ticks == 125000
    assert res.fitness is None


def test_collision_cap():
    # against a wall: push for 6 ticks, back off for 4, push again
    world = empty_world(w=0.5, h=0.5, target=(0.45, 0.45, 0.02))
    state = {"t": 0}

    def bump(frame):
        state["t"] += 1
        return WheelCommand(400, 400) if state["t"] % 10 < 6 else WheelCommand(-400, -400)

    res = run_trial(bump, world, Caps(time=200.0, collisions=5), np.random.default_rng(0),
                    start=(0.5 - BODY_RADIUS - 0.003, 0.25, 0.0))
    assert res.c == 6 and res.fail_collisions and res.fail_reason == FAIL_COLLISIONS


def test_controller_error_is_reported():
    world = build_world("pen", np.random.default_rng(0))

    def broken(frame):
        raise RuntimeError("boom")

    res = run_trial(broken, world, Caps(), np.random.default_rng(0))
    assert res.fail_reason == FAIL_ERROR and "boom" in res.error and not res.completed


def test_reaches_target_when_aimed():
    world = empty_world(target=(1.5, 1.0, 0.05))
    res = run_trial(lambda f: WheelCommand(300, 300), world, Caps(100.0), np.random.default_rng(0),
                    start=(0.5, 1.0, 0.0))
    assert res.completed and res.c == 0
    assert res.fitness == pytest.approx(res.tau / 2)


def test_pose_stays_in_bounds():
    world = build_world("pen", np.random.default_rng(3))
    poses = []

    def rec(r):
        poses.append((r["x"], r["y"]))

    rng = np.random.default_rng(4)
    run_trial(lambda f: WheelCommand(*rng.uniform(-400, 400, 2)), world, Caps(60.0), np.random.default_rng(5),
              trace=rec)
    xy = np.array(poses)
    assert xy.min() >= BODY_RADIUS - 1e-12 and xy.max() <= 1.26 - BODY_RADIUS + 1e-12


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_trial_deterministic(seed):
    world = build_world("pen", np.random.default_rng(seed))

    def ctl(rng):
        return lambda f: WheelCommand(*rng.uniform(-400, 400, 2))

    a = run_trial(ctl(np.random.default_rng(1)), world, Caps(30.0), np.random.default_rng(seed))
    b = run_trial(ctl(np.random.default_rng(1)), world, Caps(30.0), np.random.default_rng(seed))
    assert a == b
