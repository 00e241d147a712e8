"""Turn antibody genomes into wheel commands; hand-designed and wanderer policies."""

from __future__ import annotations

import numpy as np

from .frames import SensorFrame, TargetSighting, WheelCommand
from .genome import (
    FORWARD_TURN,
    LEFT,
    REVERSE_TURN,
    STATIC_TURN,
    TRACK_MARKERS,
    WANDER_BOTH,
    WANDER_SINGLE,
    AntibodyGenome,
    GenomeError,
)
from .immune import (
    COLLISION_LEFT,
    COLLISION_REAR,
    COLLISION_RIGHT,
    OBSTACLE_LEFT,
    OBSTACLE_REAR,
    OBSTACLE_RIGHT,
    TARGET_SEEN,
    classify_antigen,
)


def _reduce(speed: float, percent: float) -> float:
    # reductions beyond 100% drive the wheel backwards
    return speed * (1.0 - percent / 100.0)


def _turn(speed: float, percent: float, side: str) -> WheelCommand:
    if side == LEFT:
        return WheelCommand(_reduce(speed, percent), speed)
    return WheelCommand(speed, _reduce(speed, percent))


def actuate(genome: AntibodyGenome, sighting: TargetSighting, rng: np.random.Generator) -> WheelCommand:
    """Wheel speeds for one tick of the behaviour encoded by ``genome``.

    Wander types draw an independent Bernoulli trial per tick for each of
    their turn frequencies, so ``rng`` advances only for types 0 and 1.
    """
    if not isinstance(genome, AntibodyGenome):
        raise GenomeError(f"expected an AntibodyGenome, got {type(genome).__name__}")
    t, s = genome.type_T, genome.speed_S
    if t == WANDER_SINGLE:
        if rng.random() * 100.0 < genome.freq_F:
            return _turn(s, genome.angle_A, genome.dir_D)
        return WheelCommand(s, s)
    if t == WANDER_BOTH:
        left = right = s
        if rng.random() * 100.0 < genome.freq_F:
            left = _reduce(s, genome.angle_A)
        if rng.random() * 100.0 < genome.rfreq_Rf:
            right = _reduce(s, genome.rangle_Ra)
        return WheelCommand(left, right)
    if t == FORWARD_TURN:
        return _turn(s, genome.angle_A, genome.dir_D)
    if t == STATIC_TURN:
        return _turn(s, 100.0, genome.dir_D)
    if t == REVERSE_TURN:
        return _turn(-s, genome.angle_A, genome.dir_D)
    if t == TRACK_MARKERS:
        if sighting.pixel_count == 0 or not sighting.offset:
            return WheelCommand(s, s)
        # target left of centre (offset < 0) slows the left wheel
        side = LEFT if sighting.offset < 0 else "right"
        return _turn(s, genome.angle_A * abs(sighting.offset), side)
    raise GenomeError(f"unknown antibody type {t}")


HDC_SPEED = 300.0
HDC_WANDER_STRAIGHT = 0.9
HDC_TRACK_GAIN = 30.0


class HandDesigned:
    """Fixed controller: wander, steer to the target, veer away from obstacles.

    Parameters
    ----------
    rng : numpy.random.Generator
        Source for the wander turns.
    seek_target : bool
        When False the target is ignored; used for the wandering robot.
    """

    def __init__(self, rng: np.random.Generator, seek_target: bool = True):
        self.rng = rng
        self.seek_target = seek_target

    def command(self, frame: SensorFrame) -> WheelCommand:
        return hand_designed(frame, self.rng, self.seek_target)


def hand_designed(frame: SensorFrame, rng: np.random.Generator, seek_target: bool = True) -> WheelCommand:
    m = classify_antigen(frame)
    s = HDC_SPEED
    if m == TARGET_SEEN and seek_target:
        off = frame.offset or 0.0
        side = LEFT if off < 0 else "right"
        return _turn(s, HDC_TRACK_GAIN * abs(off), side)
    if m <= TARGET_SEEN:
        if rng.random() < HDC_WANDER_STRAIGHT:
            return WheelCommand(s, s)
        side = LEFT if rng.random() < 0.5 else "right"
        return _turn(s, rng.uniform(20.0, 100.0), side)
    if m == OBSTACLE_RIGHT:
        return WheelCommand(0.0, s)
    if m == OBSTACLE_LEFT:
        return WheelCommand(s, 0.0)
    if m == OBSTACLE_REAR:
        return WheelCommand(s, s)
    # collisions: back away while swinging the front clear of the contact
    if m == COLLISION_RIGHT:
        return WheelCommand(-s, -0.5 * s)
    if m == COLLISION_LEFT:
        return WheelCommand(-0.5 * s, -s)
    assert m == COLLISION_REAR
    return WheelCommand(s, 0.5 * s)


def wanderer_policy(frame: SensorFrame, rng: np.random.Generator) -> WheelCommand:
    """Random wander with obstacle avoidance and no target seeking."""
    return hand_designed(frame, rng, seek_target=False)
