"""Per-tick data exchanged between the simulator and the controllers."""

from __future__ import annotations

import math
from dataclasses import dataclass

# control period (s)
TICK = 0.032

N_IR = 8
IR_MAX = 4095
IR_OBSTACLE = 250
IR_COLLISION = 2400

# e-puck style ray angles (rad, CCW from heading), indexed like ps0..ps7
IR_ANGLES = tuple(
    math.radians(a) for a in (-17.0, -49.0, -90.0, -150.0, 150.0, 90.0, 49.0, 17.0)
)
RIGHT_SENSORS = (0, 1, 2)
REAR_SENSORS = (3, 4)
LEFT_SENSORS = (5, 6, 7)

CAMERA_FOV = 0.3
CAMERA_COLS = 15
CAMERA_ROWS = 3
MAX_PIXELS = CAMERA_COLS * CAMERA_ROWS

MAX_WHEEL = 400.0
# wheel rotation per speed unit (rad/s)
SPEED_UNIT = 0.00683


@dataclass(frozen=True, slots=True)
class SensorFrame:
    """One sensor reading: 8 IR values, the blob size and its horizontal offset.

    ``offset`` is the normalized position of the lit columns in the camera
    image, -1 at the left edge and +1 at the right edge. It is ``None`` when
    no target pixel is lit.
    """

    ir: tuple
    pixel_count: int = 0
    offset: float | None = None
    tick: int = 0

    @property
    def v_max(self) -> float:
        return max(self.ir)

    @property
    def sighting(self) -> "TargetSighting":
        return TargetSighting(self.pixel_count, self.offset)


@dataclass(frozen=True, slots=True)
class TargetSighting:
    pixel_count: int = 0
    offset: float | None = None

    def __post_init__(self):
        if not 0 <= self.pixel_count <= MAX_PIXELS:
            raise ValueError(f"pixel_count {self.pixel_count} outside 0..{MAX_PIXELS}")
        if self.pixel_count > 0:
            if self.offset is None or not -1.0 <= self.offset <= 1.0:
                raise ValueError(f"offset {self.offset} outside [-1, 1]")


@dataclass(frozen=True, slots=True)
class WheelCommand:
    """Wheel speeds in speed units (1 unit = 0.00683 rad/s of wheel rotation)."""

    left: float
    right: float

    def __post_init__(self):
        if abs(self.left) > MAX_WHEEL + 1e-9 or abs(self.right) > MAX_WHEEL + 1e-9:
            raise ValueError(f"wheel command ({self.left}, {self.right}) exceeds {MAX_WHEEL}")


STOP = WheelCommand(0.0, 0.0)
