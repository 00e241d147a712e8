"""World templates, their text format, and per-trial instantiation.

World files are line oriented. Blank lines and ``#`` comments are ignored;
every other line is a keyword followed by whitespace separated values::

    name <identifier>
    bounds <width> <height>                    # arena is [0, w] x [0, h], metres
    pillar <x> <y> <radius>                    # fixed disc obstacle
    block <x0> <y0> <x1> <y1>                  # fixed axis-aligned box
    random_blocks <count> <min_side> <max_side>  # boxes placed anew every trial
    target_radius <r>
    target_zone <x0> <y0> <x1> <y1>            # centre of the target disc
    mission_zone <x0> <y0> <x1> <y1>           # mission robot spawn region
    wanderer_zone <x0> <y0> <x1> <y1>          # optional; omit for no wanderer
    min_separation <d>                         # optional mission-target distance

``bounds``, ``target_radius``, ``target_zone`` and ``mission_zone`` are
required. Zones are clipped to the arena.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

BODY_RADIUS = 0.037
GRID_RES = 0.02
CLEARANCE = 0.01
MAX_PLACEMENT_TRIES = 200

BUILTIN_WORLDS = ("world1", "world2", "pen")


class WorldFormatError(ValueError):
    pass


class WorldBuildError(RuntimeError):
    pass


Rect = tuple  # (x0, y0, x1, y1)


@dataclass
class WorldTemplate:
    name: str
    width: float
    height: float
    pillars: list = field(default_factory=list)
    blocks: list = field(default_factory=list)
    random_blocks: tuple | None = None
    target_radius: float = 0.05
    target_zone: Rect = None
    mission_zone: Rect = None
    wanderer_zone: Rect | None = None
    min_separation: float = 0.0


@dataclass
class WorldSpec:
    """A concrete arena for one trial."""

    name: str
    width: float
    height: float
    circles: list          # (x, y, r)
    boxes: list            # (x0, y0, x1, y1)
    target: tuple          # (x, y, r)
    mission_zone: Rect
    wanderer_zone: Rect | None
    min_separation: float = 0.0
    reachable: np.ndarray = field(default=None, repr=False)  # grid of free cells connected to the target

    @property
    def has_wanderer(self) -> bool:
        return self.wanderer_zone is not None

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        return ((ix + 0.5) * GRID_RES, (iy + 0.5) * GRID_RES)


# --- parsing -----------------------------------------------------------------

_ARITY = {
    "name": 1, "bounds": 2, "pillar": 3, "block": 4, "random_blocks": 3,
    "target_radius": 1, "target_zone": 4, "mission_zone": 4, "wanderer_zone": 4,
    "min_separation": 1,
}


def parse_world(text: str, source: str = "<world>") -> WorldTemplate:
    values: dict = {"pillar": [], "block": []}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *args = line.split()
        if key not in _ARITY:
            raise WorldFormatError(f"{source}:{lineno}: unknown keyword {key!r}")
        if len(args) != _ARITY[key]:
            raise WorldFormatError(f"{source}:{lineno}: {key} takes {_ARITY[key]} values, got {len(args)}")
        if key == "name":
            values["name"] = args[0]
            continue
        try:
            nums = tuple(float(a) for a in args)
        except ValueError:
            raise WorldFormatError(f"{source}:{lineno}: non-numeric value in {line!r}") from None
        if key in ("pillar", "block"):
            values[key].append(nums)
        else:
            values[key] = nums
    for key in ("bounds", "target_radius", "target_zone", "mission_zone"):
        if key not in values:
            raise WorldFormatError(f"{source}: missing required keyword {key!r}")
    w, h = values["bounds"]
    if w <= 0 or h <= 0:
        raise WorldFormatError(f"{source}: bounds must be positive")
    for x0, y0, x1, y1 in values["block"]:
        if x1 <= x0 or y1 <= y0:
            raise WorldFormatError(f"{source}: degenerate block {(x0, y0, x1, y1)}")
    rb = values.get("random_blocks")
    return WorldTemplate(
        name=values.get("name", Path(source).stem),
        width=w,
        height=h,
        pillars=values["pillar"],
        blocks=values["block"],
        random_blocks=None if rb is None else (int(rb[0]), rb[1], rb[2]),
        target_radius=values["target_radius"][0],
        target_zone=values["target_zone"],
        mission_zone=values["mission_zone"],
        wanderer_zone=values.get("wanderer_zone"),
        min_separation=values.get("min_separation", (0.0,))[0],
    )


def format_world(t: WorldTemplate) -> str:
    lines = [f"name {t.name}", f"bounds {t.width!r} {t.height!r}"]
    lines += [f"pillar {x!r} {y!r} {r!r}" for x, y, r in t.pillars]
    lines += ["block " + " ".join(repr(v) for v in b) for b in t.blocks]
    if t.random_blocks:
        n, lo, hi = t.random_blocks
        lines.append(f"random_blocks {n} {lo!r} {hi!r}")
    lines.append(f"target_radius {t.target_radius!r}")
    for key in ("target_zone", "mission_zone", "wanderer_zone"):
        zone = getattr(t, key)
        if zone is not None:
            lines.append(f"{key} " + " ".join(repr(v) for v in zone))
    if t.min_separation:
        lines.append(f"min_separation {t.min_separation!r}")
    return "\n".join(lines) + "\n"


def load_template(kind: str | Path) -> WorldTemplate:
    """Load a built-in world by name, or any world file by path."""
    if str(kind) in BUILTIN_WORLDS:
        text = resources.files("idionet").joinpath(f"worlds/{kind}.world").read_text()
        return parse_world(text, f"{kind}.world")
    path = Path(kind)
    if not path.is_file():
        raise WorldBuildError(f"unknown world {str(kind)!r}; built-ins are {', '.join(BUILTIN_WORLDS)}")
    return parse_world(path.read_text(), str(path))


# --- geometry helpers --------------------------------------------------------

def disc_hits_box(x: float, y: float, r: float, box) -> bool:
    x0, y0, x1, y1 = box
    dx = x - min(max(x, x0), x1)
    dy = y - min(max(y, y0), y1)
    return dx * dx + dy * dy < r * r


def disc_is_free(x: float, y: float, r: float, width: float, height: float, circles, boxes) -> bool:
    if x - r < 0 or y - r < 0 or x + r > width or y + r > height:
        return False
    for cx, cy, cr in circles:
        rr = cr + r
        if (x - cx) ** 2 + (y - cy) ** 2 < rr * rr:
            return False
    for b in boxes:
        if disc_hits_box(x, y, r, b):
            return False
    return True


def _free_mask(width: float, height: float, circles, boxes, r: float) -> np.ndarray:
    nx, ny = int(round(width / GRID_RES)), int(round(height / GRID_RES))
    xs = (np.arange(nx) + 0.5) * GRID_RES
    ys = (np.arange(ny) + 0.5) * GRID_RES
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    free = (X >= r) & (Y >= r) & (X <= width - r) & (Y <= height - r)
    for cx, cy, cr in circles:
        free &= (X - cx) ** 2 + (Y - cy) ** 2 >= (cr + r) ** 2
    for x0, y0, x1, y1 in boxes:
        dx = X - np.clip(X, x0, x1)
        dy = Y - np.clip(Y, y0, y1)
        free &= dx * dx + dy * dy >= r * r
    return free


def flood_reachable(free: np.ndarray, seeds) -> np.ndarray:
    """4-connected flood fill over ``free`` starting from cell indices ``seeds``."""
    seen = np.zeros_like(free, dtype=bool)
    q = deque()
    for s in seeds:
        if free[s] and not seen[s]:
            seen[s] = True
            q.append(s)
    nx, ny = free.shape
    while q:
        ix, iy = q.popleft()
        for jx, jy in ((ix + 1, iy), (ix - 1, iy), (ix, iy + 1), (ix, iy - 1)):
            if 0 <= jx < nx and 0 <= jy < ny and free[jx, jy] and not seen[jx, jy]:
                seen[jx, jy] = True
                q.append((jx, jy))
    return seen


def zone_cells(zone: Rect, shape: tuple[int, int]) -> tuple[slice, slice]:
    x0, y0, x1, y1 = zone
    nx, ny = shape
    ix0 = max(0, int(math.ceil(x0 / GRID_RES - 0.5)))
    iy0 = max(0, int(math.ceil(y0 / GRID_RES - 0.5)))
    ix1 = min(nx, int(math.floor(x1 / GRID_RES - 0.5)) + 1)
    iy1 = min(ny, int(math.floor(y1 / GRID_RES - 0.5)) + 1)
    return slice(ix0, ix1), slice(iy0, iy1)


def reachability(spec: WorldSpec) -> np.ndarray:
    """Cells where the robot centre fits and from which it can drive to the target."""
    tx, ty, tr = spec.target
    circles = spec.circles + [spec.target]
    free = _free_mask(spec.width, spec.height, circles, spec.boxes, BODY_RADIUS)
    nx, ny = free.shape
    reach = tr + BODY_RADIUS + 3 * GRID_RES
    seeds = []
    for ix in range(max(0, int((tx - reach) / GRID_RES)), min(nx, int((tx + reach) / GRID_RES) + 1)):
        for iy in range(max(0, int((ty - reach) / GRID_RES)), min(ny, int((ty + reach) / GRID_RES) + 1)):
            cx, cy = (ix + 0.5) * GRID_RES, (iy + 0.5) * GRID_RES
            if (cx - tx) ** 2 + (cy - ty) ** 2 <= reach * reach:
                seeds.append((ix, iy))
    return flood_reachable(free, seeds)


def _zone_ok(spec: WorldSpec, reach: np.ndarray, zone: Rect) -> bool:
    """Every free cell of the zone connects to the target, and the zone has some."""
    free = _free_mask(spec.width, spec.height, spec.circles + [spec.target], spec.boxes, BODY_RADIUS)
    sx, sy = zone_cells(zone, free.shape)
    zf, zr = free[sx, sy], reach[sx, sy]
    return bool(zr.any()) and bool(np.all(zr[zf]))


# --- instantiation -----------------------------------------------------------

def _uniform_in(rng: np.random.Generator, zone: Rect, margin: float, width: float, height: float):
    x0, y0, x1, y1 = zone
    x0, y0 = max(x0, margin), max(y0, margin)
    x1, y1 = min(x1, width - margin), min(y1, height - margin)
    if x1 < x0 or y1 < y0:
        raise WorldBuildError(f"zone {zone} too small for margin {margin}")
    return float(rng.uniform(x0, x1)), float(rng.uniform(y0, y1))


def build_world(kind: str | Path | WorldTemplate, rng: np.random.Generator) -> WorldSpec:
    """Instantiate a world: place the target and any random blocks, check reachability."""
    t = kind if isinstance(kind, WorldTemplate) else load_template(kind)
    full = (0.0, 0.0, t.width, t.height)
    for _ in range(MAX_PLACEMENT_TRIES):
        boxes = list(t.blocks)
        circles = list(t.pillars)
        if t.random_blocks:
            n, lo, hi = t.random_blocks
            for _ in range(n):
                for _ in range(MAX_PLACEMENT_TRIES):
                    sx, sy = rng.uniform(lo, hi, size=2)
                    cx, cy = _uniform_in(rng, full, max(sx, sy) / 2 + CLEARANCE, t.width, t.height)
                    box = (cx - sx / 2, cy - sy / 2, cx + sx / 2, cy + sy / 2)
                    if not any(_boxes_near(box, b, 2 * BODY_RADIUS + CLEARANCE) for b in boxes):
                        boxes.append(tuple(float(v) for v in box))
                        break
        tr = t.target_radius
        tx, ty = _uniform_in(rng, t.target_zone, tr + CLEARANCE, t.width, t.height)
        if not disc_is_free(tx, ty, tr + 2 * BODY_RADIUS + CLEARANCE, t.width, t.height, circles, boxes):
            continue
        spec = WorldSpec(t.name, t.width, t.height, circles, boxes, (tx, ty, tr),
                         t.mission_zone, t.wanderer_zone, t.min_separation)
        reach = reachability(spec)
        if not _zone_ok(spec, reach, t.mission_zone):
            continue
        spec.reachable = reach
        return spec
    raise WorldBuildError(f"could not place a reachable target in world {t.name!r}")


def _boxes_near(a, b, gap: float) -> bool:
    return not (a[2] + gap <= b[0] or b[2] + gap <= a[0] or a[3] + gap <= b[1] or b[3] + gap <= a[1])


def sample_pose(spec: WorldSpec, zone: Rect, rng: np.random.Generator, occupied=(),
                min_target_distance: float = 0.0) -> tuple[float, float, float]:
    """Random collision-free pose inside ``zone`` on a reachable cell."""
    tx, ty, tr = spec.target
    circles = spec.circles + [spec.target] + [(ox, oy, BODY_RADIUS) for ox, oy in occupied]
    sx, sy = zone_cells(zone, spec.reachable.shape)
    cells = np.argwhere(spec.reachable[sx, sy])
    if cells.size == 0:
        raise WorldBuildError(f"no reachable cell in zone {zone}")
    for _ in range(MAX_PLACEMENT_TRIES):
        ix, iy = cells[rng.integers(len(cells))]
        x = (ix + sx.start + rng.uniform(0.0, 1.0)) * GRID_RES
        y = (iy + sy.start + rng.uniform(0.0, 1.0)) * GRID_RES
        heading = float(rng.uniform(-math.pi, math.pi))
        if math.hypot(x - tx, y - ty) < min_target_distance:
            continue
        if disc_is_free(x, y, BODY_RADIUS + CLEARANCE, spec.width, spec.height, circles, spec.boxes):
            return float(x), float(y), heading
    raise WorldBuildError(f"could not place a robot in zone {zone}")
