"""Antibody genomes: the six behaviour types and their attribute ranges."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

WANDER_SINGLE, WANDER_BOTH, FORWARD_TURN, STATIC_TURN, REVERSE_TURN, TRACK_MARKERS = range(6)
N_TYPES = 6

TYPE_NAMES = {
    WANDER_SINGLE: "wander single",
    WANDER_BOTH: "wander both",
    FORWARD_TURN: "forward turn",
    STATIC_TURN: "static turn",
    REVERSE_TURN: "reverse turn",
    TRACK_MARKERS: "track markers",
}

# (min, max) per attribute; None marks an attribute the type does not use.
# D is a flag: True means the type carries a left/right turn direction.
RANGES = {
    WANDER_SINGLE: dict(S=(50, 400), F=(10, 90), A=(10, 110), D=True, Rf=None, Ra=None),
    WANDER_BOTH: dict(S=(50, 400), F=(10, 90), A=(10, 110), D=False, Rf=(10, 90), Ra=(10, 110)),
    FORWARD_TURN: dict(S=(50, 400), F=None, A=(20, 200), D=True, Rf=None, Ra=None),
    STATIC_TURN: dict(S=(50, 100), F=None, A=(100, 100), D=True, Rf=None, Ra=None),
    REVERSE_TURN: dict(S=(300, 400), F=None, A=(20, 200), D=True, Rf=None, Ra=None),
    TRACK_MARKERS: dict(S=(50, 400), F=None, A=(0, 30), D=False, Rf=None, Ra=None),
}

_ATTR = {"S": "speed_S", "F": "freq_F", "A": "angle_A", "Rf": "rfreq_Rf", "Ra": "rangle_Ra"}

LEFT, RIGHT = "left", "right"


class GenomeError(ValueError):
    pass


@dataclass(frozen=True)
class AntibodyGenome:
    """One behaviour. Attributes a type does not use are ``None``."""

    type_T: int
    speed_S: float
    freq_F: float | None = None
    angle_A: float | None = None
    dir_D: str | None = None
    rfreq_Rf: float | None = None
    rangle_Ra: float | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> "AntibodyGenome":
        if self.type_T not in RANGES:
            raise GenomeError(f"unknown antibody type {self.type_T!r}")
        spec = RANGES[self.type_T]
        for key, name in _ATTR.items():
            value = getattr(self, name)
            bounds = spec[key]
            if bounds is None:
                if value is not None:
                    raise GenomeError(f"type {self.type_T} has no attribute {key}, got {value}")
                continue
            if value is None:
                raise GenomeError(f"type {self.type_T} requires attribute {key}")
            lo, hi = bounds
            if not lo <= value <= hi:
                raise GenomeError(f"type {self.type_T} attribute {key}={value} outside [{lo}, {hi}]")
        if spec["D"]:
            if self.dir_D not in (LEFT, RIGHT):
                raise GenomeError(f"type {self.type_T} needs dir_D left|right, got {self.dir_D!r}")
        elif self.dir_D is not None:
            raise GenomeError(f"type {self.type_T} has no turn direction, got {self.dir_D!r}")
        return self

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def random_genome(rng: np.random.Generator, type_filter: int | None = None) -> AntibodyGenome:
    """Draw a genome with a uniform type and uniform attributes within range."""
    t = int(rng.integers(N_TYPES)) if type_filter is None else int(type_filter)
    if t not in RANGES:
        raise GenomeError(f"unknown antibody type {t!r}")
    spec = RANGES[t]
    kw = {}
    for key, name in _ATTR.items():
        bounds = spec[key]
        if bounds is not None:
            lo, hi = bounds
            kw[name] = float(lo) if lo == hi else float(rng.uniform(lo, hi))
    if spec["D"]:
        kw["dir_D"] = LEFT if rng.random() < 0.5 else RIGHT
    return AntibodyGenome(type_T=t, **kw)


def attribute_bounds(type_T: int) -> dict[str, tuple[float, float]]:
    """Numeric attribute ranges of a type, keyed by field name."""
    spec = RANGES[type_T]
    return {name: spec[key] for key, name in _ATTR.items() if spec[key] is not None}
