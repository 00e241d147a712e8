"""Per-tick immune network controller (short-term learning)."""

from __future__ import annotations

import numpy as np

from .behaviors import actuate
from .frames import SensorFrame, WheelCommand
from .genome import AntibodyGenome
from .immune import (
    ImmuneParams,
    Repertoire,
    RLContext,
    StagnationCounters,
    apply_rl,
    classify_antigen,
    idiotypic_select,
    init_seeded,
    init_unseeded,
    rebuild_idiotope,
    replace_weak,
    rl_score,
    stage1_select,
    stagnation_penalty,
)


class ImmuneController:
    """Selects one antibody per sensor frame and learns from the outcome.

    Each tick the antibody that acted on the previous frame is scored from
    the antigen transition, the paratope column is renormalized, stagnation
    penalties and (unseeded only) replacement are applied, and a new
    antibody is chosen for the current antigen.
    """

    def __init__(self, repertoire: Repertoire, params: ImmuneParams, rng: np.random.Generator):
        self.rep = repertoire
        self.params = params
        self.rng = rng
        self.counters = StagnationCounters()
        self.ticks = 0
        self.selections = 0
        self.differences = 0
        self.rl_events = 0
        self.penalties = 0
        self._prev = None  # (set, antigen, frame) of the antibody that acted last
        self.last_antigen = None
        self.last_set = None
        self.last_r = None

    @classmethod
    def seeded(cls, seed, params: ImmuneParams, rng: np.random.Generator) -> "ImmuneController":
        rep = init_seeded(seed.genome_sets, seed.tau, seed.c, seed.L, params, rng)
        return cls(rep, params, rng)

    @classmethod
    def unseeded(cls, params: ImmuneParams, rng: np.random.Generator,
                 initial_rng: np.random.Generator | None = None) -> "ImmuneController":
        """Random repertoire; ``initial_rng`` pins the starting sets (R1, R2, ...)."""
        rep = init_unseeded(rng if initial_rng is None else initial_rng)
        return cls(rep, params, rng)

    @property
    def diff_rate(self) -> float:
        return self.differences / self.selections if self.selections else 0.0

    def step(self, frame: SensorFrame) -> AntibodyGenome:
        p = self.params
        rep = self.rep
        m = classify_antigen(frame)
        self.last_r = None
        if self._prev is not None:
            i, old_m, old_frame = self._prev
            r = rl_score(old_m, m, RLContext(frame.offset, max(old_frame.ir), max(frame.ir)))
            apply_rl(rep, (i, old_m), r)
            self.rl_events += 1
            self.last_r = r
            self.counters.update(old_m, m)
            if stagnation_penalty(rep, (i, old_m), self.counters, p):
                self.penalties += 1
            replace_weak(rep, self.rng, p)
        else:
            self.counters.update(None, m)
        if self.ticks % p.idiotope_period == 0:
            rep.I = rebuild_idiotope(rep.P, self.rng)
        self.ticks += 1
        if p.idiotypic and rep.P.shape[0] > 1:
            sel = idiotypic_select(rep.P, rep.I, m, p)
            winner = sel.winner
            if sel.differs:
                self.differences += 1
        else:
            winner = stage1_select(rep.P, m)
        self.selections += 1
        self._prev = (winner, m, frame)
        self.last_antigen, self.last_set = m, winner
        return rep.antibodies[winner][m]

    def command(self, frame: SensorFrame) -> WheelCommand:
        return actuate(self.step(frame), frame.sighting, self.rng)

    def trace_info(self) -> dict:
        return {"antigen": self.last_antigen, "antibody": self.last_set, "r": self.last_r}
