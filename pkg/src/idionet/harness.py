"""Experiment batches over the five systems, CSV records, and summary tables.

Systems: SIE (seeded, idiotypic), SRL (seeded, RL only), UIE (unseeded,
idiotypic), URL (unseeded, RL only) and HDC (hand-designed controller).

Plan files use the same line format as world files::

    systems SIE SRL UIE URL HDC
    worlds world1 pen
    trials 10
    seed 7
    seeds seeds.txt          # required when a seeded system is listed
    set R1                   # initial random repertoire label for U* systems
    time_cap 4000
    collision_cap 100
"""

from __future__ import annotations

import csv
import io
import json
import zlib
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Callable

import numpy as np

from .behaviors import HandDesigned
from .controller import ImmuneController
from .ga import SeedFile, read_seed
from .immune import ImmuneParams
from .sim import FAIL_BOTH, FAIL_COLLISIONS, FAIL_TIME, Caps, run_trial
from .stats import confidence
from .world import BUILTIN_WORLDS, build_world, load_template

SYSTEMS = ("SIE", "SRL", "UIE", "URL", "HDC")
SEEDED = ("SIE", "SRL")
UNSEEDED = ("UIE", "URL")
IDIOTYPIC = ("SIE", "UIE")

CSV_FIELDS = ("system", "set", "world", "trial", "tau", "c", "completed",
              "fail_reason", "f", "diff_rate", "rng_seed")

# comparison rows in the order of the significance table
PAIRS = (("SIE", "SRL"), ("SIE", "HDC"), ("SIE", "UIE"), ("SIE", "URL"),
         ("SRL", "UIE"), ("SRL", "URL"), ("UIE", "URL"))


class PlanError(ValueError):
    pass


@dataclass
class ExperimentPlan:
    systems: tuple = SYSTEMS
    worlds: tuple = ("world1", "pen")
    trials: int = 10
    seed: int = 0
    seed_file: str | None = None
    random_set: str = "R1"
    caps: Caps = field(default_factory=Caps)
    params: dict = field(default_factory=dict)   # ImmuneParams overrides

    def validate(self) -> "ExperimentPlan":
        bad = [s for s in self.systems if s not in SYSTEMS]
        if bad:
            raise PlanError(f"unknown system(s) {', '.join(bad)}; choose from {', '.join(SYSTEMS)}")
        for w in self.worlds:
            if w not in BUILTIN_WORLDS and not Path(w).is_file():
                raise PlanError(f"invalid world {w!r}; built-ins are {', '.join(BUILTIN_WORLDS)}")
        if self.trials < 1:
            raise PlanError("trials must be at least 1")
        if any(s in SEEDED for s in self.systems):
            if not self.seed_file:
                raise PlanError("seeded systems (SIE, SRL) need a seed file (--seeds)")
            if not Path(self.seed_file).is_file():
                raise PlanError(f"seed file not found: {self.seed_file}")
        return self


def parse_plan(text: str, source: str = "<plan>") -> ExperimentPlan:
    plan = ExperimentPlan()
    caps = Caps()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *args = line.split()
        try:
            if key == "systems":
                plan.systems = tuple(args)
            elif key == "worlds":
                plan.worlds = tuple(args)
            elif key == "trials":
                plan.trials = int(args[0])
            elif key == "seed":
                plan.seed = int(args[0])
            elif key == "seeds":
                plan.seed_file = args[0]
            elif key == "set":
                plan.random_set = args[0]
            elif key == "time_cap":
                caps.time = float(args[0])
            elif key == "collision_cap":
                caps.collisions = int(args[0])
            else:
                raise PlanError(f"{source}:{lineno}: unknown keyword {key!r}")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, PlanError):
                raise
            raise PlanError(f"{source}:{lineno}: bad value in {line!r}") from None
    plan.caps = caps
    return plan


def _key(*parts) -> list[int]:
    return [p if isinstance(p, int) else zlib.crc32(str(p).encode()) for p in parts]


def trial_seeds(master: int, system: str, world: str, trial: int) -> tuple[int, int]:
    """(world seed, controller seed) for one trial.

    The world seed ignores the system, so every system faces the same
    arenas and spawn poses for a given trial index.
    """
    w = np.random.SeedSequence(_key(master, "world", world, trial)).generate_state(1)[0]
    c = np.random.SeedSequence(_key(master, "ctl", system, world, trial)).generate_state(1)[0]
    return int(w), int(c)


def initial_set_seed(master: int, label: str) -> int:
    return int(np.random.SeedSequence(_key(master, "set", label)).generate_state(1)[0])


def make_controller(system: str, seed: SeedFile | None, ctl_seed: int, master: int,
                    random_set: str = "R1", overrides: dict | None = None):
    rng = np.random.default_rng(ctl_seed)
    if system == "HDC":
        return HandDesigned(rng)
    params = ImmuneParams(idiotypic=system in IDIOTYPIC, seeded=system in SEEDED, **(overrides or {}))
    if system in SEEDED:
        if seed is None:
            raise PlanError(f"{system} needs a seed file")
        return ImmuneController.seeded(seed, params, rng)
    initial = np.random.default_rng(initial_set_seed(master, random_set))
    return ImmuneController.unseeded(params, rng, initial_rng=initial)


@dataclass
class TrialRecord:
    system: str
    set: str
    world: str
    trial: int
    tau: float
    c: int
    completed: bool
    fail_reason: str
    f: float | None
    diff_rate: float
    rng_seed: int

    def row(self) -> dict:
        return {
            "system": self.system, "set": self.set, "world": self.world, "trial": self.trial,
            "tau": f"{self.tau:.3f}", "c": self.c, "completed": int(self.completed),
            "fail_reason": self.fail_reason, "f": "" if self.f is None else f"{self.f:.3f}",
            "diff_rate": f"{self.diff_rate:.6f}", "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_row(cls, row: dict) -> "TrialRecord":
        return cls(row["system"], row["set"], row["world"], int(row["trial"]), float(row["tau"]),
                   int(row["c"]), row["completed"] in ("1", "True", "true"), row["fail_reason"],
                   float(row["f"]) if row["f"] else None, float(row["diff_rate"]), int(row["rng_seed"]))


def run_one(system: str, world: str, trial: int, plan: ExperimentPlan, seed: SeedFile | None,
            trace: Callable[[dict], None] | None = None) -> TrialRecord:
    w_seed, c_seed = trial_seeds(plan.seed, system, world, trial)
    w_rng = np.random.default_rng(w_seed)
    spec = build_world(world, w_rng)
    ctl = make_controller(system, seed, c_seed, plan.seed, plan.random_set, plan.params)
    res = run_trial(ctl, spec, plan.caps, w_rng, trace=trace)
    label = plan.random_set if system in UNSEEDED else "-"
    return TrialRecord(system, label, world, trial, res.tau, res.c, res.completed, res.fail_reason,
                       res.fitness, res.idio_diff_rate, c_seed)


def run_experiment(plan: ExperimentPlan, progress: Callable[[TrialRecord], None] | None = None) -> list:
    """Run every (system, world, trial) cell of the plan; records come back sorted."""
    plan.validate()
    seed = read_seed(plan.seed_file) if any(s in SEEDED for s in plan.systems) else None
    records = []
    for system in plan.systems:
        for world in plan.worlds:
            for k in range(plan.trials):
                rec = run_one(system, world, k, plan, seed)
                records.append(rec)
                if progress:
                    progress(rec)
    return sort_records(records)


def sort_records(records) -> list:
    order = {s: i for i, s in enumerate(SYSTEMS)}
    return sorted(records, key=lambda r: (order.get(r.system, 99), r.set, r.world, r.trial))


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def write_csv(path, records) -> None:
    Path(path).write_text(records_to_csv(records))


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing CSV columns {sorted(missing)}")
        return [TrialRecord.from_row(row) for row in reader]


# --- summaries ---------------------------------------------------------------

NO_DATA = None


@dataclass
class CellSummary:
    n: int
    n_completed: int
    mean_c: float | None
    mean_tau: float | None
    mean_f: float | None
    fail_c_pct: float
    fail_tau_pct: float
    fail_total_pct: float
    mean_diff_rate: float


@dataclass
class StatsSummary:
    cells: dict                  # (system, set, world) -> CellSummary
    significance: dict = field(default_factory=dict)  # (a, b, set, world, metric) -> confidence %

    def cell(self, system: str, world: str, set_label: str | None = None) -> CellSummary | None:
        for (s, lbl, w), v in self.cells.items():
            if s == system and w == world and (set_label is None or lbl == set_label):
                return v
        return None


def _mean(xs):
    return float(np.mean(xs)) if len(xs) else NO_DATA


def summarize_cell(recs) -> CellSummary:
    done = [r for r in recs if r.completed]
    n = len(recs)
    fc = sum(r.fail_reason in (FAIL_COLLISIONS, FAIL_BOTH) for r in recs)
    ft = sum(r.fail_reason in (FAIL_TIME, FAIL_BOTH) for r in recs)
    tot = sum(not r.completed for r in recs)
    return CellSummary(
        n=n, n_completed=len(done),
        mean_c=_mean([r.c for r in done]),
        mean_tau=_mean([r.tau for r in done]),
        mean_f=_mean([r.f for r in done]),
        fail_c_pct=100.0 * fc / n if n else 0.0,
        fail_tau_pct=100.0 * ft / n if n else 0.0,
        fail_total_pct=100.0 * tot / n if n else 0.0,
        mean_diff_rate=float(np.mean([r.diff_rate for r in recs])) if n else 0.0,
    )


def _metric(r, metric):
    return {"c": r.c, "tau": r.tau, "f": r.f}[metric]


def summarize(records) -> StatsSummary:
    """Means over completed trials, failure rates by cause, pairwise confidences."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r.system, r.set, r.world), []).append(r)
    cells = {k: summarize_cell(v) for k, v in groups.items()}
    sig = {}
    worlds = sorted({r.world for r in records})
    sets = sorted({r.set for r in records if r.system in UNSEEDED}) or ["-"]
    for world in worlds:
        for a, b in PAIRS:
            for lbl in (sets if (a in UNSEEDED or b in UNSEEDED) else ["-"]):
                ra = groups.get((a, lbl if a in UNSEEDED else "-", world), [])
                rb = groups.get((b, lbl if b in UNSEEDED else "-", world), [])
                for metric in ("c", "tau", "f"):
                    xa = [_metric(r, metric) for r in ra if r.completed]
                    xb = [_metric(r, metric) for r in rb if r.completed]
                    if len(xa) >= 2 and len(xb) >= 2:
                        sig[a, b, lbl, world, metric] = confidence(xa, xb)
    return StatsSummary(cells, sig)


def diff_rate(records) -> float:
    """Mean per-trial idiotypic difference rate."""
    if not records:
        raise ValueError("no records")
    return float(np.mean([r.diff_rate for r in records]))


# --- text report -------------------------------------------------------------

def _fmt(v, spec="{:.0f}"):
    return "n/a" if v is None else spec.format(v)


def format_report(summary: StatsSummary) -> str:
    """Means, significance levels and failure rates as plain-text tables."""
    worlds = sorted({w for (_, _, w) in summary.cells})
    order = {s: i for i, s in enumerate(SYSTEMS)}
    keys = sorted({(s, l) for (s, l, _) in summary.cells}, key=lambda k: (order.get(k[0], 99), k[1]))
    out = []

    head = f"{'System':<7}{'Set':<5}" + "".join(f"{w:>21}" for w in worlds)
    sub = " " * 12 + "".join(f"{'c':>7}{'tau':>7}{'f':>7}" for _ in worlds)
    out += ["Mean c, tau and f (completed trials)", head, sub]
    for s, lbl in keys:
        row = f"{s:<7}{lbl:<5}"
        for w in worlds:
            cell = summary.cells.get((s, lbl, w))
            if cell is None:
                row += f"{'-':>7}" * 3
            else:
                row += f"{_fmt(cell.mean_c):>7}{_fmt(cell.mean_tau):>7}{_fmt(cell.mean_f):>7}"
        out.append(row)

    out += ["", "Significance levels, two-tailed Welch t-test (%)",
            f"{'Systems':<12}{'Set':<5}" + "".join(f"{w:>21}" for w in worlds),
            " " * 17 + "".join(f"{'c':>7}{'tau':>7}{'f':>7}" for _ in worlds)]
    pair_rows = sorted({(a, b, lbl) for (a, b, lbl, _, _) in summary.significance},
                       key=lambda k: (PAIRS.index((k[0], k[1])), k[2]))
    for a, b, lbl in pair_rows:
        row = f"{a + ' ' + b:<12}{lbl:<5}"
        for w in worlds:
            for metric in ("c", "tau", "f"):
                row += f"{_fmt(summary.significance.get((a, b, lbl, w, metric))):>7}"
        out.append(row)

    out += ["", "Failure rates (%)",
            f"{'System':<7}{'Set':<5}" + "".join(f"{w:>21}" for w in worlds),
            " " * 12 + "".join(f"{'c':>7}{'tau':>7}{'Tot':>7}" for _ in worlds)]
    for s, lbl in keys:
        row = f"{s:<7}{lbl:<5}"
        for w in worlds:
            cell = summary.cells.get((s, lbl, w))
            if cell is None:
                row += f"{'-':>7}" * 3
            else:
                row += f"{cell.fail_c_pct:>7.0f}{cell.fail_tau_pct:>7.0f}{cell.fail_total_pct:>7.0f}"
        out.append(row)

    idio = [(k, v) for k, v in summary.cells.items() if k[0] in IDIOTYPIC]
    if idio:
        out += ["", "Mean idiotypic difference rate"]
        for (s, lbl, w), v in sorted(idio):
            out.append(f"{s:<7}{lbl:<5}{w:<10}{v.mean_diff_rate:>8.3f}")
    return "\n".join(out) + "\n"


def trace_writer(fh) -> Callable[[dict], None]:
    """Sink writing one JSON object per tick."""
    def write(rec: dict) -> None:
        fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
    return write
