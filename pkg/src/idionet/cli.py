"""Command-line entry point: ``idionet {evolve,run,report,trace}``.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .ga import GAConfig, SeedFile, SeedFormatError, evolve, read_seed, write_seed
from .harness import (SEEDED, SYSTEMS, ExperimentPlan, PlanError, format_report, parse_plan,
                      read_csv, run_experiment, run_one, summarize, trace_writer, write_csv)
from .sim import Caps
from .world import BUILTIN_WORLDS, WorldBuildError, WorldFormatError

log = logging.getLogger("idionet")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _split(values):
    """Flatten repeated and comma-separated option values."""
    out = []
    for v in values or ():
        out += [p for p in v.split(",") if p]
    return tuple(out)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="idionet", description="Seeded idiotypic robot controllers in a 2-D simulator.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("evolve", help="evolve five seed antibody sets")
    e.add_argument("--out", required=True, help="seed file to write")
    e.add_argument("--seed", type=int, default=0, help="master RNG seed")
    e.add_argument("--world", default="world1", help="world used for fitness trials")
    e.add_argument("--generations", type=int, default=30)
    e.add_argument("--pop-size", type=int, default=10)
    e.add_argument("--populations", type=int, default=5)
    e.add_argument("--patience", type=int, default=5, help="stagnant generations before stopping; 0 disables")
    e.add_argument("--time-cap", type=float, default=None, help="seconds per fitness trial")

    r = sub.add_parser("run", help="run a batch of trials and write a CSV")
    r.add_argument("--config", help="plan file; flags override its values")
    r.add_argument("--system", action="append", help=f"one or more of {','.join(SYSTEMS)}")
    r.add_argument("--world", action="append", help=f"built-in ({','.join(BUILTIN_WORLDS)}) or a world file")
    r.add_argument("--trials", type=int)
    r.add_argument("--seeds", help="seed file for SIE/SRL")
    r.add_argument("--set", dest="random_set", help="initial random set label for UIE/URL (e.g. R1, R2)")
    r.add_argument("--time-cap", type=float)
    r.add_argument("--collision-cap", type=int)
    r.add_argument("--seed", type=int, help="master RNG seed")
    r.add_argument("--out", required=True, help="CSV file to write")

    q = sub.add_parser("report", help="summarize a CSV as text tables")
    q.add_argument("csv", help="records written by 'run'")
    q.add_argument("--out", help="write the report here instead of stdout")

    t = sub.add_parser("trace", help="run one trial and write a per-tick JSON-lines trace")
    t.add_argument("--system", required=True, choices=SYSTEMS)
    t.add_argument("--world", default="world1")
    t.add_argument("--trial", type=int, default=0, help="trial index (selects the arena and spawn)")
    t.add_argument("--seeds", help="seed file for SIE/SRL")
    t.add_argument("--set", dest="random_set", default="R1")
    t.add_argument("--time-cap", type=float, default=Caps().time)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True, help="trace file to write ('-' for stdout)")
    return p


def _plan_from_args(a) -> ExperimentPlan:
    plan = parse_plan(Path(a.config).read_text(), a.config) if a.config else ExperimentPlan()
    if a.system:
        plan.systems = _split(a.system)
    if a.world:
        plan.worlds = _split(a.world)
    if a.trials is not None:
        plan.trials = a.trials
    if a.seeds is not None:
        plan.seed_file = a.seeds
    if a.random_set is not None:
        plan.random_set = a.random_set
    if a.seed is not None:
        plan.seed = a.seed
    if a.time_cap is not None or a.collision_cap is not None:
        plan.caps = Caps(plan.caps.time if a.time_cap is None else a.time_cap,
                         plan.caps.collisions if a.collision_cap is None else a.collision_cap)
    if any(s in SEEDED for s in plan.systems) and not plan.seed_file:
        raise UsageError("seeded systems (SIE, SRL) need a seed file: pass --seeds <file>")
    return plan


def cmd_evolve(a) -> int:
    kw = {"generations": a.generations, "pop_size": a.pop_size, "n_populations": a.populations,
          "patience": a.patience or None, "trial_world": a.world}
    if a.time_cap is not None:
        kw["caps"] = Caps(a.time_cap, GAConfig().caps.collisions)
    cfg = GAConfig(**kw)

    def progress(p, g, ev):
        log.info("population %d generation %d best f=%.1f", p, g, ev.f)

    res = evolve(cfg, np.random.default_rng(a.seed), progress=progress)
    write_seed(a.out, SeedFile.from_individuals(res.best, a.world))
    for k, ind in enumerate(res.best):
        print(f"set {k}: f={ind.eval.f:.1f} tau={ind.eval.tau:.1f} c={ind.eval.c} "
              f"generations={res.generations_run[k]}")
    return EXIT_OK


def cmd_run(a) -> int:
    plan = _plan_from_args(a)

    def progress(rec):
        log.info("%s %s trial %d: %s", rec.system, rec.world, rec.trial,
                 "done" if rec.completed else rec.fail_reason)

    recs = run_experiment(plan, progress)
    write_csv(a.out, recs)
    print(f"wrote {len(recs)} records to {a.out}")
    return EXIT_OK


def cmd_report(a) -> int:
    text = format_report(summarize(read_csv(a.csv)))
    if a.out:
        Path(a.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_trace(a) -> int:
    if a.system in SEEDED and not a.seeds:
        raise UsageError(f"{a.system} needs a seed file: pass --seeds <file>")
    plan = ExperimentPlan(systems=(a.system,), worlds=(a.world,), trials=a.trial + 1, seed=a.seed,
                          seed_file=a.seeds, random_set=a.random_set, caps=Caps(a.time_cap))
    plan.validate()
    seed = read_seed(a.seeds) if a.system in SEEDED else None
    fh = sys.stdout if a.out == "-" else open(a.out, "w")
    try:
        rec = run_one(a.system, a.world, a.trial, plan, seed, trace=trace_writer(fh))
    finally:
        if fh is not sys.stdout:
            fh.close()
    print(f"{rec.system} {rec.world} trial {rec.trial}: tau={rec.tau:.2f} c={rec.c} "
          f"{'completed' if rec.completed else rec.fail_reason}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"evolve": cmd_evolve, "run": cmd_run, "report": cmd_report, "trace": cmd_trace}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[a.command](a)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"idionet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PlanError, SeedFormatError, WorldFormatError, WorldBuildError, OSError, ValueError) as exc:
        print(f"idionet: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
