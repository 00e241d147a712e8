#!/usr/bin/env python3
"""Run repeated desk-scale batches and check the fitness ordering.

Each batch runs every system for 10 trials in world1 and the pen world
with its own master seed. Medians over batches are compared.
"""
import argparse
import statistics
import sys
from pathlib import Path

from idionet.harness import (SYSTEMS, UNSEEDED, ExperimentPlan, format_report, run_experiment, summarize,
                             write_csv)
from idionet.sim import Caps

WORLDS = ("world1", "pen")


def parse_args(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", required=True, help="seed file from evolve_seeds.py")
    p.add_argument("--batches", type=int, nargs="+", default=[1, 2, 3], help="master seed per batch")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--time-cap", type=float, default=4000.0, help="simulated seconds per trial")
    p.add_argument("--out-dir", default="desk_results")
    return p.parse_args(argv)


def cell(summary, system, world):
    return summary.cell(system, world, "R1" if system in UNSEEDED else None)


def main(argv=None) -> int:
    a = parse_args(argv)
    out = Path(a.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summaries = []
    for seed in a.batches:
        plan = ExperimentPlan(systems=SYSTEMS, worlds=WORLDS, trials=a.trials, seed=seed,
                              seed_file=a.seeds, random_set="R1", caps=Caps(a.time_cap)).validate()
        recs = run_experiment(plan)
        write_csv(out / f"batch{seed}.csv", recs)
        s = summarize(recs)
        (out / f"batch{seed}.txt").write_text(format_report(s))
        summaries.append(s)
        print(f"batch {seed} done")
    for world in WORLDS:
        f = {}
        for sys_ in SYSTEMS:
            vals = [cell(s, sys_, world).mean_f for s in summaries]
            f[sys_] = statistics.median(float("inf") if v is None else v for v in vals)
        fail = {sys_: statistics.median(cell(s, sys_, world).fail_total_pct for s in summaries) for sys_ in SYSTEMS}
        rate = statistics.median(cell(s, "SIE", world).mean_diff_rate for s in summaries)
        print(f"{world}: median f " + " ".join(f"{k}={v:.0f}" for k, v in f.items()))
        print(f"{world}: median failure % " + " ".join(f"{k}={v:.0f}" for k, v in fail.items()))
        print(f"{world}: SIE<SRL {f['SIE'] < f['SRL']}  SIE<UIE {f['SIE'] < f['UIE']}  "
              f"SIE<URL {f['SIE'] < f['URL']}  SIE fails least {all(fail['SIE'] <= v for v in fail.values())}  "
              f"SIE difference rate {rate:.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
