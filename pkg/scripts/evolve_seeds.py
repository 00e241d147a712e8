#!/usr/bin/env python3
"""Evolve the five antibody sets used to seed SIE and SRL.

Thin wrapper over ``idionet evolve`` with the default GA settings.
"""
import argparse
import sys

from idionet.cli import main


def parse_args(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="seeds.txt")
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--world", default="world1")
    return p.parse_args(argv)


if __name__ == "__main__":
    a = parse_args()
    sys.exit(main(["-v", "evolve", "--out", a.out, "--seed", str(a.seed), "--world", a.world]))
