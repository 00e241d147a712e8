"""Long-term learning: evolve antibody sets in simulation and store them as seeds.

Five isolated populations each contribute their best set. An individual is
one antibody per antigen; it is scored by driving a trial in which its own
antibody always answers the presenting antigen, while the same reward table
as the immune controller accumulates a cumulative score per antibody.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .behaviors import actuate
from .frames import SensorFrame, WheelCommand
from .genome import LEFT, RIGHT, AntibodyGenome, GenomeError, attribute_bounds, random_genome
from .immune import N_ANTIGENS, N_SETS, RLContext, classify_antigen, rl_score
from .sim import Caps, fitness, run_trial
from .world import WorldTemplate, build_world

log = logging.getLogger(__name__)

SEED_FORMAT_VERSION = 1


@dataclass
class Evaluation:
    tau: float
    c: int
    f: float
    L: tuple
    completed: bool


@dataclass
class Individual:
    genome_set: tuple          # N_ANTIGENS AntibodyGenome
    eval: Evaluation | None = None


@dataclass
class GAConfig:
    n_populations: int = N_SETS
    pop_size: int = 10
    mutation_rate: float = 0.05
    generations: int = 30
    elitism: int = 1
    tournament: int = 3
    # stop a population after this many generations without improvement; None disables
    patience: int | None = 5
    mutation_sigma: float = 0.1   # Gaussian step as a fraction of the attribute range
    trial_world: str = "world1"
    caps: Caps = field(default_factory=lambda: Caps(time=500.0, collisions=100))
    rho: float = 8.0
    # cumulative-score ceiling; keeps L * mu near phi for an average set
    L_max: float = 100.0

    def __post_init__(self):
        if self.n_populations < 1 or self.pop_size < 1:
            raise ValueError("need at least one population of one individual")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if not 0 <= self.elitism <= self.pop_size:
            raise ValueError("elitism must lie in [0, pop_size]")
        if self.generations < 0 or self.tournament < 1:
            raise ValueError("generations must be >= 0 and tournament >= 1")


class FixedSetController:
    """Degenerate one-set repertoire: antibody ``j`` answers antigen ``j``.

    Tracks the cumulative reward of every antibody, clipped to ``[0, L_max]``.
    """

    def __init__(self, genome_set, rng: np.random.Generator, L_max: float = 100.0):
        self.genome_set = tuple(genome_set)
        self.rng = rng
        self.L_max = L_max
        self.L = [0.0] * len(self.genome_set)
        self._prev = None

    def command(self, frame: SensorFrame) -> WheelCommand:
        m = classify_antigen(frame)
        if self._prev is not None:
            old_m, old_frame = self._prev
            r = rl_score(old_m, m, RLContext(frame.offset, max(old_frame.ir), max(frame.ir)))
            self.L[old_m] = min(max(self.L[old_m] + r, 0.0), self.L_max)
        self._prev = (m, frame)
        return actuate(self.genome_set[m], frame.sighting, self.rng)


def evaluate(ind: Individual, world, rng: np.random.Generator, caps: Caps = Caps(),
             rho: float = 8.0, L_max: float = 100.0) -> Individual:
    """Score an individual with one trial; a failed run is charged both caps."""
    spec = build_world(world, rng) if isinstance(world, (str, Path, WorldTemplate)) else world
    ctl = FixedSetController(ind.genome_set, rng.spawn(1)[0], L_max)
    res = run_trial(ctl, spec, caps, rng, rho=rho)
    if res.error is not None:
        raise RuntimeError(f"evaluation failed: {res.error}")
    if res.completed:
        tau, c = res.tau, res.c
    else:
        tau, c = caps.time, caps.collisions
    ev = Evaluation(tau, c, fitness(tau, c, rho), tuple(ctl.L), res.completed)
    return Individual(ind.genome_set, ev)


# --- variation ---------------------------------------------------------------

def mutate_genome(g: AntibodyGenome, rate: float, sigma: float, rng: np.random.Generator) -> AntibodyGenome:
    """Per-slot type replacement, then per-attribute clipped Gaussian steps."""
    if rng.random() < rate:
        return random_genome(rng)
    changes = {}
    for name, (lo, hi) in attribute_bounds(g.type_T).items():
        if hi > lo and rng.random() < rate:
            value = getattr(g, name) + rng.normal(0.0, sigma * (hi - lo))
            changes[name] = float(min(max(value, lo), hi))
    if g.dir_D is not None and rng.random() < rate:
        changes["dir_D"] = RIGHT if g.dir_D == LEFT else LEFT
    return replace(g, **changes) if changes else g


def crossover(a, b, rng: np.random.Generator) -> tuple:
    """Uniform crossover at antibody granularity."""
    pick = rng.random(len(a)) < 0.5
    return tuple(x if p else y for x, y, p in zip(a, b, pick))


def _tournament(pop: list, k: int, rng: np.random.Generator) -> Individual:
    idx = rng.integers(len(pop), size=k)
    return min((pop[i] for i in idx), key=lambda ind: ind.eval.f)


def random_individual(rng: np.random.Generator) -> Individual:
    return Individual(tuple(random_genome(rng) for _ in range(N_ANTIGENS)))


@dataclass
class EvolutionResult:
    best: list                 # best individual per population, sorted by fitness
    history: list              # history[p][g] = best fitness of population p after generation g
    generations_run: list


def _child_rng(rng: np.random.Generator) -> np.random.Generator:
    return np.random.default_rng(int(rng.integers(2**63)))


def evolve_population(cfg: GAConfig, rng: np.random.Generator, world=None, progress=None):
    world = cfg.trial_world if world is None else world

    def score(ind):
        return evaluate(ind, world, _child_rng(rng), cfg.caps, cfg.rho, cfg.L_max)

    pop = sorted((score(random_individual(rng)) for _ in range(cfg.pop_size)), key=lambda i: i.eval.f)
    history = [pop[0].eval.f]
    stale = 0
    for gen in range(cfg.generations):
        children = pop[:cfg.elitism]
        while len(children) < cfg.pop_size:
            a = _tournament(pop, cfg.tournament, rng)
            b = _tournament(pop, cfg.tournament, rng)
            genes = crossover(a.genome_set, b.genome_set, rng)
            genes = tuple(mutate_genome(g, cfg.mutation_rate, cfg.mutation_sigma, rng) for g in genes)
            children.append(score(Individual(genes)))
        pop = sorted(children, key=lambda i: i.eval.f)
        improved = pop[0].eval.f < history[-1]
        history.append(pop[0].eval.f)
        if progress:
            progress(gen, pop[0].eval)
        stale = 0 if improved else stale + 1
        if cfg.patience is not None and stale >= cfg.patience:
            break
    return pop, history


def evolve(cfg: GAConfig, rng: np.random.Generator, world=None, progress=None) -> EvolutionResult:
    """Evolve ``cfg.n_populations`` isolated populations; keep the best of each."""
    best, history, gens = [], [], []
    for p in range(cfg.n_populations):
        prng = _child_rng(rng)
        cb = None if progress is None else (lambda g, ev, p=p: progress(p, g, ev))
        pop, hist = evolve_population(cfg, prng, world, cb)
        best.append(pop[0])
        history.append(hist)
        gens.append(len(hist) - 1)
        log.info("population %d: best f=%.1f after %d generations", p, pop[0].eval.f, len(hist) - 1)
    order = sorted(range(len(best)), key=lambda k: best[k].eval.f)
    return EvolutionResult([best[k] for k in order], [history[k] for k in order], [gens[k] for k in order])


# --- seed files --------------------------------------------------------------

class SeedFormatError(ValueError):
    pass


@dataclass
class SeedFile:
    genome_sets: list          # x rows of N_ANTIGENS AntibodyGenome
    tau: list
    c: list
    L: list                    # x rows of N_ANTIGENS floats
    world: str = ""
    version: int = SEED_FORMAT_VERSION

    @classmethod
    def from_individuals(cls, inds, world: str = "") -> "SeedFile":
        return cls([list(i.genome_set) for i in inds], [i.eval.tau for i in inds],
                   [i.eval.c for i in inds], [list(i.eval.L) for i in inds], str(world))


_GENOME_KEYS = {"T": "type_T", "S": "speed_S", "F": "freq_F", "A": "angle_A",
                "D": "dir_D", "Rf": "rfreq_Rf", "Ra": "rangle_Ra"}


def format_seed(seed: SeedFile) -> str:
    """Text form of a seed file.

    One ``set`` line per antibody set followed by one ``antibody`` line per
    antigen; values are ``name=value`` pairs and floats use ``repr`` so the
    round trip is exact.
    """
    lines = [f"seedfile version={seed.version} world={seed.world or '-'} sets={len(seed.genome_sets)}"]
    for i, (row, tau, c, L) in enumerate(zip(seed.genome_sets, seed.tau, seed.c, seed.L)):
        lines.append(f"set index={i} tau={float(tau)!r} c={int(c)}")
        for j, (g, lj) in enumerate(zip(row, L)):
            parts = [f"antibody set={i} antigen={j}"]
            for key, name in _GENOME_KEYS.items():
                v = getattr(g, name)
                if v is not None:
                    parts.append(f"{key}={v if isinstance(v, (int, str)) else repr(float(v))}")
            parts.append(f"L={float(lj)!r}")
            lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def _pairs(tokens, where):
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise SeedFormatError(f"{where}: expected name=value, got {tok!r}")
        k, v = tok.split("=", 1)
        out[k] = v
    return out


def parse_seed(text: str, expected_sets: int = N_SETS) -> SeedFile:
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or not lines[0].startswith("seedfile"):
        raise SeedFormatError("missing 'seedfile' header line")
    head = _pairs(lines[0].split()[1:], "header")
    try:
        version = int(head.get("version", "0"))
    except ValueError:
        raise SeedFormatError(f"bad version {head.get('version')!r}") from None
    if version != SEED_FORMAT_VERSION:
        raise SeedFormatError(f"unsupported seed format version {version}")
    world = head.get("world", "-")
    sets: dict[int, dict] = {}
    for ln in lines[1:]:
        kind, *rest = ln.split()
        kv = _pairs(rest, kind)
        try:
            if kind == "set":
                i = int(kv["index"])
                tau, c = float(kv["tau"]), int(kv["c"])
                if not math.isfinite(tau) or tau <= 0:
                    raise SeedFormatError(f"set {i}: tau must be positive, got {tau}")
                if c < 0:
                    raise SeedFormatError(f"set {i}: negative collision count {c}")
                if i in sets:
                    raise SeedFormatError(f"set {i}: duplicate record")
                sets[i] = {"tau": tau, "c": c, "ab": {}}
            elif kind == "antibody":
                i, j = int(kv.pop("set")), int(kv.pop("antigen"))
                if i not in sets:
                    raise SeedFormatError(f"antibody for unknown set {i}")
                L = float(kv.pop("L"))
                attrs = {}
                for key, value in kv.items():
                    if key not in _GENOME_KEYS:
                        raise SeedFormatError(f"set {i} antigen {j}: unknown attribute {key!r}")
                    name = _GENOME_KEYS[key]
                    attrs[name] = int(value) if key == "T" else value if key == "D" else float(value)
                try:
                    genome = AntibodyGenome(**attrs)
                except (GenomeError, TypeError) as exc:
                    raise SeedFormatError(f"set {i} antigen {j}: {exc}") from None
                sets[i]["ab"][j] = (genome, L)
            else:
                raise SeedFormatError(f"unknown record type {kind!r}")
        except (KeyError, ValueError) as exc:
            if isinstance(exc, SeedFormatError):
                raise
            raise SeedFormatError(f"malformed {kind} record {ln!r}: {exc}") from None
    if len(sets) != expected_sets or sorted(sets) != list(range(expected_sets)):
        raise SeedFormatError(f"expected {expected_sets} sets, found {len(sets)}")
    genome_sets, tau, c, L = [], [], [], []
    for i in range(expected_sets):
        ab = sets[i]["ab"]
        if sorted(ab) != list(range(N_ANTIGENS)):
            raise SeedFormatError(f"set {i}: expected {N_ANTIGENS} antibodies, found {len(ab)}")
        genome_sets.append([ab[j][0] for j in range(N_ANTIGENS)])
        L.append([ab[j][1] for j in range(N_ANTIGENS)])
        tau.append(sets[i]["tau"])
        c.append(sets[i]["c"])
    return SeedFile(genome_sets, tau, c, L, "" if world == "-" else world, version)


def write_seed(path, seed: SeedFile) -> None:
    Path(path).write_text(format_seed(seed))


def read_seed(path) -> SeedFile:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"seed file not found: {p}")
    return parse_seed(p.read_text())
