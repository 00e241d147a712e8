"""Idiotypic immune network: antigens, paratope/idiotope matrices and selection.

The repertoire holds ``x`` antibody sets of ``y`` antibodies, one per antigen.
Rows index sets, columns index antigens throughout.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .frames import IR_COLLISION, IR_MAX, IR_OBSTACLE, LEFT_SENSORS, REAR_SENSORS, SensorFrame
from .genome import AntibodyGenome, random_genome

log = logging.getLogger(__name__)

N_SETS = 5
N_ANTIGENS = 8

TARGET_UNSEEN, TARGET_SEEN = 0, 1
OBSTACLE_RIGHT, OBSTACLE_REAR, OBSTACLE_LEFT = 2, 3, 4
COLLISION_RIGHT, COLLISION_REAR, COLLISION_LEFT = 5, 6, 7

ANTIGEN_NAMES = (
    "target unseen",
    "target seen",
    "obstacle right",
    "obstacle rear",
    "obstacle left",
    "collision right",
    "collision rear",
    "collision left",
)


class DegenerateColumnError(ValueError):
    """A column of the paratope matrix has zero mean and cannot be rescaled."""


@dataclass
class ImmuneParams:
    rho: float = 8.0
    phi: float = 20.0
    b: float = 100.0
    k1: float = 0.85
    k2: float = 1.10
    k3: float = 0.0
    Phi: float = 25.0
    N0: float = 1000.0
    idiotope_period: int = 120
    wander_limit: int = 250
    obstacle_limit: int = 15
    replace_threshold: float = 0.1
    penalty_idiotypic: float = 0.5
    penalty_plain: float = 1.0
    idiotypic: bool = True
    seeded: bool = True

    def __post_init__(self):
        for name in ("rho", "phi", "b", "k1", "k2", "k3", "Phi", "N0",
                     "replace_threshold", "penalty_idiotypic", "penalty_plain"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {value}")
        if self.phi == 0 or self.Phi == 0:
            raise ValueError("phi and Phi must be positive")

    @property
    def penalty(self) -> float:
        return self.penalty_idiotypic if self.idiotypic else self.penalty_plain


def classify_antigen(frame: SensorFrame) -> int:
    """Map a sensor frame to the single antigen presenting this tick."""
    ir = frame.ir
    v_max = max(ir)
    if v_max < IR_OBSTACLE:
        return TARGET_SEEN if frame.pixel_count > 0 else TARGET_UNSEEN
    k = ir.index(v_max)
    if k in LEFT_SENSORS:
        side = 2
    elif k in REAR_SENSORS:
        side = 1
    else:
        side = 0
    return (OBSTACLE_RIGHT if v_max < IR_COLLISION else COLLISION_RIGHT) + side


def is_obstacle(m: int) -> bool:
    return m >= OBSTACLE_RIGHT


# --- seeding -----------------------------------------------------------------

def relative_fitness(tau, c, rho: float = 8.0) -> np.ndarray:
    """Relative fitness of each seed set from its completion time and collisions."""
    cost = np.asarray(tau, dtype=float) + rho * np.asarray(c, dtype=float)
    if cost.ndim != 1 or cost.size == 0:
        raise ValueError("need a non-empty vector of set statistics")
    if np.any(~np.isfinite(cost)) or np.any(cost <= 0):
        raise ValueError(f"every tau + rho*c must be positive, got {cost.tolist()}")
    inv = 1.0 / cost
    return inv / inv.sum()


def paratope_from_seed(L, mu, phi: float = 20.0):
    """Scale cumulative RL scores by set fitness into [0, 1] paratope values."""
    if phi <= 0:
        raise ValueError("phi must be positive")
    return np.clip(np.asarray(L, dtype=float) * mu / phi, 0.0, 1.0)


# --- paratope / idiotope -----------------------------------------------------

def column_means(P: np.ndarray) -> np.ndarray:
    return P.sum(axis=0) / P.shape[0]


def rebuild_idiotope(P: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Flag below-mean antibodies, keeping one random flag per set."""
    sigma = column_means(P)
    cand = P < sigma
    I = np.zeros(P.shape)
    for i in range(P.shape[0]):
        cols = np.flatnonzero(cand[i])
        if cols.size == 1:
            I[i, cols[0]] = 1.0
        elif cols.size > 1:
            I[i, cols[rng.integers(cols.size)]] = 1.0
    return I


def renormalize(P: np.ndarray, sigma0: np.ndarray, column: int | None = None) -> np.ndarray:
    """Rescale columns so their means return to ``sigma0``, clamping at 1.

    With ``column`` given only that column is touched (an RL update changes
    the mean of one column only). Returns a new matrix.
    """
    out = P.copy()
    cols = range(P.shape[1]) if column is None else (column,)
    x = P.shape[0]
    for j in cols:
        sigma_t = out[:, j].sum() / x
        if sigma_t <= 0.0:
            raise DegenerateColumnError(f"column {j} has zero mean")
        scaled = out[:, j] * (sigma0[j] / sigma_t)
        if scaled.max() > 1.0:
            log.debug("renormalize clamped column %d (max %.4f)", j, scaled.max())
            np.minimum(scaled, 1.0, out=scaled)
        out[:, j] = scaled
    return out


# --- clone dynamics ----------------------------------------------------------

def clone_count(S, params: ImmuneParams):
    return params.b * S + params.N0 * (1.0 - params.k3)


def concentrations(N: np.ndarray, Phi: float = 25.0) -> np.ndarray:
    total = N.sum()
    if total <= 0:
        raise ValueError("clone counts must have a positive total")
    return Phi * N / total


def stage1_select(P: np.ndarray, m: int) -> int:
    """Highest paratope for antigen ``m``; ties go to the lowest set index."""
    return int(np.argmax(P[:, m]))


def stimulation(i: int, n: int, P, I, C, k1: float = 0.85) -> float:
    return float(k1 * np.sum((1.0 - P[i]) * I[n] * C[i] * C[n]))


def suppression(i: int, n: int, P, I, C, k2: float = 1.10) -> float:
    return float(k2 * np.sum(P[n] * I[i] * C[i] * C[n]))


@dataclass
class Selection:
    winner: int        # third-stage set index p (beta)
    alpha: int         # first-stage set index n (alpha)
    strength: np.ndarray   # (S_im)_2 for every set
    activation: np.ndarray  # lambda_im for every set

    @property
    def differs(self) -> bool:
        return self.winner != self.alpha


def idiotypic_select(P: np.ndarray, I: np.ndarray, m: int, params: ImmuneParams) -> Selection:
    """Three-stage selection for antigen ``m``.

    Stage one picks the highest paratope. Stage two adds the stimulation
    and subtracts the suppression exerted by that winner, stage three ranks
    the sets by concentration times adjusted strength.
    """
    n = stage1_select(P, m)
    N = clone_count(P, params)
    C = concentrations(N, params.Phi)
    Cn = C[n]
    eps = params.k1 * (((1.0 - P) * C) @ (I[n] * Cn))
    delta = params.k2 * ((I * C) @ (P[n] * Cn))
    S2 = P[:, m] + eps - delta
    N[:, m] = clone_count(S2, params)
    C2 = concentrations(N, params.Phi)
    lam = C2[:, m] * S2
    return Selection(int(np.argmax(lam)), n, S2, lam)


# --- reinforcement -----------------------------------------------------------

# fixed Table-style rewards keyed by (old class, new class); classes are
# 0 = target unseen, 1 = target seen, 2 = any obstacle or collision
_FIXED_REWARD = {
    (0, 0): 0.05,
    (1, 0): -0.10,
    (2, 0): 0.10,
    (0, 1): 0.10,
    (2, 1): 0.20,
    (0, 2): -0.05,
    (1, 2): -0.05,
}

OBSTACLE_REWARD_RANGE = (-0.40, 0.50)
TRACKING_REWARD_MAX = 0.05


@dataclass(frozen=True, slots=True)
class RLContext:
    """What the variable reward rows look at besides the antigen codes."""

    offset: float | None = None
    v_old: float = 0.0
    v_new: float = 0.0


def _rl_class(m: int) -> int:
    return m if m < 2 else 2


def rl_score(old_m: int, new_m: int, ctx: RLContext = RLContext()) -> float:
    """Reward for the antibody that acted while the antigen went old -> new."""
    if not (0 <= old_m < N_ANTIGENS and 0 <= new_m < N_ANTIGENS):
        raise ValueError(f"antigen codes must lie in 0..7, got ({old_m}, {new_m})")
    key = (_rl_class(old_m), _rl_class(new_m))
    fixed = _FIXED_REWARD.get(key)
    if fixed is not None:
        return fixed
    if key == (1, 1):
        off = 1.0 if ctx.offset is None else min(abs(ctx.offset), 1.0)
        return TRACKING_REWARD_MAX * (1.0 - off)
    # obstacle -> obstacle: graded by de-escalation and IR decrease
    lo, hi = OBSTACLE_REWARD_RANGE
    fell = ctx.v_new < ctx.v_old
    if old_m >= COLLISION_RIGHT and new_m < COLLISION_RIGHT and fell:
        g = 1.0
    elif (old_m >= COLLISION_RIGHT) == (new_m >= COLLISION_RIGHT) and fell:
        g = 0.5
    else:
        g = min(max((ctx.v_old - ctx.v_new) / IR_MAX, 0.0), 1.0)
    return lo + (hi - lo) * g


# --- repertoire --------------------------------------------------------------

@dataclass
class Repertoire:
    antibodies: list            # x rows of y AntibodyGenome
    P: np.ndarray
    sigma0: np.ndarray
    I: np.ndarray = None
    N: np.ndarray = None
    C: np.ndarray = None
    clamp_events: int = 0
    replacements: int = 0

    def __post_init__(self):
        x, y = self.P.shape
        if len(self.antibodies) != x or any(len(row) != y for row in self.antibodies):
            raise ValueError("antibody grid does not match the paratope matrix")
        if self.I is None:
            self.I = np.zeros((x, y))

    @property
    def shape(self) -> tuple[int, int]:
        return self.P.shape

    def refresh_clones(self, params: ImmuneParams) -> None:
        self.N = clone_count(self.P, params)
        self.C = concentrations(self.N, params.Phi)

    def renormalize_column(self, j: int) -> None:
        """Restore column ``j`` to its initial mean; columns with zero mean are left alone."""
        if self.sigma0[j] <= 0.0 or self.P[:, j].sum() <= 0.0:
            return
        col = self.P[:, j] * (self.sigma0[j] / (self.P[:, j].sum() / self.P.shape[0]))
        if col.max() > 1.0:
            self.clamp_events += 1
            np.minimum(col, 1.0, out=col)
        self.P[:, j] = col

    def copy(self) -> "Repertoire":
        return Repertoire(
            [list(row) for row in self.antibodies],
            self.P.copy(),
            self.sigma0.copy(),
            self.I.copy(),
            None if self.N is None else self.N.copy(),
            None if self.C is None else self.C.copy(),
            self.clamp_events,
            self.replacements,
        )


def init_unseeded(rng: np.random.Generator, x: int = N_SETS, y: int = N_ANTIGENS) -> Repertoire:
    """Random genomes with paratopes drawn from [0.25, 0.75]."""
    antibodies = [[random_genome(rng) for _ in range(y)] for _ in range(x)]
    P = rng.uniform(0.25, 0.75, size=(x, y))
    rep = Repertoire(antibodies, P, column_means(P))
    rep.I = rebuild_idiotope(rep.P, rng)
    return rep


def init_seeded(genome_sets, tau, c, L, params: ImmuneParams, rng: np.random.Generator) -> Repertoire:
    """Repertoire from evolved sets and their long-term statistics."""
    mu = relative_fitness(tau, c, params.rho)
    P = paratope_from_seed(np.asarray(L, dtype=float), mu[:, None], params.phi)
    rep = Repertoire([list(row) for row in genome_sets], P, column_means(P))
    rep.I = rebuild_idiotope(rep.P, rng)
    return rep


def apply_rl(rep: Repertoire, winner: tuple[int, int], r: float) -> Repertoire:
    """Add reward ``r`` to the antibody at ``winner``, clamp, and renormalize its column."""
    i, j = winner
    rep.P[i, j] = min(max(rep.P[i, j] + r, 0.0), 1.0)
    rep.renormalize_column(j)
    return rep


@dataclass
class StagnationCounters:
    wander: int = 0      # consecutive ticks on antigen 0
    obstacle: int = 0    # consecutive obstacle encounters without a clear frame

    def update(self, old_m: int | None, new_m: int) -> None:
        self.wander = self.wander + 1 if new_m == TARGET_UNSEEN else 0
        if is_obstacle(new_m):
            if new_m != old_m:
                self.obstacle += 1
        else:
            self.obstacle = 0


def stagnation_penalty(rep: Repertoire, winner: tuple[int, int], counters: StagnationCounters,
                       params: ImmuneParams) -> bool:
    """Penalize the active antibody when wandering or trapped too long.

    Returns True when a penalty fired; the counter that fired is reset.
    """
    fired = False
    if counters.wander > params.wander_limit:
        counters.wander = 0
        fired = True
    if counters.obstacle > params.obstacle_limit:
        counters.obstacle = 0
        fired = True
    if fired:
        i, j = winner
        rep.P[i, j] = max(rep.P[i, j] - params.penalty, 0.0)
        rep.renormalize_column(j)
    return fired


def replace_weak(rep: Repertoire, rng: np.random.Generator, params: ImmuneParams) -> int:
    """Swap every antibody below the replacement threshold for a fresh random one.

    A no-op for seeded repertoires. Returns the number of antibodies replaced.
    """
    if params.seeded or rep.P.min() >= params.replace_threshold:
        return 0
    weak = np.argwhere(rep.P < params.replace_threshold)
    for i, j in weak:
        rep.antibodies[i][j] = random_genome(rng)
        rep.P[i, j] = rng.uniform(0.25, 0.75)
    rep.replacements += len(weak)
    return len(weak)
