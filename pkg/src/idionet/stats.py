"""Two-sample statistics used by the report."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats as sps


def welch_t(a, b) -> tuple[float, float, float]:
    """Welch's unequal-variance t-test.

    Returns ``(t, df, p)`` with a two-tailed p-value. When both samples have
    zero variance the test degenerates: identical means give ``p = 1``,
    different means are an exact separation with ``p = 0`` and infinite t.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two observations")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("samples must be finite")
    na, nb = a.size, b.size
    va, vb = a.var(ddof=1) / na, b.var(ddof=1) / nb
    diff = a.mean() - b.mean()
    se2 = va + vb
    if se2 == 0.0:
        if diff == 0.0:
            return 0.0, float(na + nb - 2), 1.0
        return math.copysign(math.inf, diff), float(na + nb - 2), 0.0
    t = diff / math.sqrt(se2)
    # Welch-Satterthwaite in variance shares, so tiny variances cannot underflow
    wa, wb = va / se2, vb / se2
    df = 1.0 / (wa * wa / (na - 1) + wb * wb / (nb - 1))
    p = 2.0 * sps.t.sf(abs(t), df)
    return float(t), float(df), float(min(p, 1.0))


def confidence(a, b) -> float:
    """Two-tailed significance level in percent, ``100 * (1 - p)``."""
    return 100.0 * (1.0 - welch_t(a, b)[2])
