"""Independent reference implementations used by the tests.

Written with plain loops and no shared code from the package, so an error
in the vectorized implementation cannot hide in both places.
"""

from __future__ import annotations

import math


def select_bruteforce(P, I, m, k1=0.85, k2=1.10, b=100.0, N0=1000.0, k3=0.0, Phi=25.0):
    """Three-stage idiotypic selection evaluated term by term.

    Returns (beta, alpha, S2 list, lambda list).
    """
    x, y = len(P), len(P[0])
    alpha = 0
    for i in range(1, x):
        if P[i][m] > P[alpha][m]:
            alpha = i
    N = [[b * P[i][j] + N0 * (1 - k3) for j in range(y)] for i in range(x)]
    total = sum(sum(row) for row in N)
    C = [[Phi * N[i][j] / total for j in range(y)] for i in range(x)]
    S2 = []
    for i in range(x):
        eps = 0.0
        delta = 0.0
        for j in range(y):
            eps += (1 - P[i][j]) * I[alpha][j] * C[i][j] * C[alpha][j]
            delta += P[alpha][j] * I[i][j] * C[i][j] * C[alpha][j]
        S2.append(P[i][m] + k1 * eps - k2 * delta)
    N2 = [row[:] for row in N]
    for i in range(x):
        N2[i][m] = b * S2[i] + N0 * (1 - k3)
    total2 = sum(sum(row) for row in N2)
    lam = [Phi * N2[i][m] / total2 * S2[i] for i in range(x)]
    beta = 0
    for i in range(1, x):
        if lam[i] > lam[beta]:
            beta = i
    return beta, alpha, S2, lam


def welch_textbook(a, b):
    """Welch t, Welch-Satterthwaite df and two-tailed p via the regularized incomplete beta."""
    na, nb = len(a), len(b)
    ma, mb = sum(a) / na, sum(b) / nb
    va = sum((v - ma) ** 2 for v in a) / (na - 1)
    vb = sum((v - mb) ** 2 for v in b) / (nb - 1)
    sa, sb = va / na, vb / nb
    t = (ma - mb) / math.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa ** 2 / (na - 1) + sb ** 2 / (nb - 1))
    p = _betainc(df / 2, 0.5, df / (df + t * t))
    return t, df, p


def _betainc(a, b, x):
    """Regularized incomplete beta I_x(a, b) by Lentz's continued fraction."""
    if x <= 0:
        return 0.0
    if x >= 1:
        return 1.0
    lbeta = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
    front = math.exp(lbeta + a * math.log(x) + b * math.log(1 - x))
    if x > (a + 1) / (a + b + 2):
        return 1.0 - _betainc(b, a, 1 - x)
    tiny = 1e-300
    f, c, d = 1.0, 1.0, 0.0
    for i in range(400):
        m = i // 2
        if i == 0:
            num = 1.0
        elif i % 2 == 0:
            num = m * (b - m) * x / ((a + 2 * m - 1) * (a + 2 * m))
        else:
            num = -(a + m) * (a + b + m) * x / ((a + 2 * m) * (a + 2 * m + 1))
        d = 1.0 + num * d
        d = tiny if abs(d) < tiny else d
        d = 1.0 / d
        c = 1.0 + num / c
        c = tiny if abs(c) < tiny else c
        cd = c * d
        f *= cd
        if abs(1.0 - cd) < 1e-15:
            break
    return front * (f - 1.0) / a
