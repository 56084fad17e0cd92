"""Pure-Python kernels. Same API as the compiled ``_kernels`` module."""
from __future__ import annotations

import math

INF = math.inf


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    row = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        prev, row[0] = row[0], i
        for j, cb in enumerate(b, 1):
            cur = row[j]
            row[j] = min(cur + 1, row[j - 1] + 1, prev + (ca != cb))
            prev = cur
    return row[-1]


def nl_distance(a: str, b: str, tau: float) -> float:
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return min(1.0, levenshtein(a, b) / (tau * longest))


def nl_matrix(rows: list[str], cols: list[str], tau: float) -> list[list[float]]:
    return [[nl_distance(a, b, tau) for b in cols] for a in rows]


def hungarian(cost: list[list[float]]):
    """Minimum-cost perfect matching on a square matrix.

    Returns ``(assign, u, v)`` where ``assign[i]`` is the column of row ``i``
    and ``u``/``v`` are feasible duals: ``u[i] + v[j] <= cost[i][j]`` with
    equality on matched cells.
    """
    n = len(cost)
    if n == 0:
        return [], [], []
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            row = cost[i0 - 1]
            ui = u[i0]
            delta = INF
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = row[j - 1] - ui - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    assign = [0] * n
    for j in range(1, n + 1):
        assign[p[j] - 1] = j - 1
    return assign, u[1:], v[1:]
