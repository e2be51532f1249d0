"""Two-sided Mann-Whitney U and Wilcoxon signed-rank tests.

Small samples use the exact permutation distribution of the (mid)rank
statistic, built by dynamic programming over doubled ranks so ties stay in
integer arithmetic. Larger samples fall back to the tie-corrected normal
approximation with continuity correction.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Sequence

MWU_EXACT_MAX = 25  # combined sample size
WILCOXON_EXACT_MAX = 20  # non-zero differences


def midranks(values: Sequence[float]) -> list[float]:
    """1-based ranks, ties get the mean of the positions they span."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        r = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = r
        i = j + 1
    return ranks


def _tie_term(values: Sequence[float]) -> int:
    return sum(t**3 - t for t in Counter(values).values())


def _subset_sum_counts(weights: Sequence[int], size: int) -> Counter:
    """Number of ``size``-subsets of ``weights`` reaching each total."""
    table: list[Counter] = [Counter() for _ in range(size + 1)]
    table[0][0] = 1
    for w in weights:
        for k in range(min(size, len(weights)), 0, -1):
            prev = table[k - 1]
            if not prev:
                continue
            cur = table[k]
            for s, c in prev.items():
                cur[s + w] += c
    return table[size]


def _signed_sum_counts(weights: Sequence[int]) -> Counter:
    """Number of sign patterns reaching each positive-part total."""
    dist = Counter({0: 1})
    for w in weights:
        nxt: Counter = Counter()
        for s, c in dist.items():
            nxt[s] += c
            nxt[s + w] += c
        dist = nxt
    return dist


def _normal_two_sided(deviation: float, sd: float) -> float:
    if sd <= 0:
        return 1.0
    z = max(0.0, abs(deviation) - 0.5) / sd
    return min(1.0, math.erfc(z / math.sqrt(2)))


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Return ``(U, p)``; ``U`` is the smaller of the two U statistics."""
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")
    pooled = list(a) + list(b)
    n = n1 + n2
    ranks = midranks(pooled)
    r_a = sum(ranks[:n1])
    u_a = r_a - n1 * (n1 + 1) / 2
    u = min(u_a, n1 * n2 - u_a)

    if n <= MWU_EXACT_MAX:
        doubled = [round(2 * r) for r in ranks]
        obs = sum(doubled[:n1])
        centre = n1 * (n + 1)  # doubled expected rank sum
        dev = abs(obs - centre)
        dist = _subset_sum_counts(doubled, n1)
        hits = sum(c for s, c in dist.items() if abs(s - centre) >= dev)
        return u, hits / math.comb(n, n1)

    var = n1 * n2 / 12 * ((n + 1) - _tie_term(pooled) / (n * (n - 1)))
    return u, _normal_two_sided(u_a - n1 * n2 / 2, math.sqrt(max(var, 0.0)))


def wilcoxon_signed_rank(paired_diffs: Sequence[float]) -> tuple[float, float]:
    """Return ``(W+, p)``; zero differences are discarded first."""
    d = [x for x in paired_diffs if x != 0]
    if not d:
        return 0.0, 1.0
    n = len(d)
    mags = [abs(x) for x in d]
    ranks = midranks(mags)
    w_plus = sum(r for r, x in zip(ranks, d) if x > 0)

    if n <= WILCOXON_EXACT_MAX:
        doubled = [round(2 * r) for r in ranks]
        total = sum(doubled)
        obs = sum(r for r, x in zip(doubled, d) if x > 0)
        dev = abs(2 * obs - total)
        dist = _signed_sum_counts(doubled)
        hits = sum(c for s, c in dist.items() if abs(2 * s - total) >= dev)
        return w_plus, hits / 2**n

    var = n * (n + 1) * (2 * n + 1) / 24 - _tie_term(mags) / 48
    return w_plus, _normal_two_sided(w_plus - n * (n + 1) / 4, math.sqrt(max(var, 0.0)))
