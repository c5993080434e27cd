"""Independent brute-force oracles used to cross-check the production code.

Everything here searches the full solution space directly and stays
deliberately ignorant of the dynamic programs it verifies.
"""
from __future__ import annotations

from typing import Mapping, Sequence


def brute_edit_distance(ref: Sequence, hyp: Sequence) -> int:
    """Minimal edit-script length by exhaustive enumeration: every monotone
    walk through the edit grid spells out a concrete script of matches,
    substitutions, deletions, and insertions, and we take the cheapest.

    Exponential on purpose; only call this on short sequences."""
    m, n = len(ref), len(hyp)
    best = m + n

    def walk(i: int, j: int, cost: int) -> None:
        nonlocal best
        if cost >= best:
            return
        if i == m and j == n:
            best = cost
            return
        if i < m and j < n:
            walk(i + 1, j + 1, cost + (0 if ref[i] == hyp[j] else 1))
        if i < m:
            walk(i + 1, j, cost + 1)  # deletion
        if j < n:
            walk(i, j + 1, cost + 1)  # insertion

    walk(0, 0, 0)
    return best


def enumerate_monotone_paths(m: int, n: int) -> list[list[tuple[int, int]]]:
    """All alignment paths from (0,0) to (m-1,n-1) stepping +1 in either or
    both coordinates."""
    paths: list[list[tuple[int, int]]] = []

    def walk(i: int, j: int, acc: list[tuple[int, int]]) -> None:
        acc = acc + [(i, j)]
        if i == m - 1 and j == n - 1:
            paths.append(acc)
            return
        if i + 1 < m and j + 1 < n:
            walk(i + 1, j + 1, acc)
        if i + 1 < m:
            walk(i + 1, j, acc)
        if j + 1 < n:
            walk(i, j + 1, acc)

    walk(0, 0, [])
    return paths


def brute_dtw_cost(local_cost) -> float:
    """Minimum total cost over all monotone alignment paths, by enumeration."""
    m = len(local_cost)
    n = len(local_cost[0])
    return min(
        sum(local_cost[i][j] for i, j in path)
        for path in enumerate_monotone_paths(m, n)
    )


def pairwise_auc(scores: Mapping[str, float], labels: Mapping[str, bool]) -> float:
    """Mann-Whitney statistic: P(s+ > s-) + 0.5 P(s+ = s-), all pairs."""
    pos = [scores[i] for i in scores if labels[i]]
    neg = [scores[i] for i in scores if not labels[i]]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))
