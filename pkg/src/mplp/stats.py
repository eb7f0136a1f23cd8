"""Wilcoxon signed-rank test for paired samples.

Small samples (n < 10 after dropping zero differences) use the exact null
distribution of the positive-rank sum, computed by subset-sum counting over
the observed ranks (so ties are handled exactly).  Larger samples use the
normal approximation with a continuity correction and tie-corrected variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

EXACT_MAX_N = 9


@dataclass
class WilcoxonResult:
    n: int  # pairs remaining after dropping zero differences
    w_plus: float
    w_minus: float
    statistic: float  # min(w_plus, w_minus)
    z: float | None  # None under the exact method
    p_value: float
    method: str  # "exact" or "normal"


def _average_ranks(values: list[float]) -> list[float]:
    n = len(values)
    order = sorted(range(n), key=values.__getitem__)
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _exact_p(doubled_ranks: list[int], w_plus_doubled: int, n: int) -> float:
    total = sum(doubled_ranks)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in doubled_ranks:
        for s in range(total, r - 1, -1):
            counts[s] += counts[s - r]
    denom = 2**n
    cdf = sum(counts[: w_plus_doubled + 1])
    sf = sum(counts[w_plus_doubled:])
    return min(1.0, 2.0 * min(cdf, sf) / denom)


def wilcoxon_signed_rank(
    x: Sequence[float],
    y: Sequence[float] | None = None,
    mode: str = "auto",
) -> WilcoxonResult:
    """Two-tailed test on paired differences (x - y, or x itself if y is None).

    Zero differences are dropped.  Raises ValueError when nothing remains.
    """
    if y is not None:
        if len(x) != len(y):
            raise ValueError("paired samples must have equal length")
        diffs = [float(a) - float(b) for a, b in zip(x, y)]
    else:
        diffs = [float(a) for a in x]
    diffs = [d for d in diffs if d != 0.0]
    n = len(diffs)
    if n == 0:
        raise ValueError("degenerate test: all paired differences are zero")

    abs_diffs = [abs(d) for d in diffs]
    ranks = _average_ranks(abs_diffs)
    w_plus = sum(r for r, d in zip(ranks, diffs) if d > 0)
    w_total = n * (n + 1) / 2.0
    w_minus = w_total - w_plus

    if mode not in ("auto", "exact", "normal"):
        raise ValueError(f"unknown mode {mode!r}")
    use_exact = mode == "exact" or (mode == "auto" and n <= EXACT_MAX_N)

    if use_exact:
        doubled = [int(round(2.0 * r)) for r in ranks]
        p = _exact_p(doubled, int(round(2.0 * w_plus)), n)
        return WilcoxonResult(
            n=n,
            w_plus=w_plus,
            w_minus=w_minus,
            statistic=min(w_plus, w_minus),
            z=None,
            p_value=p,
            method="exact",
        )

    mu = n * (n + 1) / 4.0
    tie_term = 0.0
    seen: dict[float, int] = {}
    for v in abs_diffs:
        seen[v] = seen.get(v, 0) + 1
    for count in seen.values():
        tie_term += count**3 - count
    sigma2 = (n * (n + 1) * (2 * n + 1) - tie_term / 2.0) / 24.0
    sigma = math.sqrt(sigma2)
    centred = w_plus - mu
    if centred > 0:
        centred -= 0.5
    elif centred < 0:
        centred += 0.5
    z = centred / sigma if sigma > 0 else 0.0
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return WilcoxonResult(
        n=n,
        w_plus=w_plus,
        w_minus=w_minus,
        statistic=min(w_plus, w_minus),
        z=z,
        p_value=min(1.0, p),
        method="normal",
    )
