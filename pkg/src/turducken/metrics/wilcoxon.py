"""Two-sided Wilcoxon signed-rank test.

Zero differences are dropped; ties in |difference| receive midranks.  For
n <= 25 the p-value comes from the exact null distribution of the positive
rank sum (computed by dynamic programming over doubled ranks, so midranks
stay integral); for larger n a normal approximation with tie correction is
used.  The null distribution is symmetric, so the two-sided p-value is twice
the smaller tail, capped at 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

EXACT_LIMIT = 25


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # W+ = sum of ranks of positive differences
    p_value: float
    n_nonzero: int
    method: str  # "exact" | "normal" | "degenerate"

    @property
    def degenerate(self) -> bool:
        return self.method == "degenerate"


def _midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = (i + j + 2) / 2  # average of 1-based positions i+1..j+1
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def _exact_p(doubled_ranks: list[int], w2: int) -> float:
    """Two-sided exact p via the distribution of the doubled positive rank
    sum over all 2^n sign assignments (counted by DP)."""
    total = sum(doubled_ranks)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in doubled_ranks:
        for s in range(total, r - 1, -1):
            counts[s] += counts[s - r]
    n_assignments = float(2 ** len(doubled_ranks))
    lo = min(w2, total - w2)
    tail = sum(counts[: lo + 1]) / n_assignments
    return min(1.0, 2.0 * tail)


def _normal_p(ranks: list[float], w_plus: float) -> float:
    n = len(ranks)
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    # tie correction: subtract sum(t^3 - t)/48 over tie groups
    groups: dict[float, int] = {}
    for r in ranks:
        groups[r] = groups.get(r, 0) + 1
    var -= sum(t**3 - t for t in groups.values()) / 48.0
    if var <= 0:
        return 1.0
    # continuity correction of 0.5 keeps the approximation close to the
    # exact tail just past the crossover size
    deviation = max(abs(w_plus - mean) - 0.5, 0.0)
    z = deviation / math.sqrt(var)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def wilcoxon_signed_rank(paired_a: Sequence[float], paired_b: Sequence[float]) -> WilcoxonResult:
    """Test whether paired samples differ; symmetric in its arguments.

    All-zero differences are degenerate and return p = 1 with the
    ``degenerate`` flag set; fewer than 6 non-zero differences raise
    ValueError (the test has no power there).
    """
    if len(paired_a) != len(paired_b):
        raise ValueError("paired samples must have equal length")
    diffs = [a - b for a, b in zip(paired_a, paired_b) if a != b]
    if not diffs:
        return WilcoxonResult(statistic=0.0, p_value=1.0, n_nonzero=0, method="degenerate")
    if len(diffs) < 6:
        raise ValueError(f"need at least 6 non-zero differences, got {len(diffs)}")

    ranks = _midranks([abs(d) for d in diffs])
    w_plus = sum(r for r, d in zip(ranks, diffs) if d > 0)
    n = len(diffs)
    if n <= EXACT_LIMIT:
        doubled = [int(round(2 * r)) for r in ranks]
        p = _exact_p(doubled, int(round(2 * w_plus)))
        method = "exact"
    else:
        p = _normal_p(ranks, w_plus)
        method = "normal"
    return WilcoxonResult(statistic=w_plus, p_value=p, n_nonzero=n, method=method)
