"""Kendall tau-b and pairwise correlation differences."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..data import Dataset


def _tied_pairs(sorted_vals: np.ndarray) -> int:
    """Number of tied pairs in an already sorted array."""
    if sorted_vals.size == 0:
        return 0
    change = np.flatnonzero(np.diff(sorted_vals) != 0)
    runs = np.diff(np.concatenate(([-1], change, [sorted_vals.size - 1])))
    return int((runs * (runs - 1) // 2).sum())


def _merge_count(a: list) -> int:
    """Inversion count of ``a`` via bottom-up merge sort (``a`` is consumed)."""
    n = len(a)
    buf = a[:]
    swaps = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if a[j] < a[i]:
                    buf[k] = a[j]
                    swaps += mid - i
                    j += 1
                else:
                    buf[k] = a[i]
                    i += 1
                k += 1
            buf[k:k + mid - i] = a[i:mid]
            k += mid - i
            buf[k:k + hi - j] = a[j:hi]
        a, buf = buf, a
        width *= 2
    return swaps


def kendall_tau_counts(x: Sequence[float], y: Sequence[float]) -> tuple[int, int, int, int, int]:
    """(n0, x-ties, y-ties, joint ties, discordant) in O(n log n)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    order = np.lexsort((y, x))
    xs, ys = x[order], y[order]
    n0 = n * (n - 1) // 2
    n1 = _tied_pairs(xs)
    # Joint ties: runs where both x and y repeat.
    same = (np.diff(xs) == 0) & (np.diff(ys) == 0)
    change = np.flatnonzero(~same)
    runs = np.diff(np.concatenate(([-1], change, [n - 1]))) if n else np.array([], dtype=int)
    n3 = int((runs * (runs - 1) // 2).sum())
    swaps = _merge_count(ys.tolist())
    n2 = _tied_pairs(np.sort(ys))
    return n0, n1, n2, n3, swaps


def kendall_tau(x: Sequence[float], y: Sequence[float]) -> float:
    """Tie-corrected Kendall tau-b.

    Returns 0.0 when either variable is constant; use :func:`is_constant`
    to tell that case apart from a true zero correlation.
    """
    if len(x) != len(y):
        raise ValueError("x and y must have equal length")
    if len(x) < 2:
        raise ValueError("need at least two points")
    n0, n1, n2, n3, swaps = kendall_tau_counts(x, y)
    denom = (n0 - n1) * (n0 - n2)
    if denom == 0:
        return 0.0
    # concordant - discordant = n0 - n1 - n2 + n3 - 2 * discordant
    num = n0 - n1 - n2 + n3 - 2 * swaps
    return num / math.sqrt(denom)


def is_constant(values: Sequence[float]) -> bool:
    values = np.asarray(values)
    return values.size == 0 or bool(np.all(values == values[0]))


@dataclass(frozen=True)
class CorrelationDiff:
    pair: tuple[str, str]
    tau_orig: float
    tau_syn: float
    diff: float
    flagged: bool = False


def correlation_diffs(orig: Dataset, syn_store, columns: Sequence[str] | None = None) -> list[CorrelationDiff]:
    """|tau_orig - tau_syn| for every unordered column pair.

    Each pair is read from the store's table for exactly that pair (or a
    projection of a superset table, per the store's fetch policy). Pairs
    where a column is constant in either table are flagged.
    """
    columns = list(columns or orig.columns)
    out = []
    for a, b in itertools.combinations(columns, 2):
        syn = syn_store.fetch([a, b])
        xo, yo = orig.column(a), orig.column(b)
        xs, ys = syn.column(a), syn.column(b)
        flagged = any(is_constant(v) for v in (xo, yo, xs, ys)) or syn.row_count < 2
        t_o = kendall_tau(xo, yo) if orig.row_count >= 2 else 0.0
        t_s = kendall_tau(xs, ys) if syn.row_count >= 2 else 0.0
        out.append(CorrelationDiff((a, b), t_o, t_s, abs(t_o - t_s), flagged))
    return out
