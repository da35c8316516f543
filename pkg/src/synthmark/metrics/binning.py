"""Shared value binning so original and synthetic tables land on one grid."""

from __future__ import annotations

import numpy as np

from ..data import Dataset, Kind

DEFAULT_BINS = 100


def bin_edges(orig: Dataset, column: str) -> tuple[float, float]:
    vals = orig.column(column)
    if vals.size == 0:
        return 0.0, 0.0
    return float(vals.min()), float(vals.max())


def bin_continuous(values: np.ndarray, lo: float, hi: float, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Equi-width bin index over [lo, hi]; out-of-range values go to the edge bins."""
    if hi <= lo:
        return np.zeros(len(values), dtype=np.int64)
    idx = np.floor((np.asarray(values) - lo) / (hi - lo) * bins).astype(np.int64)
    return np.clip(idx, 0, bins - 1)


def category_ids(orig: Dataset, syn: Dataset, column: str) -> tuple[np.ndarray, np.ndarray]:
    """Integer ids that agree on decoded value between the two tables."""
    o_cats = orig.encoding.categories[column]
    lookup = {v: i for i, v in enumerate(o_cats)}
    s_cats = syn.encoding.categories[column]
    remap = np.empty(len(s_cats), dtype=np.int64)
    extra = len(o_cats)
    for i, v in enumerate(s_cats):
        if v in lookup:
            remap[i] = lookup[v]
        else:
            remap[i] = lookup[v] = extra
            extra += 1
    o = orig.column(column).astype(np.int64)
    s = remap[syn.column(column).astype(np.int64)] if syn.row_count else np.zeros(0, dtype=np.int64)
    return o, s


def binned_pair(orig: Dataset, syn: Dataset, column: str, bins: int = DEFAULT_BINS) -> tuple[np.ndarray, np.ndarray]:
    """Bin ids of ``column`` in both tables: exact value for categoricals, equi-width bins otherwise."""
    if orig.kind(column) is Kind.CATEGORICAL:
        return category_ids(orig, syn, column)
    lo, hi = bin_edges(orig, column)
    return bin_continuous(orig.column(column), lo, hi, bins), bin_continuous(syn.column(column), lo, hi, bins)
