"""Per-value count errors for single columns."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from ..data import Dataset, Kind
from .binning import DEFAULT_BINS, bin_continuous, bin_edges


@dataclass(frozen=True)
class UnivariateError:
    column: str
    value: str
    count_orig: int
    count_syn: int
    abs_error: float
    rel_error: float  # percent; inf when the value is absent from the original
    comp_error: float


def count_errors(count_orig: int, count_syn: int) -> tuple[float, float, float]:
    """(absolute, percent relative, composite) error for one value's counts."""
    e_abs = float(abs(count_orig - count_syn))
    if count_orig == 0:
        return e_abs, math.inf, e_abs
    e_rel = 100.0 * e_abs / count_orig
    return e_abs, e_rel, min(e_abs, e_rel)


def _labels(orig: Dataset, ds: Dataset, column: str, bins: int) -> list[str]:
    if orig.kind(column) is Kind.CATEGORICAL:
        return ds.decoded_column(column)
    lo, hi = bin_edges(orig, column)
    width = (hi - lo) / bins if hi > lo else 0.0
    return [f"[{lo + b * width:.6g},{lo + (b + 1) * width:.6g})"
            for b in bin_continuous(ds.column(column), lo, hi, bins)]


def univariate_errors(orig: Dataset, syn: Dataset, column: str, bins: int = DEFAULT_BINS) -> list[UnivariateError]:
    if column not in orig.columns or column not in syn.columns:
        raise KeyError(f"column {column!r} missing from one of the tables")
    c_o = Counter(_labels(orig, orig, column, bins))
    c_s = Counter(_labels(orig, syn, column, bins))
    out = []
    for value in sorted(set(c_o) | set(c_s)):
        e_abs, e_rel, e_comp = count_errors(c_o.get(value, 0), c_s.get(value, 0))
        out.append(UnivariateError(column, value, c_o.get(value, 0), c_s.get(value, 0), e_abs, e_rel, e_comp))
    return out
