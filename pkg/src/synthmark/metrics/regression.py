"""Per-group OLS slope error between original and synthetic tables."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..data import Dataset
from .predicates import Predicate

MIN_GROUP_ROWS = 3


@dataclass(frozen=True)
class RegressionResult:
    group: str
    slope_orig: float
    slope_syn: float | None
    error: float | None
    syn_rows: int
    flagged: bool = False


def ols_slope(x: np.ndarray, y: np.ndarray) -> float:
    """Slope of the least-squares line y ~ a + b x."""
    x = np.asarray(x, dtype=np.float64)
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, np.asarray(y, dtype=np.float64), rcond=None)
    return float(coef[1])


def group_mask(ds: Dataset, filters: Sequence[tuple[str, Predicate]]) -> np.ndarray:
    mask = np.ones(ds.row_count, dtype=bool)
    for column, pred in filters:
        mask &= pred.mask(ds, column)
    return mask


def regression_slope_error(
    orig: Dataset,
    syn: Dataset,
    x_col: str,
    y_col: str,
    group_filters: Mapping[str, Sequence[tuple[str, Predicate]]] | None = None,
) -> list[RegressionResult]:
    """Slope error |S_o - S_s| of y on x for each named row group.

    ``group_filters`` maps a group label to (column, predicate) conditions;
    None means a single group holding every row.
    """
    group_filters = group_filters or {"all": []}
    out = []
    for label, filters in group_filters.items():
        mo = group_mask(orig, filters)
        if mo.sum() < MIN_GROUP_ROWS:
            raise ValueError(f"group {label!r} selects {int(mo.sum())} original rows; need {MIN_GROUP_ROWS}")
        s_o = ols_slope(orig.column(x_col)[mo], orig.column(y_col)[mo])
        ms = group_mask(syn, filters)
        xs, ys = syn.column(x_col)[ms], syn.column(y_col)[ms]
        n_s = int(ms.sum())
        if n_s < 2 or np.all(xs == xs[0]):
            out.append(RegressionResult(label, s_o, None, None, n_s, True))
            continue
        s_s = ols_slope(xs, ys)
        out.append(RegressionResult(label, s_o, s_s, abs(s_o - s_s), n_s, n_s < MIN_GROUP_ROWS))
    return out
