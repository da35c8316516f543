"""Propensity mean squared error, averaged over tables for multi-table releases."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.linear_model import LogisticRegression

from ..data import Dataset, Kind
from .binning import category_ids

# Above this many main-effect x interaction columns, interactions are dropped.
MAX_FEATURES = 4000


@dataclass(frozen=True)
class PmseResult:
    tables: tuple[tuple[str, ...], ...]
    values: tuple[float, ...]
    mean: float


def _blocks(orig: Dataset, syn: Dataset, columns: Sequence[str]) -> list[np.ndarray]:
    """Feature block per column for the pooled (orig then syn) rows."""
    blocks = []
    for c in columns:
        if orig.kind(c) is Kind.CATEGORICAL:
            o, s = category_ids(orig, syn, c)
            ids = np.concatenate([o, s])
            levels = np.unique(ids)
            block = (ids[:, None] == levels[None, :]).astype(np.float64)
        else:
            v = np.concatenate([orig.column(c), syn.column(c)])
            sd = v.std()
            block = ((v - v.mean()) / sd if sd > 0 else np.zeros_like(v))[:, None]
        blocks.append(block)
    return blocks


def design_matrix(orig: Dataset, syn: Dataset, columns: Sequence[str], interactions: bool = True) -> np.ndarray:
    blocks = _blocks(orig, syn, columns)
    feats = list(blocks)
    if interactions:
        n_inter = sum(a.shape[1] * b.shape[1] for a, b in itertools.combinations(blocks, 2))
        if sum(b.shape[1] for b in blocks) + n_inter <= MAX_FEATURES:
            for a, b in itertools.combinations(blocks, 2):
                feats.append((a[:, :, None] * b[:, None, :]).reshape(len(a), -1))
    return np.hstack(feats) if feats else np.zeros((orig.row_count + syn.row_count, 0))


def pmse_table(orig: Dataset, syn: Dataset, interactions: bool = True, C: float = 1.0) -> float:
    """pMSE of one synthetic table against the original projected to its columns."""
    if orig.row_count == 0 or syn.row_count == 0:
        raise ValueError("pMSE needs rows from both tables")
    columns = list(syn.columns)
    orig = orig.project(columns)
    X = design_matrix(orig, syn, columns, interactions)
    y = np.concatenate([np.zeros(orig.row_count), np.ones(syn.row_count)])
    c = syn.row_count / len(y)
    keep = X.std(axis=0) > 0
    X = X[:, keep]
    if X.shape[1] == 0:
        return 0.0
    model = LogisticRegression(C=C, max_iter=1000)
    model.fit(X, y)
    p = model.predict_proba(X)[:, 1]
    return float(np.mean((p - c) ** 2))


def pmse(orig: Dataset, syn_tables: Sequence[Dataset], interactions: bool = True) -> PmseResult:
    """Per-table pMSE and their arithmetic mean."""
    if not syn_tables:
        raise ValueError("no synthetic tables given")
    for t in syn_tables:
        extra = [c for c in t.columns if c not in orig.columns]
        if extra:
            raise KeyError(f"synthetic table has columns {extra} unknown to the original")
    vals = tuple(pmse_table(orig, t, interactions) for t in syn_tables)
    return PmseResult(tuple(tuple(t.columns) for t in syn_tables), vals, float(np.mean(vals)))
