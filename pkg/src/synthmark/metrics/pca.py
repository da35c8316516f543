"""Truncated principal components of the original, compared by two-sample KS."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import Dataset


def ks_statistic(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("KS statistic needs two non-empty samples")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


@dataclass(frozen=True)
class PcaResult:
    columns: tuple[str, ...]
    loadings: tuple[dict, ...]  # per component: column -> loading (nonzero only)
    eigenvalues: tuple[float, ...]
    ks: tuple[float, ...]
    ks_score: float


def principal_axes(z: np.ndarray, n_components: int, features_per_pc: int) -> tuple[np.ndarray, np.ndarray]:
    """Top eigenvectors of the covariance of ``z``, each cut to its largest loadings."""
    cov = np.cov(z, rowvar=False)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1][:n_components]
    axes = []
    for i in order:
        v = vecs[:, i].copy()
        if features_per_pc < v.size:
            drop = np.argsort(np.abs(v))[:-features_per_pc]
            v[drop] = 0.0
        v /= np.linalg.norm(v)
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        axes.append(v)
    return np.column_stack(axes), vals[order]


def usable_pca_columns(orig: Dataset) -> int:
    """Number of non-constant columns PCA can use."""
    return int(np.sum(orig.matrix.std(axis=0) > 0)) if orig.row_count else 0


def pca_compare(orig: Dataset, syn_full: Dataset, n_components: int = 5, features_per_pc: int = 5) -> PcaResult:
    """KS statistic between original and synthetic projections on each truncated PC."""
    missing = [c for c in orig.columns if c not in syn_full.columns]
    if missing:
        raise KeyError(f"synthetic table lacks columns {missing}")
    mean = orig.matrix.mean(axis=0)
    sd = orig.matrix.std(axis=0)
    usable = [c for c, s in zip(orig.columns, sd) if s > 0]
    need = max(n_components, features_per_pc)
    if len(usable) < need:
        raise ValueError(f"only {len(usable)} non-constant columns; need {need}")
    idx = [orig.index(c) for c in usable]
    zo = (orig.matrix[:, idx] - mean[idx]) / sd[idx]
    zs = (syn_full.project(usable).matrix - mean[idx]) / sd[idx]
    axes, eig = principal_axes(zo, n_components, features_per_pc)
    po, ps = zo @ axes, zs @ axes
    ks = tuple(ks_statistic(po[:, k], ps[:, k]) for k in range(axes.shape[1]))
    loadings = tuple(
        {c: float(w) for c, w in zip(usable, axes[:, k]) if w != 0.0} for k in range(axes.shape[1])
    )
    return PcaResult(tuple(usable), loadings, tuple(float(e) for e in eig), ks, float(np.mean(ks)))
