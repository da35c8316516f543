"""3-marginal density agreement (0-1000 score) and its sampling equivalent."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..data import Dataset
from ..store import SingleTableSource
from .binning import DEFAULT_BINS, binned_pair

DEFAULT_RATES = (1, 5, 10, 20, 30, 40, 50, 75, 90)


@dataclass(frozen=True)
class KMarginalResult:
    marginals: tuple[tuple[str, ...], ...]
    density_diffs: tuple[float, ...]  # sum of |d_o - d_s| per marginal, in [0, 2]
    scores: tuple[float, ...]
    score: int
    mean_score: float


def sample_marginals(columns: Sequence[str], k: int = 3, count: int = 232, seed: int = 0) -> list[tuple[str, ...]]:
    """Seeded uniform sample (without replacement) of ``k``-column sets."""
    combos = list(itertools.combinations(sorted(columns), k))
    if count >= len(combos):
        return combos
    rng = np.random.default_rng(seed)
    pick = np.sort(rng.choice(len(combos), size=count, replace=False))
    return [combos[i] for i in pick]


def density_difference(orig_cells: np.ndarray, syn_cells: np.ndarray) -> float:
    """Sum over cells of |orig density - syn density|; rows are cell coordinates."""
    n_o, n_s = len(orig_cells), len(syn_cells)
    if n_o == 0 or n_s == 0:
        return 0.0 if n_o == n_s else 2.0
    both = np.vstack([orig_cells, syn_cells])
    _, inv = np.unique(both, axis=0, return_inverse=True)
    inv = inv.ravel()
    k = inv.max() + 1
    # Integer numerator and a single division, so the result does not depend on cell order.
    c_o = np.bincount(inv[:n_o], minlength=k).astype(np.int64)
    c_s = np.bincount(inv[n_o:], minlength=k).astype(np.int64)
    return int(np.abs(c_o * n_s - c_s * n_o).sum()) / (n_o * n_s)


def marginal_cells(orig: Dataset, syn: Dataset, columns: Sequence[str], bins: int = DEFAULT_BINS):
    pairs = [binned_pair(orig, syn, c, bins) for c in columns]
    o = np.column_stack([p[0] for p in pairs]) if pairs else np.zeros((orig.row_count, 0))
    s = np.column_stack([p[1] for p in pairs]) if pairs else np.zeros((syn.row_count, 0))
    return o, s


def k_marginal_score(orig: Dataset, syn_store, marginals: Sequence[Sequence[str]], bins: int = DEFAULT_BINS) -> KMarginalResult:
    diffs, scores = [], []
    for cols in marginals:
        syn = syn_store.fetch(list(cols))
        o, s = marginal_cells(orig, syn, cols, bins)
        tv2 = density_difference(o, s)
        diffs.append(tv2)
        scores.append(1000.0 * (1.0 - tv2 / 2.0))
    mean = float(np.mean(scores)) if scores else 1000.0
    return KMarginalResult(tuple(tuple(m) for m in marginals), tuple(diffs), tuple(scores), int(round(mean)), mean)


def sampled_score_curve(
    orig: Dataset,
    marginals: Sequence[Sequence[str]],
    rates: Sequence[float] = DEFAULT_RATES,
    trials: int = 5,
    seed: int = 0,
    bins: int = DEFAULT_BINS,
) -> dict[float, float]:
    """Mean k-marginal score of random subsamples of the original, per sampling rate (percent)."""
    rng = np.random.default_rng(seed)
    curve = {}
    n = orig.row_count
    for rate in sorted(rates):
        size = max(1, int(round(n * rate / 100.0)))
        vals = []
        for _ in range(trials):
            rows = np.sort(rng.choice(n, size=min(size, n), replace=False))
            vals.append(k_marginal_score(orig, SingleTableSource(orig.take(rows)), marginals, bins).mean_score)
        curve[rate] = float(np.mean(vals))
    return curve


def sampling_equivalence(
    orig: Dataset,
    score: float,
    marginals: Sequence[Sequence[str]] = (),
    rates: Sequence[float] = DEFAULT_RATES,
    trials: int = 5,
    seed: int = 0,
    bins: int = DEFAULT_BINS,
    curve: dict[float, float] | None = None,
) -> float:
    """Largest sampling rate whose mean sampled score does not exceed ``score``.

    Falls back to the lowest rate when every sampled score beats ``score``.
    """
    if not 0 <= score <= 1000:
        raise ValueError("score must lie in [0, 1000]")
    if curve is None:
        curve = sampled_score_curve(orig, marginals, rates, trials, seed, bins)
    ok = [r for r, s in curve.items() if s <= score + 1e-9]
    if math.isclose(score, 1000.0):
        ok = list(curve)
    return float(max(ok)) if ok else float(min(curve))
