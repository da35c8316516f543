"""Synthetic microdata from forests; clustering and stitching for wide tables."""

from __future__ import annotations

import hashlib
import hmac
import itertools
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import ColumnEncoding, Dataset, decode_rows
from .forest import Forest, SnappedInterval, Tree, TreeNode, build_forest
from .metrics.correlation import kendall_tau
from .noise import AnonParams, canonical_key
from .store import SynTableStore, table_key, write_store

log = logging.getLogger(__name__)


def _seed(salt: bytes, label: str, *parts) -> int:
    msg = label.encode() + b"\x00" + b"\x1d".join(
        p if isinstance(p, bytes) else str(p).encode() for p in parts
    )
    return int.from_bytes(hmac.new(salt, msg, hashlib.sha256).digest()[:8], "big")


@dataclass(frozen=True)
class Emission:
    """Rows released from one tree node."""

    node: TreeNode
    rows: int
    residual: bool


def emissions(tree: Tree) -> list[Emission]:
    """Release plan for a tree.

    The root's noisy count is the total and is handed down the tree. A node
    with both children materialized splits its share in proportion to their
    noisy counts. A node with one materialized child gives it at most that
    child's noisy count and releases the remainder over its whole box, so a
    suppressed child's rows are never placed in the suppressed half
    specifically. A node with no materialized children releases its share.
    Shares are rounded on their running sum, so the rows add up to the
    rounded root count.
    """
    shares: list[tuple[TreeNode, float, bool]] = []
    if tree.root.suppressed:
        return []
    stack = [(tree.root, float(tree.root.noisy_count))]
    while stack:
        node, share = stack.pop()
        kids = node.materialized_children()
        if not kids:
            shares.append((node, share, False))
        elif len(kids) == 2:
            w = np.array([k.noisy_count for k in kids])
            w = w / w.sum() if w.sum() > 0 else np.full(2, 0.5)
            stack.extend(reversed([(k, share * wk) for k, wk in zip(kids, w)]))
        else:
            part = min(share, kids[0].noisy_count)
            stack.append((kids[0], part))
            shares.append((node, share - part, True))
    out = []
    acc, emitted = 0.0, 0
    for node, share, residual in shares:
        acc += share
        rows = round(acc) - emitted
        emitted += rows
        out.append(Emission(node, rows, residual))
    return out


@dataclass
class _Piece:
    lo: float
    hi: float
    weight: float
    point: float | None = None


class _Refiner:
    """Within-interval value distribution for one column, from its 1-dim tree."""

    def __init__(self, tree: Tree, discrete: bool, valid: tuple[float, float]):
        self.tree = tree
        self.discrete = discrete
        self.vmin, self.vmax = valid
        self._pieces: dict[int, list[_Piece]] = {}
        self._restricted: dict[SnappedInterval, list[_Piece]] = {}

    def _leaf_piece(self, node: TreeNode, w: float) -> _Piece:
        iv = node.intervals[0]
        if node.singular[0] is not None:
            return _Piece(node.singular[0], node.singular[0], w, node.singular[0])
        return _Piece(iv.offset, iv.hi, w)

    def pieces(self, node: TreeNode) -> list[_Piece]:
        cached = self._pieces.get(id(node))
        if cached is not None:
            return cached
        kids = node.materialized_children()
        parts: list[tuple[list[_Piece] | _Piece, float]] = []
        if len(kids) == 2:
            parts = [(self.pieces(k), k.noisy_count) for k in kids]
        elif len(kids) == 1:
            parts = [(self.pieces(kids[0]), kids[0].noisy_count),
                     (self._leaf_piece(node, 1.0), max(0.0, node.noisy_count - kids[0].noisy_count))]
        total = sum(w for _, w in parts)
        if not parts or total <= 0:
            result = [self._leaf_piece(node, 1.0)]
        else:
            result = []
            for sub, w in parts:
                for p in sub if isinstance(sub, list) else [sub]:
                    result.append(_Piece(p.lo, p.hi, p.weight * w / total, p.point))
        self._pieces[id(node)] = result
        return result

    def _int_count(self, lo: float, hi: float) -> int:
        a = max(math.ceil(lo), self.vmin)
        b = min(math.ceil(hi) - 1, self.vmax)
        return int(max(0, b - a + 1))

    def restricted(self, iv: SnappedInterval) -> list[_Piece]:
        cached = self._restricted.get(iv)
        if cached is not None:
            return cached
        node = self.tree.root
        if node.suppressed:
            result: list[_Piece] = []
        else:
            while node.intervals[0] != iv:
                kids = node.materialized_children()
                nxt = [k for k in kids if k.intervals[0].covers(iv)]
                if len(kids) != 2 or not nxt:
                    break
                node = nxt[0]
            result = []
            for p in self.pieces(node):
                if p.point is not None:
                    if iv.offset <= p.point < iv.hi:
                        result.append(p)
                    continue
                lo, hi = max(p.lo, iv.offset), min(p.hi, iv.hi)
                if hi <= lo:
                    continue
                if self.discrete:
                    full = self._int_count(p.lo, p.hi)
                    frac = self._int_count(lo, hi) / full if full else 0.0
                else:
                    frac = (hi - lo) / (p.hi - p.lo)
                if frac > 0:
                    result.append(_Piece(lo, hi, p.weight * frac))
        self._restricted[iv] = result
        return result

    def _uniform(self, lo: float, hi: float, n: int, rng: np.random.Generator) -> np.ndarray:
        if not self.discrete:
            return lo + rng.random(n) * (hi - lo)
        a = max(math.ceil(lo), self.vmin)
        b = min(math.ceil(hi) - 1, self.vmax)
        if b < a:
            # No valid code inside: use the nearest valid one.
            return np.full(n, float(min(max(math.floor(lo), self.vmin), self.vmax)))
        return rng.integers(int(a), int(b) + 1, size=n).astype(np.float64)

    def sample(self, iv: SnappedInterval, n: int, rng: np.random.Generator) -> np.ndarray:
        pieces = self.restricted(iv)
        weights = np.array([p.weight for p in pieces])
        if not pieces or weights.sum() <= 0:
            return self._uniform(iv.offset, iv.hi, n, rng)
        choice = rng.choice(len(pieces), size=n, p=weights / weights.sum())
        out = np.empty(n)
        for i in np.unique(choice):
            sel = choice == i
            p = pieces[i]
            out[sel] = p.point if p.point is not None else self._uniform(p.lo, p.hi, int(sel.sum()), rng)
        return out


def _valid_range(forest: Forest, column: str) -> tuple[float, float]:
    if column in forest.encoding.categories:
        return 0.0, float(len(forest.encoding.categories[column]) - 1)
    return -math.inf, math.inf


def synthesize_table(forest: Forest, return_sources: bool = False):
    """Synthetic rows for the forest's full column set.

    Row counts come from the full-dimensional tree; values inside each
    released box are refined by the 1-dim trees. With ``return_sources`` the
    tree key of the releasing node is returned for every row as well.
    """
    full = forest.full_tree
    if full is None:
        raise ValueError(
            f"forest over {len(forest.columns)} columns lacks the full tree "
            f"(max_tree_dim={forest.max_tree_dim}); use the cluster/stitch path"
        )
    salt = forest.params.salt
    refiners = {}
    for c in forest.columns:
        if (c,) not in forest.trees:
            raise ValueError(f"forest is missing the 1-dim tree for {c!r}")
        refiners[c] = _Refiner(forest.trees[(c,)], forest.discrete[c], _valid_range(forest, c))

    blocks, sources = [], []
    for em in emissions(full):
        if em.rows <= 0:
            continue
        key = full.key(em.node)
        rng = np.random.default_rng(_seed(salt, "place", canonical_key(key), em.residual))
        block = np.empty((em.rows, len(forest.columns)))
        for j, c in enumerate(forest.columns):
            if em.node.singular[j] is not None:
                block[:, j] = em.node.singular[j]
            else:
                block[:, j] = refiners[c].sample(em.node.intervals[j], em.rows, rng)
        blocks.append(block)
        sources.extend([key] * em.rows)
    matrix = np.vstack(blocks) if blocks else np.zeros((0, len(forest.columns)))
    perm = np.random.default_rng(_seed(salt, "shuffle", *forest.columns)).permutation(len(matrix))
    ds = decode_rows(matrix[perm], forest.encoding, forest.schema)
    if return_sources:
        return ds, [sources[i] for i in perm]
    return ds


@dataclass(frozen=True)
class ClusterPlan:
    """Disjoint column clusters, merged left to right.

    ``stitch[i]`` are the already-placed columns that table ``i`` shares with
    the tables before it (empty for the first cluster).
    """

    clusters: tuple[tuple[str, ...], ...]
    stitch: tuple[tuple[str, ...], ...]

    def table_columns(self, i: int) -> tuple[str, ...]:
        return tuple(self.stitch[i]) + tuple(self.clusters[i])

    @property
    def columns(self) -> tuple[str, ...]:
        return tuple(itertools.chain.from_iterable(self.clusters))


def dependence_matrix(ds: Dataset, columns: Sequence[str]) -> np.ndarray:
    """|Kendall tau| between every pair of encoded columns."""
    k = len(columns)
    dep = np.zeros((k, k))
    if ds.row_count < 2:
        return dep
    for i, j in itertools.combinations(range(k), 2):
        dep[i, j] = dep[j, i] = abs(kendall_tau(ds.column(columns[i]), ds.column(columns[j])))
    return dep


def plan_clusters(ds: Dataset, columns: Sequence[str], max_cluster_dim: int) -> ClusterPlan:
    """Greedy dependence-driven partition of ``columns`` into synthesizable clusters."""
    columns = list(columns)
    if len(columns) <= max_cluster_dim:
        raise ValueError(
            f"{len(columns)} columns fit one table of {max_cluster_dim}; no clustering needed"
        )
    if max_cluster_dim < 2:
        raise ValueError("max_cluster_dim must be >= 2 to leave room for a stitch column")
    dep = dependence_matrix(ds, columns)
    n_stitch = 1 if max_cluster_dim <= 3 else 2
    unassigned = list(range(len(columns)))
    placed: list[int] = []
    clusters: list[list[int]] = []
    stitches: list[list[int]] = []

    while unassigned:
        first = not clusters
        cap = max_cluster_dim if first else max_cluster_dim - min(n_stitch, len(placed))
        if len(unassigned) >= 2 and cap >= 2:
            pairs = itertools.combinations(unassigned, 2)
            seed = max(pairs, key=lambda p: (dep[p[0], p[1]], -p[0], -p[1]))
            cluster = list(seed)
        else:
            cluster = [unassigned[0]]
        rest = [c for c in unassigned if c not in cluster]
        while len(cluster) < cap and rest:
            best = max(rest, key=lambda c: (dep[c, cluster].mean(), -c))
            cluster.append(best)
            rest.remove(best)
        if first:
            stitch: list[int] = []
        else:
            k = min(n_stitch, len(placed), max_cluster_dim - len(cluster))
            stitch = sorted(placed, key=lambda c: (-dep[c, cluster].mean(), c))[:k]
        clusters.append(cluster)
        stitches.append(stitch)
        placed.extend(cluster)
        unassigned = rest
    name = lambda idx: tuple(columns[i] for i in idx)
    return ClusterPlan(tuple(name(c) for c in clusters), tuple(name(s) for s in stitches))


def _sort_order(ds: Dataset, cols: Sequence[str], rng: np.random.Generator) -> np.ndarray:
    tie = rng.random(ds.row_count)
    keys = [tie] + [ds.column(c) for c in reversed(cols)]
    return np.lexsort(keys)


def _resize(n_from: int, n_to: int, rng: np.random.Generator) -> np.ndarray:
    """Row indices taking a table of ``n_from`` rows to ``n_to`` rows."""
    if n_to <= n_from:
        return np.sort(rng.choice(n_from, size=n_to, replace=False))
    extra = rng.choice(n_from, size=n_to - n_from, replace=True)
    return np.sort(np.concatenate([np.arange(n_from), extra]))


def stitch(tables: Sequence[Dataset], plan: ClusterPlan, seed: int = 0) -> Dataset:
    """Merge per-cluster tables left to right on their shared stitch columns.

    Both sides are sorted on the stitch columns and aligned by rank. The
    accumulated left table keeps all of its rows; the right table is
    subsampled or resampled to the same length first.
    """
    if not tables:
        raise ValueError("no tables to stitch")
    if len(tables) != len(plan.clusters):
        raise ValueError("one table per cluster is required")
    left = tables[0]
    if len(tables) == 1:
        return left
    rng = np.random.default_rng(seed)
    for i in range(1, len(tables)):
        right = tables[i]
        on = list(plan.stitch[i])
        new = [c for c in plan.clusters[i] if c not in left.columns]
        lorder = _sort_order(left, on, rng)
        if right.row_count:
            right = right.take(_resize(right.row_count, left.row_count, rng))
            rorder = _sort_order(right, on, rng)
            rmat = right.matrix[rorder][:, [right.index(c) for c in new]]
        else:
            rmat = np.zeros((left.row_count, len(new)))
        merged = np.hstack([left.matrix[lorder], rmat])
        schema = left.schema + tuple(c for c in right.schema if c.name in new)
        cats = dict(left.encoding.categories)
        cats.update({c: v for c, v in right.encoding.categories.items() if c in new})
        enc = ColumnEncoding(cats, left.encoding.integral | (right.encoding.integral & set(new)))
        left = Dataset(schema, merged, enc)
    return left.take(rng.permutation(left.row_count))


@dataclass(frozen=True)
class SynthesisPlan:
    combinations: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        seen = set()
        for combo in self.combinations:
            key = tuple(sorted(combo))
            if len(set(combo)) != len(combo):
                raise ValueError(f"combination {list(combo)} repeats a column")
            if key in seen:
                raise ValueError(f"duplicate combination {list(combo)}")
            seen.add(key)

    @classmethod
    def from_json(cls, obj, columns: Sequence[str]) -> SynthesisPlan:
        """Parse a plan: column-name lists, or ``{"all_subsets_of_size": k}`` shorthands."""
        combos: list[tuple[str, ...]] = []
        seen = set()
        for item in obj:
            if isinstance(item, dict):
                if "all_subsets_of_size" not in item:
                    raise ValueError(f"unknown plan shorthand {item}")
                new = itertools.combinations(sorted(columns), int(item["all_subsets_of_size"]))
            else:
                new = [tuple(sorted(item))]
            for combo in new:
                if combo not in seen:
                    seen.add(combo)
                    combos.append(combo)
        plan = cls(tuple(combos))
        plan.validate(columns)
        return plan

    @classmethod
    def load(cls, path: str | Path, columns: Sequence[str]) -> SynthesisPlan:
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")), columns)

    def validate(self, columns: Sequence[str]) -> None:
        known = set(columns)
        for combo in self.combinations:
            bad = [c for c in combo if c not in known]
            if bad:
                raise ValueError(f"plan references unknown column(s) {bad}")
            if not combo:
                raise ValueError("empty combination in plan")

    @property
    def total_columns(self) -> int:
        return sum(len(c) for c in self.combinations)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(sorted(map(sorted, self.combinations))).encode()).hexdigest()[:16]


@dataclass
class PlanRunner:
    """Executes a synthesis plan, sharing trees across combinations."""

    ds: Dataset
    params: AnonParams
    max_tree_dim: int = 4
    cache: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def table(self, combo: Sequence[str]) -> Dataset:
        combo = tuple(sorted(combo))
        if len(combo) <= self.max_tree_dim:
            forest = build_forest(self.ds, combo, self.params, self.max_tree_dim, cache=self.cache)
            return synthesize_table(forest)
        plan = plan_clusters(self.ds, combo, self.max_tree_dim)
        parts = []
        for i in range(len(plan.clusters)):
            cols = plan.table_columns(i)
            forest = build_forest(self.ds, cols, self.params, self.max_tree_dim, cache=self.cache)
            parts.append(synthesize_table(forest))
        merged = stitch(parts, plan, seed=_seed(self.params.salt, "stitch", *combo) % 2**32)
        return merged.project(list(combo))


def run_plan(
    ds: Dataset,
    plan: SynthesisPlan,
    params: AnonParams,
    store_dir: str | Path,
    max_tree_dim: int = 4,
) -> SynTableStore:
    """Synthesize every combination of ``plan`` into a store at ``store_dir``."""
    plan.validate(ds.columns)
    runner = PlanRunner(ds, params, max_tree_dim)
    meta = {
        "params_hash": params.fingerprint(),
        "salt_fingerprint": params.salt_fingerprint(),
        "data_digest": ds.digest()[:16],
        "plan_digest": plan.digest(),
        "max_tree_dim": max_tree_dim,
    }
    tables: dict[tuple[str, ...], Dataset] = {}
    try:
        for combo in plan.combinations:
            t0 = time.perf_counter()
            tables[tuple(sorted(combo))] = runner.table(combo)
            runner.timings[table_key(combo)] = time.perf_counter() - t0
            log.info("synthesized %s in %.3fs", table_key(combo), runner.timings[table_key(combo)])
    except Exception:
        write_store(store_dir, tables, ds.schema, meta, complete=False)
        raise
    store = write_store(store_dir, tables, ds.schema, meta, complete=True, reference=ds)
    store.timings = runner.timings
    return store
