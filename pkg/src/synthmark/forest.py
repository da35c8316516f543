"""Range-snapped anonymizing trees and the tree family ("forest") over a column set."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

from .data import ColumnEncoding, ColumnSchema, Dataset
from .noise import AnonParams, sticky_noise, suppression_threshold

# Guards against endless halving of near-identical continuous values.
MAX_HALVINGS = 60


@dataclass(frozen=True)
class SnappedInterval:
    """Half-open interval ``[offset, offset + size)``.

    ``size`` is a power of two and ``offset`` a multiple of it. A size of 0
    denotes the singleton ``{offset}``. Aligned intervals never straddle
    zero, so a root over values of both signs is centred instead
    (``offset == -size / 2``); both of its halves are aligned again.
    """

    size: float
    offset: float

    @property
    def is_singleton(self) -> bool:
        return self.size == 0.0

    @property
    def hi(self) -> float:
        return self.offset + self.size

    @property
    def mid(self) -> float:
        return self.offset + self.size / 2.0

    def is_valid(self) -> bool:
        if self.is_singleton:
            return math.isfinite(self.offset)
        mant, _ = math.frexp(self.size)
        if not (self.size > 0 and mant == 0.5):
            return False
        return math.fmod(self.offset, self.size) == 0.0 or self.offset == -self.size / 2.0

    def halves(self) -> tuple[SnappedInterval, SnappedInterval]:
        half = self.size / 2.0
        return SnappedInterval(half, self.offset), SnappedInterval(half, self.offset + half)

    def contains(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values)
        if self.is_singleton:
            return values == self.offset
        return (values >= self.offset) & (values < self.hi)

    def covers(self, other: SnappedInterval) -> bool:
        if self.is_singleton:
            return other.is_singleton and other.offset == self.offset
        if other.is_singleton:
            return self.offset <= other.offset < self.hi
        return self.offset <= other.offset and other.hi <= self.hi

    def __str__(self) -> str:
        if self.is_singleton:
            return f"{{{self.offset!r}}}"
        return f"[{self.offset!r},{self.hi!r})"


def snap_root_interval(values: Sequence[float]) -> SnappedInterval:
    """Smallest power-of-two sized, size-aligned interval holding every value.

    Values on both sides of zero get the smallest zero-centred interval.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot snap an empty value list")
    if not np.all(np.isfinite(arr)):
        raise ValueError("values must be finite")
    lo, hi = float(arr.min()), float(arr.max())
    if lo == hi:
        return SnappedInterval(0.0, lo)
    size = 2.0 ** math.ceil(math.log2(hi - lo))
    if lo < 0.0 <= hi:
        while not (-size / 2.0 <= lo and hi < size / 2.0):
            size *= 2.0
        return SnappedInterval(size, -size / 2.0)
    while True:
        offset = math.floor(lo / size) * size
        if hi < offset + size:
            return SnappedInterval(size, offset)
        size *= 2.0


@dataclass(eq=False)
class TreeNode:
    intervals: tuple[SnappedInterval, ...]
    true_count: int
    noisy_count: float | None
    suppressed: bool
    # Per dimension, the one value every row of the node shares, else None.
    singular: tuple[float | None, ...]
    split_dim: int | None = None
    children: tuple[TreeNode, TreeNode] | None = None

    @property
    def is_leaf(self) -> bool:
        return self.children is None

    def materialized_children(self) -> list[TreeNode]:
        if self.children is None:
            return []
        return [c for c in self.children if not c.suppressed]


@dataclass(eq=False)
class Tree:
    columns: tuple[str, ...]
    root: TreeNode

    @property
    def dim(self) -> int:
        return len(self.columns)

    def key(self, node: TreeNode) -> tuple[tuple[str, SnappedInterval], ...]:
        return tuple(zip(self.columns, node.intervals))

    def nodes(self) -> Iterator[TreeNode]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if node.children is not None:
                stack.extend(reversed(node.children))

    def key_string(self, node: TreeNode) -> str:
        return "&".join(f"{c}={iv}" for c, iv in zip(self.columns, node.intervals))

    def dump(self) -> dict[str, dict]:
        """Debug view: node key -> counts. Suppressed nodes expose no counts."""
        out = {}
        for node in self.nodes():
            if node.suppressed:
                out[self.key_string(node)] = {"suppressed": True}
            else:
                out[self.key_string(node)] = {"true": node.true_count, "noisy": node.noisy_count}
        return out


class _Builder:
    def __init__(self, X: np.ndarray, ent: np.ndarray | None, columns, discrete, params: AnonParams):
        self.X = X
        self.ent = ent
        self.columns = columns
        self.discrete = discrete
        self.params = params

    def count(self, rows: np.ndarray) -> int:
        if self.ent is None:
            return int(rows.size)
        return int(np.unique(self.ent[rows]).size)

    def singular(self, rows: np.ndarray) -> tuple[float | None, ...]:
        if rows.size == 0:
            return tuple(None for _ in self.columns)
        sub = self.X[rows]
        lo, hi = sub.min(axis=0), sub.max(axis=0)
        return tuple(float(a) if a == b else None for a, b in zip(lo, hi))

    def make(self, intervals, rows) -> TreeNode:
        key = tuple(zip(self.columns, intervals))
        n = self.count(rows)
        if n < suppression_threshold(self.params.salt, key, self.params):
            return TreeNode(intervals, n, None, True, self.singular(rows))
        noisy = max(0.0, n + sticky_noise(self.params.salt, key, self.params.noise_sd))
        return TreeNode(intervals, n, noisy, False, self.singular(rows))

    def splittable(self, node: TreeNode, j: int, halvings: Sequence[int]) -> bool:
        iv = node.intervals[j]
        if iv.is_singleton or node.singular[j] is not None:
            return False
        if self.discrete[j] and iv.size <= 1.0:
            return False
        return halvings[j] < MAX_HALVINGS

    def grow(self, node: TreeNode, rows: np.ndarray, last_dim: int, halvings: list[int]) -> None:
        d = len(self.columns)
        for step in range(1, d + 1):
            j = (last_dim + step) % d
            if self.splittable(node, j, halvings):
                break
        else:
            return
        lo_iv, hi_iv = node.intervals[j].halves()
        in_lo = self.X[rows, j] < lo_iv.hi
        kids = []
        for iv, sel in ((lo_iv, in_lo), (hi_iv, ~in_lo)):
            ivs = node.intervals[:j] + (iv,) + node.intervals[j + 1:]
            kids.append((self.make(ivs, rows[sel]), rows[sel]))
        node.split_dim = j
        node.children = (kids[0][0], kids[1][0])
        halvings[j] += 1
        for child, child_rows in kids:
            if not child.suppressed:
                self.grow(child, child_rows, j, halvings)
        halvings[j] -= 1


def _discrete_flags(ds: Dataset, columns: Sequence[str]) -> tuple[bool, ...]:
    return tuple(ds.is_discrete(c) for c in columns)


def build_tree(ds: Dataset, columns: Sequence[str], params: AnonParams) -> Tree:
    """Build one anonymizing tree over ``columns`` (canonically sorted by name)."""
    if not columns:
        raise ValueError("a tree needs at least one column")
    cols = tuple(sorted(set(columns)))
    if len(cols) != len(columns):
        raise ValueError(f"duplicate columns in {list(columns)}")
    if ds.entity_column is not None and ds.entity_column in cols:
        raise ValueError("the entity_id column cannot be a tree dimension")
    X = np.ascontiguousarray(ds.matrix[:, [ds.index(c) for c in cols]])
    ent = None
    if ds.entities is not None:
        ent = np.unique(ds.entities.astype(str), return_inverse=True)[1]
    builder = _Builder(X, ent, cols, _discrete_flags(ds, cols), params)
    rows = np.arange(ds.row_count)
    if ds.row_count == 0:
        intervals = tuple(SnappedInterval(0.0, 0.0) for _ in cols)
    else:
        intervals = tuple(snap_root_interval(X[:, j]) for j in range(len(cols)))
    root = builder.make(intervals, rows)
    if not root.suppressed:
        builder.grow(root, rows, len(cols) - 1, [0] * len(cols))
    return Tree(cols, root)


@dataclass(eq=False)
class Forest:
    columns: tuple[str, ...]
    trees: Mapping[tuple[str, ...], Tree]
    params: AnonParams
    schema: tuple[ColumnSchema, ...]
    encoding: ColumnEncoding
    discrete: Mapping[str, bool]
    max_tree_dim: int

    def tree(self, columns: Sequence[str]) -> Tree:
        return self.trees[tuple(sorted(columns))]

    @property
    def full_tree(self) -> Tree | None:
        return self.trees.get(self.columns)

    def dump(self) -> dict[str, dict]:
        return {"+".join(k): t.dump() for k, t in sorted(self.trees.items())}

    def dump_json(self) -> str:
        return json.dumps(self.dump(), sort_keys=True, indent=1)


def build_forest(
    ds: Dataset,
    columns: Sequence[str],
    params: AnonParams,
    max_tree_dim: int = 4,
    cache: dict | None = None,
) -> Forest:
    """Build every tree over subsets of ``columns`` up to ``max_tree_dim`` columns.

    ``cache`` may be shared between calls over the same dataset and params;
    a tree depends only on its own column subset, so reuse is exact.
    """
    if not columns:
        raise ValueError("need at least one column")
    if max_tree_dim < 1:
        raise ValueError("max_tree_dim must be >= 1")
    cols = tuple(sorted(columns))
    trees = {}
    for k in range(1, min(len(cols), max_tree_dim) + 1):
        for subset in itertools.combinations(cols, k):
            if cache is not None and subset in cache:
                trees[subset] = cache[subset]
                continue
            tree = build_tree(ds, subset, params)
            trees[subset] = tree
            if cache is not None:
                cache[subset] = tree
    by_name = {c.name: c for c in ds.schema}
    schema = tuple(by_name[c] for c in cols)
    return Forest(
        cols, trees, params, schema, ds.encoding.project(cols),
        {c: ds.is_discrete(c) for c in cols}, max_tree_dim,
    )
