from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import settings

from synthmark.data import ColumnSchema, Dataset, dataset_from_records
from synthmark.store import SynTableStore, write_store

settings.register_profile("repo", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("repo")

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def record_criterion():
    """Record one acceptance line; the terminal summary prints them all."""
    def rec(name: str, ok: bool, detail: str = "") -> bool:
        _ACCEPTANCE.append((name, bool(ok), detail))
        return ok
    return rec


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


def make_dataset(columns: dict[str, list], kinds: dict[str, str] | None = None, entity: list | None = None) -> Dataset:
    """Dataset from python value lists; kinds default to categorical for strings, continuous otherwise."""
    kinds = dict(kinds or {})
    names = list(columns)
    for c in names:
        kinds.setdefault(c, "categorical" if isinstance(columns[c][0], str) else "continuous")
    schema = [ColumnSchema(c, kinds[c]) for c in names]
    header = names
    cols = [[str(v) if not isinstance(v, float) else repr(v) for v in columns[c]] for c in names]
    if entity is not None:
        schema = [ColumnSchema("pid", "entity_id")] + schema
        header = ["pid"] + names
        cols = [[str(e) for e in entity]] + cols
    return dataset_from_records(header, list(zip(*cols)), schema)


def random_dataset(rng: np.random.Generator, n: int, n_cat: int = 2, n_num: int = 2) -> Dataset:
    cols = {}
    for i in range(n_cat):
        k = int(rng.integers(2, 6))
        cols[f"c{i}"] = [f"v{x}" for x in rng.integers(0, k, n)]
    for i in range(n_num):
        if i % 2:
            cols[f"x{i}"] = [float(round(v, 2)) for v in rng.normal(0, 10, n)]
        else:
            cols[f"x{i}"] = [int(v) for v in rng.integers(0, 50, n)]
    return make_dataset(cols)


def copy_store(orig: Dataset, root, max_k: int = 3, extra=()) -> SynTableStore:
    """Store whose every table is an exact projection of the original."""
    cols = sorted(orig.columns)
    combos = set()
    for k in range(1, min(max_k, len(cols)) + 1):
        combos.update(itertools.combinations(cols, k))
    combos.add(tuple(cols))
    combos.update(tuple(sorted(e)) for e in extra)
    tables = {c: orig.project(list(c)) for c in combos}
    write_store(root, tables, orig.schema, {"technique": "copy"})
    return SynTableStore(root, reference=orig)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
