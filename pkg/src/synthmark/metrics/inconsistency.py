"""Counts of synthetic rows that combine two mutually impossible values."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ..data import Dataset
from .predicates import Predicate


@dataclass(frozen=True)
class InconsistencyRule:
    col_a: str
    pred_a: Predicate
    col_b: str
    pred_b: Predicate
    name: str = ""

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        def part(col, p):
            return f"{col} {p.op}" + (f" {p.value}" if p.value is not None else "")
        return f"{part(self.col_a, self.pred_a)} & {part(self.col_b, self.pred_b)}"

    def violations(self, ds: Dataset) -> int:
        return int((self.pred_a.mask(ds, self.col_a) & self.pred_b.mask(ds, self.col_b)).sum())

    @classmethod
    def from_json(cls, obj: dict) -> InconsistencyRule:
        return cls(obj["colA"], Predicate.from_json(obj["predA"]),
                   obj["colB"], Predicate.from_json(obj["predB"]), obj.get("name", ""))


@dataclass(frozen=True)
class InconsistencyCount:
    rule: str
    count: int


def load_rules(path: str | Path) -> list[InconsistencyRule]:
    return [InconsistencyRule.from_json(r) for r in json.loads(Path(path).read_text(encoding="utf-8"))]


def check_rules(rules: Sequence[InconsistencyRule], columns: Sequence[str]) -> None:
    known = set(columns)
    for r in rules:
        for c in (r.col_a, r.col_b):
            if c not in known:
                raise KeyError(f"rule {r.label!r} references unknown column {c!r}")


def count_inconsistencies(syn_store, rules: Sequence[InconsistencyRule]) -> list[InconsistencyCount]:
    """Violating-row count per rule, each read from the rule's 2-column table."""
    out = []
    for rule in rules:
        table = syn_store.fetch([rule.col_a, rule.col_b])
        out.append(InconsistencyCount(rule.label, rule.violations(table)))
    return out


def inconsistency_total(counts: Sequence[InconsistencyCount]) -> int:
    """Number of rules violated at least once."""
    return sum(1 for c in counts if c.count > 0)
