"""Column predicates used by inconsistency rules and regression groups."""

from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..data import Dataset, Kind, parse_datetime

NULL_VALUES = frozenset({"", "NA", "N/A", "null", "None", "nan"})

_CMP = {
    "<": operator.lt, "<=": operator.le, "≤": operator.le,
    ">": operator.gt, ">=": operator.ge, "≥": operator.ge,
    "==": operator.eq, "!=": operator.ne,
}
OPS = frozenset(_CMP) | {"is_null", "non_null"}


@dataclass(frozen=True)
class Predicate:
    op: str
    value: Any = None

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"unknown predicate op {self.op!r}")
        if self.op in _CMP and self.value is None:
            raise ValueError(f"op {self.op!r} needs a value")

    @classmethod
    def from_json(cls, obj: dict) -> Predicate:
        return cls(obj["op"], obj.get("value"))

    def to_json(self) -> dict:
        out = {"op": self.op}
        if self.value is not None:
            out["value"] = self.value
        return out

    def mask(self, ds: Dataset, column: str) -> np.ndarray:
        """Boolean row mask of ``ds`` rows whose ``column`` satisfies the predicate."""
        kind = ds.kind(column)
        if kind is Kind.CATEGORICAL:
            cats = ds.encoding.categories[column]
            per_code = np.array([self._test_text(v) for v in cats], dtype=bool)
            if ds.row_count == 0:
                return np.zeros(0, dtype=bool)
            return per_code[ds.column(column).astype(np.int64)]
        vals = ds.column(column)
        if self.op == "is_null":
            return np.zeros(len(vals), dtype=bool)
        if self.op == "non_null":
            return np.ones(len(vals), dtype=bool)
        ref = parse_datetime(str(self.value)) if kind is Kind.DATETIME else float(self.value)
        return _CMP[self.op](vals, ref)

    def _test_text(self, text: str) -> bool:
        if self.op == "is_null":
            return text in NULL_VALUES
        if self.op == "non_null":
            return text not in NULL_VALUES
        if self.op in ("==", "!="):
            equal = text == str(self.value) or _num_equal(text, self.value)
            return equal if self.op == "==" else not equal
        try:
            return bool(_CMP[self.op](float(text), float(self.value)))
        except (TypeError, ValueError):
            return False


def _num_equal(text: str, value) -> bool:
    try:
        return float(text) == float(value)
    except (TypeError, ValueError):
        return False
