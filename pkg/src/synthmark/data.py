"""Typed tabular data: schema, CSV loading, and numeric encoding.

Every non-entity column is held as a float64 column of an encoded matrix.
Categorical values become integer codes (first-appearance order unless the
schema declares a value list), datetimes become seconds since the epoch, and
continuous values pass through. The entity-id column, if any, is carried
alongside the matrix as a string array.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np


class SchemaError(ValueError):
    """Raised for any schema or data validation failure."""


class Kind(str, enum.Enum):
    CONTINUOUS = "continuous"
    CATEGORICAL = "categorical"
    DATETIME = "datetime"
    ENTITY_ID = "entity_id"


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: Kind
    domain: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.domain is None:
            return
        dom = tuple(self.domain)
        if self.kind is Kind.CATEGORICAL:
            dom = tuple(str(v) for v in dom)
            if not dom:
                raise SchemaError(f"column {self.name!r}: empty categorical domain")
            if len(set(dom)) != len(dom):
                raise SchemaError(f"column {self.name!r}: duplicate categorical domain values")
        elif self.kind is Kind.CONTINUOUS:
            if len(dom) != 2 or not float(dom[0]) <= float(dom[1]):
                raise SchemaError(f"column {self.name!r}: continuous domain must be [min, max]")
            dom = (float(dom[0]), float(dom[1]))
        object.__setattr__(self, "domain", dom)

    def to_json(self) -> dict:
        out = {"name": self.name, "kind": self.kind.value}
        if self.domain is not None:
            out["domain"] = list(self.domain)
        return out


def validate_schema(schema: Sequence[ColumnSchema]) -> tuple[ColumnSchema, ...]:
    schema = tuple(schema)
    names = [c.name for c in schema]
    dup = [n for n, k in Counter(names).items() if k > 1]
    if dup:
        raise SchemaError(f"duplicate column names in schema: {dup}")
    if sum(c.kind is Kind.ENTITY_ID for c in schema) > 1:
        raise SchemaError("at most one entity_id column is allowed")
    for n in names:
        if "+" in n:
            raise SchemaError(f"column name {n!r} must not contain '+'")
    return schema


def load_schema(path: str | Path) -> tuple[ColumnSchema, ...]:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise SchemaError("schema file must hold a JSON list")
    try:
        cols = [ColumnSchema(c["name"], c["kind"], c.get("domain")) for c in raw]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad schema entry: {exc}") from exc
    return validate_schema(cols)


def parse_datetime(text: str) -> float:
    dt = datetime.fromisoformat(text.strip())
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def format_datetime(x: float) -> str:
    return datetime.fromtimestamp(x, tz=timezone.utc).replace(tzinfo=None).isoformat()


def _format_float(x: float, integral: bool) -> str:
    if integral:
        return str(int(round(x)))
    return repr(float(x))


@dataclass(frozen=True)
class ColumnEncoding:
    """Value <-> real mapping for every non-entity column.

    ``categories[col]`` lists the decoded value for each code. ``integral``
    names the continuous/datetime columns whose observed values were all
    whole numbers; decoding rounds those.
    """

    categories: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    integral: frozenset[str] = frozenset()

    def code_of(self, column: str) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.categories[column])}

    def n_codes(self, column: str) -> int:
        return len(self.categories[column])

    def project(self, columns: Iterable[str]) -> ColumnEncoding:
        cols = set(columns)
        return ColumnEncoding(
            {c: v for c, v in self.categories.items() if c in cols},
            frozenset(c for c in self.integral if c in cols),
        )

    def to_json(self) -> dict:
        return {
            "categories": {k: list(v) for k, v in sorted(self.categories.items())},
            "integral": sorted(self.integral),
        }


@dataclass(frozen=True, eq=False)
class Dataset:
    """An immutable table in encoded form.

    ``matrix`` has one float64 column per non-entity schema column, in schema
    order. ``entities`` is None when the schema has no entity_id column, in
    which case each row is its own entity.
    """

    schema: tuple[ColumnSchema, ...]
    matrix: np.ndarray
    encoding: ColumnEncoding
    entities: np.ndarray | None = None
    warnings: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64, copy=True)
        if m.ndim != 2:
            m = m.reshape(len(m), -1) if m.size else np.zeros((0, len(self.columns)))
        if m.shape[1] != len(self.columns):
            raise SchemaError(
                f"matrix has {m.shape[1]} columns, schema expects {len(self.columns)}"
            )
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        if self.entities is not None:
            e = np.asarray(self.entities, dtype=object).copy()
            e.flags.writeable = False
            if len(e) != len(m):
                raise SchemaError("entity map length differs from row count")
            object.__setattr__(self, "entities", e)

    @property
    def columns(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.schema if c.kind is not Kind.ENTITY_ID)

    @property
    def entity_column(self) -> str | None:
        for c in self.schema:
            if c.kind is Kind.ENTITY_ID:
                return c.name
        return None

    @property
    def row_count(self) -> int:
        return self.matrix.shape[0]

    def __len__(self) -> int:
        return self.row_count

    def kind(self, column: str) -> Kind:
        for c in self.schema:
            if c.name == column:
                return c.kind
        raise KeyError(column)

    def is_discrete(self, column: str) -> bool:
        return self.kind(column) is Kind.CATEGORICAL or column in self.encoding.integral

    def index(self, column: str) -> int:
        try:
            return self.columns.index(column)
        except ValueError:
            raise KeyError(f"unknown column {column!r}") from None

    def column(self, column: str) -> np.ndarray:
        return self.matrix[:, self.index(column)]

    def entity_ids(self) -> np.ndarray:
        """Entity of every row; the row index when no entity column exists."""
        if self.entities is not None:
            return self.entities
        return np.arange(self.row_count)

    def decoded_column(self, column: str) -> list:
        kind = self.kind(column)
        vals = self.column(column)
        if kind is Kind.CATEGORICAL:
            cats = self.encoding.categories[column]
            return [cats[int(v)] for v in vals]
        if kind is Kind.DATETIME:
            return [format_datetime(v) for v in vals]
        if column in self.encoding.integral:
            return [int(round(v)) for v in vals]
        return [float(v) for v in vals]

    @property
    def rows(self) -> list[tuple]:
        cols = []
        for c in self.schema:
            if c.kind is Kind.ENTITY_ID:
                cols.append(list(self.entities) if self.entities is not None else [None] * len(self))
            else:
                cols.append(self.decoded_column(c.name))
        return list(zip(*cols)) if cols else []

    def project(self, columns: Sequence[str]) -> Dataset:
        """Restrict to ``columns`` (in the given order); the entity column is kept."""
        idx = [self.index(c) for c in columns]
        by_name = {c.name: c for c in self.schema}
        schema = tuple(by_name[c] for c in columns)
        if self.entity_column is not None:
            schema = (by_name[self.entity_column],) + schema
        return Dataset(schema, self.matrix[:, idx], self.encoding.project(columns), self.entities)

    def take(self, rows: np.ndarray) -> Dataset:
        rows = np.asarray(rows, dtype=np.intp)
        ent = self.entities[rows] if self.entities is not None else None
        return Dataset(self.schema, self.matrix[rows], self.encoding, ent)

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps([c.to_json() for c in self.schema], sort_keys=True).encode())
        h.update(json.dumps(self.encoding.to_json(), sort_keys=True).encode())
        h.update(np.ascontiguousarray(self.matrix).tobytes())
        if self.entities is not None:
            h.update("\x1f".join(map(str, self.entities)).encode())
        return h.hexdigest()

    def equals(self, other: Dataset) -> bool:
        return (
            self.columns == other.columns
            and self.matrix.shape == other.matrix.shape
            and bool(np.array_equal(self.matrix, other.matrix))
            and self.rows == other.rows
        )

    def write_csv(self, path: str | Path) -> None:
        header = [c.name for c in self.schema]
        cols = []
        for c in self.schema:
            if c.kind is Kind.ENTITY_ID:
                cols.append([str(e) for e in self.entities] if self.entities is not None else [""] * len(self))
            elif c.kind is Kind.CATEGORICAL:
                cols.append(self.decoded_column(c.name))
            elif c.kind is Kind.DATETIME:
                cols.append(self.decoded_column(c.name))
            else:
                integral = c.name in self.encoding.integral
                cols.append([_format_float(v, integral) for v in self.column(c.name)])
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(zip(*cols))


def load_csv(
    path: str | Path,
    schema: Sequence[ColumnSchema],
    encoding: ColumnEncoding | None = None,
) -> Dataset:
    """Read a CSV file into a Dataset ordered as ``schema``.

    Passing ``encoding`` reuses an existing categorical coding (e.g. the
    original table's) so that codes agree across tables; values it has not
    seen are appended after the known codes.
    """
    schema = validate_schema(schema)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: missing header row") from None
        records = list(reader)
    return dataset_from_records(header, records, schema, encoding, source=str(path))


def dataset_from_records(
    header: Sequence[str],
    records: Sequence[Sequence[str]],
    schema: Sequence[ColumnSchema],
    encoding: ColumnEncoding | None = None,
    source: str = "<records>",
) -> Dataset:
    schema = validate_schema(schema)
    dup = [n for n, k in Counter(header).items() if k > 1]
    if dup:
        raise SchemaError(f"{source}: duplicate header column(s) {dup}")
    names = [c.name for c in schema]
    missing = [n for n in names if n not in header]
    if missing:
        raise SchemaError(f"{source}: missing column(s) {missing}")
    extra = [h for h in header if h not in names]
    if extra:
        raise SchemaError(f"{source}: unexpected column(s) {extra}")
    pos = {h: i for i, h in enumerate(header)}
    for r, rec in enumerate(records):
        if len(rec) != len(header):
            raise SchemaError(f"{source}: row {r + 1} has {len(rec)} cells, expected {len(header)}")

    categories: dict[str, tuple[str, ...]] = {}
    integral: set[str] = set()
    value_cols: list[np.ndarray] = []
    entities = None
    for col in schema:
        j = pos[col.name]
        cells = [rec[j] for rec in records]
        if col.kind is Kind.ENTITY_ID:
            entities = np.array(cells, dtype=object)
            continue
        if col.kind is Kind.CATEGORICAL:
            if col.domain is not None:
                known = list(col.domain)
            elif encoding is not None and col.name in encoding.categories:
                known = list(encoding.categories[col.name])
            else:
                known = []
            lookup = {v: i for i, v in enumerate(known)}
            codes = np.empty(len(cells))
            for r, v in enumerate(cells):
                code = lookup.get(v)
                if code is None:
                    if col.domain is not None:
                        raise SchemaError(
                            f"{source}: row {r + 1}, column {col.name!r}: value {v!r} not in declared domain"
                        )
                    code = lookup[v] = len(known)
                    known.append(v)
                codes[r] = code
            categories[col.name] = tuple(known)
            value_cols.append(codes)
            continue
        vals = np.empty(len(cells))
        for r, v in enumerate(cells):
            try:
                x = parse_datetime(v) if col.kind is Kind.DATETIME else float(v)
            except ValueError:
                raise SchemaError(
                    f"{source}: row {r + 1}, column {col.name!r}: cannot parse {v!r} as {col.kind.value}"
                ) from None
            if not math.isfinite(x):
                raise SchemaError(f"{source}: row {r + 1}, column {col.name!r}: non-finite value {v!r}")
            if col.domain is not None and not col.domain[0] <= x <= col.domain[1]:
                raise SchemaError(f"{source}: row {r + 1}, column {col.name!r}: {x} outside domain {col.domain}")
            vals[r] = x
        if encoding is not None:
            is_int = col.name in encoding.integral
        else:
            is_int = bool(np.all(vals == np.round(vals)))
        if is_int:
            integral.add(col.name)
        value_cols.append(vals)

    n = len(records)
    matrix = np.column_stack(value_cols) if value_cols else np.zeros((n, 0))
    if matrix.shape[0] != n:
        matrix = matrix.reshape(n, -1)
    return Dataset(schema, matrix, ColumnEncoding(categories, frozenset(integral)), entities)


def encode_numeric(ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Encoded real matrix (entity column excluded) and the row -> entity map."""
    return np.array(ds.matrix), np.array(ds.entity_ids())


def decode_rows(
    matrix: np.ndarray,
    enc: ColumnEncoding,
    schema: Sequence[ColumnSchema],
    entities: np.ndarray | None = None,
) -> Dataset:
    """Build a Dataset from a real matrix produced by a synthesizer.

    Categorical cells are rounded to the nearest code and clamped into the
    known code range; every clamp increments ``warnings['clamped']``.
    Integral continuous columns are rounded to whole numbers.
    """
    schema = validate_schema(schema)
    value_schema = [c for c in schema if c.kind is not Kind.ENTITY_ID]
    m = np.array(matrix, dtype=np.float64, copy=True)
    if m.ndim == 1:
        m = m.reshape(-1, len(value_schema)) if len(value_schema) else m.reshape(len(m), 0)
    if m.shape[1] != len(value_schema):
        raise SchemaError(f"matrix has {m.shape[1]} columns, schema expects {len(value_schema)}")
    clamped = 0
    for j, col in enumerate(value_schema):
        if col.kind is Kind.CATEGORICAL:
            k = len(enc.categories[col.name])
            codes = np.rint(m[:, j])
            bad = (codes < 0) | (codes > k - 1)
            clamped += int(bad.sum())
            m[:, j] = np.clip(codes, 0, k - 1)
        elif col.name in enc.integral:
            m[:, j] = np.rint(m[:, j])
    if entities is None and any(c.kind is Kind.ENTITY_ID for c in schema):
        entities = np.array([str(i) for i in range(len(m))], dtype=object)
    return Dataset(tuple(schema), m, enc.project(c.name for c in value_schema), entities,
                   warnings={"clamped": clamped})
