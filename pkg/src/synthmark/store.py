"""Directory-backed collection of synthetic tables keyed by column set."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

from .data import ColumnSchema, Dataset, Kind, SchemaError, load_csv

MANIFEST = "manifest.json"
POLICIES = ("exact", "project_from_superset")


class MissingTableError(LookupError):
    def __init__(self, columns: Sequence[str]):
        self.key = table_key(columns)
        super().__init__(f"no synthetic table for column set {self.key!r}")


def table_key(columns: Iterable[str]) -> str:
    return "+".join(sorted(columns))


def normalize_policy(policy: str) -> str:
    if policy == "project":
        policy = "project_from_superset"
    if policy not in POLICIES:
        raise ValueError(f"unknown fetch policy {policy!r}")
    return policy


def write_json(path: Path, obj) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


class SynTableStore:
    """Synthetic tables under ``root``, one ``<a+b+c>.csv`` per column set.

    ``reference`` is the original dataset; when given, tables are decoded
    with its schema and categorical coding so codes agree across tables.
    """

    def __init__(self, root: str | Path, policy: str = "exact", reference: Dataset | None = None):
        self.root = Path(root)
        self.policy = normalize_policy(policy)
        self.reference = reference
        self._cache: dict[str, Dataset] = {}
        self.manifest = self._read_manifest()

    def _read_manifest(self) -> dict:
        path = self.root / MANIFEST
        if path.exists():
            manifest = json.loads(path.read_text(encoding="utf-8"))
            for key, entry in manifest.get("tables", {}).items():
                if not (self.root / entry["file"]).exists():
                    raise SchemaError(f"manifest entry {key!r}: file {entry['file']} is missing")
            return manifest
        # No manifest: index any '<cols>.csv' files present, e.g. an external technique's output.
        tables = {}
        if self.root.is_dir():
            for p in sorted(self.root.glob("*.csv")):
                with open(p, newline="", encoding="utf-8") as fh:
                    header = next(csv.reader(fh), [])
                key = table_key(header)
                tables[key] = {"file": p.name, "columns": sorted(header)}
        return {"tables": tables, "complete": True}

    def combinations(self) -> list[tuple[str, ...]]:
        return [tuple(e["columns"]) for _, e in sorted(self.manifest.get("tables", {}).items())]

    def __len__(self) -> int:
        return len(self.manifest.get("tables", {}))

    def __contains__(self, columns) -> bool:
        return table_key(columns) in self.manifest.get("tables", {})

    def resolve(self, columns: Sequence[str], policy: str | None = None) -> str:
        """Manifest key of the table that serves ``columns``."""
        policy = normalize_policy(policy or self.policy)
        tables = self.manifest.get("tables", {})
        key = table_key(columns)
        if key in tables:
            return key
        if policy == "exact":
            raise MissingTableError(columns)
        need = set(columns)
        supersets = [k for k, e in tables.items() if need <= set(e["columns"])]
        if not supersets:
            raise MissingTableError(columns)
        return min(supersets, key=lambda k: (len(tables[k]["columns"]), k))

    def _schema_for(self, columns: Sequence[str]) -> list[ColumnSchema]:
        if self.reference is not None:
            by_name = {c.name: c for c in self.reference.schema}
        else:
            by_name = {c["name"]: ColumnSchema(c["name"], c["kind"]) for c in self.manifest.get("schema", [])}
        try:
            return [by_name[c] for c in columns]
        except KeyError as exc:
            raise SchemaError(f"column {exc.args[0]!r} not in the reference schema") from None

    def load(self, key: str) -> Dataset:
        if key not in self._cache:
            entry = self.manifest["tables"][key]
            schema = self._schema_for(entry["columns"])
            enc = self.reference.encoding if self.reference is not None else None
            self._cache[key] = load_csv(self.root / entry["file"], schema, encoding=enc)
        return self._cache[key]

    def fetch(self, columns: Sequence[str], policy: str | None = None) -> Dataset:
        """Table holding exactly ``columns`` (in that order), per the fetch policy."""
        key = self.resolve(columns, policy)
        return self.load(key).project(list(columns))

    def tables(self) -> list[Dataset]:
        return [self.load(k) for k in sorted(self.manifest.get("tables", {}))]


class SingleTableSource:
    """Serves every column set by projecting one full synthetic table."""

    policy = "project_from_superset"

    def __init__(self, table: Dataset):
        self.table = table

    def combinations(self) -> list[tuple[str, ...]]:
        return [tuple(sorted(self.table.columns))]

    def fetch(self, columns: Sequence[str], policy: str | None = None) -> Dataset:
        missing = [c for c in columns if c not in self.table.columns]
        if missing:
            raise MissingTableError(columns)
        return self.table.project(list(columns))

    def tables(self) -> list[Dataset]:
        return [self.table]

    def __len__(self) -> int:
        return 1


def write_store(
    root: str | Path,
    tables: dict[tuple[str, ...], Dataset],
    schema: Sequence[ColumnSchema],
    meta: dict,
    complete: bool = True,
    reference: Dataset | None = None,
) -> SynTableStore:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    entries = {}
    for cols, ds in sorted(tables.items()):
        key = table_key(cols)
        fname = key + ".csv"
        ds.project(sorted(cols)).write_csv(root / fname)
        entries[key] = {"file": fname, "columns": sorted(cols), "rows": ds.row_count}
    manifest = dict(meta)
    manifest["tables"] = entries
    manifest["complete"] = complete
    manifest["schema"] = [c.to_json() for c in schema if c.kind is not Kind.ENTITY_ID]
    write_json(root / MANIFEST, manifest)
    return SynTableStore(root, reference=reference)
