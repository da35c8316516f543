"""Seeded census-like tables for tests, scripts and the CLI walkthrough.

The column names follow the ACS excerpt used in the NIST CRC benchmark, but
every value is drawn from a small hand-written generative model.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import ColumnSchema, Dataset, dataset_from_records
from .privacy import DEFAULT_QI

COLUMNS = ("AGEP", "SEX", "RAC1P", "HISP", "EDU", "PUMA", "DENSITY",
           "PINCP", "MSP", "OWN_RENT", "INDP_CAT", "DVET")
CONTINUOUS = {"AGEP", "DENSITY", "PINCP"}

_PUMAS = ("01-01301", "01-01302", "01-01400", "01-01500", "01-01600", "01-01700")
_PUMA_P = (0.25, 0.2, 0.2, 0.15, 0.1, 0.1)
_DENSITY = (4210.5, 2875.25, 1120.0, 512.75, 96.5, 31.125)


def demo_schema(columns: Sequence[str] = COLUMNS) -> tuple[ColumnSchema, ...]:
    return tuple(ColumnSchema(c, "continuous" if c in CONTINUOUS else "categorical") for c in columns)


def demo_rules() -> list[dict]:
    """Impossible value pairs that the generator never produces."""
    return [
        {"name": "child_veteran", "colA": "AGEP", "predA": {"op": "<", "value": 15},
         "colB": "DVET", "predB": {"op": "non_null"}},
        {"name": "child_married", "colA": "AGEP", "predA": {"op": "<", "value": 15},
         "colB": "MSP", "predB": {"op": "non_null"}},
        {"name": "child_degree", "colA": "AGEP", "predA": {"op": "<", "value": 15},
         "colB": "EDU", "predB": {"op": ">=", "value": 12}},
        {"name": "child_industry", "colA": "AGEP", "predA": {"op": "<", "value": 16},
         "colB": "INDP_CAT", "predB": {"op": "non_null"}},
    ]


def measurement_plan(columns: Sequence[str], qi: Sequence[str] | None = None) -> list:
    """Plan JSON covering what the metrics read: 1-, 2- and 3-column tables,
    the full table, and one QI-plus-target table per attack target."""
    qi = [c for c in DEFAULT_QI if c in columns] if qi is None else list(qi)
    plan: list = [{"all_subsets_of_size": k} for k in (1, 2, 3) if k <= len(columns)]
    plan.append(sorted(columns))
    if qi:
        plan += [sorted(qi + [t]) for t in columns if t not in qi]
    return plan


def _records(n: int, rng: np.random.Generator) -> dict[str, list[str]]:
    puma = rng.choice(len(_PUMAS), size=n, p=_PUMA_P)
    age = np.where(rng.random(n) < 0.22, rng.integers(0, 18, n),
                   np.clip(rng.normal(45, 17, n), 18, 90)).astype(int)
    sex = rng.integers(1, 3, n)
    race_p = np.array([[0.7, 0.15, 0.02, 0.05, 0.02, 0.02, 0.02, 0.01, 0.01],
                       [0.4, 0.45, 0.02, 0.05, 0.02, 0.02, 0.02, 0.01, 0.01]])
    urban = puma < 2
    race = np.array([rng.choice(9, p=race_p[int(u)]) + 1 for u in urban])
    hisp = np.where(rng.random(n) < 0.85, 1, rng.integers(2, 6, n))

    edu = np.empty(n, dtype=int)
    kid = age < 18
    edu[kid] = np.clip(age[kid] - 4, 0, 11)
    adult_edu = np.clip(np.round(rng.normal(15 + 1.2 * (puma[~kid] < 3), 2.5)), 9, 22).astype(int)
    edu[~kid] = adult_edu

    msp = np.where(age < 15, 0, np.where(age < 25, rng.choice([1, 6, 6, 6], n), rng.choice([1, 1, 2, 3, 4, 5, 6], n)))
    own = rng.choice([0, 1, 2], size=n, p=[0.1, 0.6, 0.3])
    indp = np.where(age < 16, -1, (edu // 3 + rng.integers(0, 10, n)) % 18)
    work = (age >= 15).astype(float)
    income = work * np.exp(rng.normal(9.5 + 0.12 * (edu - 12), 0.8)) * (1 + 0.2 * (sex == 1))
    income = np.round(income / 100) * 100
    vet_p = np.where(sex == 1, 0.15, 0.02)
    dvet = np.where(age < 17, 0, np.where(rng.random(n) < vet_p, 1, 2))

    def cat(v, null=None):
        return ["" if (null is not None and x == null) else str(x) for x in v.tolist()]

    return {
        "AGEP": [str(x) for x in age.tolist()],
        "SEX": cat(sex),
        "RAC1P": cat(race),
        "HISP": cat(hisp),
        "EDU": cat(edu),
        "PUMA": [_PUMAS[i] for i in puma],
        "DENSITY": [repr(_DENSITY[i]) for i in puma],
        "PINCP": [str(int(x)) for x in income.tolist()],
        "MSP": cat(msp, null=0),
        "OWN_RENT": cat(own),
        "INDP_CAT": cat(indp, null=-1),
        "DVET": cat(dvet, null=0),
    }


def census_like(n: int = 1000, seed: int = 0, columns: Sequence[str] = COLUMNS) -> Dataset:
    """``n`` rows of the demo model, restricted to ``columns``."""
    unknown = [c for c in columns if c not in COLUMNS]
    if unknown:
        raise KeyError(f"unknown demo columns {unknown}")
    cols = _records(n, np.random.default_rng(seed))
    records = list(zip(*(cols[c] for c in columns)))
    return dataset_from_records(list(columns), records, demo_schema(columns), source=f"demo(seed={seed})")


def write_demo(root: str | Path, n: int = 1000, seed: int = 0, columns: Sequence[str] = COLUMNS) -> dict[str, Path]:
    """Write data.csv, schema.json, rules.json, attack.json and plan.json under ``root``."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    ds = census_like(n, seed, columns)
    paths = {k: root / f"{k}.json" for k in ("schema", "rules", "attack", "plan")}
    paths["data"] = root / "data.csv"
    ds.write_csv(paths["data"])
    dump = lambda p, o: p.write_text(json.dumps(o, indent=2) + "\n", encoding="utf-8")
    dump(paths["schema"], [c.to_json() for c in ds.schema])
    rules = [r for r in demo_rules() if r["colA"] in columns and r["colB"] in columns]
    dump(paths["rules"], rules)
    dump(paths["attack"], {"seed": seed, "split": 0.5})
    dump(paths["plan"], measurement_plan(columns))
    return paths
