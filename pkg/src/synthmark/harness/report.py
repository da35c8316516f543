"""Metric suite runner, report serialization and technique comparison."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..data import Dataset
from ..metrics.correlation import correlation_diffs
from ..metrics.improvement import improvement_factor
from ..metrics.inconsistency import InconsistencyRule, check_rules, count_inconsistencies, inconsistency_total
from ..metrics.marginals import k_marginal_score, sample_marginals, sampled_score_curve, sampling_equivalence
from ..metrics.pca import pca_compare, usable_pca_columns
from ..metrics.pmse import pmse
from ..metrics.predicates import Predicate
from ..metrics.regression import regression_slope_error
from ..metrics.univariate import univariate_errors
from ..privacy import AttackConfig, full_match_count, qi_attack

log = logging.getLogger(__name__)

PCA_MIN_COLUMNS = 5

ALL_METRICS = ("univariate", "correlation", "k_marginal", "regression", "pmse", "pca",
               "inconsistencies", "privacy")

# Perfect score of each comparable summary measure.
PERFECT = {
    "univariate_median_error": 0.0,
    "correlation_median_diff": 0.0,
    "k_marginal_score": 1000.0,
    "regression_median_error": 0.0,
    "pmse_mean": 0.0,
    "pca_ks_score": 0.0,
    "inconsistency_count": 0.0,
}


@dataclass(frozen=True)
class RegressionSpec:
    x: str
    y: str
    groups: dict | None = None  # label -> [(column, Predicate), ...]

    @classmethod
    def from_json(cls, obj: dict) -> RegressionSpec:
        groups = None
        if obj.get("groups"):
            groups = {label: [(c, Predicate.from_json(p)) for c, p in conds]
                      for label, conds in obj["groups"].items()}
        return cls(obj["x"], obj["y"], groups)

    @property
    def columns(self) -> list[str]:
        cols = [self.x, self.y]
        for conds in (self.groups or {}).values():
            cols += [c for c, _ in conds if c not in cols]
        return cols


@dataclass
class MeasureConfig:
    metrics: tuple[str, ...] = ALL_METRICS
    bins: int = 100
    marginal_count: int = 232
    seed: int = 0
    sampling_trials: int = 5
    sampling: bool = True
    pmse_tables: str = "all"  # "all" tables of the source, or "full" table only
    regressions: list[RegressionSpec] = field(default_factory=list)
    rules: list[InconsistencyRule] = field(default_factory=list)
    attack: dict | None = None

    def __post_init__(self):
        unknown = [m for m in self.metrics if m not in ALL_METRICS]
        if unknown:
            raise ValueError(f"unknown metrics {unknown}; choose from {list(ALL_METRICS)}")
        if self.pmse_tables not in ("all", "full"):
            raise ValueError("pmse_tables must be 'all' or 'full'")

    @classmethod
    def from_json(cls, obj: dict) -> MeasureConfig:
        obj = dict(obj)
        kw = {k: obj.pop(k) for k in ("bins", "marginal_count", "seed", "sampling_trials",
                                     "sampling", "pmse_tables", "attack") if k in obj}
        if "metrics" in obj:
            kw["metrics"] = tuple(obj.pop("metrics"))
        kw["regressions"] = [RegressionSpec.from_json(r) for r in obj.pop("regression", [])]
        kw["rules"] = [InconsistencyRule.from_json(r) for r in obj.pop("rules", [])]
        if obj:
            raise ValueError(f"unknown config keys {sorted(obj)}")
        return cls(**kw)


def _clean(obj):
    """JSON-safe copy: tuples to lists, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def median(values: Sequence[float]) -> float | None:
    return float(np.median(values)) if len(values) else None


def report_json(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def run_measures(orig: Dataset, source, cfg: MeasureConfig, technique: str = "technique",
                 full_table: Dataset | None = None) -> dict:
    """Run the enabled metrics; ``source`` is a SynTableStore or SingleTableSource."""
    metrics: dict = {}
    summary: dict = {}
    columns = list(orig.columns)

    if "univariate" in cfg.metrics:
        entries = []
        for c in columns:
            entries += [asdict(e) for e in univariate_errors(orig, source.fetch([c]), c, cfg.bins)]
        med = median([e["comp_error"] for e in entries])
        metrics["univariate"] = {"entries": entries, "median_comp_error": med}
        summary["univariate_median_error"] = med

    if "correlation" in cfg.metrics:
        diffs = correlation_diffs(orig, source, columns)
        med = median([d.diff for d in diffs if not d.flagged])
        metrics["correlation"] = {"pairs": [asdict(d) for d in diffs], "median_diff": med}
        summary["correlation_median_diff"] = med

    if "k_marginal" in cfg.metrics:
        marginals = sample_marginals(columns, 3, cfg.marginal_count, cfg.seed)
        res = k_marginal_score(orig, source, marginals, cfg.bins)
        entry = {"marginals": res.marginals, "density_diffs": res.density_diffs,
                 "scores": res.scores, "score": res.score}
        if cfg.sampling and marginals:
            curve = sampled_score_curve(orig, marginals, trials=cfg.sampling_trials, seed=cfg.seed, bins=cfg.bins)
            entry["sampling_curve"] = {str(k): v for k, v in curve.items()}
            entry["sampling_equivalent"] = sampling_equivalence(orig, res.score, curve=curve)
        metrics["k_marginal"] = entry
        summary["k_marginal_score"] = float(res.score)

    if "regression" in cfg.metrics and cfg.regressions:
        out = []
        for spec in cfg.regressions:
            syn = source.fetch(spec.columns)
            for r in regression_slope_error(orig, syn, spec.x, spec.y, spec.groups):
                out.append({"x": spec.x, "y": spec.y, **asdict(r)})
        med = median([r["error"] for r in out if not r["flagged"] and r["error"] is not None])
        metrics["regression"] = {"groups": out, "median_error": med}
        summary["regression_median_error"] = med

    syn_full = None
    if ("pca" in cfg.metrics and usable_pca_columns(orig) >= PCA_MIN_COLUMNS) or "privacy" in cfg.metrics or cfg.pmse_tables == "full":
        syn_full = full_table if full_table is not None else source.fetch(columns)

    if "pmse" in cfg.metrics:
        tables = source.tables() if cfg.pmse_tables == "all" else [syn_full]
        res = pmse(orig, tables)
        metrics["pmse"] = {"tables": ["+".join(sorted(t)) for t in res.tables],
                           "values": res.values, "mean": res.mean}
        summary["pmse_mean"] = res.mean

    if "pca" in cfg.metrics:
        if usable_pca_columns(orig) < PCA_MIN_COLUMNS:
            # Too narrow for 5 components: report the skip instead of failing the whole run.
            metrics["pca"] = {"skipped": f"needs {PCA_MIN_COLUMNS} non-constant columns"}
            log.warning("pca skipped: fewer than %d non-constant columns", PCA_MIN_COLUMNS)
        else:
            res = pca_compare(orig, syn_full)
            metrics["pca"] = {"columns": res.columns, "loadings": res.loadings,
                              "eigenvalues": res.eigenvalues, "ks": res.ks, "ks_score": res.ks_score}
            summary["pca_ks_score"] = res.ks_score

    if "inconsistencies" in cfg.metrics and cfg.rules:
        check_rules(cfg.rules, columns)
        counts = count_inconsistencies(source, cfg.rules)
        total = inconsistency_total(counts)
        metrics["inconsistencies"] = {"rules": [asdict(c) for c in counts], "count": total}
        summary["inconsistency_count"] = float(total)

    if "privacy" in cfg.metrics:
        attack = AttackConfig.from_json(cfg.attack or {}, columns)
        entry: dict = {"qi": attack.qi}
        if attack.qi and attack.targets:
            results = qi_attack(orig, source, attack)
            pis = [r.pi for r in results if r.pi is not None]
            entry["attacks"] = [{**asdict(r), "label": r.label} for r in results]
            entry["median_pi"] = median(pis)
            entry["max_pi"] = max(pis) if pis else None
            entry["median_coverage"] = median([r.coverage for r in results])
            entry["median_match_count"] = median([r.match_count for r in results])
        fm = full_match_count(orig, syn_full)
        entry["full_match"] = asdict(fm)
        metrics["privacy"] = entry

    return {
        "technique": technique,
        "original_digest": orig.digest()[:16],
        "config": {"bins": cfg.bins, "marginal_count": cfg.marginal_count, "seed": cfg.seed,
                   "metrics": list(cfg.metrics)},
        "metrics": metrics,
        "summary": summary,
    }


def load_report(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def compare_reports(reports: Sequence[dict], reference: str) -> tuple[dict, list[dict], list[str]]:
    """IF of the reference technique against each report, per shared summary measure.

    Returns (comparison, plot rows, warnings).
    """
    by_name = {r["technique"]: r for r in reports}
    if len(by_name) != len(reports):
        raise ValueError("technique names must be unique across reports")
    if len(reports) < 2:
        raise ValueError("compare needs at least two reports")
    if reference not in by_name:
        raise KeyError(f"reference technique {reference!r} not among {sorted(by_name)}")
    warnings = []
    keysets = [set(k for k, v in r["summary"].items() if v is not None and k in PERFECT) for r in reports]
    shared = set.intersection(*keysets)
    dropped = set.union(*keysets) - shared
    if dropped:
        warnings.append(f"measures not in every report are skipped: {sorted(dropped)}")
    ref = by_name[reference]
    table: dict = {}
    rows = []
    for measure in sorted(shared):
        perfect = PERFECT[measure]
        s_ref = float(ref["summary"][measure])
        table[measure] = {}
        for name in sorted(by_name):
            val = float(by_name[name]["summary"][measure])
            imp = improvement_factor(perfect, s_ref, val)
            table[measure][name] = {"value": val, "improvement_factor": imp.value}
            rows.append({"measure": measure, "technique": name, "value": val,
                         "improvement_factor": imp.value})
    return {"reference": reference, "measures": table, "warnings": warnings}, rows, warnings
