"""Acceptance criteria, one test each; every test records a PASS/FAIL line
that the terminal summary prints under "acceptance criteria"."""

import json
import math
import random
import time

import numpy as np
import pytest

import oracles
from conftest import copy_store, make_dataset, random_dataset
from synthmark.demo import census_like, demo_rules, write_demo
from synthmark.forest import SnappedInterval, build_forest
from synthmark.harness.cli import main
from synthmark.harness.report import MeasureConfig, RegressionSpec, run_measures
from synthmark.metrics.correlation import correlation_diffs, kendall_tau
from synthmark.metrics.improvement import format_if, improvement_factor
from synthmark.metrics.inconsistency import InconsistencyRule
from synthmark.metrics.marginals import DEFAULT_RATES, k_marginal_score, sample_marginals, sampled_score_curve
from synthmark.metrics.pca import ks_statistic
from synthmark.metrics.regression import ols_slope
from synthmark.metrics.univariate import univariate_errors
from synthmark.microdata import PlanRunner, SynthesisPlan, _seed, plan_clusters, run_plan, stitch, synthesize_table
from synthmark.noise import AnonParams, suppression_threshold, sticky_noise
from synthmark.privacy import AttackConfig, attack_matches, precision_improvement, qi_attack
from synthmark.store import MissingTableError, SingleTableSource, SynTableStore, table_key

COLS8 = ("AGEP", "SEX", "EDU", "PUMA", "PINCP", "MSP", "INDP_CAT", "DVET")


# 1 -----------------------------------------------------------------------

def test_identity_suite(tmp_path, record_criterion):
    t0 = time.perf_counter()
    failures = []
    for seed, cols in ((0, COLS8), (1, ("AGEP", "SEX", "RAC1P", "HISP", "PUMA", "PINCP")), (2, ("AGEP", "SEX", "PINCP"))):
        ds = census_like(500 + 50 * seed, seed, cols)
        store = copy_store(ds, tmp_path / f"s{seed}", max_k=3)
        cfg = MeasureConfig(
            metrics=("univariate", "correlation", "k_marginal", "regression", "pmse", "pca", "inconsistencies"),
            sampling=False, seed=seed,
            regressions=[RegressionSpec.from_json({"x": "AGEP", "y": "PINCP", "groups": {
                "men": [["SEX", {"op": "==", "value": "1"}]], "women": [["SEX", {"op": "==", "value": "2"}]]}})],
            rules=[InconsistencyRule.from_json(r) for r in demo_rules() if r["colA"] in cols and r["colB"] in cols],
        )
        if len(cols) < 5:
            cfg.metrics = tuple(m for m in cfg.metrics if m != "pca")
        s = run_measures(ds, store, cfg, "copy")["summary"]
        checks = {
            "univariate_median_error": s["univariate_median_error"] == 0,
            "max E_comp": max(e.comp_error for c in cols for e in univariate_errors(ds, store.fetch([c]), c)) == 0,
            "tau": all(d.diff == 0 for d in correlation_diffs(ds, store)),
            "k_marginal": s["k_marginal_score"] == 1000,
            "regression": s["regression_median_error"] == 0,
            "pmse": s["pmse_mean"] < 1e-3,
            "pca": s.get("pca_ks_score", 0) == 0,
            "inconsistencies": s.get("inconsistency_count", 0) == 0,
        }
        failures += [f"seed{seed}:{k}" for k, ok in checks.items() if not ok]
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 30
    record_criterion("1 identity suite", ok, f"{elapsed:.1f}s failures={failures}")
    assert ok


# 2 -----------------------------------------------------------------------

def test_improvement_factor_arithmetic(record_criterion):
    # A 5% error against a 10% error is twice as close to perfect.
    two_x = improvement_factor(0.0, 0.05, 0.10).value
    table_pair = improvement_factor(1000.0, 956.0, 801.0).value
    sentinel = improvement_factor(0.0, 0.05, 0.0).value
    ok = (two_x == pytest.approx(2.0) and abs(table_pair - 4.5) <= 0.05
          and sentinel == -math.inf and format_if(sentinel) == "-inf")
    record_criterion("2 improvement factor arithmetic", ok, f"2x={two_x} 956/801={table_pair:.4f} sentinel={sentinel}")
    assert ok


# 3 -----------------------------------------------------------------------

def test_precision_improvement_arithmetic(record_criterion):
    rng = random.Random(3)
    one = precision_improvement(1.0, 0.5)[0]
    equal = [precision_improvement(p, p)[0] for p in (rng.uniform(0, 0.999) for _ in range(20))]
    capped = precision_improvement(0.8, 1.0)
    ok = one == 1.0 and all(v == 0 for v in equal) and capped == (0.0, True)
    record_criterion("3 precision improvement arithmetic", ok, f"PI(1,.5)={one} equal-max={max(map(abs, equal))} capped={capped}")
    assert ok


# 4 -----------------------------------------------------------------------

def test_oracle_equivalence(record_criterion):
    rng = np.random.default_rng(404)
    n_inst = 100
    worst = {"tau": 0.0, "marginal": 0.0, "attack": 0, "ks": 0.0, "ols": 0.0}
    for _ in range(n_inst):
        n = int(rng.integers(2, 40))
        x = rng.integers(-4, 5, n).tolist()
        y = rng.integers(-4, 5, n).tolist()
        worst["tau"] = max(worst["tau"], abs(kendall_tau(x, y) - oracles.tau_b_pairs(x, y)))

        orig = random_dataset(rng, 60)
        syn = random_dataset(rng, int(rng.integers(5, 80)))
        cols = list(rng.choice(orig.columns, size=3, replace=False))
        bins = int(rng.integers(2, 12))
        got = k_marginal_score(orig, SingleTableSource(syn), [cols], bins).scores[0]
        kinds = [orig.kind(c).value == "categorical" for c in cols]
        want = oracles.marginal_score(list(zip(*(orig.decoded_column(c) for c in cols))),
                                      list(zip(*(syn.decoded_column(c) for c in cols))), kinds, bins)
        worst["marginal"] = max(worst["marginal"], abs(got - want))

        m = 20 + int(rng.integers(1, 25))
        both = make_dataset({"q0": [f"a{v}" for v in rng.integers(0, 2, m)],
                             "q1": [f"b{v}" for v in rng.integers(0, 3, m)],
                             "t": [f"t{v}" for v in rng.integers(0, 3, m)]})
        o, s = both.take(np.arange(20)), both.take(np.arange(20, m))
        if attack_matches(o, s, ["q0", "q1"], "t") != oracles.qi_attack_enum(o.rows, s.rows, [0, 1], 2):
            worst["attack"] += 1

        a = rng.normal(size=int(rng.integers(1, 50))).round(1).tolist()
        b = rng.normal(0.3, 1, size=int(rng.integers(1, 50))).round(1).tolist()
        worst["ks"] = max(worst["ks"], abs(ks_statistic(a, b) - oracles.ks_scan(a, b)))

        xs = rng.normal(size=15).tolist()
        ys = (rng.normal() * np.array(xs) + rng.normal(size=15)).tolist()
        worst["ols"] = max(worst["ols"], abs(ols_slope(np.array(xs), np.array(ys)) - oracles.closed_form_slope(xs, ys)))
    ok = (worst["tau"] <= 1e-12 and worst["marginal"] == 0 and worst["attack"] == 0
          and worst["ks"] <= 1e-12 and worst["ols"] <= 1e-12)
    record_criterion("4 oracle equivalence", ok, f"instances={n_inst} worst={worst}")
    assert ok


# 5 -----------------------------------------------------------------------

class _Tables:
    """Minimal store: fetch() by sorted combination, projected to the requested order."""

    def __init__(self, tables):
        self.tables = tables

    def fetch(self, columns):
        key = tuple(sorted(columns))
        if key not in self.tables:
            raise MissingTableError(table_key(key))
        return self.tables[key].project(list(columns))


def _recount(ds, key):
    mask = np.ones(ds.row_count, dtype=bool)
    for c, iv in key:
        mask &= iv.contains(ds.column(c))
    return len(np.unique(ds.entity_ids()[mask]))


def _table_with_floor(ds, combo, params, cache):
    """Mirror of PlanRunner.table that also recounts every released row's source box.

    Returns (table, rows checked, violations).
    """
    plan = plan_clusters(ds, combo, 4)
    parts, checked, bad = [], 0, 0
    for i in range(len(plan.clusters)):
        forest = build_forest(ds, plan.table_columns(i), params, 4, cache=cache)
        part, sources = synthesize_table(forest, return_sources=True)
        counts = {}
        for key in sources:
            k = tuple(key)
            if k not in counts:
                counts[k] = _recount(ds, key)
        checked += len(sources)
        bad += sum(1 for key in sources if counts[tuple(key)] < 3)
        parts.append(part)
    merged = stitch(parts, plan, seed=_seed(params.salt, "stitch", *combo) % 2**32)
    return merged.project(list(combo)), checked, bad


def test_anonymity_floor_and_pi(record_criterion):
    t0 = time.perf_counter()
    n_sets, rows = 50, 600
    checked = violations = 0
    high = []
    all_pi = []
    for seed in range(n_sets):
        ds = census_like(rows, seed)
        params = AnonParams(5.0, 3, 1.4, salt=f"floor-{seed}".encode())
        cfg = AttackConfig.for_columns(ds.columns, seed=seed)
        cache, tables = {}, {}
        for t in cfg.targets:
            combo = tuple(sorted([*cfg.qi, t]))
            tables[combo], c, b = _table_with_floor(ds, combo, params, cache)
            checked += c
            violations += b
        if seed == 0:
            # The mirrored path must produce what the plan runner writes.
            runner = PlanRunner(ds, params)
            combo = next(iter(tables))
            assert runner.table(combo).equals(tables[combo])
        entities = len(np.unique(ds.entity_ids()))
        for r in qi_attack(ds, _Tables(tables), cfg):
            if r.pi is None:
                continue
            all_pi.append(r.pi)
            if entities >= 500 and r.pi >= 0.5:
                high.append((seed, r.target, round(r.pi, 3), r.match_count, round(r.p_atk, 3), round(r.p_base, 3),
                             round(r.p_base_matched, 3)))
    elapsed = time.perf_counter() - t0
    floor_ok = violations == 0 and checked > 0
    pi_ok = not high
    ok = floor_ok and pi_ok and elapsed < 300
    # Diagnostic only: how often the baseline scored on the attacked rows themselves does as well.
    explained = sum(1 for h in high if h[6] >= h[4] - 0.1)
    detail = (f"{elapsed:.0f}s rows_checked={checked} floor_violations={violations} "
              f"attacks={len(all_pi)} median_PI={np.median(all_pi):.3f} PI>=0.5: {len(high)} "
              f"(baseline on matched rows within 0.1 of P_atk: {explained}) "
              f"examples(seed,target,PI,matches,P_atk,P_base,P_base_matched)={high[:4]}")
    record_criterion("5 anonymity floor + PI < 0.5", ok, detail)
    assert floor_ok, detail
    assert elapsed < 300, detail
    assert pi_ok, detail


# 6 -----------------------------------------------------------------------

def test_stickiness(tmp_path, record_criterion):
    ds = census_like(800, 6, COLS8)
    params = AnonParams(salt=b"sticky")
    a = build_forest(ds, ("AGEP", "EDU", "PINCP", "SEX"), params)
    b = build_forest(ds, ("AGEP", "DVET", "EDU", "MSP"), params)
    da, db = a.dump(), b.dump()
    shared_trees = sorted(set(da) & set(db))
    tree_bytes_equal = all(json.dumps(da[k], sort_keys=True) == json.dumps(db[k], sort_keys=True) for k in shared_trees)

    paths = write_demo(tmp_path / "demo", n=300, seed=6, columns=("AGEP", "SEX", "EDU", "PUMA"))
    outs = []
    for run in ("r1", "r2"):
        store = tmp_path / run / "store"
        assert main(["synthesize", str(paths["data"]), str(paths["schema"]), str(paths["plan"]),
                     "--out", str(store)]) == 0
        rep = tmp_path / run / "report.json"
        assert main(["measure", str(paths["data"]), str(paths["schema"]), "--store", str(store),
                     "--rules", str(paths["rules"]), "--attack", str(paths["attack"]), "--out", str(rep)]) == 0
        single = tmp_path / run / "single.json"
        assert main(["measure", str(paths["data"]), str(paths["schema"]), "--table", str(store / "AGEP+EDU+PUMA+SEX.csv"),
                     "--name", "wide", "--out", str(single)]) == 0
        cmp = tmp_path / run / "cmp.json"
        assert main(["compare", str(rep), str(single), "--reference", "store", "--out", str(cmp)]) == 0
        outs.append({p.relative_to(tmp_path / run): p.read_bytes() for p in (tmp_path / run).rglob("*") if p.is_file()})
    reruns_equal = outs[0] == outs[1] and len(outs[0]) > 10
    ok = tree_bytes_equal and bool(shared_trees) and reruns_equal
    record_criterion("6 stickiness", ok, f"shared_trees={shared_trees} dumps_identical={tree_bytes_equal} "
                                         f"rerun_files={len(outs[0])} identical={reruns_equal}")
    assert ok


# 7 -----------------------------------------------------------------------

def test_noise_calibration(record_criterion):
    salt = b"calibration"
    params = AnonParams(salt=salt)
    keys = [(("c", SnappedInterval(1.0, float(i))),) for i in range(100_000)]
    noise = np.array([sticky_noise(salt, k, 1.4) for k in keys])
    thr = np.array([suppression_threshold(salt, k, params) for k in keys])
    sd, mean, floor = float(noise.std()), float(thr.mean()), float(thr.min())
    ok = abs(sd - 1.4) <= 0.05 and abs(mean - 5.0) <= 0.1 and floor == 3.0
    record_criterion("7 noise calibration", ok, f"sd={sd:.4f} threshold_mean={mean:.4f} floor={floor}")
    assert ok


# 8 -----------------------------------------------------------------------

def test_multitable_advantage(tmp_path, record_criterion):
    ds = census_like(2000, 8, COLS8)
    params = AnonParams(salt=b"multi")
    plan = SynthesisPlan.from_json([{"all_subsets_of_size": 1}, {"all_subsets_of_size": 2}, list(COLS8)], ds.columns)
    store = run_plan(ds, plan, params, tmp_path / "store")
    store = SynTableStore(tmp_path / "store", reference=ds)
    wide = SingleTableSource(store.fetch(list(COLS8)))
    cfg = MeasureConfig(metrics=("univariate", "correlation"), sampling=False)
    multi = run_measures(ds, store, cfg, "multi")["summary"]
    single = run_measures(ds, wide, cfg, "single")["summary"]
    e_m, e_s = multi["univariate_median_error"], single["univariate_median_error"]
    t_m, t_s = multi["correlation_median_diff"], single["correlation_median_diff"]
    ok = e_m < e_s and t_m < t_s
    record_criterion("8 multi-table advantage", ok, f"E_comp multi={e_m:.4g} single={e_s:.4g}; "
                                                    f"tau diff multi={t_m:.4g} single={t_s:.4g}")
    assert ok


# 9 -----------------------------------------------------------------------

def test_sampling_curve_monotone(record_criterion):
    bad = []
    for seed in range(20):
        ds = census_like(1000, 100 + seed, COLS8)
        marginals = sample_marginals(ds.columns, 3, 20, seed=seed)
        curve = sampled_score_curve(ds, marginals, seed=seed)
        vals = [curve[r] for r in DEFAULT_RATES]
        if any(b < a for a, b in zip(vals, vals[1:])):
            bad.append((seed, [round(v, 1) for v in vals]))
    ok = not bad
    record_criterion("9 sampling-curve monotonicity", ok, f"datasets=20 rates={list(DEFAULT_RATES)} violations={bad}")
    assert ok
