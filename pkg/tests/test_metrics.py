import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from conftest import copy_store, make_dataset, random_dataset
from synthmark.metrics.correlation import correlation_diffs, kendall_tau
from synthmark.metrics.improvement import format_if, improvement_factor
from synthmark.metrics.inconsistency import InconsistencyRule, check_rules, count_inconsistencies, inconsistency_total
from synthmark.metrics.marginals import (
    density_difference, k_marginal_score, sample_marginals, sampled_score_curve, sampling_equivalence,
)
from synthmark.metrics.pca import ks_statistic, pca_compare
from synthmark.metrics.pmse import pmse
from synthmark.metrics.predicates import Predicate
from synthmark.metrics.regression import ols_slope, regression_slope_error
from synthmark.metrics.univariate import count_errors, univariate_errors
from synthmark.store import SingleTableSource

small_ints = st.lists(st.integers(-3, 3), min_size=2, max_size=40)


# -- Kendall tau ------------------------------------------------------------

def test_tau_extremes():
    x = np.arange(30.0)
    assert kendall_tau(x, x) == 1.0
    assert kendall_tau(x, -x) == -1.0
    assert kendall_tau(x, np.ones(30)) == 0.0
    with pytest.raises(ValueError):
        kendall_tau([1.0], [2.0])


@given(st.data())
def test_tau_matches_pair_enumeration(data):
    n = data.draw(st.integers(2, 50))
    x = data.draw(st.lists(st.integers(-4, 4), min_size=n, max_size=n))
    y = data.draw(st.lists(st.integers(-4, 4), min_size=n, max_size=n))
    assert abs(kendall_tau(x, y) - oracles.tau_b_pairs(x, y)) <= 1e-12


@given(st.data())
def test_tau_symmetries(data):
    n = data.draw(st.integers(2, 30))
    x = np.array(data.draw(st.lists(st.integers(-5, 5), min_size=n, max_size=n)), dtype=float)
    y = np.array(data.draw(st.lists(st.integers(-5, 5), min_size=n, max_size=n)), dtype=float)
    perm = np.random.default_rng(n).permutation(n)
    assert kendall_tau(x[perm], y[perm]) == pytest.approx(kendall_tau(x, y), abs=1e-12)
    assert kendall_tau(x, -y) == pytest.approx(-kendall_tau(x, y), abs=1e-12)


def test_correlation_diffs_identity_and_flags(tmp_path):
    ds = make_dataset({"a": [1.0, 2.0, 3.0, 4.0] * 5, "b": [2.0, 1.0, 4.0, 3.0] * 5, "k": [7.0] * 20})
    store = copy_store(ds, tmp_path, max_k=2)
    diffs = correlation_diffs(ds, store)
    assert all(d.diff == 0 for d in diffs)
    assert [d.flagged for d in diffs] == [False, True, True]


# -- univariate ---------------------------------------------------------------

def test_count_errors_examples():
    assert count_errors(1000, 990) == (10.0, 1.0, 1.0)
    assert count_errors(0, 4) == (4.0, math.inf, 4.0)
    assert count_errors(5, 5) == (0.0, 0.0, 0.0)


@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_count_error_invariants(c_o, c_s):
    e_abs, e_rel, e_comp = count_errors(c_o, c_s)
    assert e_abs >= 0 and e_comp <= e_abs
    if c_o > 0:
        assert e_comp <= e_rel


def test_univariate_entries():
    orig = make_dataset({"s": ["a", "a", "b"], "v": [0.0, 5.0, 10.0]})
    syn = make_dataset({"s": ["a", "c"], "v": [0.0, 99.0]})
    errs = {e.value: e for e in univariate_errors(orig, syn, "s")}
    assert errs["a"].count_syn == 1 and errs["b"].count_syn == 0 and errs["c"].count_orig == 0
    assert errs["c"].comp_error == 1.0
    bins = univariate_errors(orig, syn, "v", bins=2)
    # 99 clamps into the top bin alongside 5 and 10.
    assert [(e.count_orig, e.count_syn) for e in bins] == [(1, 1), (2, 1)]
    assert all(e.comp_error == 0 for e in univariate_errors(orig, orig, "v"))


# -- k-marginal ----------------------------------------------------------------

def test_k_marginal_endpoints():
    a = make_dataset({"p": ["x", "y"] * 10, "q": ["u", "v", "w", "u"] * 5, "r": [1.0, 2.0] * 10})
    b = make_dataset({"p": ["z"] * 4, "q": ["t"] * 4, "r": [1.0] * 4})
    m = [("p", "q", "r")]
    assert k_marginal_score(a, SingleTableSource(a), m).score == 1000
    assert k_marginal_score(a, SingleTableSource(b), m).score == 0
    assert density_difference(np.array([[0], [1]]), np.array([[2], [3]])) == 2.0


def test_k_marginal_matches_histogram_oracle():
    rng = np.random.default_rng(2024)
    for trial in range(100):
        orig = random_dataset(rng, 200, n_cat=2, n_num=2)
        syn = random_dataset(rng, int(rng.integers(20, 200)), n_cat=2, n_num=2)
        cols = list(rng.choice(orig.columns, size=3, replace=False))
        bins = int(rng.integers(2, 20))
        got = k_marginal_score(orig, SingleTableSource(syn), [cols], bins).scores[0]
        kinds = [orig.kind(c).value == "categorical" for c in cols]
        rows_o = list(zip(*(orig.decoded_column(c) for c in cols)))
        rows_s = list(zip(*(syn.decoded_column(c) for c in cols)))
        assert got == pytest.approx(oracles.marginal_score(rows_o, rows_s, kinds, bins), abs=1e-9)


def test_marginal_sampling_is_seeded():
    cols = [f"c{i}" for i in range(10)]
    a = sample_marginals(cols, 3, 20, seed=1)
    assert a == sample_marginals(cols, 3, 20, seed=1)
    assert len(set(a)) == 20
    assert len(sample_marginals(cols[:5], 3, 232)) == 10


def test_sampling_equivalence_bounds():
    ds = random_dataset(np.random.default_rng(1), 400)
    marg = sample_marginals(ds.columns, 3, 4)
    curve = sampled_score_curve(ds, marg, trials=3)
    assert sampling_equivalence(ds, 1000, curve=curve) == 90
    assert sampling_equivalence(ds, 0, curve=curve) == 1
    mid = curve[20] + 1
    assert sampling_equivalence(ds, mid, curve=curve) >= 20
    with pytest.raises(ValueError):
        sampling_equivalence(ds, 1001, curve=curve)


# -- regression -------------------------------------------------------------------

def test_exact_slope():
    x = np.arange(10.0)
    assert abs(ols_slope(x, 2 * x + 1) - 2.0) < 1e-12


@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=10, max_size=10),
       st.lists(st.floats(-100, 100, allow_nan=False), min_size=10, max_size=10))
def test_slope_matches_closed_form(x, y):
    if max(x) - min(x) < 1e-3:
        return
    assert abs(ols_slope(np.array(x), np.array(y)) - oracles.closed_form_slope(x, y)) <= 1e-9 * (1 + abs(oracles.closed_form_slope(x, y)))


def test_regression_groups_and_flags():
    orig = make_dataset({"g": ["m", "f"] * 10, "x": [float(i) for i in range(20)],
                         "y": [3.0 * i for i in range(20)]})
    groups = {"m": [("g", Predicate("==", "m"))], "f": [("g", Predicate("==", "f"))]}
    res = regression_slope_error(orig, orig, "x", "y", groups)
    assert [r.error for r in res] == [pytest.approx(0.0, abs=1e-9)] * 2
    syn = make_dataset({"g": ["m", "m", "f"], "x": [1.0, 2.0, 3.0], "y": [1.0, 2.0, 3.0]})
    res = {r.group: r for r in regression_slope_error(orig, syn, "x", "y", groups)}
    assert res["f"].flagged and res["f"].error is None
    assert res["m"].flagged and res["m"].error == pytest.approx(2.0)
    with pytest.raises(ValueError, match="original rows"):
        regression_slope_error(orig, orig, "x", "y", {"none": [("g", Predicate("==", "zz"))]})


# -- pmse --------------------------------------------------------------------------

def test_pmse_identical_tables():
    ds = random_dataset(np.random.default_rng(5), 1000)
    res = pmse(ds, [ds])
    assert res.values[0] < 1e-3


def test_pmse_separable_tables():
    rng = np.random.default_rng(6)
    orig = make_dataset({"a": [float(v) for v in rng.normal(0, 1, 600)], "k": ["u", "v"] * 300})
    syn = make_dataset({"a": [float(v) for v in rng.normal(10, 1, 300)], "k": ["u", "v"] * 150})
    res = pmse(orig, [syn])
    c = 300 / 900
    assert 0.8 * c * (1 - c) < res.values[0] <= c * (1 - c) + 1e-9


def test_pmse_average_is_mean_and_bounded():
    rng = np.random.default_rng(7)
    orig = random_dataset(rng, 300)
    tables = [random_dataset(rng, 200).project(list(cols)) for cols in (["c0", "x0"], ["c1"], ["x0", "x1", "c0"])]
    res = pmse(orig, tables)
    assert res.mean == pytest.approx(float(np.mean(res.values)))
    for t, v in zip(tables, res.values):
        c = t.row_count / (t.row_count + orig.row_count)
        assert 0 <= v <= c * (1 - c) + 1e-6
    with pytest.raises(ValueError):
        pmse(orig, [])


# -- pca / ks ------------------------------------------------------------------

@given(st.lists(st.integers(-20, 20), min_size=1, max_size=100),
       st.lists(st.integers(-20, 20), min_size=1, max_size=100))
def test_ks_matches_scan(a, b):
    assert abs(ks_statistic(a, b) - oracles.ks_scan(a, b)) <= 1e-12


def test_pca_identity_and_perturbation():
    rng = np.random.default_rng(11)
    base = rng.normal(size=(500, 3))
    cols = {f"f{i}": [float(v) for v in base[:, i % 3] + 0.3 * rng.normal(size=500)] for i in range(6)}
    ds = make_dataset(cols)
    res = pca_compare(ds, ds)
    assert res.ks_score == 0.0
    assert len(res.ks) == 5 and all(len(l) <= 5 for l in res.loadings)
    shuffled = dict(cols)
    shuffled["f0"] = rng.permutation(cols["f0"]).tolist()
    res2 = pca_compare(ds, make_dataset(shuffled))
    for load, ks in zip(res2.loadings, res2.ks):
        if abs(load.get("f0", 0.0)) > 0.3:
            assert ks > 0
    assert res2.ks_score > 0
    with pytest.raises(ValueError, match="non-constant"):
        pca_compare(ds.project(["f0", "f1", "f2", "f3"]), ds)


# -- inconsistencies ----------------------------------------------------------------

def test_inconsistency_counts():
    rule = InconsistencyRule.from_json({"colA": "AGEP", "predA": {"op": "<", "value": 15},
                                        "colB": "DVET", "predB": {"op": "non_null"}})
    ok = make_dataset({"AGEP": [10.0, 40.0, 12.0], "DVET": ["", "1", ""]})
    bad = make_dataset({"AGEP": [10.0, 40.0, 3.0, 14.0, 2.0], "DVET": ["1", "1", "2", "1", ""]})
    assert rule.violations(ok) == 0
    assert rule.violations(bad) == 3
    counts = count_inconsistencies(SingleTableSource(bad), [rule])
    assert counts[0].count == 3 and inconsistency_total(counts) == 1
    with pytest.raises(KeyError):
        check_rules([rule], ["AGEP"])


def test_predicates_on_text_and_numbers():
    ds = make_dataset({"e": ["9", "12", "NA", "x"], "v": [1.0, 2.0, 3.0, 4.0]})
    assert Predicate(">=", 10).mask(ds, "e").tolist() == [False, True, False, False]
    assert Predicate("is_null").mask(ds, "e").tolist() == [False, False, True, False]
    assert Predicate("==", "x").mask(ds, "e").tolist() == [False, False, False, True]
    assert Predicate("≤", 2).mask(ds, "v").tolist() == [True, True, False, False]
    assert Predicate("non_null").mask(ds, "v").all()
    with pytest.raises(ValueError):
        Predicate("~", 1)


# -- improvement factor ----------------------------------------------------------

def test_improvement_factor_examples():
    assert improvement_factor(0, 5, 10).value == 2.0
    assert improvement_factor(1000, 956, 801).value == pytest.approx(4.52, abs=0.01)
    assert improvement_factor(0, 3, 3).value == 1.0
    assert improvement_factor(0, 0, 0).value == 1.0
    assert improvement_factor(0, 0, 2).value == math.inf
    assert improvement_factor(0, 2, 0).value == -math.inf
    assert improvement_factor(0, 10, 5).value == -2.0
    assert format_if(-math.inf) == "-inf" and format_if(4.52) == "4.5x"


@given(st.floats(0, 100), st.floats(0, 100))
def test_improvement_factor_sign_law(d_ref, d_alt):
    v = improvement_factor(0.0, d_ref, d_alt).value
    assert abs(v) >= 1
    assert (v > 0) == (d_alt >= d_ref)


def test_metrics_do_not_mutate_inputs(tmp_path):
    ds = random_dataset(np.random.default_rng(13), 200, n_cat=3, n_num=3)
    before = ds.digest()
    store = copy_store(ds, tmp_path, max_k=3)
    correlation_diffs(ds, store)
    k_marginal_score(ds, store, sample_marginals(ds.columns, 3, 5))
    pmse(ds, [store.fetch(list(ds.columns))])
    pca_compare(ds, store.fetch(list(ds.columns)))
    assert ds.digest() == before
