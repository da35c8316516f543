import pytest

from conftest import copy_store, make_dataset
from synthmark.store import MissingTableError, SingleTableSource, SynTableStore, table_key, write_store


@pytest.fixture
def orig():
    return make_dataset({"a": ["x", "y", "x", "z"] * 5, "b": [1.0, 2.0, 3.0, 4.0] * 5,
                         "c": ["p", "q"] * 10, "d": [float(i) for i in range(20)]})


def test_exact_policy(tmp_path, orig):
    store = copy_store(orig, tmp_path, max_k=2)
    t = store.fetch(["b", "a"])
    assert t.columns == ("b", "a")
    assert t.encoding.categories["a"] == orig.encoding.categories["a"]
    with pytest.raises(MissingTableError) as err:
        store.fetch(["a", "b", "c"])
    assert err.value.key == "a+b+c"


def test_superset_policy_picks_smallest_then_lexicographic(tmp_path, orig):
    tables = {("a", "b", "c"): orig.project(["a", "b", "c"]),
              ("a", "b", "d"): orig.project(["a", "b", "d"]),
              ("a", "b", "c", "d"): orig.project(["a", "b", "c", "d"])}
    write_store(tmp_path, tables, orig.schema, {})
    store = SynTableStore(tmp_path, policy="project", reference=orig)
    assert store.resolve(["a", "b"]) == "a+b+c"
    assert store.resolve(["d"]) == "a+b+d"
    assert store.fetch(["b"]).columns == ("b",)
    with pytest.raises(MissingTableError):
        store.resolve(["a", "b"], policy="exact")


def test_manifestless_directory_is_indexed(tmp_path, orig):
    orig.project(["a", "c"]).write_csv(tmp_path / "whatever.csv")
    store = SynTableStore(tmp_path, reference=orig)
    assert store.combinations() == [("a", "c")]
    assert store.fetch(["c", "a"]).row_count == 20


def test_missing_file_is_rejected(tmp_path, orig):
    copy_store(orig, tmp_path, max_k=1)
    (tmp_path / "a.csv").unlink()
    with pytest.raises(Exception, match="missing"):
        SynTableStore(tmp_path)


def test_single_table_source(orig):
    src = SingleTableSource(orig)
    assert src.fetch(["d", "a"]).columns == ("d", "a")
    with pytest.raises(MissingTableError):
        src.fetch(["zz"])


def test_table_key_sorted():
    assert table_key(["b", "a", "c"]) == "a+b+c"
