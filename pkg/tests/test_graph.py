import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import I, L, U, make_graph, random_dag
from taintwalk.graph import (
    GraphFormatError,
    GraphValidationError,
    NodeLabel,
    load_graph,
    predecessors,
    temporal_split,
    topological_order,
    validate,
    write_graph,
)


def write_files(tmp_path, features, classes, edges):
    paths = [tmp_path / "f.csv", tmp_path / "c.csv", tmp_path / "e.csv"]
    for p, text in zip(paths, (features, classes, edges)):
        p.write_text(text)
    return paths


@pytest.fixture
def tiny(tmp_path):
    # a -> b -> c, c illicit; ids 10, 20, 30
    return write_files(
        tmp_path,
        "10,1,0.5\n20,1,1.5\n30,2,2.5\n",
        "txId,class\n10,2\n20,unknown\n30,1\n",
        "txId1,txId2\n10,20\n20,30\n",
    )


def test_load_three_node_files(tiny):
    g = load_graph(*tiny)
    assert g.n_nodes == 3 and g.n_edges == 2
    assert g.label_of(30) is NodeLabel.ILLICIT
    assert g.label_of(10) is NodeLabel.LICIT
    assert g.label_of(20) is NodeLabel.UNKNOWN
    assert g.time_steps.tolist() == [1, 1, 2]
    assert g.features.shape == (3, 2)


def test_unknown_edge_id(tmp_path):
    paths = write_files(tmp_path, "1,1,0\n2,1,0\n", "txId,class\n1,1\n", "txId1,txId2\n1,99\n")
    with pytest.raises(GraphFormatError, match="unknown node id"):
        load_graph(*paths)


@pytest.mark.parametrize("features, msg", [
    ("1,1,0\n1,1,0\n", "duplicate node id"),
    ("1,1,0\n2,1\n", "malformed"),
    ("1,1,0\n2,1,abc\n", "malformed"),
    ("1,1.5,0\n2,1,0\n", "integral"),
])
def test_malformed_features(tmp_path, features, msg):
    paths = write_files(tmp_path, features, "txId,class\n", "txId1,txId2\n")
    with pytest.raises(GraphFormatError, match=msg):
        load_graph(*paths)


def test_bad_class_token(tmp_path):
    paths = write_files(tmp_path, "1,1,0\n", "txId,class\n1,3\n", "txId1,txId2\n")
    with pytest.raises(GraphFormatError, match="invalid class token"):
        load_graph(*paths)


def test_missing_file(tmp_path, tiny):
    with pytest.raises(GraphFormatError, match="missing file"):
        load_graph(tiny[0], tiny[1], tmp_path / "nope.csv")


def test_absent_labels_default_to_unknown(tmp_path):
    paths = write_files(tmp_path, "1,1,0\n2,1,0\n3,1,0\n", "txId,class\n1,1\n",
                        "txId1,txId2\n")
    g = load_graph(*paths)
    assert g.defaulted_labels == 2
    assert validate(g).defaulted_labels == 2
    assert g.label_of(3) is NodeLabel.UNKNOWN


def test_cycle_rejected_at_load(tmp_path):
    paths = write_files(tmp_path, "1,1,0\n2,1,0\n", "txId,class\n", "txId1,txId2\n1,2\n2,1\n")
    with pytest.raises(GraphValidationError, match="cycle"):
        load_graph(*paths)


def test_validate_chain():
    rep = validate(make_graph(3, [(0, 1), (1, 2)]))
    assert rep.is_dag and rep.ok and rep.violations == []


def test_validate_cycle():
    rep = validate(make_graph(2, [(0, 1), (1, 0)], check=False))
    assert not rep.is_dag and not rep.ok


def test_validate_temporal_violation():
    rep = validate(make_graph(2, [(0, 1)], steps=[3, 2], check=False))
    assert rep.temporal_violations == [(0, 1)]
    assert len(rep.violations) == 1


def test_validate_duplicates_and_loops():
    rep = validate(make_graph(2, [(0, 1), (0, 1), (1, 1)], check=False))
    assert rep.duplicate_edges == [(0, 1)]
    assert rep.self_loops == [1]
    with pytest.raises(GraphValidationError):
        make_graph(2, [(0, 1), (0, 1)])


def test_equal_time_steps_allowed():
    assert validate(make_graph(2, [(0, 1)], steps=[4, 4])).ok


def test_predecessors_sorted_and_empty():
    g = make_graph(3, [(1, 2), (0, 2)])
    assert predecessors(g, 2) == [0, 1]
    assert predecessors(g, 0) == []
    with pytest.raises(KeyError):
        predecessors(g, 7)


def test_predecessors_sorted_by_original_id():
    from taintwalk.graph import TransactionGraph
    g = TransactionGraph.from_arrays([50, 7, 30], [1, 1, 1], [L, L, L], np.zeros((3, 1)),
                                     [(50, 30), (7, 30)])
    assert predecessors(g, 30) == [7, 50]


def test_predecessors_exact_transpose():
    rng = np.random.default_rng(3)
    for n in (1, 10, 200, 1000):
        g, edges, _ = random_dag(rng, n, p_edge=min(0.2, 4 / max(n, 1)))
        edge_set = set(edges)
        total = 0
        for v in range(n):
            preds = predecessors(g, v)
            total += len(preds)
            assert all((u, v) in edge_set for u in preds)
        assert total == len(edges)


def test_topological_order_is_valid():
    rng = np.random.default_rng(5)
    g, edges, _ = random_dag(rng, 300, p_edge=0.02)
    order = topological_order(g)
    pos = np.empty(g.n_nodes, dtype=int)
    pos[order] = np.arange(g.n_nodes)
    assert all(pos[s] < pos[d] for s, d in edges)


def test_round_trip(tmp_path):
    rng = np.random.default_rng(11)
    g, _, _ = random_dag(rng, 60)
    paths = [tmp_path / n for n in ("f.csv", "c.csv", "e.csv")]
    write_graph(g, *paths)
    h = load_graph(*paths)
    assert np.array_equal(g.ids, h.ids)
    assert np.array_equal(g.labels, h.labels)
    assert np.array_equal(g.features, h.features)
    assert np.array_equal(g.time_steps, h.time_steps)
    assert np.array_equal(g.edges, h.edges)


def test_split_example():
    g = make_graph(4, [], labels=[I, L, L, I], steps=[1, 2, 3, 4])
    sp = temporal_split(g, 2)
    assert sp.train_ids == {0, 1} and sp.test_ids == {2, 3}


def test_split_empty_test():
    g = make_graph(3, [], labels=[I, L, U], steps=[1, 2, 5])
    sp = temporal_split(g, 4)
    assert sp.test_ids == frozenset()


def test_split_cutoff_range():
    g = make_graph(2, [], steps=[1, 3])
    for bad in (0, 3, 10):
        with pytest.raises(ValueError):
            temporal_split(g, bad)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 60), data=st.data())
def test_split_partition_property(seed, n, data):
    rng = np.random.default_rng(seed)
    g, _, _ = random_dag(rng, n, n_steps=8)
    max_step = int(g.time_steps.max())
    if max_step < 2:
        return
    cutoff = data.draw(st.integers(1, max_step - 1))
    sp = temporal_split(g, cutoff)
    assert not (sp.train_ids & sp.test_ids)
    labelled = {int(g.ids[i]) for i in g.labeled_idx()}
    assert sp.train_ids | sp.test_ids == labelled
    assert all(g.time_steps[g.idx(v)] <= cutoff for v in sp.train_ids)
    assert all(g.time_steps[g.idx(v)] > cutoff for v in sp.test_ids)


def test_graph_is_read_only():
    g = make_graph(2, [(0, 1)])
    with pytest.raises(ValueError):
        g.labels[0] = 1
