import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import I, L, make_graph, random_dag
from oracles import brute_reachable
from taintwalk.reachability import (
    AllPastLabels,
    TrainOnlyLabels,
    compute_reachability,
    illicit_mask,
    illicit_set,
)


def test_chain_illicit_source_not_reachable():
    # i -> a -> b
    g = make_graph(3, [(0, 1), (1, 2)], labels=[I, L, L])
    reach = compute_reachability(g, AllPastLabels())
    assert reach.can_reach.tolist() == [False, True, True]
    assert reach.count == 2
    assert reach[0] is False


def test_illicit_descendant_of_illicit_is_reachable():
    g = make_graph(2, [(0, 1)], labels=[I, I])
    assert compute_reachability(g, AllPastLabels()).can_reach.tolist() == [False, True]


def test_illicit_set_policies():
    g = make_graph(3, [], labels=[I, I, L], steps=[10, 40, 5])
    assert illicit_set(g, AllPastLabels()) == {0, 1}
    assert illicit_set(g, TrainOnlyLabels(34)) == {0}


def test_no_illicit_labels():
    g = make_graph(3, [(0, 1), (1, 2)])
    assert illicit_set(g, AllPastLabels()) == set()
    assert compute_reachability(g, AllPastLabels()).count == 0


def test_matches_brute_force_dfs():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(1, 51))
        g, edges, illicit = random_dag(rng, n, p_edge=float(rng.uniform(0.02, 0.3)))
        got = compute_reachability(g, AllPastLabels()).can_reach.tolist()
        assert got == brute_reachable(n, edges, illicit)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 40), cutoff=st.integers(1, 5))
def test_properties(seed, n, cutoff):
    rng = np.random.default_rng(seed)
    g, _, _ = random_dag(rng, n)
    full = compute_reachability(g, AllPastLabels()).can_reach
    part = compute_reachability(g, TrainOnlyLabels(cutoff)).can_reach
    # monotone in the illicit set
    assert not (part & ~full).any()
    ill = illicit_mask(g, AllPastLabels())
    for v in range(n):
        preds = g.pred_idx(v)
        if len(preds) == 0:
            assert not full[v]
        if full[v]:
            assert any(ill[u] or full[u] for u in preds)
