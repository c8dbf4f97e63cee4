import numpy as np
import pytest

from taintwalk._backend import get_kernels
from taintwalk.graph import NodeLabel, TransactionGraph

I, L, U = NodeLabel.ILLICIT, NodeLabel.LICIT, NodeLabel.UNKNOWN


def make_graph(n, edges, labels=None, steps=None, check=True):
    """Graph whose node ids equal their dense indices ``0..n-1``."""
    labels = [L] * n if labels is None else labels
    steps = [1] * n if steps is None else steps
    feats = np.column_stack([np.asarray(steps, dtype=float), np.arange(n, dtype=float)])
    return TransactionGraph.from_arrays(np.arange(n), steps, labels, feats, edges, check=check)


def random_dag(rng, n, p_edge=0.2, p_illicit=0.2, n_steps=5):
    """Edges only from lower to higher index; time steps non-decreasing in index."""
    edges = [(i, j) for j in range(n) for i in range(j) if rng.random() < p_edge]
    illicit = rng.random(n) < p_illicit
    steps = np.sort(rng.integers(1, n_steps + 1, n))
    labels = [I if x else (L if rng.random() < 0.7 else U) for x in illicit]
    return make_graph(n, edges, labels, steps), edges, illicit.tolist()


@pytest.fixture(params=["python", "cython"])
def kernels(request):
    try:
        return get_kernels(request.param)
    except ImportError:
        pytest.skip("compiled kernels not built")


_acceptance = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "acceptance" in report.keywords:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))
    elif report.when == "setup" and report.skipped and "acceptance" in report.keywords:
        _acceptance.append((report.nodeid.split("::")[-1], "skipped"))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        mark = {"passed": "PASS", "failed": "FAIL"}.get(outcome, "SKIP")
        terminalreporter.write_line(f"[{mark}] {name}")
