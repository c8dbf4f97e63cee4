import json
import subprocess
import sys

import pytest

from taintwalk import features, graph, pipeline
from taintwalk.cli import main
from taintwalk.walker import WalkConfig


def run(*argv):
    try:
        return main([str(a) for a in argv])
    except SystemExit as exc:
        return exc.code


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    assert run("synth", "--nodes", 1500, "--cluster-bias", 0.8, "--unknown-frac", 0.3,
               "--rng-seed", 3, "--out-dir", d) == 0
    assert run("extract", "--data-dir", d, "--walks", 30, "--rng-seed", 3,
               "--out", d / "gwf.csv") == 0
    return d


def files(d):
    return ["--features", d / graph.FEATURES_FILE, "--classes", d / graph.CLASSES_FILE,
            "--edges", d / graph.EDGES_FILE]


def test_synth_files_validate(dataset):
    g = graph.load_dataset_dir(dataset)
    assert graph.validate(g).ok and g.n_nodes == 1500


def test_extract_one_row_per_labelled_node(dataset):
    g = graph.load_dataset_dir(dataset)
    rows = features.read_feature_table(dataset / "gwf.csv")
    assert [r.node_id for r in rows] == sorted(g.ids[g.labeled_idx()].tolist())


def test_extract_reload_matches_memory(dataset):
    g = graph.load_dataset_dir(dataset)
    rows, _ = pipeline.extract(g, WalkConfig(30, 3))
    assert features.read_feature_table(dataset / "gwf.csv") == rows


def test_extract_repeatable(dataset, tmp_path):
    out = tmp_path / "again.csv"
    assert run("extract", *files(dataset), "--walks", 30, "--rng-seed", 3, "--out", out) == 0
    assert out.read_bytes() == (dataset / "gwf.csv").read_bytes()


def test_extract_train_only_policy(dataset, tmp_path):
    out = tmp_path / "t.csv"
    assert run("extract", "--data-dir", dataset, "--walks", 10, "--label-policy", "train-only",
               "--train-cutoff", 20, "--max-attempts", 5000, "--out", out) == 0
    assert out.read_bytes() != (dataset / "gwf.csv").read_bytes()


@pytest.mark.parametrize("argv", [
    ["extract", "--walks", "0", "--out", "x.csv"],
    ["extract", "--walks", "-3", "--out", "x.csv"],
    ["train-eval", "--feature-set", "bogus"],
])
def test_usage_errors(argv):
    assert run(*argv) == 2


@pytest.mark.parametrize("fs", ["af", "gwf", "af+gwf", "af+gwf*"])
def test_train_eval_feature_sets(dataset, tmp_path, fs):
    report = tmp_path / "r.json"
    code = run("train-eval", "--data-dir", dataset, "--gwf", dataset / "gwf.csv",
               "--feature-set", fs, "--trees", 10, "--report", report,
               "--per-timestep", tmp_path / "ts.csv", "--roc", tmp_path / "roc.csv")
    assert code == 0
    rep = json.loads(report.read_text())
    assert 0 <= rep["f1_illicit"] <= 1
    assert (tmp_path / "ts.csv").read_text().count("\n") >= 2


def test_train_eval_custom_columns(dataset, tmp_path):
    assert run("train-eval", "--data-dir", dataset, "--gwf", dataset / "gwf.csv",
               "--feature-set", "custom", "--columns", "f2,f3,hit", "--trees", 5,
               "--report", tmp_path / "r.json", "--model", tmp_path / "m.npz") == 0
    assert (tmp_path / "m.npz").stat().st_size > 0
    assert run("train-eval", "--data-dir", dataset, "--feature-set", "custom",
               "--columns", "nope") == 2


def test_missing_gwf_is_usage_error(dataset, tmp_path):
    assert run("train-eval", "--data-dir", dataset, "--feature-set", "gwf") == 2
    assert run("importance", "--data-dir", dataset, "--gwf", tmp_path / "missing.csv",
               "--out", tmp_path / "imp.csv") == 2


def test_bad_cutoff_and_missing_files(dataset, tmp_path):
    assert run("train-eval", "--data-dir", dataset, "--cutoff", 49) == 2
    assert run("train-eval", "--data-dir", tmp_path) == 2
    assert run("train-eval") == 2


def test_importance(dataset, tmp_path):
    out = tmp_path / "imp.csv"
    assert run("importance", "--data-dir", dataset, "--gwf", dataset / "gwf.csv",
               "--trees", 10, "--repeats", 2, "--top", 3, "--out", out) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "rank,feature,mean_f1_drop,std_over_repeats,selected"
    assert {ln.split(",")[1] for ln in lines[1:]} == set(features.FEATURE_NAMES)


def planted_gwf(dataset, path):
    """Walk-feature file whose ``illicit`` column encodes the label."""
    import numpy as np
    g = graph.load_dataset_dir(dataset)
    rng = np.random.default_rng(0)
    rows = []
    for i in g.labeled_idx().tolist():
        y = int(g.labels[i] == graph.NodeLabel.ILLICIT)
        noise = rng.normal(size=8)
        rows.append(features.GwFeatureRow(int(g.ids[i]), *noise[:7], abs(noise[7]),
                                          1 + 5 * y, True))
    features.write_feature_table(rows, path)


def test_importance_ranks_planted_column_first(dataset, tmp_path):
    gwf = tmp_path / "planted.csv"
    planted_gwf(dataset, gwf)
    ranks = []
    for repeats in (1, 10):
        out = tmp_path / f"imp{repeats}.csv"
        assert run("importance", "--data-dir", dataset, "--gwf", gwf, "--feature-set", "gwf",
                   "--trees", 10, "--repeats", repeats, "--out", out) == 0
        ranks.append([ln.split(",")[1] for ln in out.read_text().splitlines()[1:]])
    assert ranks[0][0] == ranks[1][0] == "illicit"


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "taintwalk", "synth", "--nodes", "300",
                           "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / graph.EDGES_FILE).exists()
