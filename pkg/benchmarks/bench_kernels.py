"""Compare the compiled and pure-Python kernels on a synthetic dataset.

    python benchmarks/bench_kernels.py [--nodes 3000] [--walks 100] [--trees 5]

Both backends must produce identical outputs; the script checks that too.
"""

import argparse
import time

import numpy as np

from taintwalk import forest, pipeline, synth
from taintwalk._backend import get_kernels
from taintwalk.graph import NodeLabel, temporal_split
from taintwalk.reachability import AllPastLabels, compute_reachability
from taintwalk.walker import WalkConfig, run_all


def timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=3000)
    ap.add_argument("--walks", type=int, default=100)
    ap.add_argument("--trees", type=int, default=5)
    args = ap.parse_args()

    g = synth.generate(synth.SynthConfig(n_nodes=args.nodes, cluster_bias=0.7))
    cfg = WalkConfig(args.walks, 0)
    reach = compute_reachability(g, cfg.policy)
    seeds = g.ids[g.labeled_idx()].tolist()
    split = temporal_split(g, 34)
    rows, _ = pipeline.extract(g, cfg)
    X = pipeline.FeatureTable(g, rows).matrix(split.train, pipeline.resolve_columns("af+gwf", g))
    y = (g.labels[split.train] == NodeLabel.ILLICIT).astype(int)
    fcfg = forest.ForestConfig(n_trees=args.trees)

    results = {}
    print(f"{'backend':8} {'walks [s]':>10} {'forest fit [s]':>15} {'predict [s]':>12}")
    for name in ("python", "cython"):
        try:
            k = get_kernels(name)
        except ImportError:
            print(f"{name:8} unavailable")
            continue
        stats, t_walk = timed(lambda: run_all(g, seeds, cfg, reach, kernels=k))
        model, t_fit = timed(lambda: forest.fit(X, y, fcfg, kernels=k))
        scores, t_pred = timed(lambda: forest.predict_proba(model, X, kernels=k))
        results[name] = (stats, scores)
        print(f"{name:8} {t_walk:10.3f} {t_fit:15.3f} {t_pred:12.4f}")
    if len(results) == 2:
        (s1, p1), (s2, p2) = results.values()
        same = s1 == s2 and np.array_equal(p1, p2)
        print("outputs identical:", same)


if __name__ == "__main__":
    main()
