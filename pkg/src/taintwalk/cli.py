"""Command-line entry point: ``extract``, ``train-eval``, ``importance``, ``synth``.

Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys


from . import features, forest, graph, pipeline, synth
from .evaluation import permutation_importance
from .walker import WalkConfig

log = logging.getLogger("taintwalk")


class UsageError(Exception):
    pass


def _positive(value):
    v = int(value)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return v


def _dataset_args(p, gwf=False):
    p.add_argument("--data-dir", help="directory holding the three dataset files "
                   "under their standard names")
    p.add_argument("--features", help="headerless node feature file")
    p.add_argument("--classes", help="txId,class label file")
    p.add_argument("--edges", help="txId1,txId2 edge file")
    if gwf:
        p.add_argument("--gwf", help="walk-feature file written by 'extract'")
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--workers", type=_positive, default=None,
                   help="worker threads (default: all cores)")


def _train_args(p):
    p.add_argument("--feature-set", default="af", choices=pipeline.FEATURE_SETS)
    p.add_argument("--columns", help="comma-separated columns for --feature-set custom")
    p.add_argument("--cutoff", type=int, default=34)
    p.add_argument("--trees", type=_positive, default=50)
    p.add_argument("--max-split-features", type=_positive, default=50)
    p.add_argument("--threshold", type=float, default=0.5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="taintwalk", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="compute walk features for every labelled node")
    _dataset_args(p)
    p.add_argument("--walks", type=_positive, default=100,
                   help="successful walks per seed")
    p.add_argument("--label-policy", choices=("all-past", "train-only"), default="all-past")
    p.add_argument("--train-cutoff", type=int, default=34)
    p.add_argument("--max-attempts", type=_positive, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train-eval", help="fit the forest on the train split and evaluate")
    _dataset_args(p, gwf=True)
    _train_args(p)
    p.add_argument("--report", help="JSON metrics file (default: stdout)")
    p.add_argument("--per-timestep", help="CSV of per-time-step illicit F1")
    p.add_argument("--roc", help="CSV of ROC points")
    p.add_argument("--model", help="also save the fitted forest here")

    p = sub.add_parser("importance", help="permutation importance of the walk features")
    _dataset_args(p, gwf=True)
    _train_args(p)
    p.set_defaults(feature_set="af+gwf")
    p.add_argument("--repeats", type=_positive, default=5)
    p.add_argument("--top", type=_positive, default=None,
                   help="print only the N highest-ranked features")
    p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    d = synth.SynthConfig()
    p.add_argument("--nodes", type=_positive, default=d.n_nodes)
    p.add_argument("--timesteps", type=_positive, default=d.n_timesteps)
    p.add_argument("--illicit-frac", type=float, default=d.illicit_fraction)
    p.add_argument("--cluster-bias", type=float, default=d.cluster_bias)
    p.add_argument("--feature-dim", type=_positive, default=d.feature_dim)
    p.add_argument("--feature-signal", type=float, default=d.feature_signal)
    p.add_argument("--unknown-frac", type=float, default=d.unknown_fraction)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    return parser


def _paths(args):
    base = args.data_dir
    paths = []
    for attr, default in (("features", graph.FEATURES_FILE), ("classes", graph.CLASSES_FILE),
                          ("edges", graph.EDGES_FILE)):
        value = getattr(args, attr) or (os.path.join(base, default) if base else None)
        if value is None:
            raise UsageError(f"--{attr} (or --data-dir) is required")
        paths.append(value)
    return paths


def _load(args):
    g = graph.load_graph(*_paths(args))
    if g.defaulted_labels:
        log.warning("%d nodes without a class row treated as unknown", g.defaulted_labels)
    return g


def cmd_extract(args):
    g = _load(args)
    policy = pipeline.make_policy(args.label_policy, args.train_cutoff)
    config = WalkConfig(args.walks, args.rng_seed, args.max_attempts, policy)
    rows, summary = pipeline.extract(g, config, workers=args.workers)
    features.write_feature_table(rows, args.out)
    print(f"seeds={summary.n_seeds} reachable={summary.n_reachable} "
          f"mean_attempts={summary.mean_attempts:.2f} truncated={summary.n_truncated} "
          f"seconds={summary.seconds:.2f}", file=sys.stderr)


def _train(args):
    g = _load(args)
    custom = args.columns.split(",") if args.columns else None
    try:
        columns = pipeline.resolve_columns(args.feature_set, g, custom)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    gwf_rows = None
    if pipeline.needs_gwf(columns):
        if not args.gwf:
            raise UsageError(f"feature set {args.feature_set} needs --gwf")
        if not os.path.isfile(args.gwf):
            raise UsageError(f"missing walk-feature file: {args.gwf}")
        gwf_rows = features.read_feature_table(args.gwf)
    config = forest.ForestConfig(n_trees=args.trees, max_split_features=args.max_split_features,
                                 rng_seed=args.rng_seed)
    try:
        g_split = graph.temporal_split(g, args.cutoff)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if len(g_split.test) == 0:
        raise UsageError(f"empty test split for cutoff {args.cutoff}")
    return pipeline.train_eval(g, columns, gwf_rows, args.cutoff, config, args.threshold,
                               workers=args.workers)


def cmd_train_eval(args):
    result = _train(args)
    report = result.report
    if args.report:
        report.write(args.report)
    else:
        import json
        print(json.dumps(report.to_dict(), indent=2))
    report.write(per_timestep_path=args.per_timestep, roc_path=args.roc)
    if args.model:
        forest.save_model(result.model, args.model)
    print(f"f1_illicit={report.f1_illicit:.4f} precision={report.precision_illicit:.4f} "
          f"recall={report.recall_illicit:.4f} auc={report.auc:.4f}", file=sys.stderr)


def cmd_importance(args):
    result = _train(args)
    gw_cols = [j for j, c in enumerate(result.columns) if c in features.FEATURE_NAMES]
    if not gw_cols:
        raise UsageError("importance needs a feature set containing walk features")
    rep = permutation_importance(result.model, result.X_test, result.y_test, args.repeats,
                                 args.rng_seed, result.columns, gw_cols, args.threshold,
                                 workers=args.workers)
    rep.write(args.out)
    ranked = rep.ranked()[:args.top] if args.top else rep.ranked()
    for f in ranked:
        print(f"{f.name}\t{f.mean_f1_drop:.5f}\t{f.std_over_repeats:.5f}", file=sys.stderr)


def cmd_synth(args):
    try:
        config = synth.SynthConfig(args.nodes, args.timesteps, args.illicit_frac,
                                   args.cluster_bias, args.feature_dim, args.feature_signal,
                                   args.unknown_frac, args.rng_seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    g = synth.generate(config)
    graph.write_dataset_dir(g, args.out_dir)
    rep = graph.validate(g)
    print(f"nodes={rep.n_nodes} edges={rep.n_edges} illicit={rep.n_illicit} "
          f"licit={rep.n_licit} unknown={rep.n_unknown}", file=sys.stderr)


COMMANDS = {"extract": cmd_extract, "train-eval": cmd_train_eval,
            "importance": cmd_importance, "synth": cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (UsageError, graph.GraphFormatError, graph.GraphValidationError) as exc:
        print(f"taintwalk {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        log.debug("failure", exc_info=True)
        print(f"taintwalk {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
