"""Batch command-line interface.

Subcommands: fit, transform, cf-curve, profile, eval, synth. Numeric outputs
are CSV files; models are versioned JSON. Every command is deterministic
given ``--seed`` (env default ``SPARCA_SEED``); ``--threads`` caps library
parallelism (env default ``SPARCA_THREADS``).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from ._version import __version__
from . import evalkit
from .cfcurve import cf_curve, default_grid
from .data import load_csv, load_idx, write_csv
from .horn import HornParams
from .pipeline import fit, load_model, save_model, transform


def _env_int(name, fallback):
    value = os.environ.get(name)
    return int(value) if value else fallback


def _add_common(parser):
    parser.add_argument(
        "--seed",
        type=int,
        default=_env_int("SPARCA_SEED", 0),
        help="base random seed (default: $SPARCA_SEED or 0)",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=_env_int("SPARCA_THREADS", os.cpu_count() or 1),
        help="worker thread cap (default: $SPARCA_THREADS or core count)",
    )


def _add_input(parser):
    parser.add_argument("--input", required=True, help="input CSV path")
    parser.add_argument(
        "--has-header", action="store_true", help="skip one header row"
    )


def _horn_args(parser):
    parser.add_argument("--horn-repeats", type=int, default=20)
    parser.add_argument("--horn-percentile", type=float, default=95.0)


def _horn_params(args):
    return HornParams(
        n_repeats=args.horn_repeats,
        percentile=args.horn_percentile,
        seed=args.seed,
    )


def _int_list(text):
    return [int(v) for v in text.split(",") if v]


def _float_list(text):
    return [float(v) for v in text.split(",") if v]


def cmd_fit(args) -> int:
    X = load_csv(args.input, has_header=args.has_header)
    horn = _horn_params(args)
    if args.clusters is None:
        curve = cf_curve(X, horn_params=horn, n_threads=args.threads)
        n_clusters = curve.selected
        print(f"auto-selected {n_clusters} clusters "
              f"({dict(curve.points)[n_clusters]} features on the curve)")
    else:
        n_clusters = args.clusters
    model = fit(
        X,
        n_clusters=n_clusters,
        variance_threshold=args.variance,
        horn_params=horn,
        n_threads=args.threads,
    )
    save_model(model, args.out)
    supports = [c.support_size for c in model.components]
    evrs = [c.achieved_evr for c in model.components]
    print(
        f"fitted {model.n_clusters} clusters -> {model.n_reduced} features; "
        f"mean support {np.mean(supports):.2f}, min EVR {min(evrs):.4f}"
    )
    print(f"model written to {args.out}")
    return 0


def cmd_transform(args) -> int:
    model = load_model(args.model)
    X = load_csv(args.input, has_header=args.has_header)
    reduced = transform(model, X)
    comments = [
        f"reduced with {args.model}: {model.n_clusters} clusters, "
        f"{model.n_reduced} features",
    ]
    for j, (cluster, rank, support) in enumerate(reduced.column_provenance):
        comments.append(
            f"column {j}: cluster {cluster} rank {rank} "
            f"support {list(support)}"
        )
    write_csv(reduced.values, args.out, comments=comments)
    print(f"wrote {reduced.values.shape[0]}x{reduced.values.shape[1]} "
          f"reduced matrix to {args.out}")
    return 0


def cmd_cf_curve(args) -> int:
    X = load_csv(args.input, has_header=args.has_header)
    grid = _int_list(args.grid) if args.grid else None
    curve = cf_curve(
        X,
        grid=grid,
        horn_params=_horn_params(args),
        smoothing_window=args.smoothing_window,
        n_threads=args.threads,
    )
    rows = np.column_stack(
        [curve.n_clusters, curve.n_features, curve.derivative]
    )
    write_csv(
        rows,
        args.out,
        comments=[f"selected = {curve.selected}"],
        header=["n_clusters", "n_features", "derivative"],
    )
    print(f"selected {curve.selected} clusters; curve written to {args.out}")
    return 0


def cmd_profile(args) -> int:
    report = evalkit.profile_runtime(
        _int_list(args.samples),
        _int_list(args.features),
        repeats=args.repeats,
        seed=args.seed,
    )
    rows = [
        ["samples", size, seconds] for size, seconds in report.sample_points
    ] + [
        ["features", size, seconds] for size, seconds in report.feature_points
    ]
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(f"# sample_slope = {report.sample_slope!r}\n")
        fh.write(f"# feature_slope = {report.feature_slope!r}\n")
        fh.write("axis,size,seconds\n")
        for axis, size, seconds in rows:
            fh.write(f"{axis},{size},{seconds!r}\n")
    print(
        f"sample-axis slope {report.sample_slope:.3f}, "
        f"feature-axis slope {report.feature_slope:.3f}; "
        f"table written to {args.out}"
    )
    return 0


def cmd_eval(args) -> int:
    if args.idx_images:
        if not args.idx_labels:
            raise ValueError("--idx-labels is required with --idx-images")
        X, y = load_idx(args.idx_images, args.idx_labels)
    else:
        X, y = load_csv(
            args.input, has_header=args.has_header, label_col=args.label_col
        )
    fracs = (args.embed_frac, args.train_frac, args.test_frac)
    if sum(fracs) > 1.0 + 1e-9:
        raise ValueError("split fractions must sum to at most 1")
    sizes = [max(1, int(round(frac * y.size))) for frac in fracs]
    embed_idx, train_idx, test_idx = evalkit.stratified_split(
        y, sizes, seed=args.seed
    )
    horn = _horn_params(args)

    if args.clusters is None:
        curve = cf_curve(X[embed_idx], horn_params=horn, n_threads=args.threads)
        n_clusters = curve.selected
    else:
        n_clusters = args.clusters
    sparca_model = fit(
        X[embed_idx],
        n_clusters=n_clusters,
        variance_threshold=args.variance,
        horn_params=horn,
        n_threads=args.threads,
    )
    pca_model = evalkit.PcaBaseline.fit(X[embed_idx], horn_params=horn)

    rows = []
    classifiers = []
    for name, dr, extent in (
        ("sparca", sparca_model, sparca_model.n_reduced),
        ("pca", pca_model, pca_model.n_reduced),
    ):
        accuracy, clf, best_lambda = evalkit.downstream_eval(
            dr, X[train_idx], y[train_idx], X[test_idx], y[test_idx],
            n_folds=args.cv_folds, seed=args.seed,
        )
        classifiers.append(clf)
        rows.append((name, extent, best_lambda, accuracy))
        print(
            f"{name}: {extent} features, lambda {best_lambda:g}, "
            f"test accuracy {accuracy:.4f}"
        )
    with open(f"{args.out_prefix}_accuracy.csv", "w", encoding="utf-8") as fh:
        fh.write("model,n_features,lambda,test_accuracy\n")
        for name, extent, best_lambda, accuracy in rows:
            fh.write(f"{name},{extent},{best_lambda!r},{accuracy!r}\n")

    sigmas = _float_list(args.sigmas)
    table = evalkit.noise_robustness(
        [sparca_model, pca_model],
        classifiers,
        X[test_idx],
        y[test_idx],
        sigmas,
        seed=args.seed,
    )
    with open(f"{args.out_prefix}_noise.csv", "w", encoding="utf-8") as fh:
        fh.write("sigma,sparca_accuracy,pca_accuracy\n")
        for sigma, (acc_s, acc_p) in zip(sigmas, table):
            fh.write(f"{float(sigma)!r},{float(acc_s)!r},{float(acc_p)!r}\n")
    print(
        f"wrote {args.out_prefix}_accuracy.csv and {args.out_prefix}_noise.csv"
    )
    return 0


def cmd_synth(args) -> int:
    X = evalkit.gen_synthetic(
        evalkit.SynthSpec(
            n_samples=args.samples,
            n_features=args.features,
            effective_rank=args.rank,
            seed=args.seed,
        )
    )
    write_csv(X, args.out)
    print(f"wrote {args.samples}x{args.features} synthetic matrix to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparca",
        description="Sparse dimensionality reduction via feature "
        "agglomeration, per-cluster PCA, and orthogonal matching pursuit.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model from a CSV matrix")
    _add_input(p)
    p.add_argument("--clusters", type=int, default=None,
                   help="cluster count; omit (or use --auto) to select "
                        "automatically from the cluster-feature curve")
    p.add_argument("--auto", action="store_true",
                   help="select the cluster count automatically")
    p.add_argument("--variance", type=float, default=0.95,
                   help="minimum recovered variance per component")
    p.add_argument("--out", required=True, help="model JSON output path")
    _horn_args(p)
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("transform", help="apply a fitted model to a CSV matrix")
    _add_input(p)
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--out", required=True, help="reduced CSV output path")
    _add_common(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("cf-curve", help="trace the cluster-feature curve")
    _add_input(p)
    p.add_argument("--grid", default=None,
                   help="comma-separated cluster counts (default: geometric)")
    p.add_argument("--smoothing-window", type=int, default=3)
    p.add_argument("--out", required=True, help="curve CSV output path")
    _horn_args(p)
    _add_common(p)
    p.set_defaults(func=cmd_cf_curve)

    p = sub.add_parser("profile", help="measure fit runtime scaling")
    p.add_argument("--samples", default="500,1000,2000,4000,8000",
                   help="sample-axis grid (features fixed at 100)")
    p.add_argument("--features", default="100,200,400,800,1600",
                   help="feature-axis grid (samples fixed at 50)")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--out", required=True, help="timing CSV output path")
    _add_common(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser(
        "eval",
        help="split, reduce, train and score classifiers, sweep noise",
    )
    p.add_argument("--input", help="labeled CSV path")
    p.add_argument("--has-header", action="store_true")
    p.add_argument("--label-col", type=int, default=-1,
                   help="label column index in the CSV (default: last)")
    p.add_argument("--idx-images", help="IDX image file (alternative input)")
    p.add_argument("--idx-labels", help="IDX label file")
    p.add_argument("--embed-frac", type=float, default=0.3)
    p.add_argument("--train-frac", type=float, default=0.5)
    p.add_argument("--test-frac", type=float, default=0.2)
    p.add_argument("--clusters", type=int, default=None,
                   help="cluster count (default: automatic selection)")
    p.add_argument("--variance", type=float, default=0.95)
    p.add_argument("--cv-folds", type=int, default=5)
    p.add_argument("--sigmas", default="0,0.25,0.5,1,2,4",
                   help="noise levels in standardized units")
    p.add_argument("--out-prefix", required=True,
                   help="prefix for the emitted CSV artifacts")
    _horn_args(p)
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic low-rank matrix")
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--features", type=int, required=True)
    p.add_argument("--rank", type=int, required=True,
                   help="target effective rank")
    p.add_argument("--out", required=True, help="CSV output path")
    _add_common(p)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "input", None) is None and args.command == "eval" and not args.idx_images:
        parser.error("eval requires --input or --idx-images/--idx-labels")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
