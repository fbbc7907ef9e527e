"""Command-line entry point.

Subcommands: gen (synthetic blobs to CSV), train (fit one model, write model
JSON plus a trace CSV), eval (metrics of a saved model on a CSV), experiment
(repeated-run protocol from a spec file), export-plot-data (hyperbox corners
and a labeled decision grid for external plotting).

Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
"""

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from morphbox.baselines import AdamConfig, GreedyConfig, train_adam, train_greedy
from morphbox.core import predict_batch
from morphbox.data import (apply_scaler, fit_scaler, load_csv, make_blobs,
                           save_csv, train_test_split)
from morphbox.evaluate import compute_metrics
from morphbox.experiment import load_spec, run_experiment, thread_cap
from morphbox.model_io import load_model, save_model
from morphbox.trainer import TrainConfig, train


def _cmd_gen(args) -> int:
    ds = make_blobs(args.samples, args.features, args.centers, args.std,
                    args.classes, args.seed)
    save_csv(ds, args.output)
    counts = np.bincount(ds.y)[1:]
    print(f"wrote {args.output}: {ds.X.shape[0]} samples, "
          f"{ds.X.shape[1]} features, {ds.class_count} classes")
    print("per-class counts: "
          + ", ".join(f"{c + 1}:{n}" for c, n in enumerate(counts)))
    return 0


def _write_trace(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _cmd_train(args) -> int:
    if args.boxes < 1:
        raise ValueError("--boxes must be >= 1")
    if not 0.0 < args.test_fraction < 1.0:
        raise ValueError("--test-fraction must be in (0, 1)")
    data_path = Path(args.data)
    out_path = Path(args.out) if args.out else data_path.with_suffix(".model.json")
    trace_path = Path(args.trace) if args.trace else data_path.with_suffix(".trace.csv")

    ds = load_csv(data_path, label_column=args.label_column)
    tr, te = train_test_split(ds, test_fraction=args.test_fraction,
                              seed=args.split_seed)
    scaler = None
    if not args.no_scale:
        scaler = fit_scaler(tr)
        tr = apply_scaler(tr, scaler)
        te = apply_scaler(te, scaler)

    t0 = time.perf_counter()
    if args.trainer == "ccp":
        cfg = TrainConfig(boxes_per_class=args.boxes, gamma=args.gamma,
                          max_outer_iters=args.max_iters,
                          objective_tol=args.tol, seed=args.seed,
                          margin=args.margin)
        model, traces = train(tr, cfg, backend=args.backend,
                              n_threads=thread_cap())
        trace_header = ("class_id", "iteration", "objective", "lp_pivots",
                        "seconds")
        trace_rows = [(t.class_id, it, f"{obj:.17g}", piv, f"{sec:.6f}")
                      for t in traces
                      for it, obj, piv, sec in zip(t.iterations, t.objectives,
                                                   t.pivot_counts, t.seconds)]
        config_doc = asdict(cfg)
        trace_summary = [{"class_id": t.class_id, "iterations": len(t),
                          "final_objective": t.objectives[-1]}
                         for t in traces]
    elif args.trainer == "greedy":
        cfg = GreedyConfig(max_boxes_per_class=args.max_boxes,
                           purity_mode=args.purity)
        model = train_greedy(tr, cfg)
        trace_header = ("class_id", "boxes")
        trace_rows = [(m.class_id, len(m.boxes)) for m in model.modules]
        config_doc = asdict(cfg)
        trace_summary = [{"class_id": m.class_id, "boxes": len(m.boxes)}
                         for m in model.modules]
    else:
        cfg = AdamConfig(learning_rate=args.lr, epochs=args.epochs)
        losses = {}
        model = train_adam(tr, cfg, args.boxes, args.seed, loss_trace=losses)
        trace_header = ("class_id", "epoch", "loss")
        trace_rows = [(cid, ep, f"{val:.17g}")
                      for cid in sorted(losses)
                      for ep, val in enumerate(losses[cid], 1)]
        config_doc = dict(asdict(cfg), boxes_per_class=args.boxes)
        trace_summary = [{"class_id": cid,
                          "final_loss": losses[cid][-1] if losses[cid] else None}
                         for cid in sorted(losses)]
    wall = time.perf_counter() - t0

    metadata = {
        "trainer": args.trainer,
        "seed": args.seed,
        "config": config_doc,
        "trace_summary": trace_summary,
        "split": {"test_fraction": args.test_fraction, "seed": args.split_seed},
        "scaled": scaler is not None,
        "n_train": int(tr.X.shape[0]),
        "n_test": int(te.X.shape[0]),
    }
    save_model(model, out_path, metadata=metadata, scaler=scaler)
    _write_trace(trace_path, trace_header, trace_rows)

    n_classes = ds.class_count
    mtr = compute_metrics(tr.y, predict_batch(tr.X, model), n_classes)
    mte = compute_metrics(te.y, predict_batch(te.X, model), n_classes)
    n_boxes = sum(len(m.boxes) for m in model.modules)
    print(f"trained {args.trainer}: {len(model.modules)} classes, "
          f"{n_boxes} boxes, {wall:.2f}s")
    print(f"train: macro F1 {mtr.macro_f1:.4f}, "
          f"error {mtr.misclassification_rate:.2f}%")
    print(f"test:  macro F1 {mte.macro_f1:.4f}, "
          f"error {mte.misclassification_rate:.2f}%")
    print(f"model written to {out_path}")
    print(f"trace written to {trace_path}")
    for w in model.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def _cmd_eval(args) -> int:
    model, _meta, scaler = load_model(args.model)
    ds = load_csv(args.data, label_column=args.label_column)
    if ds.X.shape[1] != model.n_features:
        raise ValueError(
            f"feature-dimension mismatch: model expects n={model.n_features}, "
            f"data has n={ds.X.shape[1]}"
        )
    X = scaler.transform(ds.X) if scaler is not None else ds.X
    pred = predict_batch(X, model)
    m = compute_metrics(ds.y, pred, len(model.modules))
    doc = {
        "n_samples": int(ds.X.shape[0]),
        "macro_f1": m.macro_f1,
        "error_rate_percent": m.misclassification_rate,
        "confusion": m.confusion.tolist(),
    }
    text = json.dumps(doc, indent=2)
    print(text)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return 0


def _cmd_experiment(args) -> int:
    spec = load_spec(args.spec)
    echo = None if args.quiet else (lambda msg: print(msg, file=sys.stderr))
    result = run_experiment(spec, echo=echo)
    print(result.table, end="")
    if result.dominance_edges:
        print("dominance (alpha = {:g}): ".format(spec.alpha)
              + ", ".join(f"{a} > {b}" for a, b in result.dominance_edges))
    print(f"report written to {spec.output_dir}")
    if result.failures:
        print(f"{len(result.failures)} run(s) failed; see failures.json",
              file=sys.stderr)
        return 1
    return 0


def _cmd_export_plot_data(args) -> int:
    model, _meta, scaler = load_model(args.model)
    if model.n_features != 2:
        raise ValueError(
            f"unsupported dimension: plot export needs a 2-feature model, "
            f"got n={model.n_features}"
        )
    if args.resolution < 2:
        raise ValueError("--resolution must be >= 2")
    ds = load_csv(args.data, label_column=args.label_column)
    if ds.X.shape[1] != 2:
        raise ValueError(
            f"feature-dimension mismatch: model expects n=2, "
            f"data has n={ds.X.shape[1]}"
        )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    # everything in raw data coordinates; boxes unscale through the stored
    # scaler (per-feature affine with positive slope, so boxes map to boxes)
    box_path = out_dir / "hyperboxes.csv"
    with open(box_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("class", "box", "lower_0", "lower_1", "upper_0", "upper_1"))
        for mod in model.modules:
            for idx, bx in enumerate(mod.boxes, start=1):
                lo, up = bx.lower, bx.upper
                if scaler is not None:
                    lo = scaler.inverse(lo)
                    up = scaler.inverse(up)
                w.writerow((mod.class_id, idx,
                            f"{lo[0]:.17g}", f"{lo[1]:.17g}",
                            f"{up[0]:.17g}", f"{up[1]:.17g}"))

    mins = ds.X.min(axis=0)
    maxs = ds.X.max(axis=0)
    margin = 0.1 * (maxs - mins)
    res = args.resolution
    xs = np.linspace(mins[0] - margin[0], maxs[0] + margin[0], res)
    ys = np.linspace(mins[1] - margin[1], maxs[1] + margin[1], res)
    pts = np.column_stack([np.repeat(xs, res), np.tile(ys, res)])
    P = scaler.transform(pts) if scaler is not None else pts
    labels = predict_batch(P, model)
    grid_path = out_dir / "grid.csv"
    with open(grid_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("x_0", "x_1", "label"))
        for (gx, gy), lab in zip(pts, labels):
            w.writerow((f"{gx:.17g}", f"{gy:.17g}", int(lab)))
    print(f"wrote {box_path}: {sum(len(m.boxes) for m in model.modules)} boxes")
    print(f"wrote {grid_path}: {res * res} cells")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="morphbox",
        description="Train and evaluate hyperbox classifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a Gaussian-blob CSV dataset")
    p.add_argument("--samples", type=int, default=1200)
    p.add_argument("--features", type=int, default=2)
    p.add_argument("--centers", type=int, default=12)
    p.add_argument("--std", type=float, default=1.5)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("train", help="train one model on a CSV dataset")
    p.add_argument("data", help="input CSV")
    p.add_argument("--trainer", choices=("ccp", "greedy", "adam"),
                   default="ccp")
    p.add_argument("--boxes", type=int, default=4,
                   help="boxes per class (ccp and adam)")
    p.add_argument("--gamma", type=float, default=0.01,
                   help="box-size regularization weight (ccp)")
    p.add_argument("--margin", type=float, default=0.0,
                   help="classification margin epsilon (ccp)")
    p.add_argument("--max-iters", type=int, default=50,
                   help="outer iteration cap (ccp)")
    p.add_argument("--tol", type=float, default=1e-4,
                   help="relative objective-change stop tolerance (ccp)")
    p.add_argument("--backend", choices=("numba", "numpy"), default=None,
                   help="LP kernel backend (default: numba when available)")
    p.add_argument("--max-boxes", type=int, default=64,
                   help="box budget per class (greedy)")
    p.add_argument("--purity", choices=("strict", "majority"),
                   default="strict", help="greedy split stopping rule")
    p.add_argument("--lr", type=float, default=0.001,
                   help="learning rate (adam)")
    p.add_argument("--epochs", type=int, default=100,
                   help="training epochs (adam)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-fraction", type=float, default=0.25)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--no-scale", action="store_true",
                   help="skip per-feature standardization")
    p.add_argument("--label-column", default="label")
    p.add_argument("-o", "--out", default=None,
                   help="model JSON path (default: <data>.model.json)")
    p.add_argument("--trace", default=None,
                   help="trace CSV path (default: <data>.trace.csv)")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on a CSV dataset")
    p.add_argument("model", help="model JSON path")
    p.add_argument("data", help="input CSV")
    p.add_argument("--label-column", default="label")
    p.add_argument("-o", "--output", default=None,
                   help="also write the metrics JSON here")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("experiment",
                       help="run a repeated-run experiment from a spec file")
    p.add_argument("spec", help="experiment spec (.toml or .json)")
    p.add_argument("--quiet", action="store_true",
                   help="suppress per-run progress on stderr")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("export-plot-data",
                       help="export hyperboxes and a labeled decision grid "
                            "(2-D models only)")
    p.add_argument("model", help="model JSON path")
    p.add_argument("data", help="CSV whose bounding box frames the grid")
    p.add_argument("--resolution", type=int, default=200,
                   help="grid cells per axis")
    p.add_argument("--label-column", default="label")
    p.add_argument("--out-dir", default=".",
                   help="directory for hyperboxes.csv and grid.csv")
    p.set_defaults(func=_cmd_export_plot_data)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
