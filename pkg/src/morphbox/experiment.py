"""Repeated-run experiment driver.

A spec file (TOML or JSON) pins everything: dataset source, split, scaling,
trainer selection, per-trainer configs, run count, seed base, and output
directory.  The dataset and split are drawn once up front; run r trains each
selected method with seed ``seed_base + r``, so all methods see identical
data and matched per-run seeds, which is what makes the paired comparison
meaningful.

Relative paths inside a spec (CSV source, output directory) resolve against
the directory containing the spec file.
"""

import json
import os
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - py<3.11
    import tomli as tomllib

from morphbox.baselines import AdamConfig, GreedyConfig, train_adam, train_greedy
from morphbox.core import predict_batch
from morphbox.data import (apply_scaler, fit_scaler, load_csv, make_blobs,
                           train_test_split)
from morphbox.evaluate import (RunSummary, compute_metrics, dominance_order,
                               paired_t_test)
from morphbox.trainer import TrainConfig, train

KNOWN_TRAINERS = ("ccp", "greedy", "adam")
DISPLAY_NAMES = {"ccp": "MPCL-CCP", "greedy": "MPCL-Greedy", "adam": "MPCL-Adam"}

_GENERATOR_KEYS = ("n_samples", "n_features", "centers", "cluster_std",
                   "n_classes", "seed")


def thread_cap() -> int:
    """Worker count for per-class training fan-out.

    Defaults to the machine's core count (at most 8); the MORPHBOX_THREADS
    environment variable caps it further.  Results never depend on the value,
    only wall time does.
    """
    n = min(os.cpu_count() or 1, 8)
    raw = os.environ.get("MORPHBOX_THREADS", "").strip()
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise ValueError(f"MORPHBOX_THREADS must be an integer, got {raw!r}")
        if cap < 1:
            raise ValueError(f"MORPHBOX_THREADS must be >= 1, got {cap}")
        n = min(n, cap)
    return n


@dataclass(frozen=True)
class ExperimentSpec:
    """Validated experiment description; construct via load_spec/validate_spec."""

    generator: dict | None
    csv_path: Path | None
    label_column: str
    test_fraction: float
    split_seed: int
    stratified: bool
    scale: bool
    trainers: tuple
    runs: int
    seed_base: int
    alpha: float
    output_dir: Path
    ccp: TrainConfig
    greedy: GreedyConfig
    adam: AdamConfig
    adam_boxes: int


def _expect_keys(table: dict, allowed, where: str) -> None:
    extra = sorted(set(table) - set(allowed))
    if extra:
        raise ValueError(f"experiment spec: unknown key(s) {extra} in {where}")


def _as_int(table: dict, key: str, where: str, default=None, minimum=None):
    if key not in table:
        if default is None:
            raise ValueError(f"experiment spec: missing {where}.{key}")
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValueError(f"experiment spec: {where}.{key} must be an integer")
    if minimum is not None and v < minimum:
        raise ValueError(f"experiment spec: {where}.{key} must be >= {minimum}")
    return v


def _as_float(table: dict, key: str, where: str, default=None, minimum=None,
              maximum=None):
    if key not in table:
        if default is None:
            raise ValueError(f"experiment spec: missing {where}.{key}")
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"experiment spec: {where}.{key} must be a number")
    v = float(v)
    if minimum is not None and v < minimum:
        raise ValueError(f"experiment spec: {where}.{key} must be >= {minimum}")
    if maximum is not None and v > maximum:
        raise ValueError(f"experiment spec: {where}.{key} must be <= {maximum}")
    return v


def _as_bool(table: dict, key: str, where: str, default: bool) -> bool:
    if key not in table:
        return default
    v = table[key]
    if not isinstance(v, bool):
        raise ValueError(f"experiment spec: {where}.{key} must be a boolean")
    return v


def validate_spec(doc: dict, base_dir) -> ExperimentSpec:
    """Check the raw spec document and build an ExperimentSpec.

    Raises ValueError on the first schema violation; nothing is trained or
    written before validation finishes.
    """
    if not isinstance(doc, dict):
        raise ValueError("experiment spec: top level must be a table/object")
    base_dir = Path(base_dir)
    _expect_keys(doc, ("dataset", "split", "scale", "trainers", "runs",
                       "seed_base", "alpha", "output_dir",
                       "ccp", "greedy", "adam"), "top level")

    if "dataset" not in doc or not isinstance(doc["dataset"], dict):
        raise ValueError("experiment spec: missing [dataset] table")
    dst = doc["dataset"]
    _expect_keys(dst, ("generator", "csv", "label_column"), "[dataset]")
    has_gen = "generator" in dst
    has_csv = "csv" in dst
    if has_gen == has_csv:
        raise ValueError("experiment spec: [dataset] needs exactly one of "
                         "'generator' or 'csv'")
    generator = None
    csv_path = None
    if has_gen:
        g = dst["generator"]
        if not isinstance(g, dict):
            raise ValueError("experiment spec: [dataset.generator] must be a table")
        _expect_keys(g, _GENERATOR_KEYS, "[dataset.generator]")
        generator = {
            "n_samples": _as_int(g, "n_samples", "generator", minimum=1),
            "n_features": _as_int(g, "n_features", "generator", minimum=1),
            "centers": _as_int(g, "centers", "generator", minimum=1),
            "cluster_std": _as_float(g, "cluster_std", "generator", minimum=0.0),
            "n_classes": _as_int(g, "n_classes", "generator", minimum=1),
            "seed": _as_int(g, "seed", "generator"),
        }
    else:
        if not isinstance(dst["csv"], str) or not dst["csv"]:
            raise ValueError("experiment spec: dataset.csv must be a path string")
        csv_path = (base_dir / dst["csv"]).resolve()
    label_column = dst.get("label_column", "label")
    if not isinstance(label_column, str):
        raise ValueError("experiment spec: dataset.label_column must be a string")

    sp = doc.get("split", {})
    if not isinstance(sp, dict):
        raise ValueError("experiment spec: [split] must be a table")
    _expect_keys(sp, ("test_fraction", "seed", "stratified"), "[split]")
    test_fraction = _as_float(sp, "test_fraction", "split", default=0.25)
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("experiment spec: split.test_fraction must be in (0, 1)")
    split_seed = _as_int(sp, "seed", "split", default=0)
    stratified = _as_bool(sp, "stratified", "split", True)

    scale = _as_bool(doc, "scale", "top level", True)
    runs = _as_int(doc, "runs", "top level", default=1, minimum=1)
    seed_base = _as_int(doc, "seed_base", "top level", default=0)
    alpha = _as_float(doc, "alpha", "top level", default=0.01)
    if not 0.0 < alpha < 1.0:
        raise ValueError("experiment spec: alpha must be in (0, 1)")

    trainers = doc.get("trainers", list(KNOWN_TRAINERS))
    if (not isinstance(trainers, list) or not trainers
            or not all(isinstance(t, str) for t in trainers)):
        raise ValueError("experiment spec: trainers must be a non-empty "
                         "list of names")
    bad = [t for t in trainers if t not in KNOWN_TRAINERS]
    if bad:
        raise ValueError(f"experiment spec: unknown trainer(s) {bad}; "
                         f"known: {list(KNOWN_TRAINERS)}")
    if len(set(trainers)) != len(trainers):
        raise ValueError("experiment spec: duplicate trainer names")

    out = doc.get("output_dir", "report")
    if not isinstance(out, str) or not out:
        raise ValueError("experiment spec: output_dir must be a path string")
    output_dir = (base_dir / out).resolve()

    ct = doc.get("ccp", {})
    if not isinstance(ct, dict):
        raise ValueError("experiment spec: [ccp] must be a table")
    _expect_keys(ct, ("boxes_per_class", "gamma", "max_outer_iters",
                      "objective_tol", "margin"), "[ccp]")
    ccp = TrainConfig(
        boxes_per_class=_as_int(ct, "boxes_per_class", "ccp", default=4, minimum=1),
        gamma=_as_float(ct, "gamma", "ccp", default=0.01, minimum=0.0),
        max_outer_iters=_as_int(ct, "max_outer_iters", "ccp", default=50, minimum=1),
        objective_tol=_as_float(ct, "objective_tol", "ccp", default=1e-4, minimum=0.0),
        margin=_as_float(ct, "margin", "ccp", default=0.0, minimum=0.0),
    )

    gt = doc.get("greedy", {})
    if not isinstance(gt, dict):
        raise ValueError("experiment spec: [greedy] must be a table")
    _expect_keys(gt, ("max_boxes_per_class", "purity_mode"), "[greedy]")
    purity = gt.get("purity_mode", "strict")
    if purity not in ("strict", "majority"):
        raise ValueError("experiment spec: greedy.purity_mode must be "
                         "'strict' or 'majority'")
    greedy = GreedyConfig(
        max_boxes_per_class=_as_int(gt, "max_boxes_per_class", "greedy",
                                    default=64, minimum=1),
        purity_mode=purity,
    )

    at = doc.get("adam", {})
    if not isinstance(at, dict):
        raise ValueError("experiment spec: [adam] must be a table")
    _expect_keys(at, ("learning_rate", "epochs", "boxes_per_class"), "[adam]")
    adam = AdamConfig(
        learning_rate=_as_float(at, "learning_rate", "adam", default=0.001),
        epochs=_as_int(at, "epochs", "adam", default=100, minimum=0),
    )
    if adam.learning_rate <= 0.0:
        raise ValueError("experiment spec: adam.learning_rate must be > 0")
    adam_boxes = _as_int(at, "boxes_per_class", "adam", default=4, minimum=1)

    return ExperimentSpec(
        generator=generator, csv_path=csv_path, label_column=label_column,
        test_fraction=test_fraction, split_seed=split_seed,
        stratified=stratified, scale=scale, trainers=tuple(trainers),
        runs=runs, seed_base=seed_base, alpha=alpha, output_dir=output_dir,
        ccp=ccp, greedy=greedy, adam=adam, adam_boxes=adam_boxes,
    )


def load_spec(path) -> ExperimentSpec:
    """Parse a .toml or .json spec file and validate it."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".toml":
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    elif suffix == ".json":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        raise ValueError(f"experiment spec must be .toml or .json, got {path.name}")
    return validate_spec(doc, path.parent)


def spec_to_doc(spec: ExperimentSpec) -> dict:
    doc = asdict(spec)
    doc["csv_path"] = str(spec.csv_path) if spec.csv_path else None
    doc["output_dir"] = str(spec.output_dir)
    doc["trainers"] = list(spec.trainers)
    return doc


@dataclass(frozen=True)
class RunRecord:
    trainer: str
    run_index: int
    seed: int
    wall_seconds: float
    train_metrics: object
    test_metrics: object


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    records: dict
    failures: list
    summaries: dict
    dominance_edges: list
    pairwise: list
    paired_runs: int
    table: str
    total_wall_seconds: float

    @property
    def ok(self) -> bool:
        return not self.failures


def _fit(name: str, spec: ExperimentSpec, ds, seed: int, threads: int):
    if name == "ccp":
        model, _traces = train(ds, replace(spec.ccp, seed=seed),
                               n_threads=threads)
        return model
    if name == "greedy":
        return train_greedy(ds, spec.greedy)
    return train_adam(ds, spec.adam, spec.adam_boxes, seed)


def _load_dataset(spec: ExperimentSpec):
    if spec.generator is not None:
        return make_blobs(**spec.generator)
    return load_csv(spec.csv_path, label_column=spec.label_column)


def format_table(rows) -> str:
    """Fixed-width text table, one row per method."""
    header = ["method", "runs", "train F1", "test F1", "F1 gap",
              "train err%", "test err%", "s/run"]
    lines = [header]
    for r in rows:
        if r["n_runs"] == 0:
            lines.append([r["display"], "0", "-", "-", "-", "-", "-", "-"])
            continue
        lines.append([
            r["display"],
            str(r["n_runs"]),
            f"{r['train_f1_mean']:.4f} ± {r['train_f1_std']:.4f}",
            f"{r['test_f1_mean']:.4f} ± {r['test_f1_std']:.4f}",
            f"{r['gap_mean']:.4f}",
            f"{r['train_err_mean']:.2f} ± {r['train_err_std']:.2f}",
            f"{r['test_err_mean']:.2f} ± {r['test_err_std']:.2f}",
            f"{r['wall_mean']:.3f} ± {r['wall_std']:.3f}",
        ])
    widths = [max(len(row[i]) for row in lines) for i in range(len(header))]
    out = []
    for j, row in enumerate(lines):
        out.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if j == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out) + "\n"


def run_experiment(spec: ExperimentSpec, echo=None) -> ExperimentResult:
    """Execute the full protocol and write the report directory.

    Failures of individual runs are recorded and skipped; remaining runs
    continue.  Check ``result.ok`` (or the failures list) afterwards.
    """
    t_start = time.perf_counter()
    ds = _load_dataset(spec)
    train_ds, test_ds = train_test_split(ds, test_fraction=spec.test_fraction,
                                         seed=spec.split_seed,
                                         stratified=spec.stratified)
    if spec.scale:
        scaler = fit_scaler(train_ds)
        train_ds = apply_scaler(train_ds, scaler)
        test_ds = apply_scaler(test_ds, scaler)
    n_classes = ds.class_count
    threads = thread_cap()

    records = {name: [] for name in spec.trainers}
    failures = []
    for r in range(spec.runs):
        seed = spec.seed_base + r
        for name in spec.trainers:
            t0 = time.perf_counter()
            try:
                model = _fit(name, spec, train_ds, seed, threads)
            except Exception as exc:  # record, keep going
                failures.append({"trainer": name, "run_index": r,
                                 "seed": seed, "error": repr(exc)})
                if echo:
                    echo(f"run {r + 1}/{spec.runs} {name}: FAILED ({exc})")
                continue
            wall = time.perf_counter() - t0
            mtr = compute_metrics(train_ds.y, predict_batch(train_ds.X, model),
                                  n_classes)
            mte = compute_metrics(test_ds.y, predict_batch(test_ds.X, model),
                                  n_classes, wall_time_seconds=wall)
            records[name].append(RunRecord(name, r, seed, wall, mtr, mte))
            if echo:
                echo(f"run {r + 1}/{spec.runs} {name}: test F1 "
                     f"{mte.macro_f1:.4f}, err {mte.misclassification_rate:.2f}%, "
                     f"{wall:.2f}s")

    summaries = {}
    table_rows = []
    for name in spec.trainers:
        recs = records[name]
        fail_here = [f for f in failures if f["trainer"] == name]
        if not recs:
            summaries[name] = {"method": name, "display": DISPLAY_NAMES[name],
                               "n_runs": 0, "failures": fail_here}
            table_rows.append({"display": DISPLAY_NAMES[name], "n_runs": 0})
            continue
        rs_test = RunSummary(name)
        rs_train = RunSummary(name)
        for rec in recs:
            rs_test.add(rec.test_metrics)
            rs_train.add(rec.train_metrics)
        s_test = rs_test.summary()
        s_train = rs_train.summary()
        gaps = [rec.train_metrics.macro_f1 - rec.test_metrics.macro_f1
                for rec in recs]
        per_run = [{
            "run_index": rec.run_index, "seed": rec.seed,
            "train_macro_f1": rec.train_metrics.macro_f1,
            "test_macro_f1": rec.test_metrics.macro_f1,
            "train_error": rec.train_metrics.misclassification_rate,
            "test_error": rec.test_metrics.misclassification_rate,
            "wall_seconds": rec.wall_seconds,
        } for rec in recs]
        summaries[name] = {
            "method": name,
            "display": DISPLAY_NAMES[name],
            "n_runs": len(recs),
            "test": s_test,
            "train": s_train,
            "f1_gap_mean": float(np.mean(gaps)),
            "per_run": per_run,
            "failures": fail_here,
        }
        table_rows.append({
            "display": DISPLAY_NAMES[name], "n_runs": len(recs),
            "train_f1_mean": s_train["macro_f1_mean"],
            "train_f1_std": s_train["macro_f1_std"],
            "test_f1_mean": s_test["macro_f1_mean"],
            "test_f1_std": s_test["macro_f1_std"],
            "gap_mean": float(np.mean(gaps)),
            "train_err_mean": s_train["error_mean"],
            "train_err_std": s_train["error_std"],
            "test_err_mean": s_test["error_mean"],
            "test_err_std": s_test["error_std"],
            "wall_mean": s_test["wall_mean"],
            "wall_std": s_test["wall_std"],
        })
    table = format_table(table_rows)

    # dominance over runs where every method succeeded, paired by run index
    active = [n for n in spec.trainers if records[n]]
    edges, pairwise, paired_runs = [], [], 0
    if len(active) >= 2:
        common = set(rec.run_index for rec in records[active[0]])
        for name in active[1:]:
            common &= set(rec.run_index for rec in records[name])
        common = sorted(common)
        paired_runs = len(common)
        if paired_runs >= 2:
            by_run = {n: {rec.run_index: rec for rec in records[n]}
                      for n in active}
            lists = [[by_run[n][r].test_metrics.macro_f1 for r in common]
                     for n in active]
            edges = dominance_order(active, lists, alpha=spec.alpha)
            for i in range(len(active)):
                for j in range(i + 1, len(active)):
                    tt = paired_t_test(lists[i], lists[j])
                    pairwise.append({
                        "a": active[i], "b": active[j],
                        "mean_a": float(np.mean(lists[i])),
                        "mean_b": float(np.mean(lists[j])),
                        "t": tt.t, "dof": tt.dof, "p": tt.p_two_sided,
                    })

    total_wall = time.perf_counter() - t_start
    result = ExperimentResult(
        spec=spec, records=records, failures=failures, summaries=summaries,
        dominance_edges=[list(e) for e in edges], pairwise=pairwise,
        paired_runs=paired_runs, table=table, total_wall_seconds=total_wall,
    )
    _write_report(result)
    return result


def _write_report(result: ExperimentResult) -> None:
    out = result.spec.output_dir
    out.mkdir(parents=True, exist_ok=True)
    for name, summary in result.summaries.items():
        with open(out / f"summary_{name}.json", "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
    with open(out / "table.txt", "w", encoding="utf-8") as fh:
        fh.write(result.table)
    with open(out / "dominance.json", "w", encoding="utf-8") as fh:
        json.dump({"alpha": result.spec.alpha,
                   "paired_runs": result.paired_runs,
                   "edges": result.dominance_edges,
                   "pairwise": result.pairwise}, fh, indent=2)
        fh.write("\n")
    with open(out / "resolved_spec.json", "w", encoding="utf-8") as fh:
        json.dump(spec_to_doc(result.spec), fh, indent=2)
        fh.write("\n")
    if result.failures:
        with open(out / "failures.json", "w", encoding="utf-8") as fh:
            json.dump(result.failures, fh, indent=2)
            fh.write("\n")
