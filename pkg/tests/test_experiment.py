"""Spec validation, the repeated-run driver, and report files."""

import json
import os

import pytest

from morphbox.experiment import (
    DISPLAY_NAMES,
    KNOWN_TRAINERS,
    format_table,
    load_spec,
    run_experiment,
    spec_to_doc,
    thread_cap,
    validate_spec,
)
import morphbox.experiment as experiment_mod


def gen_doc(**over):
    doc = {
        "dataset": {
            "generator": {"n_samples": 60, "n_features": 2, "centers": 3,
                          "cluster_std": 0.6, "n_classes": 3, "seed": 1},
        },
    }
    doc.update(over)
    return doc


def tiny_doc(out_name="report", runs=2):
    return gen_doc(
        runs=runs,
        seed_base=0,
        output_dir=out_name,
        ccp={"boxes_per_class": 1, "max_outer_iters": 3},
        adam={"epochs": 5, "boxes_per_class": 1},
    )


class TestThreadCap:
    def test_default_range(self, monkeypatch):
        monkeypatch.delenv("MORPHBOX_THREADS", raising=False)
        assert 1 <= thread_cap() <= 8

    def test_env_caps(self, monkeypatch):
        monkeypatch.setenv("MORPHBOX_THREADS", "2")
        assert thread_cap() == min(min(os.cpu_count() or 1, 8), 2)
        monkeypatch.setenv("MORPHBOX_THREADS", " 1 ")
        assert thread_cap() == 1

    def test_env_rejects_garbage(self, monkeypatch):
        monkeypatch.setenv("MORPHBOX_THREADS", "0")
        with pytest.raises(ValueError):
            thread_cap()
        monkeypatch.setenv("MORPHBOX_THREADS", "many")
        with pytest.raises(ValueError):
            thread_cap()

    def test_blank_env_ignored(self, monkeypatch):
        monkeypatch.setenv("MORPHBOX_THREADS", "  ")
        assert 1 <= thread_cap() <= 8


class TestValidateSpec:
    def test_defaults(self, tmp_path):
        spec = validate_spec(gen_doc(), tmp_path)
        assert spec.runs == 1
        assert spec.seed_base == 0
        assert spec.alpha == 0.01
        assert spec.trainers == KNOWN_TRAINERS
        assert spec.test_fraction == 0.25
        assert spec.split_seed == 0
        assert spec.stratified and spec.scale
        assert spec.output_dir == (tmp_path / "report").resolve()
        assert spec.ccp.boxes_per_class == 4
        assert spec.ccp.gamma == 0.01
        assert spec.greedy.max_boxes_per_class == 64
        assert spec.adam.epochs == 100
        assert spec.adam_boxes == 4
        assert spec.csv_path is None

    def test_csv_source_resolves_relative(self, tmp_path):
        doc = {"dataset": {"csv": "data/points.csv", "label_column": "cls"}}
        spec = validate_spec(doc, tmp_path)
        assert spec.csv_path == (tmp_path / "data/points.csv").resolve()
        assert spec.label_column == "cls"
        assert spec.generator is None

    def test_dataset_source_exclusivity(self, tmp_path):
        with pytest.raises(ValueError, match="exactly one"):
            validate_spec({"dataset": {}}, tmp_path)
        doc = gen_doc()
        doc["dataset"]["csv"] = "x.csv"
        with pytest.raises(ValueError, match="exactly one"):
            validate_spec(doc, tmp_path)
        with pytest.raises(ValueError, match=r"\[dataset\]"):
            validate_spec({}, tmp_path)

    def test_unknown_keys_reported(self, tmp_path):
        with pytest.raises(ValueError, match="typo_key"):
            validate_spec(gen_doc(typo_key=1), tmp_path)
        doc = gen_doc()
        doc["dataset"]["generator"]["sigma"] = 0.1
        with pytest.raises(ValueError, match="sigma"):
            validate_spec(doc, tmp_path)
        with pytest.raises(ValueError, match="warm_start"):
            validate_spec(gen_doc(ccp={"warm_start": True}), tmp_path)

    def test_generator_keys_all_required(self, tmp_path):
        doc = gen_doc()
        del doc["dataset"]["generator"]["seed"]
        with pytest.raises(ValueError, match="generator.seed"):
            validate_spec(doc, tmp_path)

    def test_runs_validation(self, tmp_path):
        with pytest.raises(ValueError, match=">= 1"):
            validate_spec(gen_doc(runs=0), tmp_path)
        with pytest.raises(ValueError, match="integer"):
            validate_spec(gen_doc(runs=True), tmp_path)
        with pytest.raises(ValueError, match="integer"):
            validate_spec(gen_doc(runs=2.5), tmp_path)

    def test_alpha_range(self, tmp_path):
        with pytest.raises(ValueError, match="alpha"):
            validate_spec(gen_doc(alpha=1.5), tmp_path)
        with pytest.raises(ValueError, match="alpha"):
            validate_spec(gen_doc(alpha=0.0), tmp_path)

    def test_trainer_list(self, tmp_path):
        with pytest.raises(ValueError, match="unknown trainer"):
            validate_spec(gen_doc(trainers=["svm"]), tmp_path)
        with pytest.raises(ValueError, match="duplicate"):
            validate_spec(gen_doc(trainers=["ccp", "ccp"]), tmp_path)
        with pytest.raises(ValueError, match="non-empty"):
            validate_spec(gen_doc(trainers=[]), tmp_path)
        spec = validate_spec(gen_doc(trainers=["greedy"]), tmp_path)
        assert spec.trainers == ("greedy",)

    def test_split_table(self, tmp_path):
        with pytest.raises(ValueError, match="test_fraction"):
            validate_spec(gen_doc(split={"test_fraction": 1.0}), tmp_path)
        spec = validate_spec(
            gen_doc(split={"test_fraction": 0.4, "seed": 9, "stratified": False}),
            tmp_path)
        assert spec.test_fraction == 0.4
        assert spec.split_seed == 9
        assert not spec.stratified

    def test_adam_learning_rate_positive(self, tmp_path):
        with pytest.raises(ValueError, match="learning_rate"):
            validate_spec(gen_doc(adam={"learning_rate": 0.0}), tmp_path)

    def test_top_level_must_be_table(self, tmp_path):
        with pytest.raises(ValueError, match="top level"):
            validate_spec([1, 2], tmp_path)

    def test_spec_to_doc_is_json_clean(self, tmp_path):
        spec = validate_spec(gen_doc(), tmp_path)
        json.dumps(spec_to_doc(spec))


class TestLoadSpec:
    TOML = """
runs = 2
seed_base = 5
alpha = 0.05
trainers = ["ccp", "greedy"]
output_dir = "out"

[dataset.generator]
n_samples = 60
n_features = 2
centers = 3
cluster_std = 0.6
n_classes = 3
seed = 1

[split]
test_fraction = 0.3
seed = 7

[ccp]
boxes_per_class = 2
gamma = 0.05
"""

    def equivalent_json_doc(self):
        return {
            "runs": 2, "seed_base": 5, "alpha": 0.05,
            "trainers": ["ccp", "greedy"], "output_dir": "out",
            "dataset": {"generator": {"n_samples": 60, "n_features": 2,
                                      "centers": 3, "cluster_std": 0.6,
                                      "n_classes": 3, "seed": 1}},
            "split": {"test_fraction": 0.3, "seed": 7},
            "ccp": {"boxes_per_class": 2, "gamma": 0.05},
        }

    def test_toml_and_json_agree(self, tmp_path):
        tp = tmp_path / "exp.toml"
        tp.write_text(self.TOML)
        jp = tmp_path / "exp.json"
        jp.write_text(json.dumps(self.equivalent_json_doc()))
        assert load_spec(tp) == load_spec(jp)

    def test_unknown_extension(self, tmp_path):
        p = tmp_path / "exp.yaml"
        p.write_text("runs: 2\n")
        with pytest.raises(ValueError, match="toml or .json"):
            load_spec(p)


class TestFormatTable:
    def test_header_only(self):
        text = format_table([])
        lines = text.splitlines()
        assert lines[0].startswith("method")
        assert set(lines[1]) <= {"-", " "}

    def test_rows(self):
        rows = [
            {"display": "MPCL-CCP", "n_runs": 3,
             "train_f1_mean": 0.9, "train_f1_std": 0.01,
             "test_f1_mean": 0.8, "test_f1_std": 0.02, "gap_mean": 0.1,
             "train_err_mean": 5.0, "train_err_std": 0.5,
             "test_err_mean": 15.0, "test_err_std": 1.0,
             "wall_mean": 0.25, "wall_std": 0.05},
            {"display": "MPCL-Greedy", "n_runs": 0},
        ]
        text = format_table(rows)
        assert "MPCL-CCP" in text
        assert "0.8000 ± 0.0200" in text
        assert "MPCL-Greedy  0" in text


class TestRunExperiment:
    def test_end_to_end_report(self, tmp_path):
        spec = validate_spec(tiny_doc(), tmp_path)
        lines = []
        result = run_experiment(spec, echo=lines.append)
        assert result.ok
        assert result.paired_runs == 2
        assert len(result.pairwise) == 3    # three method pairs
        for name in KNOWN_TRAINERS:
            assert len(result.records[name]) == 2
            assert result.summaries[name]["n_runs"] == 2
            assert DISPLAY_NAMES[name] in result.table
            assert (tmp_path / "report" / f"summary_{name}.json").exists()
        assert len(lines) == 2 * 3
        out = tmp_path / "report"
        assert (out / "table.txt").read_text() == result.table
        dom = json.loads((out / "dominance.json").read_text())
        assert dom["alpha"] == spec.alpha
        assert dom["paired_runs"] == 2
        assert not (out / "failures.json").exists()
        resolved = json.loads((out / "resolved_spec.json").read_text())
        assert resolved["runs"] == 2

    def test_single_run_reports_zero_std(self, tmp_path):
        spec = validate_spec(tiny_doc(runs=1), tmp_path)
        result = run_experiment(spec)
        assert result.paired_runs == 1
        assert result.dominance_edges == []
        for name in KNOWN_TRAINERS:
            s = result.summaries[name]["test"]
            assert s["single_run"] is True
            assert s["macro_f1_std"] == 0.0

    def test_paired_seeds_reproducible(self, tmp_path):
        r1 = run_experiment(validate_spec(tiny_doc(out_name="a"), tmp_path))
        r2 = run_experiment(validate_spec(tiny_doc(out_name="b"), tmp_path))
        for name in KNOWN_TRAINERS:
            f1 = [rec.test_metrics.macro_f1 for rec in r1.records[name]]
            f2 = [rec.test_metrics.macro_f1 for rec in r2.records[name]]
            assert f1 == f2

    def test_csv_source(self, tmp_path):
        from morphbox.data import make_blobs, save_csv
        ds = make_blobs(n_samples=40, n_features=2, centers=2, cluster_std=0.5,
                        n_classes=2, seed=3)
        save_csv(ds, tmp_path / "pts.csv")
        doc = {
            "dataset": {"csv": "pts.csv"},
            "trainers": ["greedy"],
            "output_dir": "rep",
        }
        result = run_experiment(validate_spec(doc, tmp_path))
        assert result.ok
        assert result.summaries["greedy"]["n_runs"] == 1

    def test_partial_failure_recorded(self, tmp_path, monkeypatch):
        real_fit = experiment_mod._fit

        def flaky(name, spec, ds, seed, threads):
            if name == "greedy" and seed == spec.seed_base + 1:
                raise RuntimeError("injected")
            return real_fit(name, spec, ds, seed, threads)

        monkeypatch.setattr(experiment_mod, "_fit", flaky)
        spec = validate_spec(tiny_doc(runs=3), tmp_path)
        result = run_experiment(spec)
        assert not result.ok
        assert len(result.failures) == 1
        assert result.failures[0]["trainer"] == "greedy"
        assert result.failures[0]["run_index"] == 1
        # other trainers keep all runs; pairing drops the failed run index
        assert len(result.records["ccp"]) == 3
        assert len(result.records["greedy"]) == 2
        assert result.paired_runs == 2
        failures = json.loads((tmp_path / "report" / "failures.json").read_text())
        assert "injected" in failures[0]["error"]
