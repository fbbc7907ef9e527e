"""Hyperbox classifiers: a winner-take-all network of per-class box unions,
trained either by a convex-concave sequence of linear programs, a greedy
box-splitting heuristic, or Adam on the module logits."""

from morphbox.baselines import (AdamConfig, GreedyConfig, bce_loss_and_grad,
                                train_adam, train_greedy)
from morphbox.core import (ClassModule, Hyperbox, MpclModel, block_output,
                           classify, dc_f, dc_g, module_output, predict_batch,
                           psi)
from morphbox.data import (Dataset, Scaler, apply_scaler, fit_scaler, load_csv,
                           make_blobs, save_csv, train_test_split)
from morphbox.evaluate import (Metrics, RunSummary, TTestResult,
                               compute_metrics, confusion_matrix,
                               dominance_order, error_rate, f1_score, macro_f1,
                               paired_t_test)
from morphbox.experiment import ExperimentSpec, load_spec, run_experiment
from morphbox.lp import (LpProblem, LpSolution, LpStatus,
                         NumericalBreakdownError, PivotLimitError,
                         SimplexOptions, check_solution, solve)
from morphbox.model_io import load_model, save_model
from morphbox.trainer import (CcpTrace, ClassProblem, TrainConfig,
                              kmeanspp_init, train, train_class)

__version__ = "0.1.0"

__all__ = [
    "AdamConfig", "CcpTrace", "ClassModule", "ClassProblem", "Dataset",
    "ExperimentSpec", "GreedyConfig", "Hyperbox", "LpProblem", "LpSolution",
    "LpStatus", "Metrics", "MpclModel", "NumericalBreakdownError",
    "PivotLimitError", "RunSummary", "Scaler", "SimplexOptions",
    "TTestResult", "TrainConfig", "apply_scaler", "bce_loss_and_grad",
    "block_output", "check_solution", "classify", "compute_metrics",
    "confusion_matrix", "dc_f", "dc_g", "dominance_order", "error_rate",
    "f1_score", "fit_scaler", "kmeanspp_init", "load_csv", "load_model",
    "load_spec", "macro_f1", "make_blobs", "module_output", "paired_t_test",
    "predict_batch", "psi", "run_experiment", "save_csv", "save_model",
    "solve", "train", "train_adam", "train_class", "train_greedy",
    "train_test_split", "__version__",
]
