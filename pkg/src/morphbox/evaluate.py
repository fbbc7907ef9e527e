"""Metrics, repeated-run aggregation, and paired significance tests."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Counts with rows indexed by true class, columns by predicted (1..S)."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred must have equal length")
    if y_true.size == 0:
        raise ValueError("empty label vectors")
    if min(y_true.min(), y_pred.min()) < 1 or max(y_true.max(), y_pred.max()) > n_classes:
        raise ValueError(f"labels must lie in 1..{n_classes}")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true - 1, y_pred - 1), 1)
    return cm


def f1_score(y_true, y_pred, n_classes: int | None = None, average: str = "macro") -> float:
    """Multi-class F1; per-class F1 is defined as 0 whenever precision and
    recall are both undefined or zero (P + R = 0)."""
    y_true = np.asarray(y_true, dtype=np.int64)
    if n_classes is None:
        n_classes = int(max(y_true.max(), np.asarray(y_pred).max()))
    cm = confusion_matrix(y_true, y_pred, n_classes)
    tp = np.diag(cm).astype(np.float64)
    support = cm.sum(axis=1).astype(np.float64)
    predicted = cm.sum(axis=0).astype(np.float64)
    if average == "micro":
        denom = support.sum() + predicted.sum()
        return float(2.0 * tp.sum() / denom) if denom else 0.0
    if average != "macro":
        raise ValueError('average must be "macro" or "micro"')
    f1s = np.zeros(n_classes)
    for s in range(n_classes):
        denom = support[s] + predicted[s]    # equals (TP+FN) + (TP+FP)
        if denom > 0:
            f1s[s] = 2.0 * tp[s] / denom
    return float(f1s.mean())


def macro_f1(y_true, y_pred, n_classes: int | None = None) -> float:
    return f1_score(y_true, y_pred, n_classes, average="macro")


def error_rate(y_true, y_pred) -> float:
    """Misclassification percentage."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred must have equal length")
    if y_true.size == 0:
        raise ValueError("empty label vectors")
    return float(100.0 * np.count_nonzero(y_true != y_pred) / y_true.size)


@dataclass(frozen=True)
class Metrics:
    macro_f1: float
    misclassification_rate: float
    confusion: np.ndarray
    wall_time_seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "macro_f1": self.macro_f1,
            "misclassification_rate": self.misclassification_rate,
            "confusion": self.confusion.tolist(),
            "wall_time_seconds": self.wall_time_seconds,
        }


def compute_metrics(y_true, y_pred, n_classes: int, wall_time_seconds: float = 0.0) -> Metrics:
    return Metrics(
        macro_f1=macro_f1(y_true, y_pred, n_classes),
        misclassification_rate=error_rate(y_true, y_pred),
        confusion=confusion_matrix(y_true, y_pred, n_classes),
        wall_time_seconds=wall_time_seconds,
    )


@dataclass
class RunSummary:
    """Metrics from repeated runs of one method, with mean/std recomputable
    from the stored per-run list (sample std, ddof=1; a single run reports
    std 0 and sets single_run)."""

    method: str
    runs: list = field(default_factory=list)

    def add(self, m: Metrics) -> None:
        self.runs.append(m)

    @property
    def single_run(self) -> bool:
        return len(self.runs) == 1

    def _stat(self, values):
        v = np.asarray(values, dtype=np.float64)
        mean = float(v.mean())
        std = float(v.std(ddof=1)) if v.size > 1 else 0.0
        return mean, std

    def summary(self) -> dict:
        if not self.runs:
            raise ValueError("no runs recorded")
        f1 = [m.macro_f1 for m in self.runs]
        err = [m.misclassification_rate for m in self.runs]
        wall = [m.wall_time_seconds for m in self.runs]
        mf, sf = self._stat(f1)
        me, se = self._stat(err)
        mw, sw = self._stat(wall)
        return {
            "method": self.method,
            "n_runs": len(self.runs),
            "single_run": self.single_run,
            "macro_f1_mean": mf, "macro_f1_std": sf,
            "error_mean": me, "error_std": se,
            "wall_mean": mw, "wall_std": sw,
        }


@dataclass(frozen=True)
class TTestResult:
    t: float
    dof: int
    p_two_sided: float


def paired_t_test(scores_a, scores_b) -> TTestResult:
    """Classic paired t on the differences a - b.

    p is computed from the t CDF through the regularized incomplete beta
    function.  Zero-variance differences degenerate: all-zero gives t = 0,
    p = 1; constant nonzero gives t = +-inf with p = 0.
    """
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("score lists must be 1-D and of equal length")
    m = a.size
    if m < 2:
        raise ValueError("need at least 2 paired scores")
    d = a - b
    dof = m - 1
    mean = d.mean()
    sd = d.std(ddof=1)
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(t=0.0, dof=dof, p_two_sided=1.0)
        return TTestResult(t=math.copysign(math.inf, mean), dof=dof, p_two_sided=0.0)
    t = float(mean / (sd / math.sqrt(m)))
    # two-sided: P(|T| >= |t|) = I_{nu/(nu+t^2)}(nu/2, 1/2)
    x = dof / (dof + t * t)
    p = float(betainc(dof / 2.0, 0.5, x))
    return TTestResult(t=t, dof=dof, p_two_sided=min(max(p, 0.0), 1.0))


def dominance_order(methods, score_lists, alpha: float) -> list[tuple[str, str]]:
    """Ordered pairs (A, B) where A's scores beat B's: mean(A) > mean(B) and
    the paired test rejects equality at alpha.  Pure data; no drawing."""
    methods = list(methods)
    score_lists = [np.asarray(s, dtype=np.float64) for s in score_lists]
    if len(methods) != len(score_lists):
        raise ValueError("one score list per method required")
    if len(methods) == 0:
        raise ValueError("no methods given")
    if len({s.size for s in score_lists}) > 1:
        raise ValueError("score lists must share a length")
    edges = []
    for i, mi in enumerate(methods):
        for j, mj in enumerate(methods):
            if i == j:
                continue
            if score_lists[i].mean() > score_lists[j].mean():
                res = paired_t_test(score_lists[i], score_lists[j])
                if res.p_two_sided < alpha:
                    edges.append((mi, mj))
    return edges
