"""Hyperbox training by convexification: each outer iteration freezes the
concave half of the fit objective at the current boxes, which turns the
subproblem into a linear program over box corners and per-sample slacks.

One-against-all: class s trains against the union of the other classes.
Within a class subproblem the LP variables are laid out as

    a[k, i] at column k*n + i          (lower corners, free)
    b[k, i] at column n*K + k*n + i    (upper corners, free)
    xi[l]   at column 2*n*K + l        (slacks, >= 0; negatives first)

and the constraint rows are: one per (negative sample, box) pinning the
linearized exclusion, 2n per positive sample pinning containment in its
selected box, and n*K rows keeping a <= b.
"""

import time
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from morphbox.core import ClassModule, Hyperbox, MpclModel, psi
from morphbox.lp import LpProblem, LpSolution, LpStatus, SimplexOptions, solve


@dataclass(frozen=True)
class TrainConfig:
    """Knobs for the LP-iteration trainer.

    boxes_per_class may be a single int (uniform) or a mapping from class id
    to a per-class count.  gamma weighs the total box size against the slack
    sum; margin (default 0) demands strictly-deeper containment/exclusion.
    """

    boxes_per_class: int | Mapping[int, int] = 4
    gamma: float = 0.01
    max_outer_iters: int = 50
    objective_tol: float = 1e-4
    seed: int = 0
    lp_opts: SimplexOptions = field(default_factory=SimplexOptions)
    margin: float = 0.0

    def __post_init__(self):
        if isinstance(self.boxes_per_class, Mapping):
            if not self.boxes_per_class or min(self.boxes_per_class.values()) < 1:
                raise ValueError("boxes_per_class map must give every class a count >= 1")
        elif int(self.boxes_per_class) < 1:
            raise ValueError("boxes_per_class must be >= 1")
        if not (np.isfinite(self.gamma) and self.gamma >= 0.0):
            raise ValueError("gamma must be finite and >= 0")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if not (self.objective_tol > 0.0):
            raise ValueError("objective_tol must be positive")
        if not (np.isfinite(self.margin) and self.margin >= 0.0):
            raise ValueError("margin must be finite and >= 0")

    def k_for(self, class_id: int) -> int:
        if isinstance(self.boxes_per_class, Mapping):
            try:
                return int(self.boxes_per_class[class_id])
            except KeyError:
                raise ValueError(f"boxes_per_class map has no entry for class {class_id}") from None
        return int(self.boxes_per_class)


@dataclass(frozen=True)
class ClassProblem:
    """Feature rows split for one one-against-all subproblem."""

    positives: np.ndarray
    negatives: np.ndarray
    class_id: int

    def __post_init__(self):
        pos = np.ascontiguousarray(np.asarray(self.positives, dtype=np.float64))
        neg = np.asarray(self.negatives, dtype=np.float64)
        if neg.size == 0:
            neg = np.zeros((0, pos.shape[1] if pos.ndim == 2 else 0))
        neg = np.ascontiguousarray(neg)
        if pos.ndim != 2 or neg.ndim != 2:
            raise ValueError("positives and negatives must be 2-D sample matrices")
        if pos.shape[0] == 0:
            raise ValueError(f"class {self.class_id} has no positive samples")
        if neg.shape[0] and neg.shape[1] != pos.shape[1]:
            raise ValueError("positives and negatives disagree on feature count")
        if not (np.isfinite(pos).all() and np.isfinite(neg).all()):
            raise ValueError("samples must be finite")
        pos.flags.writeable = False
        neg.flags.writeable = False
        object.__setattr__(self, "positives", pos)
        object.__setattr__(self, "negatives", neg)

    @property
    def n_features(self) -> int:
        return self.positives.shape[1]


@dataclass
class CcpTrace:
    """Per-iteration log of one class subproblem: (iteration, LP objective,
    LP pivot count, wall seconds)."""

    class_id: int
    iterations: list = field(default_factory=list)
    objectives: list = field(default_factory=list)
    pivot_counts: list = field(default_factory=list)
    seconds: list = field(default_factory=list)

    def record(self, t: int, objective: float, pivots: int, secs: float) -> None:
        self.iterations.append(int(t))
        self.objectives.append(float(objective))
        self.pivot_counts.append(int(pivots))
        self.seconds.append(float(secs))

    def __len__(self) -> int:
        return len(self.iterations)


def _child_seed(seed: int, class_id: int) -> int:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(class_id)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def kmeanspp_init(points: np.ndarray, K: int, seed: int) -> list[Hyperbox]:
    """Degenerate (lower = upper) boxes at k-means centroids of the points.

    Seeding is the classic D^2 scheme: first centroid uniform, then each next
    one drawn with probability proportional to squared distance from the
    nearest centroid so far; Lloyd sweeps follow until assignments stop
    changing or 100 rounds pass.  When K exceeds the number of distinct
    points the surplus centroids repeat existing ones.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("kmeanspp_init needs a non-empty 2-D point matrix")
    if K < 1:
        raise ValueError("K must be >= 1")
    m = pts.shape[0]
    rng = np.random.default_rng(seed)

    centers = np.empty((K, pts.shape[1]))
    centers[0] = pts[rng.integers(m)]
    d2 = np.sum((pts - centers[0]) ** 2, axis=1)
    for j in range(1, K):
        total = d2.sum()
        if total > 0.0:
            idx = rng.choice(m, p=d2 / total)
        else:
            # all remaining mass sits on chosen centroids: duplicate one
            idx = rng.integers(m)
        centers[j] = pts[idx]
        d2 = np.minimum(d2, np.sum((pts - centers[j]) ** 2, axis=1))

    assign = None
    for _ in range(100):
        dists = np.sum((pts[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_assign = np.argmin(dists, axis=1)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for j in range(K):
            mask = assign == j
            if mask.any():
                centers[j] = pts[mask].mean(axis=0)
            # empty cluster: centroid stays where it is
    return [Hyperbox(c, c) for c in centers]


def select_istar(x: np.ndarray, box_t: Hyperbox) -> int:
    """1-based index of the largest entry of [a - x, x - b] (ties lowest).

    Indices 1..n pick a lower-corner coordinate, n+1..2n an upper-corner one.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (box_t.dim,):
        raise ValueError("dimension mismatch between x and box")
    vals = np.concatenate([box_t.lower - x, x - box_t.upper])
    return int(np.argmax(vals)) + 1


def select_kstar(x: np.ndarray, boxes_t: list[Hyperbox]) -> int:
    """1-based index k maximizing sum of psi over the other boxes (ties lowest)."""
    if not boxes_t:
        raise ValueError("need at least one box")
    psis = np.array([psi(x, b) for b in boxes_t])
    scores = psis.sum() - psis
    return int(np.argmax(scores)) + 1


def linearized_psi(x: np.ndarray, box: Hyperbox, istar: int) -> float:
    """The single coordinate of psi selected by istar: a_{i*} - x_{i*} for
    istar <= n, else x_{i*-n} - b_{i*-n}.  Linear in (a, b) and everywhere
    a lower bound on psi, with equality at the box used to pick istar."""
    n = box.dim
    if not 1 <= istar <= 2 * n:
        raise ValueError(f"istar must lie in 1..{2 * n}, got {istar}")
    x = np.asarray(x, dtype=np.float64)
    if istar <= n:
        return float(box.lower[istar - 1] - x[istar - 1])
    return float(x[istar - n - 1] - box.upper[istar - n - 1])


def assemble_subproblem(cp: ClassProblem, params_t: list[Hyperbox], cfg: TrainConfig) -> LpProblem:
    """Build the LP for one outer iteration from the frozen boxes params_t."""
    n = cp.n_features
    K = len(params_t)
    if K < 1:
        raise ValueError("need at least one box")
    for bx in params_t:
        if bx.dim != n:
            raise ValueError("box dimension disagrees with the samples")
    X0 = cp.negatives
    X1 = cp.positives
    M0, M1 = X0.shape[0], X1.shape[0]
    nb = 2 * n * K
    V = nb + M0 + M1
    R = M0 * K + M1 * 2 * n + n * K
    eps = cfg.margin

    lower = np.stack([bx.lower for bx in params_t])   # (K, n)
    upper = np.stack([bx.upper for bx in params_t])

    A = np.zeros((R, V))
    b = np.zeros(R)

    if M0:
        # per (negative, box): the steepest coordinate of the frozen box
        d1 = lower[None, :, :] - X0[:, None, :]       # (M0, K, n): a - x
        d2 = X0[:, None, :] - upper[None, :, :]       # x - b
        cat = np.concatenate([d1, d2], axis=2)        # (M0, K, 2n)
        istar = np.argmax(cat, axis=2)                # lowest index on ties
        rows = np.arange(M0 * K).reshape(M0, K)
        l_idx = np.repeat(np.arange(M0), K)
        k_idx = np.tile(np.arange(K), M0)
        ist = istar.ravel()
        low_side = ist < n
        coord = np.where(low_side, ist, ist - n)
        cols = np.where(low_side, k_idx * n + coord, nb // 2 + k_idx * n + coord)
        A[rows.ravel(), cols] = np.where(low_side, -1.0, 1.0)
        A[rows.ravel(), nb + l_idx] = -1.0
        xv = X0[l_idx, coord]
        b[rows.ravel()] = np.where(low_side, -xv, xv) - eps

    if M1:
        # per positive: both corners of its least-excluding box
        d1 = lower[None, :, :] - X1[:, None, :]
        d2 = X1[:, None, :] - upper[None, :, :]
        psis = np.maximum(d1, d2).max(axis=2)         # (M1, K)
        scores = psis.sum(axis=1, keepdims=True) - psis
        kstar = np.argmax(scores, axis=1)             # (M1,)
        base = M0 * K
        l_idx = np.repeat(np.arange(M1), n)
        i_idx = np.tile(np.arange(n), M1)
        ks = kstar[l_idx]
        arows = base + l_idx * 2 * n + 2 * i_idx
        brows = arows + 1
        A[arows, ks * n + i_idx] = 1.0
        A[arows, nb + M0 + l_idx] = -1.0
        b[arows] = X1[l_idx, i_idx] - eps
        A[brows, nb // 2 + ks * n + i_idx] = -1.0
        A[brows, nb + M0 + l_idx] = -1.0
        b[brows] = -X1[l_idx, i_idx] - eps

    base = M0 * K + M1 * 2 * n
    k_idx = np.repeat(np.arange(K), n)
    i_idx = np.tile(np.arange(n), K)
    rows = base + k_idx * n + i_idx
    A[rows, k_idx * n + i_idx] = 1.0
    A[rows, nb // 2 + k_idx * n + i_idx] = -1.0

    c = np.zeros(V)
    c[: nb // 2] = -cfg.gamma
    c[nb // 2 : nb] = cfg.gamma
    c[nb:] = 1.0
    var_lower = np.concatenate([np.full(nb, -np.inf), np.zeros(M0 + M1)])
    return LpProblem(c=c, A=A, b=b, var_lower=var_lower)


def _boxes_from_solution(sol: LpSolution, n: int, K: int) -> list[Hyperbox]:
    a = sol.x[: n * K].reshape(K, n)
    b = sol.x[n * K : 2 * n * K].reshape(K, n)
    # rows (iii) hold a <= b only to solver tolerance; snap the dust
    a = np.minimum(a, b)
    return [Hyperbox(a[k], b[k]) for k in range(K)]


def train_class(cp: ClassProblem, cfg: TrainConfig, backend: str | None = None) -> tuple[list[Hyperbox], CcpTrace]:
    """Run the outer loop for one class: init boxes, then iterate LPs until
    the objective settles or max_outer_iters is hit."""
    K = cfg.k_for(cp.class_id)
    boxes = kmeanspp_init(cp.positives, K, _child_seed(cfg.seed, cp.class_id))
    trace = CcpTrace(class_id=cp.class_id)
    prev = None
    for t in range(1, cfg.max_outer_iters + 1):
        t0 = time.perf_counter()
        lp = assemble_subproblem(cp, boxes, cfg)
        sol = solve(lp, cfg.lp_opts, backend=backend)
        if sol.status is LpStatus.INFEASIBLE:
            raise RuntimeError(
                f"class {cp.class_id}: subproblem reported infeasible, which the "
                "slack construction rules out; this indicates a solver failure"
            )
        if sol.status is LpStatus.UNBOUNDED:
            raise ValueError(
                f"class {cp.class_id}: subproblem unbounded; gamma={cfg.gamma} "
                "does not penalize growth in some direction (check for negative gamma use)"
            )
        boxes = _boxes_from_solution(sol, cp.n_features, K)
        trace.record(t, sol.objective, sol.iterations, time.perf_counter() - t0)
        if prev is not None and abs(prev - sol.objective) <= cfg.objective_tol * max(1.0, abs(prev)):
            break
        prev = sol.objective
    return boxes, trace


def class_problems(X: np.ndarray, y: np.ndarray, n_classes: int) -> list[ClassProblem]:
    """Split (X, y) into one-against-all subproblems, classes 1..n_classes."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    out = []
    for s in range(1, n_classes + 1):
        mask = y == s
        if not mask.any():
            raise ValueError(f"class {s} has no samples")
        out.append(ClassProblem(positives=X[mask], negatives=X[~mask], class_id=s))
    return out


def train(ds, cfg: TrainConfig, backend: str | None = None, n_threads: int = 1) -> tuple[MpclModel, list[CcpTrace]]:
    """One-against-all training over a Dataset; returns the model plus one
    trace per class.  Classes are independent, so n_threads > 1 runs them on
    a thread pool (the LP kernel drops the GIL) without changing results."""
    if ds.class_count < 2:
        raise ValueError("training needs at least 2 classes")
    problems = class_problems(ds.X, ds.y, ds.class_count)

    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=min(n_threads, len(problems))) as ex:
            results = list(ex.map(lambda cp: train_class(cp, cfg, backend=backend), problems))
    else:
        results = [train_class(cp, cfg, backend=backend) for cp in problems]

    modules = tuple(
        ClassModule(boxes=tuple(boxes), class_id=cp.class_id)
        for cp, (boxes, _) in zip(problems, results)
    )
    model = MpclModel(modules=modules, n_features=ds.X.shape[1])
    return model, [trace for _, trace in results]
