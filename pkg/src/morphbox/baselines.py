"""Reference trainers: greedy pure-box construction and full-batch Adam.

Both produce the same MpclModel type as the LP-based trainer, so every
downstream consumer (evaluation, serialization, CLI) treats them uniformly.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from morphbox.core import ClassModule, Hyperbox, MpclModel
from morphbox.trainer import _child_seed, class_problems, kmeanspp_init


@dataclass(frozen=True)
class GreedyConfig:
    """max_boxes_per_class caps the recursion; purity_mode "strict" demands
    negative-free boxes, "majority" accepts a box once positives inside
    strictly outnumber negatives."""

    max_boxes_per_class: int = 64
    purity_mode: str = "strict"

    def __post_init__(self):
        if self.max_boxes_per_class < 1:
            raise ValueError("max_boxes_per_class must be >= 1")
        if self.purity_mode not in ("strict", "majority"):
            raise ValueError('purity_mode must be "strict" or "majority"')


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 0.001
    epochs: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8

    def __post_init__(self):
        if not (self.learning_rate > 0):
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if not (self.eps_hat > 0):
            raise ValueError("eps_hat must be positive")


def _contained(X: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    if X.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    return np.all((X >= lo) & (X <= hi), axis=1)


def _best_split(P: np.ndarray, N_in: np.ndarray):
    """Pick (dim, threshold) for a box holding positives P and offending
    negatives N_in.

    Candidate thresholds are midpoints between an inside-negative coordinate
    and the nearest positive coordinate on either side, per dimension.  The
    winner leaves the fewest negatives inside the two child bounding boxes;
    ties prefer the more balanced split, then the lower dimension, then the
    lower threshold.  Returns None when no candidate separates the positives
    into two non-empty sides (irreducible conflict, e.g. duplicated points).
    """
    n = P.shape[1]
    best = None
    for d in range(n):
        pcol = P[:, d]
        cands = set()
        for z in np.unique(N_in[:, d]):
            below = pcol[pcol < z]
            if below.size:
                cands.add((z + below.max()) / 2.0)
            above = pcol[pcol > z]
            if above.size:
                cands.add((z + above.min()) / 2.0)
        for theta in sorted(cands):
            left = pcol < theta
            nl = int(left.sum())
            if nl == 0 or nl == P.shape[0]:
                continue
            PL, PR = P[left], P[~left]
            loL, hiL = PL.min(axis=0), PL.max(axis=0)
            loR, hiR = PR.min(axis=0), PR.max(axis=0)
            neg_left = int(_contained(N_in, loL, hiL).sum())
            neg_right = int(_contained(N_in, loR, hiR).sum())
            remaining = neg_left + neg_right
            balance = min(nl, P.shape[0] - nl)
            key = (remaining, -balance, d, theta)
            if best is None or key < best[0]:
                best = (key, d, theta)
    if best is None:
        return None
    return best[1], best[2]


def train_greedy(ds, cfg: GreedyConfig = GreedyConfig()) -> MpclModel:
    """Recursive pure-box construction, one class against all.

    Each class starts from the bounding box of its samples; boxes still
    containing negatives are split at axis-aligned thresholds until pure or
    until the box budget runs out.  Budget exhaustion (or an irreducible
    conflict such as identical points with different labels) leaves an impure
    box in the model and adds a warning to it.
    """
    problems = class_problems(ds.X, ds.y, ds.class_count)
    modules = []
    warnings = []
    for cp in problems:
        P_all, N_all = cp.positives, cp.negatives
        boxes = []
        queue = [P_all]
        while queue:
            P = queue.pop(0)
            lo, hi = P.min(axis=0), P.max(axis=0)
            inside = N_all[_contained(N_all, lo, hi)]
            npos, nneg = P.shape[0], inside.shape[0]
            acceptable = nneg == 0 or (cfg.purity_mode == "majority" and npos > nneg)
            # splitting nets one extra pending box; only allowed while the cap
            # can still absorb every pending subset afterwards
            can_split = cfg.max_boxes_per_class - len(boxes) > len(queue) + 1
            if not acceptable and can_split:
                split = _best_split(P, inside)
                if split is not None:
                    d, theta = split
                    left = P[:, d] < theta
                    queue.append(P[left])
                    queue.append(P[~left])
                    continue
            # emit as-is: pure, accepted by majority, out of budget, or unsplittable
            boxes.append(Hyperbox(lo, hi))
            if len(boxes) == cfg.max_boxes_per_class and queue:
                # cap reached: widen the last box over every uncovered positive
                rest = np.vstack(queue)
                queue.clear()
                final = boxes.pop()
                boxes.append(Hyperbox(
                    np.minimum(final.lower, rest.min(axis=0)),
                    np.maximum(final.upper, rest.max(axis=0)),
                ))
        impure = 0
        for bx in boxes:
            nneg = int(_contained(N_all, bx.lower, bx.upper).sum())
            npos = int(_contained(P_all, bx.lower, bx.upper).sum())
            if (nneg > 0) if cfg.purity_mode == "strict" else (nneg >= npos):
                impure += 1
        if impure:
            warnings.append(
                f"class {cp.class_id}: {impure} box(es) still contain negatives "
                f"(budget {cfg.max_boxes_per_class}, mode {cfg.purity_mode})"
            )
        modules.append(ClassModule(boxes=tuple(boxes), class_id=cp.class_id))
    return MpclModel(modules=tuple(modules), n_features=ds.X.shape[1],
                     warnings=tuple(warnings))


def _softplus(t: np.ndarray) -> np.ndarray:
    return np.log1p(np.exp(-np.abs(t))) + np.maximum(t, 0.0)


def _sigmoid(t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def bce_loss_and_grad(X: np.ndarray, is_positive: np.ndarray, a: np.ndarray, b: np.ndarray):
    """Mean binary cross-entropy of the module logit z(x) = max_k min_i
    min(x-a_k, b_k-x), with its subgradient w.r.t. the box corners.

    At ties the lowest-index active branch takes the whole gradient: the
    lowest maximizing box, then within it the lowest entry of the
    concatenated 2n-vector [x - a, b - x].  Returns (loss, grad_a, grad_b).
    """
    X = np.asarray(X, dtype=np.float64)
    M, n = X.shape
    K = a.shape[0]
    d1 = X[:, None, :] - a[None, :, :]          # (M, K, n): x - a
    d2 = b[None, :, :] - X[:, None, :]          # b - x
    h = np.minimum(d1, d2).min(axis=2)          # (M, K)
    z = h.max(axis=1)
    k0 = h.argmax(axis=1)                       # lowest index on ties
    cat = np.concatenate([d1[np.arange(M), k0], d2[np.arange(M), k0]], axis=1)  # (M, 2n)
    i0 = cat.argmin(axis=1)

    t = np.where(is_positive, -z, z)
    loss = float(_softplus(t).mean())
    gz = np.where(is_positive, -_sigmoid(-z), _sigmoid(z)) / M

    ga = np.zeros_like(a)
    gb = np.zeros_like(b)
    low = i0 < n
    # z picks x - a on the low side (d/da = -1), b - x on the high side (d/db = +1)
    np.add.at(ga, (k0[low], i0[low]), -gz[low])
    np.add.at(gb, (k0[~low], i0[~low] - n), gz[~low])
    return loss, ga, gb


def train_adam(ds, cfg: AdamConfig, K: int, seed: int,
               loss_trace: Optional[dict] = None) -> MpclModel:
    """One-against-all Adam on the module logits.

    Boxes start at k-means++ centroids (degenerate, lower = upper), then
    full-batch Adam with bias-corrected moments runs for cfg.epochs steps;
    after each step coordinates with a > b are swapped back into a valid box.
    Pass a dict as loss_trace to receive per-class loss curves.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    problems = class_problems(ds.X, ds.y, ds.class_count)
    X = np.asarray(ds.X, dtype=np.float64)
    modules = []
    for cp in problems:
        boxes = kmeanspp_init(cp.positives, K, _child_seed(seed, cp.class_id))
        a = np.stack([bx.lower for bx in boxes])
        b = np.stack([bx.upper for bx in boxes])
        is_pos = ds.y == cp.class_id
        ma = np.zeros_like(a)
        va = np.zeros_like(a)
        mb = np.zeros_like(b)
        vb = np.zeros_like(b)
        losses = []
        for t in range(1, cfg.epochs + 1):
            loss, ga, gb = bce_loss_and_grad(X, is_pos, a, b)
            losses.append(loss)
            ma = cfg.beta1 * ma + (1 - cfg.beta1) * ga
            va = cfg.beta2 * va + (1 - cfg.beta2) * ga * ga
            mb = cfg.beta1 * mb + (1 - cfg.beta1) * gb
            vb = cfg.beta2 * vb + (1 - cfg.beta2) * gb * gb
            c1 = 1 - cfg.beta1 ** t
            c2 = 1 - cfg.beta2 ** t
            a = a - cfg.learning_rate * (ma / c1) / (np.sqrt(va / c2) + cfg.eps_hat)
            b = b - cfg.learning_rate * (mb / c1) / (np.sqrt(vb / c2) + cfg.eps_hat)
            swap = a > b
            if swap.any():
                a2 = np.where(swap, b, a)
                b2 = np.where(swap, a, b)
                a, b = a2, b2
        if loss_trace is not None:
            loss_trace[cp.class_id] = losses
        modules.append(ClassModule(
            boxes=tuple(Hyperbox(a[k], b[k]) for k in range(K)),
            class_id=cp.class_id,
        ))
    return MpclModel(modules=tuple(modules), n_features=X.shape[1])
