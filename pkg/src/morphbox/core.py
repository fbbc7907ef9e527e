"""Hyperbox arithmetic and the competitive-layer classifier model.

A class module is a union of axis-aligned hyperboxes; its output at a point
is the largest box activation, which is non-negative exactly when the point
lies inside at least one box.  The classifier assigns the label of the module
with the largest output (ties go to the lowest class index).

The module output is a difference of two convex functions of the box
parameters, ``dc_f - dc_g``; that decomposition is what the iterative trainer
linearizes, so both pieces live here next to the exact forward computation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Hyperbox",
    "ClassModule",
    "MpclModel",
    "psi",
    "block_output",
    "module_output",
    "dc_f",
    "dc_g",
    "classify",
    "predict_batch",
]


def _as_readonly_vector(value, name: str) -> np.ndarray:
    arr = np.array(value, dtype=np.float64, copy=True)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a 1-D vector with at least one entry")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Hyperbox:
    """Axis-aligned box ``[lower, upper]``; degenerate point boxes are allowed."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _as_readonly_vector(self.lower, "lower")
        hi = _as_readonly_vector(self.upper, "upper")
        if lo.shape != hi.shape:
            raise ValueError("lower and upper must have the same length")
        if np.any(lo > hi):
            raise ValueError("lower must not exceed upper in any coordinate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @classmethod
    def point(cls, center) -> "Hyperbox":
        """Zero-volume box at ``center`` (both vertices coincide)."""
        return cls(center, center)


@dataclass(frozen=True)
class ClassModule:
    """Non-empty family of hyperboxes voting for one class label."""

    boxes: tuple[Hyperbox, ...]
    class_id: int

    def __post_init__(self):
        boxes = tuple(self.boxes)
        if not boxes:
            raise ValueError("a class module needs at least one hyperbox")
        dim = boxes[0].dim
        if any(b.dim != dim for b in boxes):
            raise ValueError("all boxes in a module must share one dimension")
        object.__setattr__(self, "boxes", boxes)

    @property
    def dim(self) -> int:
        return self.boxes[0].dim

    @property
    def n_boxes(self) -> int:
        return len(self.boxes)


@dataclass(frozen=True)
class MpclModel:
    """Ordered class modules plus winner-take-all output.

    ``modules[s-1].class_id == s`` for s = 1..S; ``warnings`` carries
    non-fatal trainer diagnostics (e.g. an impure leftover box).
    """

    modules: tuple[ClassModule, ...]
    n_features: int
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        modules = tuple(self.modules)
        if len(modules) < 2:
            raise ValueError("a model needs at least two class modules")
        for pos, mod in enumerate(modules, start=1):
            if mod.class_id != pos:
                raise ValueError(
                    f"module at position {pos} has class_id {mod.class_id}; "
                    f"class ids must be 1..{len(modules)} in order"
                )
            if mod.dim != self.n_features:
                raise ValueError(
                    f"class {pos} boxes have dimension {mod.dim}, "
                    f"expected {self.n_features}"
                )
        object.__setattr__(self, "modules", modules)
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def n_classes(self) -> int:
        return len(self.modules)


def _check_dim(x: np.ndarray, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != dim:
        raise ValueError(f"input has dimension {x.size}, expected {dim}")
    return x


def psi(x, box: Hyperbox) -> float:
    """Largest signed violation of ``box`` at ``x``.

    Maximum of the 2n values ``lower - x`` and ``x - upper``: convex in the
    box parameters for fixed x, and equal to ``-block_output(x, box)``.
    """
    x = _check_dim(x, box.dim)
    return float(max(np.max(box.lower - x), np.max(x - box.upper)))


def block_output(x, box: Hyperbox) -> float:
    """Box activation: minimum of ``x - lower`` and ``upper - x`` over all
    coordinates.  Non-negative iff ``x`` lies inside the box."""
    x = _check_dim(x, box.dim)
    return float(min(np.min(x - box.lower), np.min(box.upper - x)))


def module_output(x, mod: ClassModule) -> float:
    """Largest box activation within the module (the class score)."""
    x = _check_dim(x, mod.dim)
    return max(block_output(x, b) for b in mod.boxes)


def _psis(x: np.ndarray, mod: ClassModule) -> np.ndarray:
    return np.array([psi(x, b) for b in mod.boxes])


def dc_f(x, mod: ClassModule) -> float:
    """Convex part of the module output: max over k of the psi-sum that
    leaves box k out.  Zero for a single-box module (empty sum)."""
    x = _check_dim(x, mod.dim)
    vals = _psis(x, mod)
    return float(np.max(np.sum(vals) - vals)) if mod.n_boxes > 1 else 0.0


def dc_g(x, mod: ClassModule) -> float:
    """Concave-side convex function: sum of psi over every box.  Satisfies
    ``dc_f - dc_g == module_output`` exactly."""
    x = _check_dim(x, mod.dim)
    if mod.n_boxes == 1:
        return psi(x, mod.boxes[0])
    return float(np.sum(_psis(x, mod)))


def classify(x, model: MpclModel) -> int:
    """Class label of the module with the largest output; exact ties resolve
    to the lowest class index."""
    x = _check_dim(x, model.n_features)
    outputs = [module_output(x, mod) for mod in model.modules]
    return int(np.argmax(outputs)) + 1


def predict_batch(X, model: MpclModel) -> np.ndarray:
    """Rowwise :func:`classify`, vectorized over the whole matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D matrix")
    if X.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    if X.shape[1] != model.n_features:
        raise ValueError(
            f"X has {X.shape[1]} columns, model expects {model.n_features}"
        )
    scores = np.empty((X.shape[0], model.n_classes))
    for j, mod in enumerate(model.modules):
        acc = np.full(X.shape[0], -np.inf)
        for box in mod.boxes:
            vals = np.minimum(
                np.min(X - box.lower, axis=1), np.min(box.upper - X, axis=1)
            )
            np.maximum(acc, vals, out=acc)
        scores[:, j] = acc
    return np.argmax(scores, axis=1).astype(np.int64) + 1
