"""Dataset container, synthetic blob generator, CSV round-trip, splitting,
and feature standardization."""

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

_SIGMA_FLOOR = 1e-12


@dataclass(frozen=True)
class Dataset:
    """Feature matrix X (M x n) with integer labels 1..S.

    Labels must cover the contiguous range 1..S with no gaps; class_count is
    derived from the data at construction.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: Optional[tuple] = None

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.X, dtype=np.float64))
        y = np.ascontiguousarray(np.asarray(self.y, dtype=np.int64))
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("X must be a non-empty 2-D matrix")
        if y.shape != (X.shape[0],):
            raise ValueError("y must have one label per row of X")
        if not np.isfinite(X).all():
            raise ValueError("X contains NaN or infinity")
        S = int(y.max()) if y.size else 0
        if y.min() < 1 or set(np.unique(y)) != set(range(1, S + 1)):
            raise ValueError("labels must cover a contiguous range 1..S")
        if self.feature_names is not None:
            names = tuple(str(n) for n in self.feature_names)
            if len(names) != X.shape[1]:
                raise ValueError("feature_names length must match feature count")
            object.__setattr__(self, "feature_names", names)
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def class_count(self) -> int:
        return int(self.y.max())


@dataclass(frozen=True)
class Scaler:
    """Per-feature affine standardizer fitted on a training split."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.ascontiguousarray(np.asarray(self.mean, dtype=np.float64))
        std = np.ascontiguousarray(np.asarray(self.std, dtype=np.float64))
        if mean.ndim != 1 or mean.shape != std.shape:
            raise ValueError("mean and std must be matching vectors")
        if (std < _SIGMA_FLOOR).any():
            raise ValueError(f"std entries must be >= {_SIGMA_FLOOR}")
        mean.flags.writeable = False
        std.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.mean.shape[0]:
            raise ValueError(
                f"scaler fitted on {self.mean.shape[0]} features, got {X.shape[-1]}"
            )
        return (X - self.mean) / self.std

    def inverse(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.mean.shape[0]:
            raise ValueError(
                f"scaler fitted on {self.mean.shape[0]} features, got {X.shape[-1]}"
            )
        return X * self.std + self.mean


def fit_scaler(ds: Dataset) -> Scaler:
    mean = ds.X.mean(axis=0)
    std = ds.X.std(axis=0)
    return Scaler(mean=mean, std=np.maximum(std, _SIGMA_FLOOR))


def apply_scaler(ds: Dataset, sc: Scaler) -> Dataset:
    return Dataset(X=sc.transform(ds.X), y=ds.y, feature_names=ds.feature_names)


def make_blobs(n_samples: int, n_features: int, centers: int, cluster_std: float,
               n_classes: int, seed: int) -> Dataset:
    """Gaussian blobs around uniform centers in [-10, 10]^n.

    Centers are assigned to classes round-robin (center j belongs to class
    j mod n_classes, plus 1), and samples are spread near-equally over the
    centers: the first n_samples mod centers centers receive one extra.
    """
    if n_classes < 2:
        raise ValueError("n_classes must be >= 2")
    if centers < n_classes:
        raise ValueError("need at least one center per class")
    if n_samples < centers:
        raise ValueError("need at least one sample per center")
    if n_features < 1:
        raise ValueError("n_features must be >= 1")
    if cluster_std < 0:
        raise ValueError("cluster_std must be >= 0")
    rng = np.random.default_rng(seed)
    C = rng.uniform(-10.0, 10.0, size=(centers, n_features))
    base, extra = divmod(n_samples, centers)
    counts = np.full(centers, base, dtype=np.int64)
    counts[:extra] += 1
    blocks = []
    labels = []
    for j in range(centers):
        pts = C[j] + cluster_std * rng.standard_normal((counts[j], n_features))
        blocks.append(pts)
        labels.append(np.full(counts[j], (j % n_classes) + 1, dtype=np.int64))
    return Dataset(X=np.vstack(blocks), y=np.concatenate(labels))


def save_csv(ds: Dataset, path, label_column: str = "label") -> None:
    """Write header + rows; floats at 17 significant digits so a reload is
    bit-exact."""
    names = ds.feature_names or tuple(f"x{i + 1}" for i in range(ds.n_features))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(names) + [label_column])
        for row, lab in zip(ds.X, ds.y):
            w.writerow([f"{v:.17g}" for v in row] + [int(lab)])


def load_csv(path, label_column: str = "label") -> Dataset:
    """Parse a feature CSV; cell errors are reported with 1-based file row
    and column numbers."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise ValueError(f"{path}: no column named {label_column!r} in header")
        lab_idx = header.index(label_column)
        feat_idx = [i for i in range(len(header)) if i != lab_idx]
        feats, labs = [], []
        for rno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: row {rno} has {len(row)} cells, expected {len(header)}"
                )
            vals = np.empty(len(feat_idx))
            for out_i, i in enumerate(feat_idx):
                try:
                    vals[out_i] = float(row[i])
                except ValueError:
                    raise ValueError(
                        f"{path}: non-numeric value {row[i]!r} at row {rno}, column {i + 1}"
                    ) from None
            try:
                labs.append(int(row[lab_idx]))
            except ValueError:
                raise ValueError(
                    f"{path}: non-integer label {row[lab_idx]!r} at row {rno}, column {lab_idx + 1}"
                ) from None
            feats.append(vals)
    if not feats:
        raise ValueError(f"{path}: no data rows")
    names = tuple(header[i] for i in feat_idx)
    return Dataset(X=np.vstack(feats), y=np.array(labs), feature_names=names)


def _stratified_test_counts(class_sizes: np.ndarray, test_fraction: float) -> np.ndarray:
    """Largest-remainder allocation of the global test count over classes.

    Keeps each class within one sample of its proportional share, forces at
    least one sample per class on each side, and makes the overall test size
    hit round(test_fraction * M) whenever the per-class bounds permit."""
    m = class_sizes.astype(np.int64)
    total = int(np.floor(test_fraction * m.sum() + 0.5))
    total = min(max(total, m.size), int(m.sum()) - m.size)
    shares = test_fraction * m
    counts = np.clip(np.floor(shares).astype(np.int64), 1, m - 1)
    frac = shares - np.floor(shares)
    order = np.lexsort((np.arange(m.size), -frac))  # big remainder first, low class wins ties
    while counts.sum() < total:
        moved = False
        for s in order:
            if counts[s] < m[s] - 1:
                counts[s] += 1
                moved = True
                break
        if not moved:
            break
    while counts.sum() > total:
        moved = False
        for s in order[::-1]:
            if counts[s] > 1:
                counts[s] -= 1
                moved = True
                break
        if not moved:
            break
    return counts


def train_test_split(ds: Dataset, test_fraction: float = 0.25, seed: int = 0,
                     stratified: bool = True) -> tuple[Dataset, Dataset]:
    """Seeded disjoint split.  Stratified mode keeps per-class proportions
    within one sample and guarantees every class appears on both sides,
    which requires at least 2 samples per class."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    if stratified:
        sizes = np.array([(ds.y == s).sum()
                          for s in range(1, ds.class_count + 1)])
        for s, sz in enumerate(sizes, start=1):
            if sz < 2:
                raise ValueError(
                    f"class {s} has {sz} sample(s); stratified split needs >= 2"
                )
        counts = _stratified_test_counts(sizes, test_fraction)
        test_idx = []
        train_idx = []
        for s in range(1, ds.class_count + 1):
            idx = np.flatnonzero(ds.y == s)
            perm = rng.permutation(idx)
            n_test = int(counts[s - 1])
            test_idx.append(perm[:n_test])
            train_idx.append(perm[n_test:])
        test_idx = np.sort(np.concatenate(test_idx))
        train_idx = np.sort(np.concatenate(train_idx))
    else:
        perm = rng.permutation(ds.n_samples)
        # floor(x + 0.5) so .5 boundaries round up, matching the stratified total
        n_test = int(np.floor(test_fraction * ds.n_samples + 0.5))
        n_test = min(max(n_test, 1), ds.n_samples - 1)
        test_idx = np.sort(perm[:n_test])
        train_idx = np.sort(perm[n_test:])
    mk = lambda idx: Dataset(X=ds.X[idx], y=ds.y[idx], feature_names=ds.feature_names)
    return mk(train_idx), mk(test_idx)
