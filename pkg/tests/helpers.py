"""Shared generators and oracles for randomized tests."""

import itertools

import numpy as np

from morphbox.core import ClassModule, Hyperbox, MpclModel
from morphbox.lp import LpProblem


def random_box(rng, n, scale=10.0):
    p = rng.uniform(-scale, scale, size=n)
    q = rng.uniform(-scale, scale, size=n)
    return Hyperbox(np.minimum(p, q), np.maximum(p, q))


def random_module(rng, n, K, class_id=1, scale=10.0):
    return ClassModule(boxes=tuple(random_box(rng, n, scale) for _ in range(K)),
                       class_id=class_id)


def random_model(rng, n, S, K, scale=10.0):
    return MpclModel(
        modules=tuple(random_module(rng, n, K, class_id=s, scale=scale)
                      for s in range(1, S + 1)),
        n_features=n,
    )


def lp(c, A, b, lower=None):
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float).reshape(len(b), len(c))
    b = np.asarray(b, dtype=float)
    if lower is None:
        lower = np.zeros(len(c))
    return LpProblem(c=c, A=A, b=b, var_lower=np.asarray(lower, dtype=float))


def vertex_enumeration_optimum(p: LpProblem):
    """Independent oracle: enumerate candidate vertices as intersections of
    V constraints drawn from rows plus active lower bounds, keep the feasible
    ones, and take the best objective.  Returns None when no vertex is
    feasible."""
    V = p.n_vars
    G = np.vstack([p.A, -np.eye(V)])
    h = np.concatenate([p.b, -p.var_lower])
    finite = np.isfinite(h)
    best = None
    for rows in itertools.combinations(range(G.shape[0]), V):
        rows = list(rows)
        if not finite[rows].all():
            continue
        M = G[rows]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, h[rows])
        if (G @ x <= h + 1e-8).all():
            obj = float(p.c @ x)
            if best is None or obj < best:
                best = obj
    return best


def random_bounded_lp(rng):
    """Random LP with x >= 0 and a simplex-cap row, so the feasible region is
    bounded and non-empty (origin feasible after sign fixing of b)."""
    V = int(rng.integers(1, 7))
    R = int(rng.integers(1, 10))
    A = rng.normal(size=(R, V)).round(3)
    b = np.abs(rng.normal(size=R)).round(3) + 0.1   # origin stays feasible
    cap = np.ones((1, V))
    A = np.vstack([A, cap])
    b = np.concatenate([b, [float(rng.uniform(1.0, 8.0))]])
    c = rng.normal(size=V).round(3)
    return lp(c, A, b)
