"""Dense linear programming by two-phase primal simplex.

Problems are stated as: minimize c.x subject to A.x <= b and x >= var_lower,
where a lower bound of -inf marks a free variable.  The solver always uses
Bland's smallest-index rule, so results are deterministic and cycling is
impossible; optimal reports are vertex solutions.

Two interchangeable pivot kernels exist: a numba-compiled one and a plain
numpy one (see _backend).  Both reduce the problem to standard form here:
bounded variables are shifted to have lower bound 0, free variables are split
into positive and negative parts, and a single artificial column covers all
rows with negative right-hand side in phase 1.
"""

import io
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from morphbox._backend import resolve_backend


class LpStatus(Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


class PivotLimitError(RuntimeError):
    """Raised when the pivot budget runs out before a status is reached."""


class NumericalBreakdownError(ArithmeticError):
    """Raised when the basis bookkeeping loses too much precision to continue."""


def _readonly(a):
    a = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class LpProblem:
    """minimize c.x  s.t.  A.x <= b,  x >= var_lower (componentwise).

    var_lower entries may be -inf (free variable).  A is dense row-major,
    shape (R, V); c has length V, b length R.
    """

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    var_lower: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "c", _readonly(self.c))
        object.__setattr__(self, "A", _readonly(self.A))
        object.__setattr__(self, "b", _readonly(self.b))
        object.__setattr__(self, "var_lower", _readonly(self.var_lower))
        if self.c.ndim != 1 or self.b.ndim != 1 or self.A.ndim != 2:
            raise ValueError("c and b must be vectors, A a matrix")
        nr, nv = self.A.shape
        if nv != self.c.shape[0] or nr != self.b.shape[0]:
            raise ValueError(
                f"inconsistent shapes: A is {nr}x{nv}, |c|={self.c.shape[0]}, |b|={self.b.shape[0]}"
            )
        if nv < 1:
            raise ValueError("at least one variable required")
        if self.var_lower.shape != (nv,):
            raise ValueError("var_lower must have one entry per variable")
        if not (np.isfinite(self.c).all() and np.isfinite(self.A).all() and np.isfinite(self.b).all()):
            raise ValueError("c, A, b must be finite")
        vl = self.var_lower
        if np.isnan(vl).any() or np.isposinf(vl).any():
            raise ValueError("var_lower entries must be finite or -inf")

    @property
    def n_vars(self) -> int:
        return self.A.shape[1]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    x: np.ndarray | None
    objective: float | None
    iterations: int


@dataclass(frozen=True)
class SimplexOptions:
    feas_tol: float = 1e-7
    max_pivots: int = 200_000

    def __post_init__(self):
        if not (self.feas_tol > 0.0):
            raise ValueError("feas_tol must be positive")
        if self.max_pivots < 1:
            raise ValueError("max_pivots must be at least 1")


# Kernel exit codes shared by both backends.
CODE_OPTIMAL = 0
CODE_INFEASIBLE = 1
CODE_UNBOUNDED = 2
CODE_PIVOT_LIMIT = 3
CODE_NUMERICAL = 4


def _standardize(p: LpProblem):
    """Reduce to: minimize c_int.u  s.t.  A_int.u <= b2,  u >= 0.

    Returns (A_int, b2, c_int, c_phase1, art_id, col_orig, col_sign, shift).
    Column order: the V original columns (positive part), then one negated
    column per free variable in ascending index, then possibly one artificial
    column whose entries are -1 on rows with b2 < 0.
    """
    V = p.n_vars
    free = np.isneginf(p.var_lower)
    shift = np.where(free, 0.0, p.var_lower)
    b2 = p.b - p.A @ shift
    free_idx = np.flatnonzero(free)
    col_orig = np.concatenate([np.arange(V, dtype=np.int64), free_idx.astype(np.int64)])
    col_sign = np.concatenate([np.ones(V), -np.ones(free_idx.size)])
    A_int = p.A[:, col_orig] * col_sign
    c_int = p.c[col_orig] * col_sign
    art_id = -1
    if b2.size and b2.min() < 0.0:
        art_id = A_int.shape[1]
        art_col = np.where(b2 < 0.0, -1.0, 0.0)
        A_int = np.hstack([A_int, art_col[:, None]])
        c_int = np.append(c_int, 0.0)
    c_phase1 = np.zeros_like(c_int)
    if art_id >= 0:
        c_phase1[art_id] = 1.0
    return np.ascontiguousarray(A_int), b2, c_int, c_phase1, art_id, col_orig, col_sign, shift


def _to_csc(A):
    """Column-compressed copy of a dense matrix (indices sorted within columns)."""
    cols, rows = np.nonzero(A.T)
    vals = A[rows, cols]
    counts = np.bincount(cols, minlength=A.shape[1])
    indptr = np.zeros(A.shape[1] + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, rows.astype(np.int64), vals.astype(np.float64)


def _to_csr(A):
    rows, cols = np.nonzero(A)
    vals = A[rows, cols]
    counts = np.bincount(rows, minlength=A.shape[0])
    indptr = np.zeros(A.shape[0] + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, cols.astype(np.int64), vals.astype(np.float64)


def solve(problem: LpProblem, options: SimplexOptions | None = None, backend: str | None = None) -> LpSolution:
    """Solve the LP; statuses Infeasible/Unbounded are reported, never raised.

    Raises PivotLimitError when options.max_pivots is exhausted and
    NumericalBreakdownError on irrecoverable loss of precision.
    """
    opts = options or SimplexOptions()
    name = resolve_backend(backend)
    A_int, b2, c_int, c_phase1, art_id, col_orig, col_sign, shift = _standardize(problem)

    try:
        if name == "numba":
            from morphbox._simplex_nb import solve_kernel_nb

            Ap, Ai, Ax = _to_csc(A_int)
            Bp, Bj, Bx = _to_csr(A_int)
            code, pivots, u = solve_kernel_nb(
                Ap, Ai, Ax, Bp, Bj, Bx,
                np.int64(A_int.shape[0]), np.int64(A_int.shape[1]),
                np.ascontiguousarray(b2), np.ascontiguousarray(c_int),
                np.ascontiguousarray(c_phase1), np.int64(art_id),
                np.float64(opts.feas_tol), np.int64(opts.max_pivots),
            )
            code, pivots = int(code), int(pivots)
        else:
            from morphbox._simplex_np import solve_kernel_np

            code, pivots, u = solve_kernel_np(
                A_int, b2, c_int, c_phase1, art_id, opts.feas_tol, opts.max_pivots
            )
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdownError(f"singular working basis: {exc}") from exc

    if code == CODE_PIVOT_LIMIT:
        raise PivotLimitError(f"simplex exceeded max_pivots={opts.max_pivots}")
    if code == CODE_NUMERICAL:
        raise NumericalBreakdownError("simplex basis update lost precision; problem may be badly scaled")
    if code == CODE_INFEASIBLE:
        return LpSolution(LpStatus.INFEASIBLE, None, None, pivots)
    if code == CODE_UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED, None, None, pivots)

    ncols0 = col_orig.shape[0]
    x = shift.copy()
    np.add.at(x, col_orig, col_sign * u[:ncols0])
    objective = float(problem.c @ x)
    x.flags.writeable = False
    return LpSolution(LpStatus.OPTIMAL, x, objective, pivots)


def check_solution(problem: LpProblem, solution: LpSolution, tol: float) -> bool:
    """True iff an Optimal solution is primal-feasible within tol and its
    stored objective matches c.x within tol."""
    if solution.status is not LpStatus.OPTIMAL or solution.x is None:
        return False
    x = solution.x
    if x.shape != (problem.n_vars,) or not np.isfinite(x).all():
        return False
    if problem.n_rows and np.max(problem.A @ x - problem.b) > tol:
        return False
    bounded = ~np.isneginf(problem.var_lower)
    if bounded.any() and np.max(problem.var_lower[bounded] - x[bounded]) > tol:
        return False
    return abs(float(problem.c @ x) - float(solution.objective)) <= tol


def dump_problem(problem: LpProblem, target) -> None:
    """Write the problem to a text file for external cross-checking.

    Format (fixed-point, %.12f): a header line, the objective row, one
    constraint per line as "a_1 ... a_V <= b", then one bound per line
    ("free" for unbounded variables).  `target` is a path or a text stream.
    """

    def fmt(v):
        return f"{v:.12f}"

    def write(fh):
        fh.write(f"# lp dump v1 rows={problem.n_rows} vars={problem.n_vars}\n")
        fh.write("minimize\n")
        fh.write(" ".join(fmt(v) for v in problem.c) + "\n")
        fh.write("subject_to\n")
        for r in range(problem.n_rows):
            row = " ".join(fmt(v) for v in problem.A[r])
            fh.write(f"{row} <= {fmt(problem.b[r])}\n")
        fh.write("bounds\n")
        for lb in problem.var_lower:
            fh.write(("free" if np.isneginf(lb) else fmt(lb)) + "\n")

    if isinstance(target, io.TextIOBase):
        write(target)
    else:
        with open(target, "w", encoding="utf-8") as fh:
            write(fh)
