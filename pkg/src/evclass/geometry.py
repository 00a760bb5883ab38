"""Dense LP solver and finite convex-geometry helpers.

The solver is a two-phase tableau simplex using Bland's rule, meant for
problems with at most a few hundred rows. Results are deterministic: the
entering variable is always the lowest eligible index and ratio-test ties
are broken by the lowest basic index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .config import get_tolerances
from .exceptions import NotInHullError

__all__ = [
    "LpProblem",
    "LpResult",
    "PointCloud",
    "RelintResult",
    "solve_lp",
    "caratheodory_weights",
    "zero_in_relint",
    "independent_rows",
    "affine_dimension",
]

_MAX_PIVOTS = 200_000


def _matrix(a, ncols: int, name: str) -> np.ndarray:
    if a is None:
        return np.zeros((0, ncols))
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return np.zeros((0, ncols))
    if a.shape[1] != ncols:
        raise ValueError(f"{name} has {a.shape[1]} columns, objective has {ncols}")
    return a


def _rhs(b, nrows: int, name: str) -> np.ndarray:
    if b is None:
        b = np.zeros(0)
    b = np.asarray(b, dtype=float).ravel()
    if b.shape[0] != nrows:
        raise ValueError(f"{name} has length {b.shape[0]}, expected {nrows}")
    return b


@dataclass
class LpProblem:
    """maximize c @ x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= lb.

    ``lb`` defaults to zeros; entries may be ``-inf`` for free variables.
    """

    c: np.ndarray
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    lb: Optional[np.ndarray] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.shape[0]
        if n == 0:
            raise ValueError("empty objective")
        self.A_eq = _matrix(self.A_eq, n, "A_eq")
        self.b_eq = _rhs(self.b_eq, self.A_eq.shape[0], "b_eq")
        self.A_ub = _matrix(self.A_ub, n, "A_ub")
        self.b_ub = _rhs(self.b_ub, self.A_ub.shape[0], "b_ub")
        if self.lb is None:
            self.lb = np.zeros(n)
        else:
            self.lb = np.broadcast_to(np.asarray(self.lb, dtype=float), (n,)).copy()
        if np.any(np.isnan(self.lb)) or np.any(self.lb == np.inf):
            raise ValueError("lower bounds must be finite or -inf")

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True)
class LpResult:
    status: Literal["optimal", "infeasible", "unbounded"]
    value: float = float("nan")
    x: Optional[np.ndarray] = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _pivot(T: np.ndarray, obj: np.ndarray, basis: np.ndarray, r: int, j: int) -> None:
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    obj -= obj[j] * T[r]
    basis[r] = j


def _run_simplex(T, obj, basis, n_cols, tol):
    """Bland's-rule iterations on a feasible tableau. Returns 'optimal' or 'unbounded'."""
    rc_tol = tol * max(1.0, float(np.abs(obj[:n_cols]).max(initial=0.0)))
    for _ in range(_MAX_PIVOTS):
        eligible = np.flatnonzero(obj[:n_cols] > rc_tol)
        if eligible.size == 0:
            return "optimal"
        j = int(eligible[0])
        a = T[:, j]
        rows = np.flatnonzero(a > tol)
        if rows.size == 0:
            return "unbounded"
        ratios = T[rows, -1] / a[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * (1.0 + abs(best))]
        r = int(ties[np.argmin(basis[ties])])
        _pivot(T, obj, basis, r, j)
    raise RuntimeError("simplex pivot limit exceeded")


def solve_lp(problem: LpProblem) -> LpResult:
    """Solve a small dense LP exactly enough for geometry decisions.

    Infeasible and unbounded problems are reported through ``status``;
    only malformed input raises.
    """
    tol = get_tolerances().pivot
    feas = get_tolerances().feasibility
    n = problem.n_vars
    lb = problem.lb

    # x = shift + y_pos - y_neg with y >= 0; only free variables get a y_neg column.
    finite = np.isfinite(lb)
    shift = np.where(finite, lb, 0.0)
    free = np.flatnonzero(~finite)
    cols = np.concatenate([np.arange(n), free])
    sign = np.concatenate([np.ones(n), -np.ones(free.size)])
    n_y = cols.size

    A_eq = problem.A_eq[:, cols] * sign
    b_eq = problem.b_eq - problem.A_eq @ shift
    A_ub = problem.A_ub[:, cols] * sign
    b_ub = problem.b_ub - problem.A_ub @ shift
    m_e, m_u = A_eq.shape[0], A_ub.shape[0]
    m = m_e + m_u

    A = np.zeros((m, n_y + m_u))
    A[:m_e, :n_y] = A_eq
    A[m_e:, :n_y] = A_ub
    A[m_e:, n_y:] = np.eye(m_u)
    b = np.concatenate([b_eq, b_ub])
    c = np.concatenate([problem.c[cols] * sign, np.zeros(m_u)])

    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # Slack columns can start basic on non-negated inequality rows.
    needs_art = np.ones(m, dtype=bool)
    needs_art[m_e:] = neg[m_e:]
    art_rows = np.flatnonzero(needs_art)
    n_struct = n_y + m_u
    n_art = art_rows.size

    T = np.zeros((m, n_struct + n_art + 1))
    T[:, :n_struct] = A
    T[:, -1] = b
    basis = np.empty(m, dtype=int)
    basis[m_e:] = n_y + np.arange(m_u)
    for a, r in enumerate(art_rows):
        T[r, n_struct + a] = 1.0
        basis[r] = n_struct + a

    scale = max(1.0, float(np.abs(b).max(initial=0.0)))

    if n_art:
        obj = np.zeros(n_struct + n_art + 1)
        obj[n_struct:n_struct + n_art] = -1.0
        obj += T[art_rows].sum(axis=0)
        _run_simplex(T, obj, basis, n_struct + n_art, tol)
        if -obj[-1] < -feas * scale:
            return LpResult("infeasible")
        keep = np.ones(T.shape[0], dtype=bool)
        for r in range(T.shape[0]):
            if basis[r] < n_struct:
                continue
            cand = np.flatnonzero(np.abs(T[r, :n_struct]) > tol)
            if cand.size:
                _pivot(T, obj, basis, r, int(cand[0]))
            else:
                keep[r] = False
        T = np.delete(T[keep], np.s_[n_struct:n_struct + n_art], axis=1)
        basis = basis[keep]

    obj = np.zeros(n_struct + 1)
    obj[:n_struct] = c
    cb = obj[basis].copy()
    obj -= cb @ T

    status = _run_simplex(T, obj, basis, n_struct, tol)
    if status == "unbounded":
        return LpResult("unbounded")

    y = np.zeros(n_struct)
    y[basis] = T[:, -1]
    y = np.maximum(y, 0.0)
    x = shift.copy()
    np.add.at(x, cols, sign * y[:n_y])
    return LpResult("optimal", float(problem.c @ x), x)


@dataclass(frozen=True)
class PointCloud:
    """A finite set of points in R^m stored as rows."""

    points: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        if p.ndim != 2 or p.shape[0] == 0:
            raise ValueError("point cloud must be a non-empty 2-D array")
        object.__setattr__(self, "points", p)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]


def _cloud(cloud) -> np.ndarray:
    return cloud.points if isinstance(cloud, PointCloud) else PointCloud(cloud).points


def caratheodory_weights(cloud, target) -> np.ndarray:
    """Convex weights reproducing ``target`` with at most m+1 non-zeros.

    Raises
    ------
    NotInHullError
        If ``target`` is outside the convex hull of the cloud.
    """
    P = _cloud(cloud)
    k, m = P.shape
    target = np.asarray(target, dtype=float).ravel()
    if target.shape[0] != m:
        raise ValueError(f"target has dimension {target.shape[0]}, cloud has {m}")
    A = np.vstack([P.T, np.ones(k)])
    b = np.concatenate([target, [1.0]])
    res = solve_lp(LpProblem(np.zeros(k), A_eq=A, b_eq=b))
    if not res.optimal:
        raise NotInHullError("target is not in the convex hull")
    w = res.x.copy()
    thr = get_tolerances().rank
    w[w < thr] = 0.0

    # Carathéodory reduction: move along a null direction until a weight vanishes.
    while np.count_nonzero(w) > m + 1:
        S = np.flatnonzero(w)
        _, _, vt = np.linalg.svd(A[:, S])
        v = vt[-1]
        if not np.any(v > thr):
            v = -v
        pos = v > thr
        theta = np.min(w[S][pos] / v[pos])
        w[S] = w[S] - theta * v
        w[S[np.argmin(np.where(pos, w[S], np.inf))]] = 0.0
        w[w < thr] = 0.0
    return w / w.sum()


@dataclass(frozen=True)
class RelintResult:
    status: Literal["yes", "boundary", "outside"]
    min_weight: float = 0.0

    @property
    def inside(self) -> bool:
        return self.status == "yes"


def zero_in_relint(cloud) -> RelintResult:
    """Decide whether the origin lies in the relative interior of conv(cloud).

    Solves ``max eps`` over convex weights ``w_i = eps + v_i`` (``eps, v >= 0``)
    representing the origin. A strictly positive optimum is a full-support
    representation, which for finite sets is equivalent to relint membership.
    """
    P = _cloud(cloud)
    k, m = P.shape
    # variables: eps >= 0, v_1..v_k >= 0; eps = 0 is feasible iff 0 is in the hull
    A = np.zeros((m + 1, k + 1))
    A[:m, 0] = P.sum(axis=0)
    A[:m, 1:] = P.T
    A[m, 0] = k
    A[m, 1:] = 1.0
    b = np.zeros(m + 1)
    b[m] = 1.0
    c = np.zeros(k + 1)
    c[0] = 1.0
    res = solve_lp(LpProblem(c, A_eq=A, b_eq=b))
    if not res.optimal:
        return RelintResult("outside")
    eps = res.value
    if eps > get_tolerances().relint:
        return RelintResult("yes", eps)
    return RelintResult("boundary", max(eps, 0.0))


def independent_rows(matrix, tol: Optional[float] = None) -> list[int]:
    """Greedy maximal linearly independent subset of rows, lowest index first."""
    X = np.atleast_2d(np.asarray(matrix, dtype=float))
    if X.size == 0:
        raise ValueError("empty matrix")
    tol = get_tolerances().rank if tol is None else tol
    basis: list[np.ndarray] = []
    keep: list[int] = []
    for i, row in enumerate(X):
        r = row.copy()
        for _ in range(2):  # re-orthogonalise once for stability
            for q in basis:
                r -= (q @ r) * q
        norm = np.linalg.norm(r)
        if norm > tol * max(1.0, np.linalg.norm(row)):
            basis.append(r / norm)
            keep.append(i)
    return keep


def affine_dimension(cloud) -> int:
    P = _cloud(cloud)
    if P.shape[0] == 1:
        return 0
    diffs = P[1:] - P[0]
    if not np.any(diffs):
        return 0
    return len(independent_rows(diffs))
