"""Dual e-class: affine e-variables ``1 - lam . phi`` that stay non-negative.

Also contains the finite-grid optimality oracle: vertex enumeration of the
hypothesis polytope, a sequential-LP construction of a maximal e-variable
dominating a given one, and a least-squares check that the result is affine
in the constraint.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import get_tolerances
from .exceptions import NotAnEVariableError, NotProperError
from .geometry import LpProblem, independent_rows, solve_lp
from .hypothesis import Classification, Hypothesis

__all__ = [
    "LambdaVector",
    "TabulatedEVariable",
    "DualFit",
    "lambda_feasible",
    "evaluate_e",
    "lambda_interval",
    "lambda_interval_unit",
    "heavy_tail_feasible",
    "grid_support_function",
    "enumerate_vertices",
    "maximal_majorizer",
    "coordinate_maxima",
    "verify_in_dual_class",
]

MAX_ORACLE_POINTS = 12
MAX_ORACLE_COMPONENTS = 3


def _vec(v) -> np.ndarray:
    return np.atleast_1d(np.asarray(v, dtype=float)).ravel()


@dataclass(frozen=True)
class LambdaVector:
    """Dual parameter; the e-variable is ``1 - tight . phi' - slack . phi''``."""

    lam_tight: np.ndarray
    lam_slack: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        t, s = _vec(self.lam_tight), _vec(self.lam_slack)
        if np.any(s < 0):
            raise ValueError("slack multipliers must be non-negative")
        object.__setattr__(self, "lam_tight", t)
        object.__setattr__(self, "lam_slack", s)

    @classmethod
    def zeros(cls, m_tight: int, m_slack: int = 0) -> "LambdaVector":
        return cls(np.zeros(m_tight), np.zeros(m_slack))

    @classmethod
    def from_flat(cls, theta, m_tight: int) -> "LambdaVector":
        theta = _vec(theta)
        return cls(theta[:m_tight], theta[m_tight:])

    @property
    def flat(self) -> np.ndarray:
        return np.concatenate([self.lam_tight, self.lam_slack])

    def __len__(self) -> int:
        return self.lam_tight.size + self.lam_slack.size


@dataclass(frozen=True)
class TabulatedEVariable:
    values: np.ndarray
    lam: Optional[LambdaVector] = None

    def __post_init__(self):
        v = _vec(self.values)
        if np.any(v < 0):
            raise ValueError("e-variable values must be non-negative")
        object.__setattr__(self, "values", v)


def _check_dims(lam: LambdaVector, hyp: Hypothesis) -> None:
    if lam.lam_tight.size != hyp.m_tight or lam.lam_slack.size != hyp.m_slack:
        raise ValueError(
            f"lambda has shape ({lam.lam_tight.size}, {lam.lam_slack.size}), "
            f"constraint has ({hyp.m_tight}, {hyp.m_slack})")


def heavy_tail_feasible(alpha: float, beta: float, mu: float, tol: float = 0.0) -> bool:
    """Whether ``1 + alpha (x - mu) + beta (x^2 - 1) >= 0`` on all of R."""
    if beta < -tol:
        return False
    return alpha * alpha + 4 * mu * alpha * beta + 4 * beta * beta - 4 * beta <= tol


def lambda_interval(mu: float, lo: float = 0.0, hi: float = 1.0) -> tuple[float, float]:
    """Feasible bets for the mean-``mu`` hypothesis on ``[lo, hi]``."""
    if not lo < mu < hi:
        raise ValueError(f"mu={mu} must lie strictly inside ({lo}, {hi})")
    return 1.0 / (mu - hi), 1.0 / (mu - lo)


def lambda_interval_unit(mu: float) -> tuple[float, float]:
    return lambda_interval(mu, 0.0, 1.0)


def lambda_feasible(lam: LambdaVector, hyp: Hypothesis, tol: Optional[float] = None) -> bool:
    """Whether ``1 - lam . phi`` is non-negative on the sample space.

    Registered closed forms are used in place of the grid when available.
    """
    _check_dims(lam, hyp)
    tol = get_tolerances().feasibility if tol is None else tol
    if np.any(lam.lam_slack < 0):
        return False
    cf = hyp.closed_form
    if cf is not None and cf.kind == "interval_mean":
        th = float(lam.lam_tight[0])
        edge = cf.lo if th >= 0 else cf.hi
        return th * (cf.mu - edge) <= 1.0 + tol
    if cf is not None and cf.kind == "heavy_tail":
        return heavy_tail_feasible(float(lam.lam_tight[0]), float(lam.lam_slack[0]), cf.mu, tol)
    if hyp.n_params == 0:
        return True
    return float(np.max(hyp.table @ lam.flat)) <= 1.0 + tol


def evaluate_e(lam: LambdaVector, hyp: Hypothesis, x) -> float:
    return 1.0 - float(lam.flat @ hyp.phi(x))


def grid_support_function(hyp: Hypothesis, direction) -> float:
    """``max direction . lam`` over lambdas feasible on the grid (inf if unbounded)."""
    d = _vec(direction)
    p = hyp.n_params
    if d.size != p:
        raise ValueError("direction has wrong length")
    lb = np.concatenate([np.full(hyp.m_tight, -np.inf), np.zeros(hyp.m_slack)])
    res = solve_lp(LpProblem(d, A_ub=hyp.table, b_ub=np.ones(len(hyp.grid)), lb=lb))
    if res.status == "unbounded":
        return math.inf
    return res.value


def _oracle_checks(hyp: Hypothesis) -> None:
    if len(hyp.grid) > MAX_ORACLE_POINTS:
        raise ValueError(f"oracle limited to {MAX_ORACLE_POINTS} grid points")
    if hyp.m_slack:
        raise ValueError("oracle supports tight constraints only")
    if hyp.m_tight > MAX_ORACLE_COMPONENTS:
        raise ValueError(f"oracle limited to {MAX_ORACLE_COMPONENTS} constraint components")


def enumerate_vertices(hyp: Hypothesis) -> np.ndarray:
    """Vertices of the hypothesis polytope as rows of probability weights.

    Enumerates basic feasible solutions of ``w >= 0, sum w = 1,
    table' w = 0``. Rows are deduplicated and sorted lexicographically.
    """
    _oracle_checks(hyp)
    d = len(hyp.grid)
    A = np.vstack([np.ones((1, d)), hyp.table.T])
    b = np.zeros(A.shape[0])
    b[0] = 1.0
    rows = independent_rows(np.hstack([A, b[:, None]]))
    A, b = A[rows], b[rows]
    r = A.shape[0]
    tol = get_tolerances().feasibility
    found: list[np.ndarray] = []
    for cols in itertools.combinations(range(d), r):
        B = A[:, cols]
        if np.linalg.matrix_rank(B, tol=get_tolerances().rank * max(1.0, np.abs(B).max())) < r:
            continue
        wb = np.linalg.solve(B, b)
        if np.any(wb < -tol):
            continue
        w = np.zeros(d)
        w[list(cols)] = np.maximum(wb, 0.0)
        if np.max(np.abs(A @ w - b)) > tol:
            continue
        if not any(np.max(np.abs(w - v)) <= tol for v in found):
            found.append(w)
    if not found:
        return np.zeros((0, d))
    V = np.array(found)
    order = np.lexsort(V.T[::-1])
    return V[order]


def _coordinate_max(V: np.ndarray, floor: np.ndarray, i: int) -> float:
    c = np.zeros(V.shape[1])
    c[i] = 1.0
    res = solve_lp(LpProblem(c, A_ub=V, b_ub=np.ones(V.shape[0]), lb=floor))
    if res.status == "unbounded":
        raise NotProperError(f"no member of the hypothesis charges grid point {i}")
    if not res.optimal:
        raise NotAnEVariableError("floor violates an expectation constraint")
    return res.value


def _as_values(E) -> np.ndarray:
    return E.values if isinstance(E, TabulatedEVariable) else _vec(E)


def maximal_majorizer(E0, hyp: Hypothesis, vertices: Optional[np.ndarray] = None) -> TabulatedEVariable:
    """Raise ``E0`` one grid point at a time until no coordinate can move.

    Step ``i`` maximises ``E(x_i)`` among e-variables dominating the current
    one; only coordinate ``i`` is updated, which is a valid argmax because the
    expectation constraints are monotone in every coordinate.

    Raises
    ------
    NotAnEVariableError
        If ``E0`` is negative or has expectation above one under a vertex.
    """
    if hyp.classification is not Classification.PROPER:
        raise NotProperError(f"hypothesis is {hyp.classification.value}")
    E = _as_values(E0).copy()
    if E.size != len(hyp.grid):
        raise ValueError("E0 length does not match the grid")
    V = enumerate_vertices(hyp) if vertices is None else vertices
    tol = get_tolerances().feasibility
    if np.any(E < -tol) or np.any(V @ E > 1.0 + tol):
        raise NotAnEVariableError("E0 is not an e-variable for the hypothesis")
    E = np.maximum(E, 0.0)
    for i in range(E.size):
        E[i] = max(E[i], _coordinate_max(V, E, i))
    return TabulatedEVariable(E)


def coordinate_maxima(E, hyp: Hypothesis, vertices: Optional[np.ndarray] = None) -> np.ndarray:
    """For each grid point, the largest value reachable while dominating ``E``.

    ``E`` is maximal exactly when this equals ``E`` everywhere.
    """
    E = _as_values(E)
    V = enumerate_vertices(hyp) if vertices is None else vertices
    return np.array([_coordinate_max(V, E, i) for i in range(E.size)])


@dataclass(frozen=True)
class DualFit:
    lam: LambdaVector
    residual: float
    in_class: bool


def verify_in_dual_class(E, hyp: Hypothesis) -> DualFit:
    """Least-squares fit of ``E - 1`` onto the span of the tabulated constraint."""
    if hyp.m_slack:
        raise ValueError("dual-class check supports tight constraints only")
    E = _as_values(E)
    t = hyp.table
    if t.shape[1] == 0:
        lam = LambdaVector.zeros(0)
        resid = float(np.max(np.abs(E - 1.0)))
    else:
        coef, *_ = np.linalg.lstsq(t, E - 1.0, rcond=None)
        lam = LambdaVector(-coef)
        resid = float(np.max(np.abs(t @ coef - (E - 1.0))))
    ok = resid <= get_tolerances().dual_residual and lambda_feasible(lam, hyp)
    return DualFit(lam, resid, bool(ok))
