"""Sample grids, constrained hypotheses and the LP witnesses built on them.

A hypothesis is the set of probability measures ``P`` on a sample space with
``E_P[tight] = 0`` and ``E_P[slack] >= 0``. The sample space is represented
by a finite grid; the two closed-form families used for mean estimation
(mean on an interval, and mean under a unit second-moment bound) carry their
exact description alongside the grid.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .config import get_tolerances
from .exceptions import EmptyHypothesisError, NoWitnessError, NotProperError
from .expr import parse_expression
from .geometry import LpProblem, independent_rows, solve_lp, zero_in_relint

__all__ = [
    "Classification",
    "ClosedForm",
    "ConstraintSpec",
    "Hypothesis",
    "SampleGrid",
    "classify",
    "e_upper_bound",
    "load_hypothesis",
    "matching_witness",
    "reduce_to_minimal",
    "support_restriction",
]


class Classification(str, Enum):
    PROPER = "proper"
    FINITELY_NON_PROPER = "finitely_non_proper"
    LOOSE_PROPER = "loose_proper"
    LOOSE_NON_PROPER = "loose_non_proper"


@dataclass(frozen=True, eq=False)
class SampleGrid:
    """Finite stand-in for a closed sample space in R^n.

    ``continuum`` grids discretise an interval or box with spacing
    ``spacing``; observations within ``spacing / 2`` of a grid point snap to
    it. ``truncation`` is set when the underlying space is unbounded and the
    grid only covers a ball of that radius.
    """

    points: np.ndarray
    continuum: bool = False
    spacing: Optional[float] = None
    truncation: Optional[float] = None

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        if p.ndim != 2 or p.shape[0] == 0 or p.shape[1] == 0:
            raise ValueError("grid needs at least one point of dimension >= 1")
        if np.unique(p, axis=0).shape[0] != p.shape[0]:
            raise ValueError("grid points must be distinct")
        if self.continuum and not (self.spacing and self.spacing > 0):
            raise ValueError("continuum grids need a positive spacing")
        if self.truncation is not None and self.truncation <= 0:
            raise ValueError("truncation radius must be positive")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "_sorted", p.shape[1] == 1 and bool(np.all(np.diff(p[:, 0]) > 0)))

    @classmethod
    def explicit(cls, points) -> "SampleGrid":
        return cls(points)

    @classmethod
    def interval(cls, lo: float, hi: float, step: float, truncation: Optional[float] = None) -> "SampleGrid":
        if not hi > lo:
            raise ValueError("interval needs hi > lo")
        n = int(round((hi - lo) / step))
        pts = lo + step * np.arange(n + 1)
        pts[-1] = hi
        return cls(pts, continuum=True, spacing=step, truncation=truncation)

    @classmethod
    def box(cls, bounds: Sequence[Sequence[float]], step: float) -> "SampleGrid":
        axes = []
        for lo, hi in bounds:
            n = int(round((hi - lo) / step))
            ax = lo + step * np.arange(n + 1)
            ax[-1] = hi
            axes.append(ax)
        pts = np.array(list(itertools.product(*axes)))
        return cls(pts, continuum=True, spacing=step)

    @classmethod
    def real_line(cls, step: float = 1e-2, radius: float = 50.0) -> "SampleGrid":
        return cls.interval(-radius, radius, step, truncation=radius)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def unbounded(self) -> bool:
        return self.truncation is not None

    def locate(self, x) -> Optional[int]:
        """Index of the grid point representing ``x``, or None."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.dim:
            raise ValueError(f"observation has dimension {x.shape[0]}, grid has {self.dim}")
        if not self.continuum:
            hits = np.flatnonzero(np.all(self.points == x, axis=1))
            return int(hits[0]) if hits.size else None
        if self.dim == 1 and self._sorted:
            col = self.points[:, 0]
            j = int(np.searchsorted(col, x[0]))
            cand = [k for k in (j - 1, j) if 0 <= k < col.size]
            i = min(cand, key=lambda k: abs(col[k] - x[0]))
            return i if abs(col[i] - x[0]) <= self.spacing / 2 + 1e-12 else None
        dist = np.max(np.abs(self.points - x), axis=1)
        i = int(np.argmin(dist))
        return i if dist[i] <= self.spacing / 2 + 1e-12 else None

    def subset(self, indices: Iterable[int]) -> "SampleGrid":
        idx = np.asarray(sorted(indices), dtype=int)
        return SampleGrid(self.points[idx], self.continuum, self.spacing, self.truncation)


def _stack(fns: Sequence[Callable], X: np.ndarray) -> np.ndarray:
    if not fns:
        return np.zeros((X.shape[0], 0))
    return np.column_stack([f(X) for f in fns])


class ConstraintSpec:
    """Tight and slack constraint maps.

    ``tight`` and ``slack`` take an ``(k, n)`` array of points and return
    ``(k, m_tight)`` and ``(k, m_slack)`` arrays.
    """

    def __init__(self, tight: Optional[Callable], m_tight: int,
                 slack: Optional[Callable] = None, m_slack: int = 0,
                 expressions: Optional[dict] = None):
        self._tight = tight
        self._slack = slack
        self.m_tight = int(m_tight)
        self.m_slack = int(m_slack)
        self.expressions = expressions
        # how to rebuild this spec in another process (None: bare callables)
        self.recipe: Optional[tuple] = None

    def __reduce__(self):
        if self.recipe is None:
            raise TypeError("a constraint built from bare callables cannot be pickled")
        return _rebuild_constraint, (self.recipe,)

    def _with_recipe(self, recipe: tuple) -> "ConstraintSpec":
        self.recipe = recipe
        return self

    @classmethod
    def from_expressions(cls, tight: Sequence[str], slack: Sequence[str] = (), n_vars: int = 1) -> "ConstraintSpec":
        tf = [parse_expression(e, n_vars) for e in tight]
        sf = [parse_expression(e, n_vars) for e in slack]
        return cls(lambda X: _stack(tf, X), len(tf), lambda X: _stack(sf, X), len(sf),
                   expressions={"tight": list(tight), "slack": list(slack)},
                   )._with_recipe(("expr", tuple(tight), tuple(slack), n_vars))

    @classmethod
    def from_table(cls, grid: SampleGrid, tight_table, slack_table=None) -> "ConstraintSpec":
        """Constraint known only through its values on ``grid``."""
        tt = np.asarray(tight_table, dtype=float).reshape(len(grid), -1)
        st = (np.zeros((len(grid), 0)) if slack_table is None
              else np.asarray(slack_table, dtype=float).reshape(len(grid), -1))

        def lookup(table):
            def fn(X):
                X = np.asarray(X, dtype=float).reshape(-1, grid.dim)
                idx = []
                for x in X:
                    i = grid.locate(x)
                    if i is None:
                        raise ValueError(f"point {x} is not on the constraint grid")
                    idx.append(i)
                return table[idx]
            return fn

        return cls(lookup(tt), tt.shape[1], lookup(st), st.shape[1],
                   )._with_recipe(("table", grid, tt, st))

    @property
    def m(self) -> int:
        return self.m_tight + self.m_slack

    def tight(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.m_tight == 0:
            return np.zeros((X.shape[0], 0))
        return np.asarray(self._tight(X), dtype=float).reshape(X.shape[0], self.m_tight)

    def slack(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.m_slack == 0:
            return np.zeros((X.shape[0], 0))
        return np.asarray(self._slack(X), dtype=float).reshape(X.shape[0], self.m_slack)

    def evaluate(self, X) -> np.ndarray:
        return np.hstack([self.tight(X), self.slack(X)])

    def tabulate(self, grid: SampleGrid) -> np.ndarray:
        # Points are passed as (k, n) so 1-D grids reach expressions as columns.
        return self.evaluate(grid.points)

    def recombine(self, R) -> "ConstraintSpec":
        """Tight components replaced by ``R @ tight``."""
        R = np.asarray(R, dtype=float)
        if R.shape[1] != self.m_tight:
            raise ValueError("recombination matrix has wrong width")
        base = self.tight
        return ConstraintSpec(lambda X: base(X) @ R.T, R.shape[0], self._slack, self.m_slack,
                              )._with_recipe(("recombine", self, R))

    def select(self, components: Sequence[int]) -> "ConstraintSpec":
        """Keep only the listed tight components (slack kept whole)."""
        comps = list(components)
        base = self.tight
        expressions = None
        if self.expressions is not None:
            expressions = {"tight": [self.expressions["tight"][i] for i in comps],
                           "slack": list(self.expressions["slack"])}
        return ConstraintSpec(lambda X: base(X)[:, comps], len(comps), self._slack, self.m_slack,
                              expressions=expressions)._with_recipe(("select", self, tuple(comps)))


def _rebuild_constraint(recipe: tuple) -> ConstraintSpec:
    kind, *args = recipe
    if kind == "expr":
        return ConstraintSpec.from_expressions(*args)
    if kind == "table":
        return ConstraintSpec.from_table(*args)
    if kind == "recombine":
        return args[0].recombine(args[1])
    if kind == "select":
        return args[0].select(args[1])
    mu = args[0]
    if kind == "interval_mean":
        return Hypothesis.interval_mean(mu, 0.0, 1.0, 1.0).constraint
    return Hypothesis.heavy_tail_mean(mu, 1.0, 1.0).constraint


@dataclass(frozen=True)
class ClosedForm:
    """Exact description of a registered hypothesis family.

    ``interval_mean``: mean ``mu`` on ``[lo, hi]``, tight constraint ``mu - x``.
    ``heavy_tail``: mean ``mu`` on R with ``E[X^2] <= 1``; tight ``mu - x``,
    slack ``1 - x^2``.
    """

    kind: str
    mu: float
    lo: float = 0.0
    hi: float = 1.0


class Hypothesis:
    """A constrained hypothesis over a sample grid.

    The tabulated constraint and the classification are computed lazily.
    For registered closed-form families the classification follows from the
    exact description; :meth:`classify_on_grid` gives the grid cross-check.
    """

    def __init__(self, grid: SampleGrid, constraint: ConstraintSpec,
                 closed_form: Optional[ClosedForm] = None):
        self.grid = grid
        self.constraint = constraint
        self.closed_form = closed_form

    def __repr__(self):
        cf = f", closed_form={self.closed_form}" if self.closed_form else ""
        return (f"Hypothesis(|grid|={len(self.grid)}, m_tight={self.m_tight}, "
                f"m_slack={self.m_slack}{cf})")

    @classmethod
    def interval_mean(cls, mu: float, lo: float = 0.0, hi: float = 1.0, step: float = 1e-3) -> "Hypothesis":
        grid = SampleGrid.interval(lo, hi, step)
        constraint = ConstraintSpec(lambda X: mu - X[:, :1], 1,
                                    expressions={"tight": [f"{mu!r} - x"], "slack": []},
                                    )._with_recipe(("interval_mean", float(mu)))
        return cls(grid, constraint, ClosedForm("interval_mean", float(mu), float(lo), float(hi)))

    @classmethod
    def heavy_tail_mean(cls, mu: float, step: float = 1e-2, radius: float = 50.0) -> "Hypothesis":
        grid = SampleGrid.real_line(step, radius)
        constraint = ConstraintSpec(lambda X: mu - X[:, :1], 1, lambda X: 1.0 - X[:, :1] ** 2, 1,
                                    expressions={"tight": [f"{mu!r} - x"], "slack": ["1 - x^2"]},
                                    )._with_recipe(("heavy_tail", float(mu)))
        return cls(grid, constraint, ClosedForm("heavy_tail", float(mu), -math.inf, math.inf))

    @property
    def m_tight(self) -> int:
        return self.constraint.m_tight

    @property
    def m_slack(self) -> int:
        return self.constraint.m_slack

    @property
    def n_params(self) -> int:
        return self.constraint.m

    @cached_property
    def table(self) -> np.ndarray:
        t = self.constraint.tabulate(self.grid)
        t.setflags(write=False)
        return t

    @cached_property
    def classification(self) -> Classification:
        cf = self.closed_form
        if cf is None:
            return classify(self.constraint, self.grid, table=self.table)
        if cf.kind == "interval_mean":
            if cf.lo < cf.mu < cf.hi:
                return Classification.PROPER
            if cf.mu in (cf.lo, cf.hi):
                return Classification.FINITELY_NON_PROPER
            raise EmptyHypothesisError(f"mean {cf.mu} outside [{cf.lo}, {cf.hi}]")
        if cf.kind == "heavy_tail":
            if abs(cf.mu) < 1:
                return Classification.LOOSE_PROPER
            if abs(cf.mu) == 1:
                return Classification.LOOSE_NON_PROPER
            raise EmptyHypothesisError(f"mean {cf.mu} incompatible with unit second moment")
        raise ValueError(f"unknown closed form {cf.kind!r}")

    def classify_on_grid(self) -> Classification:
        return classify(self.constraint, self.grid, table=self.table)

    def phi(self, x) -> np.ndarray:
        """Joint constraint vector (tight, slack) at an arbitrary point."""
        cf = self.closed_form
        if cf is not None:
            x0 = float(np.asarray(x, dtype=float).reshape(-1)[0])
            if cf.kind == "interval_mean":
                return np.array([cf.mu - x0])
            return np.array([cf.mu - x0, 1.0 - x0 * x0])
        return self.constraint.evaluate(np.asarray(x, dtype=float).reshape(1, -1))[0]

    def restrict(self, indices: Iterable[int]) -> "Hypothesis":
        return Hypothesis(self.grid.subset(indices), self.constraint)

    def with_constraint(self, constraint: ConstraintSpec) -> "Hypothesis":
        return Hypothesis(self.grid, constraint)

    def in_space(self, x) -> bool:
        """Whether ``x`` belongs to the sample space (up to grid snapping)."""
        if self.grid.unbounded:
            return True
        return self.grid.locate(x) is not None

    def _feasible_set_rows(self):
        """Equality/inequality rows describing the hypothesis over grid weights."""
        d = len(self.grid)
        t = self.table
        A_eq = np.vstack([np.ones((1, d)), t[:, :self.m_tight].T])
        b_eq = np.zeros(A_eq.shape[0])
        b_eq[0] = 1.0
        A_ub = -t[:, self.m_tight:].T
        b_ub = np.zeros(A_ub.shape[0])
        return A_eq, b_eq, A_ub, b_ub


def classify(constraint: ConstraintSpec, grid: SampleGrid, table: Optional[np.ndarray] = None) -> Classification:
    """Classify a hypothesis from the relint position of the origin.

    Raises
    ------
    EmptyHypothesisError
        If the origin is outside the hull of the tabulated constraint.
    """
    t = constraint.tabulate(grid) if table is None else table
    if t.shape[1] == 0:
        rel = "yes"
    else:
        rel = zero_in_relint(t).status
    if rel == "outside":
        raise EmptyHypothesisError("0 is not in the convex hull of the constraint values")
    if constraint.m_slack == 0:
        return Classification.PROPER if rel == "yes" else Classification.FINITELY_NON_PROPER
    return Classification.LOOSE_PROPER if rel == "yes" else Classification.LOOSE_NON_PROPER


def _require_proper(hyp: Hypothesis, allow_loose: bool = False) -> None:
    ok = {Classification.PROPER}
    if allow_loose:
        ok.add(Classification.LOOSE_PROPER)
    if hyp.classification not in ok:
        raise NotProperError(f"hypothesis is {hyp.classification.value}")


def reduce_to_minimal(hyp: Hypothesis) -> ConstraintSpec:
    """Drop linearly dependent tight components (lowest indices kept)."""
    _require_proper(hyp)
    if hyp.m_slack:
        raise NotProperError("minimal reduction applies to tight-only constraints")
    t = hyp.table
    if t.shape[1] == 0 or not np.any(t):
        return hyp.constraint.select([])
    return hyp.constraint.select(independent_rows(t.T))


def support_restriction(hyp: Hypothesis) -> tuple[np.ndarray, Hypothesis]:
    """Grid points charged by some member of the hypothesis, and the
    hypothesis restricted to them.

    Works face by face: an LP looks for ``lam`` with ``lam . phi(x) >= 0`` on
    the remaining points and positive total. Points where it is positive
    carry no mass under any member and are dropped. When no such ``lam``
    exists the origin is in the relative interior of what is left, which is
    then exactly the support set.
    """
    if hyp.m_slack:
        raise NotProperError("support restriction is defined for tight-only constraints")
    tol = get_tolerances().relint
    table = hyp.table
    keep = np.arange(len(hyp.grid))
    m = table.shape[1]
    while m and keep.size:
        P = table[keep]
        if not P.any():
            break
        s = P.sum(axis=0)
        res = solve_lp(LpProblem(s, A_ub=np.vstack([-P, s]),
                                 b_ub=np.concatenate([np.zeros(keep.size), [1.0]]),
                                 lb=np.full(m, -np.inf)))
        if res.value <= tol:
            break
        keep = keep[P @ res.x <= tol]
    if keep.size == 0:
        raise EmptyHypothesisError("no probability weights satisfy the constraint")
    return keep, hyp.restrict(keep)


def matching_witness(hyp: Hypothesis, required: Union[Iterable[int], str] = "all") -> np.ndarray:
    """Member of the hypothesis charging every required grid point.

    Maximises the smallest required weight; slack constraints enter as
    ``E[slack] >= 0``.

    Raises
    ------
    NoWitnessError
        If no member puts positive mass on all required points.
    """
    d = len(hyp.grid)
    req = np.arange(d) if isinstance(required, str) and required == "all" else np.asarray(sorted(set(required)), dtype=int)
    if req.size == 0:
        raise ValueError("required set is empty")
    A_eq, b_eq, A_ub, b_ub = hyp._feasible_set_rows()
    # variables: w_1..w_d, t
    A_eq = np.hstack([A_eq, np.zeros((A_eq.shape[0], 1))])
    A_ub = np.hstack([A_ub, np.zeros((A_ub.shape[0], 1))])
    rows = np.zeros((req.size, d + 1))
    rows[np.arange(req.size), req] = -1.0
    rows[:, d] = 1.0
    A_ub = np.vstack([A_ub, rows])
    b_ub = np.concatenate([b_ub, np.zeros(req.size)])
    c = np.zeros(d + 1)
    c[d] = 1.0
    res = solve_lp(LpProblem(c, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub))
    if not res.optimal or res.value <= get_tolerances().relint:
        raise NoWitnessError("no member of the hypothesis charges all required points")
    w = np.maximum(res.x[:d], 0.0)
    return w / w.sum()


def e_upper_bound(hyp: Hypothesis, index: int) -> float:
    """1 / max_P P({x}): no e-variable for the hypothesis exceeds this at x."""
    A_eq, b_eq, A_ub, b_ub = hyp._feasible_set_rows()
    c = np.zeros(len(hyp.grid))
    c[index] = 1.0
    res = solve_lp(LpProblem(c, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub))
    if not res.optimal:
        raise EmptyHypothesisError("hypothesis is empty")
    if res.value <= get_tolerances().relint:
        return math.inf
    return 1.0 / res.value


_HYP_KEYS = {"grid", "tight", "slack", "family"}
_GRID_KEYS = {"points", "interval", "box", "step", "truncation"}
_FAMILY_KEYS = {"name", "mu", "interval", "step", "truncation"}


def _bound(v, default):
    return default if v is None else float(v)


def _grid_from_spec(spec: dict) -> SampleGrid:
    unknown = set(spec) - _GRID_KEYS
    if unknown:
        raise ValueError(f"unknown grid key {sorted(unknown)[0]!r}")
    if "points" in spec:
        return SampleGrid.explicit(spec["points"])
    step = float(spec["step"])
    if "box" in spec:
        return SampleGrid.box(spec["box"], step)
    lo, hi = spec["interval"]
    trunc = spec.get("truncation")
    if lo is None or hi is None or (trunc is not None):
        radius = float(trunc if trunc is not None else 50.0)
        lo = _bound(lo, -radius)
        hi = _bound(hi, radius)
        return SampleGrid.interval(max(lo, -radius), min(hi, radius), step, truncation=radius)
    return SampleGrid.interval(float(lo), float(hi), step)


def load_hypothesis(source: Union[str, Path, dict]) -> Hypothesis:
    """Build a hypothesis from a JSON file or an already-parsed dict.

    Either ``family`` (``interval_mean`` / ``heavy_tail_mean``) or ``grid``
    plus ``tight`` (and optional ``slack``) expression lists.
    """
    if isinstance(source, dict):
        spec = source
    else:
        spec = json.loads(Path(source).read_text())
    unknown = set(spec) - _HYP_KEYS
    if unknown:
        raise ValueError(f"unknown hypothesis key {sorted(unknown)[0]!r}")
    if "family" in spec:
        fam = spec["family"]
        bad = set(fam) - _FAMILY_KEYS
        if bad:
            raise ValueError(f"unknown family key {sorted(bad)[0]!r}")
        name = fam["name"]
        if name == "interval_mean":
            lo, hi = fam.get("interval", [0.0, 1.0])
            return Hypothesis.interval_mean(float(fam["mu"]), float(lo), float(hi), float(fam.get("step", 1e-3)))
        if name == "heavy_tail_mean":
            return Hypothesis.heavy_tail_mean(float(fam["mu"]), float(fam.get("step", 1e-2)),
                                              float(fam.get("truncation", 50.0)))
        raise ValueError(f"unknown family {name!r}")
    grid = _grid_from_spec(spec["grid"])
    constraint = ConstraintSpec.from_expressions(spec.get("tight", []), spec.get("slack", []), grid.dim)
    return Hypothesis(grid, constraint)
