"""Betting strategies: how the player picks lambda each round.

Four kinds are supported, selected by a JSON-style spec::

    {"kind": "constant"}
    {"kind": "fixed", "lam": [...]}            # or "edge": "upper"/"lower", "scale": c
    {"kind": "grid_mixture", "lams": [[...], ...]}   # or "n": K, "scale": c
    {"kind": "ftl", "iterations": 200, "step": 0.1}

``edge`` and ``n`` are resolved against the feasible interval of an
interval-mean hypothesis, so one spec can drive a whole family of games.
States are immutable; :func:`update` returns a new one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import _ftl
from .dual import LambdaVector, lambda_feasible, lambda_interval
from .exceptions import InfeasibleLambdaError
from .hypothesis import Hypothesis

__all__ = ["StrategyState", "make_strategy", "next_lambda", "update", "ftl_argmax", "KINDS"]

KINDS = ("constant", "fixed", "grid_mixture", "ftl")
_KEYS = {
    "constant": {"kind"},
    "fixed": {"kind", "lam", "edge", "scale"},
    "grid_mixture": {"kind", "lams", "n", "scale"},
    "ftl": {"kind", "iterations", "step"},
}
FTL_ITERATIONS = 200
FTL_STEP = 0.1


@dataclass(frozen=True)
class StrategyState:
    kind: str
    m_tight: int
    round: int = 0
    lam: Optional[np.ndarray] = None
    lams: Optional[np.ndarray] = None
    log_wealths: Optional[np.ndarray] = None
    history: tuple = ()
    phi_rows: Optional[np.ndarray] = None
    counts: Optional[np.ndarray] = None
    iterations: int = FTL_ITERATIONS
    step: float = FTL_STEP


def _flat(value, hyp: Hypothesis) -> np.ndarray:
    if isinstance(value, dict):
        return LambdaVector(value.get("tight", []), value.get("slack", [])).flat
    theta = np.atleast_1d(np.asarray(value, dtype=float)).ravel()
    if theta.size != hyp.n_params:
        raise ValueError(f"lambda has {theta.size} entries, constraint has {hyp.n_params}")
    return theta


def _box(hyp: Hypothesis, scale: float) -> tuple[float, float]:
    cf = hyp.closed_form
    if cf is None or cf.kind != "interval_mean":
        raise ValueError("'edge' and 'n' need an interval-mean hypothesis")
    if not 0.0 <= scale <= 1.0:
        raise ValueError("scale must lie in [0, 1]")
    lo, hi = lambda_interval(cf.mu, cf.lo, cf.hi)
    return scale * lo, scale * hi


def _check(theta: np.ndarray, hyp: Hypothesis) -> None:
    try:
        lam = LambdaVector.from_flat(theta, hyp.m_tight)
    except ValueError as exc:
        raise InfeasibleLambdaError(str(exc)) from None
    if not lambda_feasible(lam, hyp):
        raise InfeasibleLambdaError(f"lambda {theta.tolist()} is outside the feasible set")


def make_strategy(spec: dict, hyp: Hypothesis) -> StrategyState:
    """Validate a strategy spec against ``hyp`` and return the round-0 state.

    Raises
    ------
    InfeasibleLambdaError
        If a fixed or mixture parameter is not feasible for ``hyp``.
    """
    kind = spec.get("kind")
    if kind not in KINDS:
        raise ValueError(f"unknown strategy kind {kind!r}")
    unknown = set(spec) - _KEYS[kind]
    if unknown:
        raise ValueError(f"unknown strategy key {sorted(unknown)[0]!r}")
    p = hyp.n_params
    base = StrategyState(kind=kind, m_tight=hyp.m_tight)

    if kind == "constant":
        return base
    if kind == "fixed":
        if "edge" in spec:
            lo, hi = _box(hyp, float(spec.get("scale", 1.0)))
            if spec["edge"] not in ("upper", "lower"):
                raise ValueError("edge must be 'upper' or 'lower'")
            theta = np.array([hi if spec["edge"] == "upper" else lo])
        else:
            theta = _flat(spec["lam"], hyp)
        _check(theta, hyp)
        return replace(base, lam=theta)
    if kind == "grid_mixture":
        if "n" in spec:
            lo, hi = _box(hyp, float(spec.get("scale", 1.0)))
            lams = np.linspace(lo, hi, int(spec["n"]))[:, None]
        else:
            lams = np.array([_flat(v, hyp) for v in spec["lams"]]).reshape(-1, p)
        if lams.shape[0] == 0:
            raise ValueError("grid_mixture needs at least one lambda")
        for theta in lams:
            _check(theta, hyp)
        return replace(base, lams=lams, log_wealths=np.zeros(lams.shape[0]))
    return replace(base, lam=np.zeros(p), phi_rows=np.zeros((0, p)), counts=np.zeros(0),
                   iterations=int(spec.get("iterations", FTL_ITERATIONS)),
                   step=float(spec.get("step", FTL_STEP)))


def mixture_weights(log_wealths: np.ndarray) -> np.ndarray:
    top = np.max(log_wealths)
    if top == -np.inf:
        return np.full(log_wealths.size, 1.0 / log_wealths.size)
    w = np.exp(log_wealths - top)
    return w / w.sum()


def next_lambda(state: StrategyState, hyp: Hypothesis) -> LambdaVector:
    """Bet for the coming round; depends only on observations already seen."""
    if state.kind == "constant":
        return LambdaVector.from_flat(np.zeros(hyp.n_params), state.m_tight)
    if state.kind == "grid_mixture":
        # E is affine in lambda, so the wealth-weighted mixture is itself E_{lambda bar}.
        theta = mixture_weights(state.log_wealths) @ state.lams
        return LambdaVector.from_flat(theta, state.m_tight)
    return LambdaVector.from_flat(state.lam, state.m_tight)


def _projection(hyp: Hypothesis):
    cf = hyp.closed_form
    empty = np.zeros((0, hyp.n_params))
    if hyp.n_params == 0:
        return _ftl.FREE, np.zeros(0), empty
    if cf is not None and cf.kind == "interval_mean":
        lo, hi = lambda_interval(cf.mu, cf.lo, cf.hi)
        return _ftl.BOX, np.array([lo, hi]), empty
    if cf is not None and cf.kind == "heavy_tail":
        return _ftl.ELLIPSE, np.array([cf.mu]), empty
    return _ftl.RETRACT, np.zeros(0), np.ascontiguousarray(hyp.table)


def ftl_argmax(hyp: Hypothesis, phi_rows, counts, start=None,
               iterations: int = FTL_ITERATIONS, step: float = FTL_STEP):
    """Approximate ``argmax_lambda sum counts * log(1 - phi_rows @ lambda)``.

    The ascent runs on the count-weighted mean, which has the same argmax
    and a gradient scale that does not grow with the sample size.

    Returns the final iterate and the objective trace (length
    ``iterations + 1``, on the mean scale), which is non-decreasing.
    """
    p = hyp.n_params
    rows = np.ascontiguousarray(np.asarray(phi_rows, dtype=float).reshape(-1, p))
    counts = np.ascontiguousarray(np.asarray(counts, dtype=float))
    start = np.zeros(p) if start is None else np.asarray(start, dtype=float)
    kind, params, table = _projection(hyp)
    return _ftl.ascend(start, rows, counts, kind, params, table, hyp.m_tight, iterations, step)


def update(state: StrategyState, hyp: Hypothesis, x) -> StrategyState:
    nxt = state.round + 1
    if state.kind in ("constant", "fixed"):
        return replace(state, round=nxt)
    phi = hyp.phi(x)
    if state.kind == "grid_mixture":
        e = 1.0 - state.lams @ phi
        with np.errstate(divide="ignore"):
            gains = np.where(e > 0, np.log(np.maximum(e, 1e-300)), -np.inf)
        return replace(state, round=nxt, log_wealths=state.log_wealths + gains)

    rows, counts = state.phi_rows, state.counts
    hit = np.flatnonzero(np.all(rows == phi, axis=1)) if rows.shape[0] else np.zeros(0, dtype=int)
    if hit.size:
        counts = counts.copy()
        counts[hit[0]] += 1.0
    else:
        rows = np.vstack([rows, phi])
        counts = np.append(counts, 1.0)
    lam, _ = ftl_argmax(hyp, rows, counts, state.lam, state.iterations, state.step)
    return replace(state, round=nxt, lam=lam, phi_rows=rows, counts=counts,
                   history=state.history + (x,))
