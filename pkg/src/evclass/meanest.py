"""Anytime-valid confidence sequences for a mean by inverting testing games.

One game is played per candidate mean on a grid; the confidence set after
round ``t`` holds the candidates whose game has not rejected yet. Since
rejection is latched, the sets are nested in ``t``.

The bounded case uses the interval-mean hypothesis on ``[lo, hi]``. The
heavy-tailed case uses the unit second-moment hypothesis on the real line
(or second moment ``B`` after rescaling by ``sqrt(B)``) and adds the
boundary set ``U_t``: ``{1}`` while every observation so far equals 1,
``{-1}`` while every observation equals -1, empty otherwise.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ._pool import parallel_map
from .betting import make_strategy
from .game import prepare, run_test, threshold
from .hypothesis import Hypothesis
from .streams import _open_text, format_float

__all__ = [
    "MuGrid",
    "ConfidenceSequence",
    "bounded_mean_cs",
    "heavy_tail_cs",
    "boundary_set_u",
    "encode_u",
]

BOUNDED_STEP = 1e-3
HEAVY_STEP = 2e-3


@dataclass(frozen=True)
class MuGrid:
    """Ordered candidate means."""

    values: np.ndarray
    resolution: Optional[float] = None

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=float)).ravel()
        if v.size == 0:
            raise ValueError("mu grid is empty")
        if np.any(np.diff(v) <= 0):
            raise ValueError("mu grid must be strictly increasing")
        object.__setattr__(self, "values", v)

    @classmethod
    def arange(cls, lo: float, hi: float, step: float) -> "MuGrid":
        if step <= 0 or hi < lo:
            raise ValueError("mu grid needs lo <= hi and a positive step")
        n = int(math.floor((hi - lo) / step + 1e-9))
        return cls(np.round(lo + step * np.arange(n + 1), 12), step)

    @classmethod
    def parse(cls, text: str) -> "MuGrid":
        """``"lo:hi:step"`` or a comma-separated list."""
        text = text.strip()
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError(f"mu grid {text!r} is not lo:hi:step")
            return cls.arange(*(float(p) for p in parts))
        return cls([float(p) for p in text.split(",")])

    @classmethod
    def bounded_default(cls, lo: float = 0.0, hi: float = 1.0, step: float = BOUNDED_STEP) -> "MuGrid":
        return cls.arange(lo + step, hi - step, step)

    @classmethod
    def heavy_default(cls, step: float = HEAVY_STEP) -> "MuGrid":
        return cls.arange(-1.0 + step, 1.0 - step, step)

    def __len__(self) -> int:
        return self.values.size

    def nearest(self, mu: float) -> int:
        return int(np.argmin(np.abs(self.values - mu)))


def boundary_set_u(history: Sequence) -> frozenset:
    """``{1}`` if every observation is 1, ``{-1}`` if every one is -1, else empty.

    The empty history gives the empty set.
    """
    xs = [float(np.asarray(x, dtype=float).reshape(-1)[0]) for x in history]
    if not xs:
        return frozenset()
    if all(x == 1.0 for x in xs):
        return frozenset({1})
    if all(x == -1.0 for x in xs):
        return frozenset({-1})
    return frozenset()


def encode_u(u: frozenset) -> int:
    """CSV code for ``U_t``: 0 for the empty set, otherwise its element."""
    return next(iter(u)) if u else 0


@dataclass
class ConfidenceSequence:
    """Confidence sets ``S_0 .. S_T`` over a mean grid.

    ``in_set[t, j]`` tells whether candidate ``mu[j]`` is in ``S_t``;
    ``log_wealth[t, j]`` is its game's log-wealth, frozen after rejection.
    ``boundary[t]`` is the ``U_t`` code (heavy-tailed case only).
    """

    mu: np.ndarray
    in_set: np.ndarray
    log_wealth: np.ndarray
    boundary: Optional[np.ndarray] = None

    @property
    def rounds(self) -> int:
        return self.in_set.shape[0] - 1

    def members(self, t: int) -> np.ndarray:
        return self.mu[self.in_set[t]]

    def is_nested(self) -> bool:
        return bool(np.all(self.in_set[1:] <= self.in_set[:-1]))

    def ever_excluded(self, index: int) -> bool:
        return not bool(np.all(self.in_set[:, index]))

    def width(self, t: int) -> float:
        m = self.members(t)
        return float(m.max() - m.min()) if m.size else 0.0

    def to_csv(self, target) -> None:
        fh = _open_text(target, "w")
        try:
            w = csv.writer(fh, lineterminator="\n")
            head = ["t", "mu", "in_set", "R_t"]
            if self.boundary is not None:
                head.append("U_t")
            w.writerow(head)
            for t in range(self.rounds + 1):
                for j, mu in enumerate(self.mu):
                    row = [str(t), format_float(mu), "1" if self.in_set[t, j] else "0",
                           format_float(self.log_wealth[t, j])]
                    if self.boundary is not None:
                        row.append(str(int(self.boundary[t])))
                    w.writerow(row)
        finally:
            if isinstance(target, (str, Path)):
                fh.close()

    @classmethod
    def from_csv(cls, source) -> "ConfidenceSequence":
        fh = _open_text(source, "r")
        try:
            rows = list(csv.reader(fh))
        finally:
            if isinstance(source, (str, Path)):
                fh.close()
        header, body = rows[0], [r for r in rows[1:] if r]
        if header[:4] != ["t", "mu", "in_set", "R_t"]:
            raise ValueError("not a confidence-sequence CSV")
        t = np.array([int(r[0]) for r in body])
        mu = np.array([float(r[1]) for r in body])
        T1 = int(t.max()) + 1
        M = len(body) // T1
        mus = mu[:M]
        in_set = np.array([r[2] == "1" for r in body]).reshape(T1, M)
        R = np.array([float(r[3]) for r in body]).reshape(T1, M)
        boundary = None
        if "U_t" in header:
            boundary = np.array([int(r[4]) for r in body]).reshape(T1, M)[:, 0]
        return cls(mus, in_set, R, boundary)


def _candidate(task):
    family, mu, lo, hi, step, X, spec, delta = task
    if family == "bounded":
        hyp = Hypothesis.interval_mean(mu, lo, hi, step=step)
    else:
        hyp = Hypothesis.heavy_tail_mean(mu)
    verdict, traj = run_test(X, hyp, spec, delta, max_rounds=X.shape[0])
    return (verdict.round if verdict.rejected else 0), traj.log_wealth


def _assemble(mus: np.ndarray, T: int, results) -> tuple[np.ndarray, np.ndarray]:
    M = mus.size
    in_set = np.ones((T + 1, M), dtype=bool)
    R = np.zeros((T + 1, M))
    for j, (rej, wealth) in enumerate(results):
        k = wealth.size
        R[1:k + 1, j] = wealth
        if k < T:
            R[k + 1:, j] = wealth[-1] if k else 0.0
        if rej:
            in_set[rej:, j] = False
    return in_set, R


def _stream(stream) -> np.ndarray:
    X = np.asarray(stream, dtype=float)
    if X.size == 0:
        return np.zeros((0, 1))
    if X.ndim == 0:
        X = X.reshape(1, 1)
    X = X.reshape(X.shape[0], -1)
    if X.shape[1] != 1:
        raise ValueError("mean confidence sequences take scalar observations")
    return X


def bounded_mean_cs(stream, mu_grid: MuGrid, delta: float, strategy_spec: dict,
                    lo: float = 0.0, hi: float = 1.0, step: float = BOUNDED_STEP,
                    workers: Optional[int] = None) -> ConfidenceSequence:
    """Confidence sequence for the mean of observations in ``[lo, hi]``.

    Candidates on the boundary of ``[lo, hi]`` are allowed; their game runs on
    the support-restricted hypothesis, so such a candidate stays only while
    every observation equals it.
    """
    threshold(delta)
    X = _stream(stream)
    mus = mu_grid.values
    if np.any(mus < lo) or np.any(mus > hi):
        raise ValueError(f"bounded candidates must lie in [{lo}, {hi}]")
    for mu in mus:
        make_strategy(strategy_spec, prepare(Hypothesis.interval_mean(mu, lo, hi, step=step)))
    tasks = [("bounded", float(mu), lo, hi, step, X, strategy_spec, delta) for mu in mus]
    in_set, R = _assemble(mus, X.shape[0], parallel_map(_candidate, tasks, workers))
    return ConfidenceSequence(mus.copy(), in_set, R)


def heavy_tail_cs(stream, mu_grid: MuGrid, delta: float, strategy_spec: dict,
                  second_moment: float = 1.0, workers: Optional[int] = None) -> ConfidenceSequence:
    """Confidence sequence for a mean under ``E[X^2] <= second_moment``.

    Observations and candidates are divided by ``sqrt(second_moment)`` so the
    games run in the unit case. The strategy is checked for every candidate
    before any round is played.
    """
    threshold(delta)
    if second_moment <= 0:
        raise ValueError("second_moment must be positive")
    scale = math.sqrt(second_moment)
    X = _stream(stream)
    mus = mu_grid.values
    if np.any(np.abs(mus) >= scale):
        raise ValueError(f"heavy-tail candidates must lie in (-{scale}, {scale})")
    for mu in mus:
        make_strategy(strategy_spec, Hypothesis.heavy_tail_mean(float(mu) / scale))
    Xs = X / scale
    tasks = [("heavy", float(mu) / scale, 0.0, 0.0, 0.0, Xs, strategy_spec, delta) for mu in mus]
    in_set, R = _assemble(mus, X.shape[0], parallel_map(_candidate, tasks, workers))
    T = X.shape[0]
    # running form of boundary_set_u over prefixes
    ones = np.logical_and.accumulate(Xs[:, 0] == 1.0)
    minus = np.logical_and.accumulate(Xs[:, 0] == -1.0)
    boundary = np.zeros(T + 1, dtype=int)
    boundary[1:] = ones.astype(int) - minus.astype(int)
    return ConfidenceSequence(mus.copy(), in_set, R, boundary)
