"""scikit-learn style wrappers around the testing game and confidence sequences.

Both estimators are unsupervised: ``fit(X)`` consumes the rows of ``X`` as a
stream from scratch, ``partial_fit(X)`` continues the stream.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .game import Game, threshold
from .hypothesis import Hypothesis
from .meanest import BOUNDED_STEP, ConfidenceSequence, MuGrid, boundary_set_u, encode_u

__all__ = ["SequentialBettingTest", "BettingConfidenceSequence"]


def _rows(X) -> np.ndarray:
    X = check_array(X, ensure_2d=False, dtype=float)
    return X.reshape(X.shape[0], -1) if X.ndim == 1 else X


class SequentialBettingTest(BaseEstimator):
    """Sequential test of ``hypothesis`` that rejects when wealth passes ``1/delta``.

    Attributes after fitting: ``verdict_``, ``log_wealth_``, ``n_rounds_``,
    ``rejected_``.
    """

    def __init__(self, hypothesis: Optional[Hypothesis] = None, strategy: Optional[dict] = None,
                 delta: float = 0.05):
        self.hypothesis = hypothesis
        self.strategy = strategy
        self.delta = delta

    def _start(self):
        if self.hypothesis is None:
            raise ValueError("hypothesis is required")
        self.game_ = Game(self.hypothesis, self.strategy or {"kind": "ftl"}, self.delta)

    def fit(self, X, y=None):
        self._start()
        return self.partial_fit(X)

    def partial_fit(self, X, y=None):
        if not hasattr(self, "game_"):
            self._start()
        for x in _rows(X):
            if self.game_.step(x):
                break
        self._publish()
        return self

    def _publish(self):
        g = self.game_
        self.verdict_ = g.verdict
        self.log_wealth_ = g.log_wealth
        self.n_rounds_ = g.round
        self.rejected_ = g.rejected

    def trajectory(self):
        check_is_fitted(self, "game_")
        return self.game_.trajectory()


class BettingConfidenceSequence(BaseEstimator):
    """Confidence sequence for a scalar mean.

    ``family="bounded"`` works on ``[lo, hi]``; ``family="heavy"`` assumes
    ``E[X^2] <= second_moment``. After fitting, ``confidence_set_`` holds the
    surviving candidates, ``lower_``/``upper_`` their range and
    ``boundary_`` the ``U_t`` code (heavy case).
    """

    def __init__(self, family: str = "bounded", mu_grid=None, delta: float = 0.05,
                 strategy: Optional[dict] = None, lo: float = 0.0, hi: float = 1.0,
                 second_moment: float = 1.0):
        self.family = family
        self.mu_grid = mu_grid
        self.delta = delta
        self.strategy = strategy
        self.lo = lo
        self.hi = hi
        self.second_moment = second_moment

    def _grid(self) -> MuGrid:
        g = self.mu_grid
        if g is None:
            return MuGrid.bounded_default(self.lo, self.hi) if self.family == "bounded" else MuGrid.heavy_default()
        if isinstance(g, MuGrid):
            return g
        if isinstance(g, str):
            return MuGrid.parse(g)
        return MuGrid(g)

    def _start(self):
        threshold(self.delta)
        if self.family not in ("bounded", "heavy"):
            raise ValueError(f"unknown family {self.family!r}")
        spec = self.strategy or {"kind": "ftl"}
        grid = self._grid()
        self.scale_ = 1.0 if self.family == "bounded" else float(np.sqrt(self.second_moment))
        if self.family == "bounded":
            hyps = [Hypothesis.interval_mean(mu, self.lo, self.hi, step=BOUNDED_STEP) for mu in grid.values]
        else:
            if np.any(np.abs(grid.values) >= self.scale_):
                raise ValueError("heavy-tail candidates must satisfy |mu| < sqrt(second_moment)")
            hyps = [Hypothesis.heavy_tail_mean(mu / self.scale_) for mu in grid.values]
        self.mu_ = grid.values
        self.games_ = [Game(h, spec, self.delta) for h in hyps]
        self.history_ = []

    def fit(self, X, y=None):
        self._start()
        return self.partial_fit(X)

    def partial_fit(self, X, y=None):
        if not hasattr(self, "games_"):
            self._start()
        X = _rows(X)
        if X.shape[1] != 1:
            raise ValueError("mean confidence sequences take scalar observations")
        for x in X[:, 0] / self.scale_:
            self.history_.append(float(x))
            for g in self.games_:
                g.step(x)
        self._publish()
        return self

    def _publish(self):
        alive = np.array([not g.rejected for g in self.games_])
        self.confidence_set_ = self.mu_[alive]
        self.lower_ = float(self.confidence_set_.min()) if alive.any() else np.nan
        self.upper_ = float(self.confidence_set_.max()) if alive.any() else np.nan
        self.boundary_ = encode_u(boundary_set_u(self.history_)) if self.family == "heavy" else None

    def sequence(self) -> ConfidenceSequence:
        """Full per-round record of the sets seen so far."""
        check_is_fitted(self, "games_")
        T = len(self.history_)
        M = len(self.games_)
        in_set = np.ones((T + 1, M), dtype=bool)
        R = np.zeros((T + 1, M))
        for j, g in enumerate(self.games_):
            w = g.trajectory().log_wealth
            R[1:w.size + 1, j] = w
            if w.size < T:
                R[w.size + 1:, j] = w[-1] if w.size else 0.0
            if g.rejected:
                in_set[g.rejected_at:, j] = False
        boundary = None
        if self.family == "heavy":
            boundary = np.array([encode_u(boundary_set_u(self.history_[:t])) for t in range(T + 1)])
        return ConfidenceSequence(self.mu_.copy(), in_set, R, boundary)
