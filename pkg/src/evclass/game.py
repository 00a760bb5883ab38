"""The sequential testing game and its Ville rejection rule.

Each round the player commits to a bet ``lam``, an observation ``x`` arrives
and the log-wealth grows by ``log(1 - lam . phi(x))``. The hypothesis is
rejected the first time log-wealth exceeds ``log(1/delta)``; the rejection
is latched, so the reported test is the stopped one.

Observations that no member of the hypothesis can produce (outside the
support set on a finite grid, or outside the sample space altogether) reject
at once. Such a point can be given infinite e-value without breaking the
e-variable property, which is how the trajectory records it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .betting import make_strategy, next_lambda, update
from .dual import LambdaVector, evaluate_e
from .exceptions import NotProperError
from .hypothesis import Classification, Hypothesis, support_restriction
from .streams import _open_text, format_float, observation_columns

__all__ = [
    "GameState",
    "Verdict",
    "Trajectory",
    "play_round",
    "ville_reject",
    "threshold",
    "prepare",
    "Game",
    "run_test",
    "THRESHOLD",
    "OUTSIDE_SUPPORT",
]

THRESHOLD = "threshold"
OUTSIDE_SUPPORT = "outside_support"
NONE = "none"


@dataclass(frozen=True)
class GameState:
    round: int = 0
    log_wealth: float = 0.0
    history: tuple = ()
    rejected_at: Optional[int] = None
    cause: str = NONE

    @property
    def rejected(self) -> bool:
        return self.rejected_at is not None


def _log_e(e: float) -> float:
    return math.log(e) if e > 0.0 else -math.inf


def play_round(state: GameState, lam: LambdaVector, hyp: Hypothesis, x) -> GameState:
    """Advance one round: earn ``log E(x)``; a non-positive E gives ``-inf``.

    Once log-wealth is ``-inf`` it stays there.
    """
    reward = _log_e(evaluate_e(lam, hyp, x))
    wealth = -math.inf if state.log_wealth == -math.inf else state.log_wealth + reward
    return replace(state, round=state.round + 1, log_wealth=wealth, history=state.history + (x,))


def threshold(delta: float) -> float:
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return math.log(1.0 / delta)


def ville_reject(state: GameState, delta: float) -> bool:
    return state.log_wealth > threshold(delta)


@dataclass(frozen=True)
class Verdict:
    rejected: bool
    round: int
    cause: str = NONE

    def __str__(self) -> str:
        if self.rejected:
            return f"rejected({self.round}, {self.cause})"
        return f"survived({self.round})"


@dataclass
class Trajectory:
    """Per-round record: bet, observation, reward and cumulative log-wealth."""

    lam: np.ndarray
    x: np.ndarray
    reward: np.ndarray
    log_wealth: np.ndarray
    lam_names: list = field(default_factory=list)

    @property
    def t(self) -> np.ndarray:
        return np.arange(1, self.reward.size + 1)

    def __len__(self) -> int:
        return self.reward.size

    def header(self) -> list[str]:
        names = self.lam_names or [f"lam{i + 1}" for i in range(self.lam.shape[1])]
        return ["t", *names, *observation_columns(self.x.shape[1]), "reward", "R_t"]

    def to_csv(self, target) -> None:
        fh = _open_text(target, "w")
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.header())
            for i in range(len(self)):
                w.writerow([str(i + 1)]
                           + [format_float(v) for v in self.lam[i]]
                           + [format_float(v) for v in self.x[i]]
                           + [format_float(self.reward[i]), format_float(self.log_wealth[i])])
        finally:
            if isinstance(target, (str, Path)):
                fh.close()

    @classmethod
    def from_csv(cls, source) -> "Trajectory":
        fh = _open_text(source, "r")
        try:
            rows = list(csv.reader(fh))
        finally:
            if isinstance(source, (str, Path)):
                fh.close()
        header, body = rows[0], [r for r in rows[1:] if r]
        data = np.array(body, dtype=float).reshape(len(body), len(header))
        lam_cols = [i for i, h in enumerate(header) if h.startswith("lam")]
        x_cols = [i for i, h in enumerate(header) if h == "x" or (h.startswith("x") and h[1:].isdigit())]
        return cls(data[:, lam_cols], data[:, x_cols], data[:, header.index("reward")],
                   data[:, header.index("R_t")], [header[i] for i in lam_cols])


def prepare(hyp: Hypothesis) -> Hypothesis:
    """Hypothesis the game is actually played on.

    Proper and loose-proper hypotheses are used as they are. A finitely
    non-proper one is replaced by its restriction to the support set.
    """
    cls = hyp.classification
    if cls is Classification.FINITELY_NON_PROPER:
        return support_restriction(hyp)[1]
    if cls is Classification.LOOSE_NON_PROPER:
        raise NotProperError("loose constraints without a relative-interior witness are not supported")
    return hyp


def _as_rows(stream) -> Iterable[np.ndarray]:
    for x in stream:
        yield np.atleast_1d(np.asarray(x, dtype=float)).ravel()


class Game:
    """One testing game advanced an observation at a time.

    ``step`` plays a round and returns True once the game has rejected;
    further steps after rejection are ignored (the test is stopped).
    """

    def __init__(self, hypothesis: Hypothesis, strategy_spec: dict, delta: float):
        self.bound = threshold(delta)
        self.hypothesis = prepare(hypothesis)
        self.strategy = make_strategy(strategy_spec, self.hypothesis)
        self.log_wealth = 0.0
        self.rejected_at: Optional[int] = None
        self.cause = NONE
        self._lams, self._xs, self._rewards, self._wealth = [], [], [], []

    @property
    def round(self) -> int:
        return len(self._rewards)

    @property
    def rejected(self) -> bool:
        return self.rejected_at is not None

    def step(self, x) -> bool:
        if self.rejected:
            return True
        hyp = self.hypothesis
        x = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
        lam = next_lambda(self.strategy, hyp)
        self._lams.append(lam.flat)
        self._xs.append(x)
        t = self.round + 1
        if not hyp.in_space(x):
            self._record(math.inf, math.inf)
            self.rejected_at, self.cause = t, OUTSIDE_SUPPORT
            return True
        r = _log_e(evaluate_e(lam, hyp, x))
        R = -math.inf if self.log_wealth == -math.inf else self.log_wealth + r
        self._record(r, R)
        if R > self.bound:
            self.rejected_at, self.cause = t, THRESHOLD
            return True
        self.strategy = update(self.strategy, hyp, x if x.size > 1 else float(x[0]))
        return False

    def _record(self, reward: float, wealth: float) -> None:
        self._rewards.append(reward)
        self._wealth.append(wealth)
        self.log_wealth = wealth

    @property
    def state(self) -> GameState:
        return GameState(self.round, self.log_wealth,
                         tuple(x if x.size > 1 else float(x[0]) for x in self._xs),
                         self.rejected_at, self.cause)

    @property
    def verdict(self) -> Verdict:
        if self.rejected:
            return Verdict(True, self.rejected_at, self.cause)
        return Verdict(False, self.round)

    def trajectory(self) -> Trajectory:
        hyp = self.hypothesis
        n = self._xs[0].size if self._xs else hyp.grid.dim
        return Trajectory(np.array(self._lams, dtype=float).reshape(-1, hyp.n_params),
                          np.array(self._xs, dtype=float).reshape(-1, n),
                          np.array(self._rewards, dtype=float),
                          np.array(self._wealth, dtype=float), _lam_names(hyp))


def run_test(stream, hypothesis: Hypothesis, strategy_spec: dict, delta: float,
             max_rounds: Optional[int] = None) -> tuple[Verdict, Trajectory]:
    """Play the testing game on ``stream`` until rejection or exhaustion.

    Parameters
    ----------
    stream
        Iterable of observations (scalars or length-n vectors).
    hypothesis
        The null. A finitely non-proper null is first restricted to its
        support set; observations off that set reject with cause
        ``outside_support``.
    strategy_spec
        Passed to :func:`evclass.betting.make_strategy`.
    max_rounds
        Stop after this many rounds even if the stream continues.

    Returns
    -------
    (Verdict, Trajectory)
        The trajectory ends at the rejection round when there is one.
    """
    game = Game(hypothesis, strategy_spec, delta)
    for x in _as_rows(stream):
        if max_rounds is not None and game.round >= max_rounds:
            break
        if game.step(x):
            break
    return game.verdict, game.trajectory()


def _lam_names(hyp: Hypothesis) -> list[str]:
    if hyp.closed_form is not None and hyp.closed_form.kind == "heavy_tail":
        return ["lam_alpha", "lam_beta"]
    return [f"lam{i + 1}" for i in range(hyp.n_params)]
