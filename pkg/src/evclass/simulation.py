"""Seeded Monte Carlo suites: type-I error of a test and coverage of a
confidence sequence.

Replicate ``i`` draws its stream from child ``i`` of
``SeedSequence(seed)``, so results do not depend on how replicates are
distributed over workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._pool import parallel_map
from .game import run_test
from .hypothesis import Hypothesis, matching_witness
from .meanest import MuGrid, bounded_mean_cs, heavy_tail_cs
from .streams import synthetic_stream

__all__ = ["MonteCarloResult", "binomial_bound", "type_one_error", "coverage", "witness_stream_spec"]


def binomial_bound(delta: float, n: int) -> float:
    """``delta`` plus three binomial standard errors at rate ``delta``."""
    return delta + 3.0 * math.sqrt(delta * (1.0 - delta) / n)


@dataclass(frozen=True)
class MonteCarloResult:
    """Frequency of the bad event (false rejection or exclusion of the truth)."""

    count: int
    n: int
    delta: float
    nested: bool = True

    @property
    def rate(self) -> float:
        return self.count / self.n

    @property
    def se(self) -> float:
        p = self.rate
        return math.sqrt(p * (1.0 - p) / self.n)

    @property
    def bound(self) -> float:
        return binomial_bound(self.delta, self.n)

    @property
    def passed(self) -> bool:
        return self.rate <= self.bound and self.nested


def witness_stream_spec(hyp: Hypothesis) -> dict:
    """Discrete stream spec sampling from a full matching witness of ``hyp``."""
    w = matching_witness(hyp)
    keep = w > 0
    return {"distribution": "discrete",
            "values": hyp.grid.points[keep].tolist(),
            "probs": (w[keep] / w[keep].sum()).tolist()}


def _seeds(seed, n):
    return np.random.SeedSequence(seed).spawn(n)


def _null_replicate(task):
    hyp, spec, stream_spec, delta, rounds, ss = task
    X = synthetic_stream(stream_spec, rounds, seed=ss)
    verdict, _ = run_test(X, hyp, spec, delta, max_rounds=rounds)
    return verdict.rejected


def type_one_error(hypothesis: Hypothesis, strategy_spec: dict, delta: float, n_reps: int,
                   rounds: int, seed, stream_spec: Optional[dict] = None,
                   workers: Optional[int] = None) -> MonteCarloResult:
    """Frequency of ever rejecting a true null within ``rounds`` rounds.

    By default streams are i.i.d. from a full matching witness of the null.
    """
    if stream_spec is None:
        stream_spec = witness_stream_spec(hypothesis)
    tasks = [(hypothesis, strategy_spec, stream_spec, delta, rounds, ss) for ss in _seeds(seed, n_reps)]
    hits = parallel_map(_null_replicate, tasks, workers)
    return MonteCarloResult(int(sum(hits)), n_reps, delta)


def _cs_replicate(task):
    family, stream_spec, true_mu, grid, delta, spec, rounds, ss, opts = task
    X = synthetic_stream(stream_spec, rounds, seed=ss)
    if family == "bounded":
        cs = bounded_mean_cs(X, grid, delta, spec, workers=1, **opts)
    else:
        cs = heavy_tail_cs(X, grid, delta, spec, workers=1, **opts)
    return cs.ever_excluded(grid.nearest(true_mu)), cs.is_nested()


def coverage(family: str, stream_spec: dict, true_mu: float, mu_grid: MuGrid, delta: float,
             strategy_spec: dict, n_reps: int, rounds: int, seed,
             workers: Optional[int] = None, **options) -> MonteCarloResult:
    """Frequency with which the candidate nearest ``true_mu`` is ever excluded.

    ``family`` is ``"bounded"`` or ``"heavy"``; ``options`` go to the
    corresponding confidence-sequence builder. ``nested`` in the result is
    false if any replicate produced non-nested sets.
    """
    if family not in ("bounded", "heavy"):
        raise ValueError(f"unknown family {family!r}")
    tasks = [(family, stream_spec, true_mu, mu_grid, delta, strategy_spec, rounds, ss, options)
             for ss in _seeds(seed, n_reps)]
    out = parallel_map(_cs_replicate, tasks, workers)
    return MonteCarloResult(sum(int(e) for e, _ in out), n_reps, delta, all(n for _, n in out))
