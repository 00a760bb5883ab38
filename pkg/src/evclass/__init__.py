"""Sequential testing by betting with dual e-classes.

Finite-grid hypotheses defined by moment constraints, the affine e-variables
``1 - lam . phi`` that are optimal for them, betting strategies over those
e-variables, the resulting sequential tests, and confidence sequences for
bounded and heavy-tailed means.
"""

from .betting import make_strategy, next_lambda, update
from .config import get_tolerances, set_tolerances, tolerances
from .dual import (LambdaVector, TabulatedEVariable, coordinate_maxima, enumerate_vertices,
                   evaluate_e, heavy_tail_feasible, lambda_feasible, lambda_interval,
                   maximal_majorizer, verify_in_dual_class)
from .exceptions import (EmptyHypothesisError, EvclassError, InfeasibleLambdaError,
                         NoWitnessError, NotAnEVariableError, NotInHullError, NotProperError)
from .game import Game, GameState, Trajectory, Verdict, play_round, run_test, ville_reject
from .geometry import PointCloud, caratheodory_weights, zero_in_relint
from .hypothesis import (Classification, ConstraintSpec, Hypothesis, SampleGrid, classify,
                         load_hypothesis, matching_witness, reduce_to_minimal, support_restriction)
from .meanest import ConfidenceSequence, MuGrid, boundary_set_u, bounded_mean_cs, heavy_tail_cs
from .simulation import coverage, type_one_error

__version__ = "0.1.0"

__all__ = [
    "Classification", "ConfidenceSequence", "ConstraintSpec", "EmptyHypothesisError",
    "EvclassError", "Game", "GameState", "Hypothesis", "InfeasibleLambdaError", "LambdaVector",
    "MuGrid", "NoWitnessError", "NotAnEVariableError", "NotInHullError", "NotProperError",
    "PointCloud", "SampleGrid", "TabulatedEVariable", "Trajectory", "Verdict",
    "boundary_set_u", "bounded_mean_cs", "caratheodory_weights", "classify",
    "coordinate_maxima", "coverage", "enumerate_vertices", "evaluate_e", "get_tolerances",
    "heavy_tail_cs", "heavy_tail_feasible", "lambda_feasible", "lambda_interval",
    "load_hypothesis", "make_strategy", "matching_witness", "maximal_majorizer", "next_lambda",
    "play_round", "reduce_to_minimal", "run_test", "set_tolerances", "support_restriction",
    "tolerances", "type_one_error", "update", "verify_in_dual_class", "ville_reject",
    "zero_in_relint",
]
