class EvclassError(Exception):
    """Base class for errors raised by this package."""


class NotInHullError(EvclassError, ValueError):
    """The target point is not a convex combination of the cloud."""


class EmptyHypothesisError(EvclassError, ValueError):
    """No probability measure satisfies the constraints."""


class NotProperError(EvclassError, ValueError):
    """An operation requiring a properly constrained hypothesis got something else."""


class NoWitnessError(EvclassError, RuntimeError):
    """The witness LP was infeasible for a hypothesis that should admit one."""


class NotAnEVariableError(EvclassError, ValueError):
    """A tabulated function violates an expectation constraint."""


class InfeasibleLambdaError(EvclassError, ValueError):
    """A betting parameter lies outside the dual feasibility set."""
