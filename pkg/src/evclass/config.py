"""Global numeric tolerances.

Every threshold used for classification, rank decisions and LP feasibility
lives here so that a single override changes the behaviour everywhere.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-9
    rank: float = 1e-10
    relint: float = 1e-10
    pivot: float = 1e-10
    dual_residual: float = 1e-8


_current = Tolerances()


def get_tolerances() -> Tolerances:
    return _current


def set_tolerances(**overrides: float) -> Tolerances:
    """Replace selected tolerances globally and return the new set."""
    global _current
    known = {f.name for f in fields(Tolerances)}
    for key in overrides:
        if key not in known:
            raise KeyError(f"unknown tolerance {key!r}")
    _current = replace(_current, **overrides)
    return _current


@contextmanager
def tolerances(**overrides: float):
    global _current
    saved = _current
    try:
        yield set_tolerances(**overrides)
    finally:
        _current = saved
