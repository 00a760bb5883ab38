"""Observation streams: CSV files and seeded synthetic generators.

CSV files are UTF-8, comma separated, with a mandatory header. Observation
columns are named ``x`` (one dimension) or ``x1 .. xn``; when a file carries
other columns too (a trajectory, say) only those are read back.
"""

from __future__ import annotations

import csv
import io
import re
from pathlib import Path
from typing import Optional, Union

import numpy as np

__all__ = [
    "observation_columns",
    "format_float",
    "read_stream",
    "write_stream",
    "synthetic_stream",
    "DISTRIBUTIONS",
]

_OBS = re.compile(r"^x\d*$")
DISTRIBUTIONS = ("discrete", "bernoulli", "uniform", "normal", "witness")


def observation_columns(n: int) -> list[str]:
    return ["x"] if n == 1 else [f"x{i + 1}" for i in range(n)]


def format_float(v: float) -> str:
    """Shortest round-trip text for a float; infinities as ``inf``/``-inf``."""
    return repr(float(v))


def _open_text(target, mode):
    if isinstance(target, (str, Path)):
        return open(target, mode, newline="", encoding="utf-8")
    return target


def read_stream(source: Union[str, Path, io.TextIOBase]) -> np.ndarray:
    """Read observations as a ``(T, n)`` float array.

    Raises ValueError on a missing header, ragged rows or non-numeric cells.
    """
    fh = _open_text(source, "r")
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise ValueError("stream CSV needs a header row")
        header = [h.strip() for h in header]
        try:
            [float(h) for h in header]
        except ValueError:
            pass
        else:
            raise ValueError("stream CSV needs a header row (first row is numeric)")
        cols = [i for i, h in enumerate(header) if _OBS.match(h)] or list(range(len(header)))
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(row[i]) for i in cols])
            except ValueError:
                raise ValueError(f"line {lineno}: non-numeric observation") from None
    finally:
        if isinstance(source, (str, Path)):
            fh.close()
    return np.array(rows, dtype=float).reshape(-1, len(cols))


def write_stream(target, observations) -> None:
    X = np.asarray(observations, dtype=float)
    X = X.reshape(X.shape[0], -1) if X.ndim else X.reshape(1, 1)
    fh = _open_text(target, "w")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(observation_columns(X.shape[1]))
        for row in X:
            w.writerow([format_float(v) for v in row])
    finally:
        if isinstance(target, (str, Path)):
            fh.close()


_SPEC_KEYS = {
    "discrete": {"values", "probs"},
    "bernoulli": {"p"},
    "uniform": {"lo", "hi"},
    "normal": {"mean", "sd"},
    "witness": set(),
}


def synthetic_stream(spec: dict, length: Optional[int] = None, seed=None, hypothesis=None) -> np.ndarray:
    """Draw an i.i.d. stream from a named distribution.

    ``spec`` holds ``distribution`` plus its parameters, and optionally
    ``length`` and ``seed`` (arguments override them). ``witness`` samples grid
    points of ``hypothesis`` with the weights of a full matching witness.
    ``seed`` may be an int or a ``numpy.random.SeedSequence``.
    """
    spec = dict(spec)
    dist = spec.pop("distribution", None)
    if dist not in _SPEC_KEYS:
        raise ValueError(f"unknown distribution {dist!r}")
    length = int(spec.pop("length", 0) if length is None else length)
    spec_seed = spec.pop("seed", None)
    seed = spec_seed if seed is None else seed
    if seed is None:
        raise ValueError("synthetic streams need a seed")
    unknown = set(spec) - _SPEC_KEYS[dist]
    if unknown:
        raise ValueError(f"unknown key {sorted(unknown)[0]!r} for distribution {dist!r}")
    rng = np.random.default_rng(seed)

    if dist == "discrete":
        values = np.asarray(spec["values"], dtype=float)
        values = values.reshape(values.shape[0], -1)
        probs = np.asarray(spec["probs"], dtype=float)
        if probs.shape[0] != values.shape[0] or np.any(probs < 0) or not np.isclose(probs.sum(), 1.0):
            raise ValueError("probs must be a distribution over values")
        return values[rng.choice(values.shape[0], size=length, p=probs / probs.sum())]
    if dist == "bernoulli":
        return (rng.random(length) < float(spec["p"])).astype(float)[:, None]
    if dist == "uniform":
        return rng.uniform(float(spec.get("lo", 0.0)), float(spec.get("hi", 1.0)), length)[:, None]
    if dist == "normal":
        return rng.normal(float(spec.get("mean", 0.0)), float(spec.get("sd", 1.0)), length)[:, None]

    if hypothesis is None:
        raise ValueError("witness streams need a hypothesis")
    from .hypothesis import matching_witness

    w = matching_witness(hypothesis)
    w = np.maximum(w, 0.0)
    return hypothesis.grid.points[rng.choice(w.size, size=length, p=w / w.sum())]
