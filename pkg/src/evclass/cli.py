"""Command-line front end.

Subcommands: ``classify``, ``test``, ``cs``, ``verify-optimality`` and
``simulate``. Every option can also come from a JSON file given with
``--config``; command-line flags win over file values and unknown file keys
are rejected. Exit codes: 0 success, 1 usage error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import config as tolerance_config
from .dual import coordinate_maxima, enumerate_vertices, maximal_majorizer, verify_in_dual_class
from .exceptions import EvclassError
from .expr import ExpressionError
from .game import run_test
from .hypothesis import (Classification, Hypothesis, SampleGrid, ConstraintSpec, load_hypothesis,
                         reduce_to_minimal, support_restriction)
from .meanest import MuGrid, bounded_mean_cs, heavy_tail_cs
from .simulation import coverage, type_one_error
from .streams import read_stream, synthetic_stream

__all__ = ["RunConfig", "UsageError", "parse_config", "run_command", "main"]

EXIT_OK, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    hypothesis: Any = None
    strategy: Any = None
    delta: float = 0.05
    stream: Optional[str] = None
    synthetic: Any = None
    mu_grid: Optional[str] = None
    seed: Optional[int] = None
    output: Optional[str] = None
    tolerances: dict = field(default_factory=dict)
    rounds: Optional[int] = None
    replicates: int = 100
    trials: int = 100
    family: str = "bounded"
    mode: str = "type-i"
    true_mu: Optional[float] = None
    lo: float = 0.0
    hi: float = 1.0
    second_moment: float = 1.0
    workers: Optional[int] = None


# options each subcommand understands (config-file keys and flags alike)
_COMMON = {"tolerances", "output", "workers"}
_KEYS = {
    "classify": {"hypothesis"},
    "test": {"hypothesis", "strategy", "delta", "stream", "synthetic", "seed", "rounds"},
    "cs": {"family", "mu_grid", "delta", "strategy", "stream", "synthetic", "seed", "rounds",
           "lo", "hi", "second_moment"},
    "verify-optimality": {"hypothesis", "trials", "seed"},
    "simulate": {"mode", "hypothesis", "strategy", "delta", "synthetic", "seed", "rounds",
                 "replicates", "family", "mu_grid", "true_mu", "lo", "hi", "second_moment"},
}


def _build_parser() -> _Parser:
    p = _Parser(prog="evclass", description="Sequential testing by betting with dual e-classes.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    help_text = {
        "hypothesis": "hypothesis JSON file or inline JSON",
        "strategy": "strategy JSON file or inline JSON",
        "delta": "significance level in (0, 1)",
        "stream": "CSV file of observations (header required)",
        "synthetic": "synthetic stream spec, JSON file or inline JSON",
        "seed": "integer seed for synthetic streams and random trials",
        "rounds": "number of rounds",
        "mu_grid": "candidate means, lo:hi:step or a comma list",
        "family": "bounded or heavy",
        "lo": "lower end of the bounded sample space",
        "hi": "upper end of the bounded sample space",
        "second_moment": "bound on E[X^2] for the heavy-tailed case",
        "trials": "number of random trials",
        "replicates": "number of Monte Carlo replicates",
        "mode": "type-i or coverage",
        "true_mu": "true mean for coverage runs",
    }
    types = {"delta": float, "seed": int, "rounds": int, "lo": float, "hi": float,
             "second_moment": float, "trials": int, "replicates": int, "true_mu": float}
    choices = {"family": ["bounded", "heavy"], "mode": ["type-i", "coverage"]}
    for name, keys in _KEYS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON file with option values")
        sp.add_argument("--output", "-o", help="output CSV path")
        sp.add_argument("--workers", type=int, help="worker processes (capped by EVCLASS_THREADS)")
        sp.add_argument("--tolerance", action="append", metavar="NAME=VALUE", dest="tolerances",
                        help="override a numeric tolerance")
        for key in sorted(keys):
            sp.add_argument("--" + key.replace("_", "-"), dest=key, type=types.get(key, str),
                            choices=choices.get(key), help=help_text[key])
    return p


def _json_arg(value, what: str):
    if value is None or isinstance(value, (dict, list)):
        return value
    text = str(value).strip()
    if text.startswith("{") or text.startswith("["):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{what}: invalid JSON ({exc.msg})") from None
    path = Path(text)
    if not path.is_file():
        raise UsageError(f"{what}: no such file {text!r}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what}: invalid JSON in {text} ({exc.msg})") from None


def _parse_tolerances(items) -> dict:
    if isinstance(items, dict):
        out = dict(items)
    else:
        out = {}
        for item in items or []:
            name, sep, value = item.partition("=")
            if not sep:
                raise UsageError(f"tolerance {item!r} is not NAME=VALUE")
            out[name.strip()] = value
    known = {f.name for f in fields(tolerance_config.Tolerances)}
    for name, value in out.items():
        if name not in known:
            raise UsageError(f"unknown tolerance {name!r}")
        try:
            out[name] = float(value)
        except (TypeError, ValueError):
            raise UsageError(f"tolerance {name!r} must be a number") from None
    return out


def parse_config(argv: Sequence[str]) -> RunConfig:
    """Turn command-line arguments (plus an optional config file) into a RunConfig.

    Raises UsageError naming the offending key or flag.
    """
    ns = _build_parser().parse_args(list(argv))
    cmd = ns.command
    allowed = _KEYS[cmd] | _COMMON
    values: dict = {}
    if ns.config:
        cfg = _json_arg(ns.config, "--config")
        if not isinstance(cfg, dict):
            raise UsageError("--config must hold a JSON object")
        for key, value in cfg.items():
            norm = key.replace("-", "_")
            if norm not in allowed:
                raise UsageError(f"unknown config key {key!r} for {cmd}")
            values[norm] = value
    for key in allowed:
        flag = getattr(ns, key, None)
        if flag is not None:
            values[key] = flag
    cfg = RunConfig(command=cmd)
    for key, value in values.items():
        setattr(cfg, key, value)
    cfg.tolerances = _parse_tolerances(cfg.tolerances)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if not isinstance(cfg.delta, (int, float)) or not 0.0 < float(cfg.delta) < 1.0:
        raise UsageError(f"delta must lie in (0, 1), got {cfg.delta}")
    for key in ("rounds", "replicates", "trials"):
        v = getattr(cfg, key)
        if v is not None and (not isinstance(v, int) or v < 1):
            raise UsageError(f"{key} must be a positive integer")
    if cfg.workers is not None and (not isinstance(cfg.workers, int) or cfg.workers < 1):
        raise UsageError("workers must be a positive integer")
    cmd = cfg.command
    if cmd in ("classify", "test") and cfg.hypothesis is None:
        raise UsageError(f"{cmd} needs --hypothesis")
    if cmd in ("test", "cs"):
        if (cfg.stream is None) == (cfg.synthetic is None):
            raise UsageError(f"{cmd} needs exactly one of --stream and --synthetic")
    if cfg.synthetic is not None:
        spec = _json_arg(cfg.synthetic, "synthetic")
        if not isinstance(spec, dict):
            raise UsageError("synthetic must be a JSON object")
        if cfg.seed is None and "seed" not in spec:
            raise UsageError("synthetic streams need a seed")
        if cmd != "simulate" and cfg.rounds is None and "length" not in spec:
            raise UsageError("synthetic streams need --rounds or a 'length' key")
    if cmd == "cs" and cfg.family not in ("bounded", "heavy"):
        raise UsageError(f"family must be bounded or heavy, got {cfg.family!r}")
    if cmd == "simulate":
        if cfg.mode not in ("type-i", "coverage"):
            raise UsageError(f"mode must be type-i or coverage, got {cfg.mode!r}")
        if cfg.seed is None:
            raise UsageError("simulate needs --seed")
        if cfg.rounds is None:
            raise UsageError("simulate needs --rounds")
        if cfg.mode == "type-i" and cfg.hypothesis is None:
            raise UsageError("simulate type-i needs --hypothesis")
        if cfg.mode == "coverage":
            if cfg.true_mu is None or cfg.synthetic is None or cfg.mu_grid is None:
                raise UsageError("simulate coverage needs --true-mu, --synthetic and --mu-grid")


def _hypothesis(cfg: RunConfig) -> Hypothesis:
    spec = _json_arg(cfg.hypothesis, "hypothesis")
    return load_hypothesis(spec)


def _strategy(cfg: RunConfig) -> dict:
    spec = _json_arg(cfg.strategy, "strategy") if cfg.strategy is not None else {"kind": "ftl"}
    if not isinstance(spec, dict):
        raise UsageError("strategy must be a JSON object")
    return spec


def _observations(cfg: RunConfig, hyp: Optional[Hypothesis] = None) -> np.ndarray:
    if cfg.stream is not None:
        return read_stream(cfg.stream)
    spec = _json_arg(cfg.synthetic, "synthetic")
    return synthetic_stream(spec, length=cfg.rounds, seed=cfg.seed, hypothesis=hyp)


def _mu_grid(cfg: RunConfig) -> MuGrid:
    if cfg.mu_grid is None:
        return MuGrid.bounded_default(cfg.lo, cfg.hi) if cfg.family == "bounded" else MuGrid.heavy_default()
    text = cfg.mu_grid if isinstance(cfg.mu_grid, str) else ",".join(str(v) for v in cfg.mu_grid)
    return MuGrid.parse(text)


def _cmd_classify(cfg: RunConfig, out) -> int:
    hyp = _hypothesis(cfg)
    cls = hyp.classification
    print(f"classification: {cls.value}", file=out)
    if cls is Classification.PROPER and hyp.m_slack == 0:
        print(f"minimal_dimension: {reduce_to_minimal(hyp).m_tight}", file=out)
    elif cls is Classification.FINITELY_NON_PROPER:
        keep, restricted = support_restriction(hyp)
        print(f"support_size: {keep.size}", file=out)
        print(f"minimal_dimension: {reduce_to_minimal(restricted).m_tight}", file=out)
    else:
        print(f"minimal_dimension: {hyp.m_tight}+{hyp.m_slack}", file=out)
    return EXIT_OK


def _cmd_test(cfg: RunConfig, out) -> int:
    hyp = _hypothesis(cfg)
    X = _observations(cfg, hyp)
    verdict, traj = run_test(X, hyp, _strategy(cfg), cfg.delta, max_rounds=cfg.rounds)
    print(f"verdict: {verdict}", file=out)
    if cfg.output:
        traj.to_csv(cfg.output)
    return EXIT_OK


def _cmd_cs(cfg: RunConfig, out) -> int:
    X = _observations(cfg)
    if cfg.rounds is not None:
        X = X[:cfg.rounds]
    grid = _mu_grid(cfg)
    spec = _strategy(cfg)
    if cfg.family == "bounded":
        cs = bounded_mean_cs(X, grid, cfg.delta, spec, lo=cfg.lo, hi=cfg.hi, workers=cfg.workers)
    else:
        cs = heavy_tail_cs(X, grid, cfg.delta, spec, second_moment=cfg.second_moment, workers=cfg.workers)
    if cfg.output:
        cs.to_csv(cfg.output)
        members = cs.members(cs.rounds)
        span = f"[{float(members.min())!r}, {float(members.max())!r}]" if members.size else "empty"
        print(f"rounds: {cs.rounds}  final_set: {members.size} candidates {span}", file=out)
    else:
        cs.to_csv(out)
    return EXIT_OK


def _default_oracle_hypothesis() -> Hypothesis:
    grid = SampleGrid.explicit([[0.0], [0.5], [1.0]])
    return Hypothesis(grid, ConstraintSpec.from_expressions(["0.5 - x"]))


def _cmd_verify(cfg: RunConfig, out) -> int:
    hyp = _hypothesis(cfg) if cfg.hypothesis is not None else _default_oracle_hypothesis()
    rng = np.random.default_rng(cfg.seed if cfg.seed is not None else 0)
    V = enumerate_vertices(hyp)
    tol = tolerance_config.get_tolerances()
    worst_resid = 0.0
    worst_gap = 0.0
    failures = 0
    for _ in range(cfg.trials):
        u = rng.random(len(hyp.grid))
        E0 = u / max(float(np.max(V @ u)), 1e-300) * rng.uniform(0.05, 1.0)
        M = maximal_majorizer(E0, hyp, vertices=V).values
        gap = float(np.max(np.abs(coordinate_maxima(M, hyp, vertices=V) - M)))
        fit = verify_in_dual_class(M, hyp)
        worst_resid = max(worst_resid, fit.residual)
        worst_gap = max(worst_gap, gap)
        if np.any(M < E0 - tol.feasibility) or gap > tol.dual_residual or not fit.in_class:
            failures += 1
    print(f"trials: {cfg.trials}", file=out)
    print(f"max_residual: {worst_resid!r}", file=out)
    print(f"max_maximality_gap: {worst_gap!r}", file=out)
    print(f"failures: {failures}", file=out)
    return EXIT_OK if failures == 0 else EXIT_VERIFY


def _cmd_simulate(cfg: RunConfig, out) -> int:
    spec = _strategy(cfg)
    if cfg.mode == "type-i":
        hyp = _hypothesis(cfg)
        stream = _json_arg(cfg.synthetic, "synthetic") if cfg.synthetic is not None else None
        res = type_one_error(hyp, spec, cfg.delta, cfg.replicates, cfg.rounds, cfg.seed,
                             stream_spec=stream, workers=cfg.workers)
        label = "type_i_rate"
    else:
        stream = _json_arg(cfg.synthetic, "synthetic")
        opts = ({"lo": cfg.lo, "hi": cfg.hi} if cfg.family == "bounded"
                else {"second_moment": cfg.second_moment})
        res = coverage(cfg.family, stream, cfg.true_mu, _mu_grid(cfg), cfg.delta, spec,
                       cfg.replicates, cfg.rounds, cfg.seed, workers=cfg.workers, **opts)
        label = "exclusion_rate"
    print(f"replicates: {res.n}", file=out)
    print(f"{label}: {res.rate!r}", file=out)
    print(f"standard_error: {res.se!r}", file=out)
    print(f"bound: {res.bound!r}", file=out)
    if cfg.mode == "coverage":
        print(f"nested: {str(res.nested).lower()}", file=out)
    return EXIT_OK if res.passed else EXIT_VERIFY


_COMMANDS = {
    "classify": _cmd_classify,
    "test": _cmd_test,
    "cs": _cmd_cs,
    "verify-optimality": _cmd_verify,
    "simulate": _cmd_simulate,
}


def run_command(cfg: RunConfig, out=None) -> int:
    out = sys.stdout if out is None else out
    with tolerance_config.tolerances(**cfg.tolerances):
        return _COMMANDS[cfg.command](cfg, out)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        return run_command(cfg)
    except UsageError as exc:
        print(f"evclass: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EvclassError, ExpressionError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"evclass: error: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
