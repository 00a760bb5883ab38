"""Polynomial constraint expressions.

Grammar: variables ``x1 .. xn`` (``x`` is accepted when n == 1), numeric
constants, ``+ - *``, parentheses and ``^`` (or ``**``) with a non-negative
integer exponent. Anything else is rejected at parse time.
"""

from __future__ import annotations

import ast
import re
from typing import Callable

import numpy as np

_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply}


class ExpressionError(ValueError):
    pass


def _check(node: ast.AST, names: set[str]) -> None:
    if isinstance(node, ast.Expression):
        _check(node.body, names)
    elif isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Pow):
            exp = node.right
            if not (isinstance(exp, ast.Constant) and isinstance(exp.value, int)
                    and not isinstance(exp.value, bool) and exp.value >= 0):
                raise ExpressionError("exponents must be non-negative integer literals")
        elif type(node.op) not in _BINOPS:
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
        _check(node.left, names)
        _check(node.right, names)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.USub, ast.UAdd)):
            raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
        _check(node.operand, names)
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"bad constant {node.value!r}")
    elif isinstance(node, ast.Name):
        if node.id not in names:
            raise ExpressionError(f"unknown variable {node.id!r}")
    else:
        raise ExpressionError(f"syntax {type(node).__name__} not allowed")


def _eval(node: ast.AST, env: dict[str, np.ndarray], k: int) -> np.ndarray:
    if isinstance(node, ast.BinOp):
        left = _eval(node.left, env, k)
        if isinstance(node.op, ast.Pow):
            return left ** node.right.value
        return _BINOPS[type(node.op)](left, _eval(node.right, env, k))
    if isinstance(node, ast.UnaryOp):
        val = _eval(node.operand, env, k)
        return -val if isinstance(node.op, ast.USub) else val
    if isinstance(node, ast.Constant):
        return np.full(k, float(node.value))
    return env[node.id]


def parse_expression(text: str, n_vars: int) -> Callable[[np.ndarray], np.ndarray]:
    """Compile ``text`` into a vectorised function of an ``(k, n_vars)`` array."""
    names = {f"x{i + 1}" for i in range(n_vars)}
    if n_vars == 1:
        names.add("x")
    src = re.sub(r"\^", "**", text)
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    _check(tree, names)
    body = tree.body

    def fn(X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, n_vars)
        env = {f"x{i + 1}": X[:, i] for i in range(n_vars)}
        if n_vars == 1:
            env["x"] = X[:, 0]
        return np.asarray(_eval(body, env, X.shape[0]), dtype=float)

    fn.expression = text
    return fn
