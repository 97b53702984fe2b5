"""Tiny arithmetic expressions over x and y for configuration files.

Boundary values like a sinusoidal edge temperature are written as strings
("500*sin(pi*x/2)") in run configurations. Only arithmetic, comparisons
and a whitelist of math functions are allowed; names outside the
whitelist are rejected at compile time.
"""

from __future__ import annotations

import ast
from typing import Callable

import numpy as np

__all__ = ["compile_expr", "ExprError"]


class ExprError(ValueError):
    """Rejected or malformed configuration expression."""


_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "minimum": np.minimum,
    "maximum": np.maximum,
}
_CONSTS = {"pi": np.pi, "e": np.e}
_ALLOWED_NAMES = set(_FUNCS) | set(_CONSTS) | {"x", "y"}

_ALLOWED_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Compare, ast.BoolOp,
    ast.Name, ast.Load, ast.Constant, ast.Call, ast.IfExp,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.Mod, ast.USub, ast.UAdd,
    ast.Lt, ast.LtE, ast.Gt, ast.GtE, ast.Eq, ast.NotEq, ast.And, ast.Or,
)


def compile_expr(source: str) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Compile an expression of x and y into a numpy-vectorized callable."""
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ExprError(f"invalid expression {source!r}: {exc.msg}") from None
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ExprError(
                f"expression {source!r} uses disallowed syntax: {type(node).__name__}"
            )
        if isinstance(node, ast.Name) and node.id not in _ALLOWED_NAMES:
            raise ExprError(f"expression {source!r} uses unknown name {node.id!r}")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
                raise ExprError(f"expression {source!r} calls a non-whitelisted function")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ExprError(f"expression {source!r} uses a non-numeric constant")
    code = compile(tree, "<config-expr>", "eval")
    namespace = {**_FUNCS, **_CONSTS}

    def fn(x, y):
        return eval(code, {"__builtins__": {}}, {**namespace, "x": x, "y": y})

    fn.source = source  # type: ignore[attr-defined]
    return fn
