"""Restricted arithmetic expressions for config files.

Custom relations and initial/forcing fields are written as expressions such
as ``(1 + d)**(-1.5)`` or ``cos(pi*y/2)``.  Only numeric literals, the
variables handed in, arithmetic operators and a fixed set of numpy ufuncs
are accepted; anything else is rejected before evaluation.
"""

from __future__ import annotations

import ast
from typing import Iterable, Mapping

import numpy as np

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "tanh": np.tanh,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "arcsinh": np.arcsinh,
    "asinh": np.arcsinh,
    "minimum": np.minimum,
    "maximum": np.maximum,
    "pos": lambda x: np.maximum(x, 0.0),
    "where": np.where,
}
CONSTANTS = {"pi": np.pi, "e": np.e}

_ALLOWED_NODES = (
    ast.Expression,
    ast.BinOp,
    ast.UnaryOp,
    ast.Call,
    ast.Name,
    ast.Load,
    ast.Constant,
    ast.Compare,
    ast.Add,
    ast.Sub,
    ast.Mult,
    ast.Div,
    ast.Pow,
    ast.USub,
    ast.UAdd,
    ast.Lt,
    ast.LtE,
    ast.Gt,
    ast.GtE,
)


class ExpressionError(ValueError):
    pass


class Expression:
    """A validated expression in a fixed set of variable names."""

    def __init__(self, source: str, variables: Iterable[str]):
        self.source = source.strip()
        self.variables = tuple(variables)
        try:
            tree = ast.parse(self.source, mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse expression {source!r}: {exc.msg}") from None
        allowed = set(self.variables) | set(CONSTANTS) | set(FUNCTIONS)
        for node in ast.walk(tree):
            if not isinstance(node, _ALLOWED_NODES):
                raise ExpressionError(f"{type(node).__name__} not allowed in {source!r}")
            if isinstance(node, ast.Name) and node.id not in allowed:
                raise ExpressionError(f"unknown name {node.id!r} in {source!r}")
            if isinstance(node, ast.Call):
                if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
                    raise ExpressionError(f"only whitelisted functions may be called in {source!r}")
                if node.keywords:
                    raise ExpressionError(f"keyword arguments not allowed in {source!r}")
            if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
                raise ExpressionError(f"non-numeric literal in {source!r}")
        self._code = compile(tree, "<expr>", "eval")

    def __call__(self, **values) -> np.ndarray:
        scope: dict = {"__builtins__": {}}
        scope.update(CONSTANTS)
        scope.update(FUNCTIONS)
        scope.update(values)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return eval(self._code, scope)  # noqa: S307 - AST whitelisted above

    def __repr__(self) -> str:
        return f"Expression({self.source!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Expression) and other.source == self.source

    def __hash__(self) -> int:
        return hash(self.source)


def evaluate(source: str, variables: Mapping[str, object]) -> np.ndarray:
    return Expression(source, variables.keys())(**variables)
