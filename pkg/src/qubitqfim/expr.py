"""Tiny arithmetic expression language for scalar fields over parameters.

Grammar: numbers, parameter names, ``+ - * /``, ``^`` for powers,
parentheses, and the functions sin, cos, tan, exp, log, sqrt, abs, plus the
constant ``pi``. Expressions are parsed with :mod:`ast` and only the nodes
listed above are accepted.
"""

from __future__ import annotations

import ast
import math
import operator
from typing import Callable

from qubitqfim.linalg import DomainError

FUNCTIONS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "abs": abs,
}
CONSTANTS = {"pi": math.pi}

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}

GRAMMAR_HELP = (
    "Expressions use + - * / ^, parentheses, numbers, parameter names (x, y), "
    "the constant pi and the functions " + ", ".join(sorted(FUNCTIONS)) + "."
)


class ExpressionError(ValueError):
    pass


class Expression:
    """A parsed expression, callable on anything with mapping-style lookup."""

    def __init__(self, source: str):
        self.source = source.strip()
        try:
            # ^ must bind like a power, not like Python's low-precedence xor
            tree = ast.parse(self.source.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {source!r}: {exc.msg}") from None
        self._body = tree.body
        self.names = frozenset(self._check(self._body))

    def _check(self, node) -> set[str]:
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return set()
        if isinstance(node, ast.Name):
            return set() if node.id in CONSTANTS else {node.id}
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return self._check(node.left) | self._check(node.right)
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return self._check(node.operand)
        if (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in FUNCTIONS
            and len(node.args) == 1
            and not node.keywords
        ):
            return self._check(node.args[0])
        raise ExpressionError(f"unsupported syntax in {self.source!r}: {ast.dump(node)}")

    def _eval(self, node, env) -> float:
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id in CONSTANTS:
                return CONSTANTS[node.id]
            return float(env[node.id])
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](self._eval(node.operand, env))
        return FUNCTIONS[node.func.id](self._eval(node.args[0], env))

    def __call__(self, env) -> float:
        try:
            return float(self._eval(self._body, env))
        except KeyError as exc:
            raise ExpressionError(f"unknown parameter {exc.args[0]!r} in {self.source!r}") from None
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise DomainError(f"{self.source!r} cannot be evaluated at {env!r}: {exc}") from None

    def __repr__(self):
        return f"Expression({self.source!r})"


def split_top_level(text: str, sep: str = ",") -> list[str]:
    """Split on ``sep`` outside parentheses."""
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == sep and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    return [p.strip() for p in parts]
