"""Closed-form expression strings for scenario configs.

Supported grammar: numbers, the variables t, x1..x3, s, the binary
operators + - * / ^, unary minus, and the functions abs, sqrt, exp, log,
sin, cos, cosh, sinh.  ``^`` means exponentiation.

Expressions are validated against an AST whitelist before anything is
evaluated, then compiled twice: once to a plain Python callable (fast
path used inside integrators) and once to a sympy expression (used where
closed-form derivatives are needed).
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field

import sympy

from .errors import ExpressionError

VARIABLES = ("t", "x1", "x2", "x3", "s")

_FUNCTIONS = {
    "abs": abs,
    "sqrt": math.sqrt,
    "exp": math.exp,
    "log": math.log,
    "sin": math.sin,
    "cos": math.cos,
    "cosh": math.cosh,
    "sinh": math.sinh,
}

_SYMPY_FUNCTIONS = {
    "abs": sympy.Abs,
    "sqrt": sympy.sqrt,
    "exp": sympy.exp,
    "log": sympy.log,
    "sin": sympy.sin,
    "cos": sympy.cos,
    "cosh": sympy.cosh,
    "sinh": sympy.sinh,
}

_ALLOWED_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_ALLOWED_UNARY = (ast.USub, ast.UAdd)


def _validate(node: ast.AST, source: str) -> None:
    if isinstance(node, ast.Expression):
        _validate(node.body, source)
    elif isinstance(node, ast.BinOp):
        if not isinstance(node.op, _ALLOWED_BINOPS):
            raise ExpressionError(f"operator not supported in {source!r}")
        _validate(node.left, source)
        _validate(node.right, source)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, _ALLOWED_UNARY):
            raise ExpressionError(f"unary operator not supported in {source!r}")
        _validate(node.operand, source)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
            raise ExpressionError(f"unknown function in {source!r}")
        if node.keywords or len(node.args) != 1:
            raise ExpressionError(f"functions take one positional argument: {source!r}")
        _validate(node.args[0], source)
    elif isinstance(node, ast.Name):
        if node.id not in VARIABLES:
            raise ExpressionError(
                f"unknown variable {node.id!r} in {source!r}; allowed: {', '.join(VARIABLES)}"
            )
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise ExpressionError(f"only numeric literals allowed: {source!r}")
    else:
        raise ExpressionError(f"unsupported syntax in {source!r}")


@dataclass(frozen=True)
class Expression:
    """A validated closed-form expression with numeric and symbolic views."""

    source: str
    variables: tuple[str, ...]
    _func: object = field(repr=False)
    _sympy: sympy.Expr = field(repr=False)

    def __call__(self, **values: float) -> float:
        return self._func(**{name: values.get(name, 0.0) for name in self.variables})

    @property
    def sympy_expr(self) -> sympy.Expr:
        return self._sympy

    def free_variables(self) -> tuple[str, ...]:
        present = {str(sym) for sym in self._sympy.free_symbols}
        return tuple(v for v in self.variables if v in present)


def compile_expression(source: str, variables: tuple[str, ...] = VARIABLES) -> Expression:
    """Parse, validate and compile an expression string.

    Raises ExpressionError on any syntax outside the supported grammar.
    """
    if not isinstance(source, str) or not source.strip():
        raise ExpressionError("empty expression")
    normalized = source.replace("^", "**")
    try:
        tree = ast.parse(normalized, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse expression {source!r}: {exc.msg}") from exc
    _validate(tree, source)
    for name in {n.id for n in ast.walk(tree) if isinstance(n, ast.Name)}:
        if name in _FUNCTIONS:
            continue
        if name not in variables:
            raise ExpressionError(f"variable {name!r} not allowed here (allowed: {variables})")

    code = compile(tree, filename="<expression>", mode="eval")
    namespace = dict(_FUNCTIONS)

    def func(**values: float) -> float:
        return eval(code, {"__builtins__": {}}, {**namespace, **values})  # noqa: S307 - AST whitelisted above

    symbols = {name: sympy.Symbol(name, real=True) for name in variables}
    sympy_expr = sympy.sympify(normalized, locals={**_SYMPY_FUNCTIONS, **symbols})
    return Expression(source=source, variables=variables, _func=func, _sympy=sympy_expr)
