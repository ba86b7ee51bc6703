"""Minimal arithmetic-expression parser for config-supplied coefficients.

Grammar: numbers, the allowed variables, ``+ - * / ^`` (also ``**``),
unary minus, and the functions abs, sqrt, exp, sin, min, max.  Expressions
compile to numpy-vectorized callables, so parsed coefficients evaluate on
whole path ensembles at once.
"""

from __future__ import annotations

import ast
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidParameterError

_FUNCTIONS = {
    "abs": np.abs,
    "sqrt": np.sqrt,
    "exp": np.exp,
    "sin": np.sin,
    "min": np.minimum,
    "max": np.maximum,
}

_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply,
           ast.Div: np.divide, ast.Pow: np.power}
_UNARY = {ast.USub: np.negative, ast.UAdd: lambda v: v}


def _validate(node: ast.AST, variables: Sequence[str], source: str) -> None:
    if isinstance(node, ast.Expression):
        _validate(node.body, variables, source)
    elif isinstance(node, ast.BinOp):
        if type(node.op) not in _BINOPS:
            raise InvalidParameterError(
                f"operator {type(node.op).__name__} not allowed in {source!r}")
        _validate(node.left, variables, source)
        _validate(node.right, variables, source)
    elif isinstance(node, ast.UnaryOp):
        if type(node.op) not in _UNARY:
            raise InvalidParameterError(
                f"operator {type(node.op).__name__} not allowed in {source!r}")
        _validate(node.operand, variables, source)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
            raise InvalidParameterError(
                f"only {sorted(_FUNCTIONS)} may be called in {source!r}")
        if node.keywords:
            raise InvalidParameterError(f"keyword arguments not allowed in {source!r}")
        want = 2 if node.func.id in ("min", "max") else 1
        if len(node.args) != want:
            raise InvalidParameterError(
                f"{node.func.id} takes {want} argument(s) in {source!r}")
        for a in node.args:
            _validate(a, variables, source)
    elif isinstance(node, ast.Name):
        if node.id not in variables:
            raise InvalidParameterError(
                f"unknown variable {node.id!r} in {source!r} "
                f"(allowed: {', '.join(variables)})")
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise InvalidParameterError(
                f"only numeric constants allowed in {source!r}")
    else:
        raise InvalidParameterError(
            f"syntax element {type(node).__name__} not allowed in {source!r}")


def _build(node: ast.AST) -> Callable[[dict], object]:
    if isinstance(node, ast.Expression):
        return _build(node.body)
    if isinstance(node, ast.BinOp):
        op = _BINOPS[type(node.op)]
        left, right = _build(node.left), _build(node.right)
        return lambda env: op(left(env), right(env))
    if isinstance(node, ast.UnaryOp):
        op = _UNARY[type(node.op)]
        operand = _build(node.operand)
        return lambda env: op(operand(env))
    if isinstance(node, ast.Call):
        fn = _FUNCTIONS[node.func.id]
        args = [_build(a) for a in node.args]
        return lambda env: fn(*(a(env) for a in args))
    if isinstance(node, ast.Name):
        name = node.id
        return lambda env: env[name]
    if isinstance(node, ast.Constant):
        value = float(node.value)
        return lambda env: value
    raise AssertionError("validated tree contains no other node kinds")


def compile_expression(text: str, variables: Sequence[str]) -> Callable:
    """Compile an expression over the given variables to a vectorized callable.

    Returns a function taking one positional argument per variable, in order.
    """
    source = text.replace("^", "**")
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise InvalidParameterError(
            f"syntax error in {text!r} at line {exc.lineno}, column {exc.offset}") from exc
    _validate(tree, variables, text)
    body = _build(tree)
    names = tuple(variables)

    def fn(*args):
        if len(args) != len(names):
            raise TypeError(f"expression takes {len(names)} arguments")
        return body(dict(zip(names, args)))

    fn.__name__ = f"expr_{'_'.join(names)}"
    fn.source = text
    return fn
