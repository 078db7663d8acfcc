"""Tiny expression grammar for time-dependent rates in JSON model files.

Allowed: numbers, ``t``, ``pi``, ``e``, ``inf``, ``+ - * / **``, and the
functions ``exp log sqrt min max abs``.  Tabulated functions are given as
``{"t": [...], "values": [...]}`` and linearly interpolated.
"""
from __future__ import annotations

import ast
import math
import operator
from typing import Callable

import numpy as np

from .errors import DivpropError


class ExpressionError(DivpropError):
    pass


_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"exp": math.exp, "log": math.log, "sqrt": math.sqrt, "min": min, "max": max, "abs": abs}
_CONSTS = {"pi": math.pi, "e": math.e, "inf": math.inf}


def _compile(node: ast.AST) -> Callable[[float], float]:
    if isinstance(node, ast.Expression):
        return _compile(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        val = float(node.value)
        return lambda t: val
    if isinstance(node, ast.Name):
        if node.id == "t":
            return lambda t: t
        if node.id in _CONSTS:
            val = _CONSTS[node.id]
            return lambda t: val
        raise ExpressionError(f"unknown name {node.id!r}")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op, lhs, rhs = _BINOPS[type(node.op)], _compile(node.left), _compile(node.right)
        return lambda t: op(lhs(t), rhs(t))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        op, arg = _UNARY[type(node.op)], _compile(node.operand)
        return lambda t: op(arg(t))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
        if node.keywords:
            raise ExpressionError("keyword arguments are not allowed")
        fn, args = _FUNCS[node.func.id], [_compile(a) for a in node.args]
        return lambda t: fn(*(a(t) for a in args))
    raise ExpressionError(f"unsupported syntax: {ast.dump(node)}")


def parse_function(spec) -> Callable[[float], float]:
    """Build ``f(t)`` from a number, an expression string, or a sample table."""
    if isinstance(spec, (int, float)):
        val = float(spec)
        return lambda t: val
    if isinstance(spec, str):
        try:
            tree = ast.parse(spec, mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {spec!r}: {exc}") from exc
        fn = _compile(tree)

        def wrapped(t: float) -> float:
            try:
                return float(fn(float(t)))
            except (ValueError, ZeroDivisionError, OverflowError):
                return math.inf
        return wrapped
    if isinstance(spec, dict) and "t" in spec and "values" in spec:
        ts, vs = np.asarray(spec["t"], float), np.asarray(spec["values"], float)
        if ts.shape != vs.shape or ts.size < 2 or np.any(np.diff(ts) <= 0):
            raise ExpressionError("tabulated function needs increasing t and matching values")
        return lambda t: float(np.interp(t, ts, vs))
    raise ExpressionError(f"cannot interpret function spec {spec!r}")
