"""Expression trees for modulation formulas.

Nodes are immutable dataclasses. Source spans are carried for error
reporting but excluded from equality, so two parses of equivalent text
compare structurally equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

Span = tuple[int, int]

_NO_SPAN: Span = (0, 0)


@dataclass(frozen=True)
class Const:
    value: float
    span: Span = field(default=_NO_SPAN, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Symbol:
    name: str
    span: Span = field(default=_NO_SPAN, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    span: Span = field(default=_NO_SPAN, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"
    span: Span = field(default=_NO_SPAN, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: "Expr"
    span: Span = field(default=_NO_SPAN, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Call:
    func: str  # sin, cos, integral, sum
    args: tuple["Expr", ...]
    span: Span = field(default=_NO_SPAN, compare=False, repr=False, kw_only=True)


Expr = Union[Const, Symbol, Neg, BinOp, Pow, Call]


def children(expr: Expr) -> tuple[Expr, ...]:
    if isinstance(expr, (Const, Symbol)):
        return ()
    if isinstance(expr, Neg):
        return (expr.operand,)
    if isinstance(expr, BinOp):
        return (expr.left, expr.right)
    if isinstance(expr, Pow):
        return (expr.base, expr.exponent)
    return expr.args


def depth(expr: Expr) -> int:
    """Height of the tree; a lone constant or symbol has depth 1."""
    kids = children(expr)
    if not kids:
        return 1
    return 1 + max(depth(k) for k in kids)


def op_count(expr: Expr) -> int:
    """Number of arithmetic and function-evaluation nodes in the tree.

    Constants and symbols are free; every negate, binary operation, power
    and function call counts as one operation. Additive over subtrees, so
    the total for a waveform run is op_count(expr) * sample count.
    """
    own = 0 if isinstance(expr, (Const, Symbol)) else 1
    return own + sum(op_count(k) for k in children(expr))


_PREC_ADD = 1
_PREC_MUL = 2
_PREC_UNARY = 3
_PREC_POW = 4
_PREC_ATOM = 5


def _prec(expr: Expr) -> int:
    if isinstance(expr, BinOp):
        return _PREC_ADD if expr.op in "+-" else _PREC_MUL
    if isinstance(expr, Neg):
        return _PREC_UNARY
    if isinstance(expr, Pow):
        return _PREC_POW
    return _PREC_ATOM


def _fmt_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def to_text(expr: Expr) -> str:
    """Render the tree in the ASCII formula grammar.

    Emits explicit `*` for every product. Output reparses to a tree that
    compares structurally equal to the input.
    """
    if isinstance(expr, Const):
        return _fmt_number(expr.value)
    if isinstance(expr, Symbol):
        return expr.name
    if isinstance(expr, Neg):
        inner = to_text(expr.operand)
        if _prec(expr.operand) < _PREC_UNARY:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(expr, BinOp):
        me = _prec(expr)
        left = to_text(expr.left)
        if _prec(expr.left) < me:
            left = f"({left})"
        right = to_text(expr.right)
        # left-associative grammar: equal-precedence right children need parens
        if _prec(expr.right) <= me:
            right = f"({right})"
        return f"{left} {expr.op} {right}"
    if isinstance(expr, Pow):
        base = to_text(expr.base)
        if _prec(expr.base) < _PREC_POW:
            base = f"({base})"
        exponent = to_text(expr.exponent)
        if _prec(expr.exponent) <= _PREC_POW:
            exponent = f"({exponent})"
        return f"{base}^{exponent}"
    return f"{expr.func}({', '.join(to_text(a) for a in expr.args)})"
