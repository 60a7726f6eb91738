"""Numeric evaluation of formula trees over a uniform time grid.

Every subexpression evaluates to a float64 array the length of the grid.
The definite integral runs from t = 0 with a zero initial condition using
the cumulative trapezoid rule; finite sums expand with the index variable
substituted over its bounds. Division is guarded by default: samples whose
divisor magnitude falls below the guard epsilon evaluate to 0 and are
counted, which lets formulas with degenerate denominators run end to end
while staying honest about how often the guard fired.
"""

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ..errors import EvaluationError
from .ast import BinOp, Call, Const, Expr, Neg, Pow, Symbol

MAX_SUM_ITERATIONS = 100_000


@dataclass(frozen=True)
class EvalContext:
    """Bindings for every formula symbol.

    constants map scalar names to floats; signals map signal-valued names
    (keyed with their (t) suffix) to arrays matching the grid length.
    """

    constants: Mapping[str, float] = field(default_factory=dict)
    signals: Mapping[str, np.ndarray] = field(default_factory=dict)
    guard_division: bool = True
    guard_epsilon: float = 1e-12

    def __post_init__(self):
        object.__setattr__(self, "constants", MappingProxyType(dict(self.constants)))
        object.__setattr__(self, "signals", MappingProxyType(dict(self.signals)))


@dataclass(frozen=True)
class EvalResult:
    samples: np.ndarray
    guard_count: int
    invalid_mask: np.ndarray


class _Evaluator:
    def __init__(self, ctx: EvalContext, grid: np.ndarray):
        self.ctx = ctx
        self.grid = grid
        self.n = grid.size
        self.guards = 0

    def lookup(self, name: str, local: dict[str, float]) -> np.ndarray:
        if name in local:
            return np.full(self.n, local[name])
        if name == "t":
            return self.grid
        if name == "pi":
            return np.full(self.n, np.pi)
        ctx = self.ctx
        if name in ctx.constants:
            return np.full(self.n, float(ctx.constants[name]))
        if name in ctx.signals:
            return self._signal(name)
        alias = f"{name}(t)"
        if alias in ctx.signals:
            return self._signal(alias)
        if alias in ctx.constants:
            return np.full(self.n, float(ctx.constants[alias]))
        raise EvaluationError(f"no binding for symbol {name!r}")

    def _signal(self, name: str) -> np.ndarray:
        arr = np.asarray(self.ctx.signals[name], dtype=np.float64)
        if arr.shape != (self.n,):
            raise EvaluationError(
                f"signal {name!r} has length {arr.size}, grid has {self.n}"
            )
        return arr

    def eval(self, expr: Expr, local: dict[str, float]) -> np.ndarray:
        if isinstance(expr, Const):
            return np.full(self.n, expr.value)
        if isinstance(expr, Symbol):
            return self.lookup(expr.name, local)
        if isinstance(expr, Neg):
            return -self.eval(expr.operand, local)
        if isinstance(expr, Pow):
            base = self.eval(expr.base, local)
            exponent = self.eval(expr.exponent, local)
            with np.errstate(all="ignore"):
                return np.power(base, exponent)
        if isinstance(expr, BinOp):
            left = self.eval(expr.left, local)
            right = self.eval(expr.right, local)
            if expr.op == "+":
                return left + right
            if expr.op == "-":
                return left - right
            if expr.op == "*":
                return left * right
            return self._divide(left, right)
        return self._call(expr, local)

    def _divide(self, num: np.ndarray, den: np.ndarray) -> np.ndarray:
        if not self.ctx.guard_division:
            with np.errstate(all="ignore"):
                return num / den
        guarded = np.abs(den) < self.ctx.guard_epsilon
        self.guards += int(np.count_nonzero(guarded))
        safe = np.where(guarded, 1.0, den)
        with np.errstate(all="ignore"):
            out = num / safe
        return np.where(guarded, 0.0, out)

    def _call(self, expr: Call, local: dict[str, float]) -> np.ndarray:
        if expr.func == "sin":
            return np.sin(self.eval(expr.args[0], local))
        if expr.func == "cos":
            return np.cos(self.eval(expr.args[0], local))
        if expr.func == "integral":
            var = expr.args[1]
            if var.name != "t":
                raise EvaluationError(
                    f"integral over {var.name!r} is not supported, only t"
                )
            body = self.eval(expr.args[0], local)
            return cumulative_trapezoid(body, self.grid, initial=0.0)
        # finite sum with the index substituted over its inclusive bounds
        body_expr, index = expr.args[0], expr.args[1]
        low = self._scalar(expr.args[2], local, "sum lower bound")
        high = self._scalar(expr.args[3], local, "sum upper bound")
        if high < low:
            raise EvaluationError("sum upper bound is below its lower bound")
        count = int(high - low) + 1
        if count > MAX_SUM_ITERATIONS:
            raise EvaluationError(f"sum expands to {count} terms, over the limit")
        total = np.zeros(self.n)
        inner = dict(local)
        for k in range(int(low), int(high) + 1):
            inner[index.name] = float(k)
            total += self.eval(body_expr, inner)
        return total

    def _scalar(self, expr: Expr, local: dict[str, float], what: str) -> int:
        values = self.eval(expr, local)
        lo, hi = values.min(), values.max()
        if hi - lo > 1e-9:
            raise EvaluationError(f"{what} must be constant over the grid")
        value = float(lo)
        if abs(value - round(value)) > 1e-9:
            raise EvaluationError(f"{what} must be an integer, got {value}")
        return int(round(value))


def evaluate(expr: Expr, ctx: EvalContext, grid: np.ndarray) -> EvalResult:
    """Evaluate a formula sample-wise over a uniform time grid.

    Returns the samples, the number of guarded divisions, and a mask of
    samples that came out non-finite and were zeroed. With guarding
    disabled a non-finite result raises EvaluationError instead.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 2:
        raise EvaluationError("grid must be one-dimensional with at least 2 samples")
    steps = np.diff(grid)
    if steps[0] <= 0 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise EvaluationError("grid must be uniformly spaced and increasing")

    engine = _Evaluator(ctx, grid)
    samples = engine.eval(expr, {})
    invalid = ~np.isfinite(samples)
    if invalid.any():
        if not ctx.guard_division:
            raise EvaluationError(
                f"{int(invalid.sum())} non-finite samples with guarding disabled"
            )
        samples = np.where(invalid, 0.0, samples)
    return EvalResult(
        samples=samples, guard_count=engine.guards, invalid_mask=invalid
    )
