"""Fractional parameters, uniform grids, sampled functions and weights."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, EvalError, GridMismatch


class Normalization(str, enum.Enum):
    """Choice of the normalization function ``B(alpha)``."""

    CONSTANT_ONE = "constant-one"
    # 1 - alpha + alpha / Gamma(alpha), the Atangana-Baleanu choice
    AB = "one-minus-alpha-plus-alpha-over-gamma"

    def __call__(self, alpha: float) -> float:
        if self is Normalization.CONSTANT_ONE:
            return 1.0
        # alpha / Gamma(alpha) -> 0 as alpha -> 0
        tail = 0.0 if alpha == 0 else alpha / math.gamma(alpha)
        return 1.0 - alpha + tail


@dataclass(frozen=True)
class FracParams:
    """Orders ``alpha`` (in [0, 1)) and ``beta`` (> 0) with derived constants."""

    alpha: float
    beta: float
    normalization: Normalization = Normalization.CONSTANT_ONE

    def __post_init__(self):
        object.__setattr__(self, "normalization", Normalization(self.normalization))
        if not (0.0 <= self.alpha < 1.0):
            raise DomainError(f"alpha must lie in [0, 1), got {self.alpha}")
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}")

    @property
    def B(self) -> float:
        return self.normalization(self.alpha)

    @property
    def phi(self) -> float:
        return (1.0 - self.alpha) / self.B

    @property
    def psi(self) -> float:
        return self.alpha / self.B

    @property
    def mu(self) -> float:
        return self.alpha / (1.0 - self.alpha)

    def echo(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "normalization": self.normalization.value,
        }


def make_params(alpha: float, beta: float, normalization=Normalization.CONSTANT_ONE) -> FracParams:
    return FracParams(float(alpha), float(beta), Normalization(normalization))


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``a = t_0 < t_1 < ... < t_n = b``."""

    a: float
    b: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or not self.a < self.b:
            raise DomainError(f"grid needs finite a < b, got [{self.a}, {self.b}]")
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"grid needs an integer n >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n

    @property
    def nodes(self) -> np.ndarray:
        t = self.a + np.arange(self.n + 1) * self.h
        t[-1] = self.b
        return t

    def refined(self, n: int) -> Grid:
        return Grid(self.a, self.b, n)

    def trapezoid_weights(self) -> np.ndarray:
        omega = np.full(self.n + 1, self.h)
        omega[0] = omega[-1] = 0.5 * self.h
        return omega


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values of a function at the ``n + 1`` nodes of a grid (read-only)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n + 1,):
            raise GridMismatch(
                f"expected {self.grid.n + 1} samples, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise EvalError("sampled values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, SampledFunction):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.values, other.values)

    def same_grid(self, other: SampledFunction) -> None:
        if self.grid != other.grid:
            raise GridMismatch(f"{self.grid} != {other.grid}")


def _call_scalar(func: Callable[[float], float], x: float) -> float:
    try:
        y = float(func(x))
    except EvalError as exc:
        raise EvalError(f"evaluation failed at x={x!r}: {exc}", x) from exc
    except (ArithmeticError, ValueError) as exc:
        raise EvalError(f"evaluation failed at x={x!r}: {exc}", x) from exc
    if not math.isfinite(y):
        raise EvalError(f"non-finite value {y} at x={x!r}", x)
    return y


def sample(func, grid: Grid) -> SampledFunction:
    """Evaluate ``func`` (a callable or an expression string) at every node."""
    from .expr import Num, Var, Neg, BinOp, Call, evaluate, parse

    if isinstance(func, str):
        func = parse(func)
    if isinstance(func, (Num, Var, Neg, BinOp, Call)):
        try:
            return SampledFunction(grid, evaluate(func, grid.nodes))
        except EvalError:
            pass  # fall through to locate the failing node
    values = [_call_scalar(func, float(x)) for x in grid.nodes]
    return SampledFunction(grid, np.array(values))


@dataclass(frozen=True)
class WeightFunction:
    """Positive weight ``w`` with access to ``w'``.

    The weight is required to be positive on every grid it is used with.
    A non-positive derivative only triggers a warning, so that ``w = 1``
    stays usable.
    """

    value: Callable[[float], float]
    derivative: Callable[[float], float]
    description: str = "w"
    _checked: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def constant(cls, c: float = 1.0) -> WeightFunction:
        c = float(c)
        return cls(lambda x: c, lambda x: 0.0, description=repr(c) if c != 1.0 else "1")

    @classmethod
    def from_expr(cls, text) -> WeightFunction:
        from .expr import differentiate, parse, to_text

        e = parse(text) if isinstance(text, str) else text
        de = differentiate(e)
        return cls(e, de, description=to_text(e))

    def reflected(self, a: float, b: float) -> WeightFunction:
        """``(Qw)(x) = w(a + b - x)``; its derivative picks up a minus sign."""
        value, deriv = self.value, self.derivative
        return WeightFunction(
            lambda x: value(a + b - x),
            lambda x: -deriv(a + b - x),
            description=f"Q[{self.description}] on [{a}, {b}]",
        )

    def on(self, grid: Grid) -> np.ndarray:
        """Node values of ``w`` on ``grid``, validated on first use."""
        cached = self._checked.get(grid)
        if cached is not None:
            return cached
        values = sample(self.value, grid).values
        if np.any(values <= 0):
            bad = grid.nodes[np.argmax(values <= 0)]
            raise DomainError(f"weight {self.description} is not positive at x={bad}")
        try:
            slope = sample(self.derivative, grid).values
        except EvalError:
            slope = None
        if slope is not None and np.any(slope <= 0):
            warnings.warn(
                f"weight {self.description} has w' <= 0 somewhere on "
                f"[{grid.a}, {grid.b}]; continuing",
                stacklevel=2,
            )
        self._checked[grid] = values
        return values

    @property
    def is_unit(self) -> bool:
        return self.description == "1"


UNIT_WEIGHT = WeightFunction.constant(1.0)


def as_weight(w) -> WeightFunction:
    """Accept ``None`` (unit weight), a WeightFunction, or an expression."""
    if w is None:
        return UNIT_WEIGHT
    if isinstance(w, WeightFunction):
        return w
    return WeightFunction.from_expr(w)
