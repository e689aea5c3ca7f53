"""Discrete weighted fractional variational problems.

The functional

.. math:: J[X] = \\int_a^b L(t, X, D_{a,w} X, D_{b,w} X)\\,dt

with fixed end values is discretized by the trapezoid rule, using the
operator matrices ``A = GenDerLeft`` and ``B = GenDerRight``:
``J_h = sum_i omega_i L(t_i, X_i, (A X)_i, (B X)_i)``. The problem is
minimized in that discrete form, with the end values eliminated. The
continuum Euler-Lagrange equation

.. math:: \\partial_2 L + w^2 D_{b,w}(\\partial_3 L / w^2)
          + w^2 D_{a,w}(\\partial_4 L / w^2) = 0

is then an independent check on the discrete minimizer.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import operators as ops
from .core import FracParams, Grid, SampledFunction, WeightFunction, as_weight, sample
from .errors import BoundaryMismatch, DomainError, SingularSystem
from .expr import Expr, Num, differentiate, evaluate, is_constant, parse, to_text

logger = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-12


class LagrangianForm(str, enum.Enum):
    QUADRATIC_KINETIC = "quadratic-kinetic"
    GENERAL_SUM = "general-sum"


def _expr(e) -> Expr:
    if isinstance(e, str):
        return parse(e)
    if isinstance(e, (int, float)):
        return Num(float(e))
    return e


@dataclass(frozen=True)
class LagrangianSpec:
    """Lagrangian ``L(t, X, y3, y4)`` with ``y3 = D_{a,w} X`` and ``y4 = D_{b,w} X``.

    ``QUADRATIC_KINETIC``: ``L = 1/2 (m/2 y3^2 + m/2 y4^2) - V(X)``.
    ``GENERAL_SUM``: ``L = c2 F2(X) + c3 F3(y3) + c4 F4(y4)``.
    """

    form: LagrangianForm
    m: float = 1.0
    V: Expr = Num(0.0)
    c2: float = 1.0
    c3: float = 1.0
    c4: float = 1.0
    F2: Expr = Num(0.0)
    F3: Expr = Num(0.0)
    F4: Expr = Num(0.0)

    def __post_init__(self):
        object.__setattr__(self, "form", LagrangianForm(self.form))
        for name in ("V", "F2", "F3", "F4"):
            object.__setattr__(self, name, _expr(getattr(self, name)))
        if self.form is LagrangianForm.QUADRATIC_KINETIC and not self.m > 0:
            raise DomainError(f"mass must be positive, got {self.m}")

    @classmethod
    def quadratic_kinetic(cls, m: float = 1.0, V="0") -> LagrangianSpec:
        return cls(LagrangianForm.QUADRATIC_KINETIC, m=float(m), V=_expr(V))

    @classmethod
    def general_sum(cls, F2="0", F3="0", F4="0", c2=1.0, c3=1.0, c4=1.0) -> LagrangianSpec:
        return cls(LagrangianForm.GENERAL_SUM, c2=float(c2), c3=float(c3), c4=float(c4),
                   F2=_expr(F2), F3=_expr(F3), F4=_expr(F4))

    @cached_property
    def _derivatives(self):
        if self.form is LagrangianForm.QUADRATIC_KINETIC:
            return (differentiate(self.V),)
        return tuple(differentiate(e) for e in (self.F2, self.F3, self.F4))

    @property
    def dV(self) -> Expr:
        return self._derivatives[0]

    def value(self, t, X, y3, y4) -> np.ndarray:
        if self.form is LagrangianForm.QUADRATIC_KINETIC:
            return 0.5 * (0.5 * self.m * y3**2 + 0.5 * self.m * y4**2) - evaluate(self.V, X)
        return (self.c2 * evaluate(self.F2, X) + self.c3 * evaluate(self.F3, y3)
                + self.c4 * evaluate(self.F4, y4))

    def partials(self, t, X, y3, y4):
        """``(d2 L, d3 L, d4 L)`` evaluated pointwise."""
        if self.form is LagrangianForm.QUADRATIC_KINETIC:
            return -evaluate(self.dV, X), 0.5 * self.m * y3, 0.5 * self.m * y4
        d2, d3, d4 = self._derivatives
        return (self.c2 * evaluate(d2, X) * np.ones_like(X),
                self.c3 * evaluate(d3, y3) * np.ones_like(y3),
                self.c4 * evaluate(d4, y4) * np.ones_like(y4))

    def quadratic_potential(self) -> tuple[float, float] | None:
        """``(V'(0), V'')`` when the Lagrangian is kinetic with quadratic ``V``."""
        if self.form is not LagrangianForm.QUADRATIC_KINETIC:
            return None
        ddV = differentiate(self.dV)
        if not is_constant(ddV):
            return None
        return float(evaluate(self.dV, 0.0)), float(evaluate(ddV, 0.0))

    def describe(self) -> dict:
        if self.form is LagrangianForm.QUADRATIC_KINETIC:
            return {"form": self.form.value, "m": self.m, "V": to_text(self.V)}
        return {"form": self.form.value, "c2": self.c2, "c3": self.c3, "c4": self.c4,
                "F2": to_text(self.F2), "F3": to_text(self.F3), "F4": to_text(self.F4)}


@dataclass(frozen=True)
class VariationalProblem:
    grid: Grid
    params: FracParams
    w: WeightFunction
    lagrangian: LagrangianSpec
    X_a: float
    X_b: float
    series_tol: float = ops.DEFAULT_SERIES_TOL
    max_terms: int = ops.DEFAULT_MAX_TERMS

    def __post_init__(self):
        object.__setattr__(self, "w", as_weight(self.w))
        if not (np.isfinite(self.X_a) and np.isfinite(self.X_b)):
            raise DomainError("boundary values must be finite")

    @cached_property
    def A(self) -> np.ndarray:
        return ops.gen_derivative_left(self.grid, self.params, self.w,
                                       self.series_tol, self.max_terms)[0].entries

    @cached_property
    def B(self) -> np.ndarray:
        return ops.gen_derivative_right(self.grid, self.params, self.w,
                                        self.series_tol, self.max_terms)[0].entries

    @cached_property
    def omega(self) -> np.ndarray:
        return self.grid.trapezoid_weights()

    @cached_property
    def wv(self) -> np.ndarray:
        return np.ones(self.grid.n + 1) if self.w.is_unit else self.w.on(self.grid)

    def linear_guess(self) -> SampledFunction:
        t = self.grid.nodes
        s = (t - self.grid.a) / (self.grid.b - self.grid.a)
        return SampledFunction(self.grid, (1 - s) * self.X_a + s * self.X_b)

    def with_boundary(self, interior: np.ndarray) -> np.ndarray:
        return np.concatenate(([self.X_a], interior, [self.X_b]))


class StepControl(str, enum.Enum):
    FIXED_STEP = "fixed"
    BACKTRACKING = "backtracking"


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 5000
    grad_tol: float = 1e-10
    step_control: StepControl = StepControl.BACKTRACKING
    step_size: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "step_control", StepControl(self.step_control))
        if self.max_iters < 1:
            raise DomainError("max_iters must be >= 1")
        if not self.grad_tol > 0:
            raise DomainError("grad_tol must be positive")


@dataclass
class SolveDiagnostics:
    path: str
    iterations: int
    grad_norm: float
    converged: bool
    J_history: list[float] = field(default_factory=list)
    flags: set[str] = field(default_factory=set)


def _values(prob: VariationalProblem, X) -> np.ndarray:
    x = X.values if isinstance(X, SampledFunction) else np.asarray(X, dtype=float)
    if x.shape != (prob.grid.n + 1,):
        raise BoundaryMismatch(f"trajectory has shape {x.shape}, grid needs {prob.grid.n + 1}")
    if abs(x[0] - prob.X_a) > BOUNDARY_TOL or abs(x[-1] - prob.X_b) > BOUNDARY_TOL:
        raise BoundaryMismatch(
            f"X(a)={x[0]!r}, X(b)={x[-1]!r} but the problem fixes {prob.X_a!r}, {prob.X_b!r}"
        )
    return x


def _state(prob, x):
    return prob.grid.nodes, x, prob.A @ x, prob.B @ x


def evaluate_functional(prob: VariationalProblem, X) -> float:
    x = _values(prob, X)
    return float(prob.omega @ prob.lagrangian.value(*_state(prob, x)))


def discrete_gradient(prob: VariationalProblem, X) -> np.ndarray:
    """Gradient of ``J_h`` with respect to the interior values ``X_1..X_{n-1}``."""
    x = _values(prob, X)
    d2, d3, d4 = prob.lagrangian.partials(*_state(prob, x))
    om = prob.omega
    g = om * d2 + prob.A.T @ (om * d3) + prob.B.T @ (om * d4)
    return g[1:-1]


def _interior_only(prob, r: np.ndarray) -> SampledFunction:
    r = r.copy()
    r[0] = r[-1] = 0.0
    return SampledFunction(prob.grid, r)


def el_residual(prob: VariationalProblem, X) -> SampledFunction:
    """Euler-Lagrange residual at interior nodes; the two boundary entries are 0."""
    x = _values(prob, X)
    d2, d3, d4 = prob.lagrangian.partials(*_state(prob, x))
    w2 = prob.wv**2
    r = d2 + w2 * (prob.B @ (d3 / w2)) + w2 * (prob.A @ (d4 / w2))
    return _interior_only(prob, r)


def newton_law_residual(prob: VariationalProblem, X) -> SampledFunction:
    """``m/2 [w^2 D_b(D_a X / w^2) + w^2 D_a(D_b X / w^2)] - V'(X)`` at interior nodes."""
    lag = prob.lagrangian
    if lag.form is not LagrangianForm.QUADRATIC_KINETIC:
        raise DomainError("the Newton-law form needs a quadratic kinetic Lagrangian")
    x = _values(prob, X)
    w2 = prob.wv**2
    lhs = 0.5 * lag.m * (w2 * (prob.B @ ((prob.A @ x) / w2)) + w2 * (prob.A @ ((prob.B @ x) / w2)))
    return _interior_only(prob, lhs - evaluate(lag.dV, x))


def interior_band(grid: Grid, fraction: float = 0.05) -> slice:
    """Node indices left after dropping ``fraction`` of the nodes at each end."""
    k = max(1, int(np.ceil(fraction * grid.n)))
    return slice(k, grid.n + 1 - k)


def hessian(prob: VariationalProblem) -> np.ndarray:
    """Full-grid Hessian of ``J_h`` for a kinetic Lagrangian with quadratic ``V``."""
    quad = prob.lagrangian.quadratic_potential()
    if quad is None:
        raise DomainError("Hessian is constant only for quadratic kinetic Lagrangians")
    _, v2 = quad
    om = prob.omega
    A, B = prob.A, prob.B
    m = prob.lagrangian.m
    return 0.5 * m * (A.T @ (om[:, None] * A) + B.T @ (om[:, None] * B)) - v2 * np.diag(om)


def _solve_linear(prob: VariationalProblem) -> np.ndarray:
    v1, _ = prob.lagrangian.quadratic_potential()
    H = hessian(prob)
    inner = slice(1, -1)
    xb = np.zeros(prob.grid.n + 1)
    xb[0], xb[-1] = prob.X_a, prob.X_b
    rhs = prob.omega[inner] * v1 - H[inner] @ xb
    try:
        xi = np.linalg.solve(H[inner, inner], rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    return prob.with_boundary(xi)


def solve(prob: VariationalProblem, X_init=None, opts: SolveOptions | None = None):
    """Minimize ``J_h`` over trajectories with the problem's end values.

    A kinetic Lagrangian with quadratic potential has an affine gradient, so
    the stationarity system is solved directly. Everything else goes through
    gradient descent in the trapezoid-weighted inner product (direction
    ``-g / omega``), with Armijo backtracking or a fixed step.

    Returns ``(X, diagnostics)``. Running out of iterations returns the best
    iterate and sets the ``"max-iters"`` flag.
    """
    opts = opts or SolveOptions()
    x0 = _values(prob, X_init if X_init is not None else prob.linear_guess())
    J0 = evaluate_functional(prob, x0)

    if prob.lagrangian.quadratic_potential() is not None:
        x = _solve_linear(prob)
        g = discrete_gradient(prob, x)
        J = evaluate_functional(prob, x)
        diag = SolveDiagnostics("linear", 1, float(np.abs(g).max(initial=0.0)),
                                bool(np.abs(g).max(initial=0.0) <= opts.grad_tol), [J0, J])
        if J > J0:
            diag.flags.add("not-a-minimum")
            logger.warning("stationary point has larger J than the initial guess")
        return SampledFunction(prob.grid, x), diag

    x = x0.copy()
    J = J0
    history = [J]
    precond = prob.omega[1:-1]
    step = opts.step_size
    g = discrete_gradient(prob, x)
    it = 0
    while np.abs(g).max(initial=0.0) > opts.grad_tol and it < opts.max_iters:
        it += 1
        d = -g / precond
        slope = float(g @ d)
        if opts.step_control is StepControl.FIXED_STEP:
            trial = x.copy()
            trial[1:-1] += opts.step_size * d
            J_new = evaluate_functional(prob, trial)
        else:
            step = min(2.0 * step, 1e6)
            while True:
                trial = x.copy()
                trial[1:-1] += step * d
                J_new = evaluate_functional(prob, trial)
                if J_new <= J + 1e-4 * step * slope:
                    break
                step *= 0.5
                if step < 1e-16:
                    break
            if J_new > J:
                break
        x, J = trial, J_new
        history.append(J)
        g = discrete_gradient(prob, x)
    gnorm = float(np.abs(g).max(initial=0.0))
    diag = SolveDiagnostics("descent", it, gnorm, gnorm <= opts.grad_tol, history)
    if not diag.converged:
        diag.flags.add("max-iters")
        logger.warning("descent stopped after %d iterations with |g| = %.3e", it, gnorm)
    return SampledFunction(prob.grid, x), diag


def trajectory_table(prob: VariationalProblem, X, residual: SampledFunction) -> dict:
    x = _values(prob, X)
    return {
        "t": prob.grid.nodes,
        "X": x,
        "DL_X": prob.A @ x,
        "DR_X": prob.B @ x,
        "residual": residual.values,
    }


def sample_trajectory(prob: VariationalProblem, expr_text) -> SampledFunction:
    """Sample ``expr_text`` and pin the end values to the problem's exactly."""
    values = sample(expr_text, prob.grid).values.copy()
    values[0], values[-1] = prob.X_a, prob.X_b
    return SampledFunction(prob.grid, values)
