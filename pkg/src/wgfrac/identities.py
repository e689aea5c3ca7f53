"""Numerical checks of the fractional identities on discrete proxies.

Each ``verify_*`` function evaluates both sides of one continuum identity on
a grid, and repeats the measurement over a refinement ladder so that
convergence can be asserted. Functions ``f``, ``g`` may be callables or
expression strings; weights may be a :class:`WeightFunction`, an expression
string, or ``None`` for ``w = 1``.

The identities are exact in the continuum. The reported gaps are pure
discretization error and should shrink under refinement.
"""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from . import operators as ops
from .ab import ab_matrices
from .core import FracParams, Grid, Normalization, SampledFunction, WeightFunction, as_weight, sample
from .errors import DomainError, GridMismatch
from .expr import parse

DEFAULT_LADDER = (64, 128, 256, 512)

# fixed smooth test corpus on [0, 1]
CORPUS = {
    "one": "1",
    "x": "x",
    "x2": "x^2",
    "sin": "sin(x)",
    "cos": "cos(x)",
    "exp": "exp(x)",
    "rational": "1/(1+x^2)",
}


class IdentityId(str, enum.Enum):
    SAMKO_LEMMA = "SamkoLemma"
    INVERSION_LEFT = "InversionLeft"
    INVERSION_RIGHT = "InversionRight"
    IBP_UNWEIGHTED_INTEGRAL = "IbpUnweightedIntegral"
    IBP_UNWEIGHTED_DERIVATIVE = "IbpUnweightedDerivative"
    IBP_WEIGHTED_INTEGRAL = "IbpWeightedIntegral"
    IBP_WEIGHTED_DERIVATIVE = "IbpWeightedDerivative"
    IBP_COROLLARY_RIGHT = "IbpCorollaryRight"
    IBP_SYMMETRIC_INTEGRAL = "IbpSymmetricIntegral"
    IBP_SYMMETRIC_DERIVATIVE = "IbpSymmetricDerivative"
    AB_REDUCTION = "AbReduction"


class OperatorChoice(str, enum.Enum):
    INTEGRAL = "integral"
    DERIVATIVE = "derivative"


REPORT_FIELDS = (
    "identity_id", "lhs", "rhs", "abs_gap", "rel_gap", "grid_n", "params_echo",
    "convergence_rows",
)


@dataclass(frozen=True)
class IdentityReport:
    identity_id: IdentityId
    lhs: float
    rhs: float
    abs_gap: float
    rel_gap: float
    grid_n: int
    params_echo: dict
    convergence_rows: tuple[tuple[int, float], ...] = ()
    details: dict = field(default_factory=dict)

    @classmethod
    def from_sides(cls, identity_id, lhs, rhs, grid_n, params_echo, rows=(), details=None):
        lhs, rhs = float(lhs), float(rhs)
        gap = abs(lhs - rhs)
        rel = gap / max(abs(lhs), abs(rhs), 1e-300)
        return cls(IdentityId(identity_id), lhs, rhs, gap, rel, int(grid_n), dict(params_echo),
                   tuple((int(n), float(e)) for n, e in rows), dict(details or {}))

    def gaps(self) -> list[float]:
        return [gap for _, gap in self.convergence_rows]

    def is_monotone(self, slack: float = 0.1, floor: float = 1e-12) -> bool:
        """Non-increasing gaps over the ladder, up to ``slack`` and a roundoff ``floor``."""
        gaps = self.gaps()
        return all(b <= (1.0 + slack) * a or b <= floor for a, b in zip(gaps, gaps[1:]))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["identity_id"] = self.identity_id.value
        d["convergence_rows"] = [list(r) for r in self.convergence_rows]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


# ---------------------------------------------------------------- helpers


def inner(f: SampledFunction, g: SampledFunction) -> float:
    """Trapezoidal quadrature of ``f * g`` over the grid."""
    f.same_grid(g)
    return float(np.dot(f.grid.trapezoid_weights(), f.values * g.values))


def _as_function(f) -> Callable[[float], float]:
    if isinstance(f, str):
        return parse(f)
    return f


def _samples(f, grid: Grid) -> np.ndarray:
    if isinstance(f, SampledFunction):
        if f.grid != grid:
            raise GridMismatch("sampled input cannot be resampled for a refinement ladder")
        return f.values
    return sample(_as_function(f), grid).values


def _describe(f) -> str:
    return f if isinstance(f, str) else getattr(f, "__name__", repr(f))


@lru_cache(maxsize=128)
def _matrix(grid: Grid, p: FracParams, w: WeightFunction, side: str, kind: str,
            sign_convention: str = "definition") -> np.ndarray:
    if kind == "integral":
        return ops.gen_integral(grid, p, w, side).entries
    if kind == "derivative":
        if side == "right":
            return ops.gen_derivative_right(grid, p, w, sign_convention=sign_convention)[0].entries
        return ops.gen_derivative_left(grid, p, w)[0].entries
    if kind == "rl":
        builder = ops.rl_integral_left if side == "left" else ops.rl_integral_right
        return builder(grid, p.beta, w).entries
    raise ValueError(kind)


def _ladder_grids(grid: Grid, n_list) -> list[Grid]:
    return [grid.refined(n) for n in (n_list or ())]


def _run(identity_id, measure, grid, n_list, echo, details=None) -> IdentityReport:
    lhs, rhs = measure(grid)
    rows = []
    for g in _ladder_grids(grid, n_list):
        l2, r2 = (lhs, rhs) if g == grid else measure(g)
        rows.append((g.n, abs(l2 - r2)))
    return IdentityReport.from_sides(identity_id, lhs, rhs, grid.n, echo, rows, details)


# ------------------------------------------------------------- identities


def verify_samko(beta: float, f, g, grid: Grid, n_list=DEFAULT_LADDER) -> IdentityReport:
    """``int f I^beta_a g = int g I^beta_b f`` with the unweighted RL integrals."""
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    p = FracParams(0.0, float(beta))
    w = as_weight(None)

    def measure(gr):
        fv, gv = _samples(f, gr), _samples(g, gr)
        om = gr.trapezoid_weights()
        lhs = om @ (fv * (_matrix(gr, p, w, "left", "rl") @ gv))
        rhs = om @ (gv * (_matrix(gr, p, w, "right", "rl") @ fv))
        return lhs, rhs

    echo = {"beta": float(beta), "f": _describe(f), "g": _describe(g)}
    return _run(IdentityId.SAMKO_LEMMA, measure, grid, n_list, echo)


def verify_inversion(p: FracParams, w, f, grid: Grid, side="left", n_list=DEFAULT_LADDER,
                     target_sign: float | None = None,
                     sign_convention="definition") -> IdentityReport:
    """Worst deviation of ``I D f`` and ``D I f`` from the target.

    The target is ``f`` on the left. On the right it is ``f`` under the
    default sign convention and ``-f`` under ``sign_convention="printed"``.
    ``target_sign`` overrides that choice. ``lhs`` is the composite value at
    the worst node, and ``rhs`` is the target there.
    """
    side = ops.Side(side)
    w = as_weight(w)
    conv = ops.SignConvention(sign_convention)
    if target_sign is None:
        target_sign = -1.0 if (side is ops.Side.RIGHT and conv is ops.SignConvention.PRINTED) else 1.0

    def measure(gr):
        fv = _samples(f, gr)
        I = _matrix(gr, p, w, side.value, "integral")
        D = _matrix(gr, p, w, side.value, "derivative", conv.value)
        target = target_sign * fv
        best = (0.0, 0.0, -1.0)
        for comp in (I @ (D @ fv), D @ (I @ fv)):
            dev = np.abs(comp - target)
            k = int(np.argmax(dev))
            if dev[k] > best[2]:
                best = (comp[k], target[k], dev[k])
        return best[0], best[1]

    ident = IdentityId.INVERSION_LEFT if side is ops.Side.LEFT else IdentityId.INVERSION_RIGHT
    echo = {**p.echo(), "w": w.description, "f": _describe(f), "side": side.value,
            "target_sign": target_sign, "sign_convention": conv.value}
    return _run(ident, measure, grid, n_list, echo)


def _ibp(identity_id, p, w, f, g, grid, operator, n_list, left_factor, left_arg,
         right_factor, right_arg, left_side="left", right_side="right"):
    """Shared driver: ``int lf * Op_l(la)`` vs ``int rf * Op_r(ra)``.

    The four callbacks map ``(fv, gv, wv)`` to the factor or argument vectors.
    """
    kind = OperatorChoice(operator).value
    w = as_weight(w)

    def measure(gr):
        fv, gv = _samples(f, gr), _samples(g, gr)
        wv = np.ones(gr.n + 1) if w.is_unit else w.on(gr)
        om = gr.trapezoid_weights()
        A = _matrix(gr, p, w, left_side, kind)
        B = _matrix(gr, p, w, right_side, kind)
        lhs = om @ (left_factor(fv, gv, wv) * (A @ left_arg(fv, gv, wv)))
        rhs = om @ (right_factor(fv, gv, wv) * (B @ right_arg(fv, gv, wv)))
        return lhs, rhs

    echo = {**p.echo(), "w": w.description, "f": _describe(f), "g": _describe(g),
            "operator": kind}
    return _run(identity_id, measure, grid, n_list, echo)


def verify_ibp_unweighted(p: FracParams, f, g, grid: Grid, operator="integral",
                          n_list=DEFAULT_LADDER) -> IdentityReport:
    """``int f Op_a g = int g Op_b f`` with ``w = 1``."""
    ident = (IdentityId.IBP_UNWEIGHTED_INTEGRAL if OperatorChoice(operator) is OperatorChoice.INTEGRAL
             else IdentityId.IBP_UNWEIGHTED_DERIVATIVE)
    return _ibp(ident, p, None, f, g, grid, operator, n_list,
                lambda f, g, w: f, lambda f, g, w: g,
                lambda f, g, w: g, lambda f, g, w: f)


def verify_ibp_weighted(p: FracParams, w, f, g, grid: Grid, operator="integral",
                        n_list=DEFAULT_LADDER) -> IdentityReport:
    """``int f Op_{a,w} g = int w^2 g Op_{b,w}(f / w^2)``."""
    ident = (IdentityId.IBP_WEIGHTED_INTEGRAL if OperatorChoice(operator) is OperatorChoice.INTEGRAL
             else IdentityId.IBP_WEIGHTED_DERIVATIVE)
    return _ibp(ident, p, w, f, g, grid, operator, n_list,
                lambda f, g, w: f, lambda f, g, w: g,
                lambda f, g, w: w**2 * g, lambda f, g, w: f / w**2)


def verify_ibp_corollary_right(p: FracParams, w, f, g, grid: Grid, operator="integral",
                               n_list=DEFAULT_LADDER) -> IdentityReport:
    """``int f Op_{b,w} g = int w^2 g Op_{a,w}(f / w^2)``."""
    report = _ibp(IdentityId.IBP_COROLLARY_RIGHT, p, w, f, g, grid, operator, n_list,
                  lambda f, g, w: f, lambda f, g, w: g,
                  lambda f, g, w: w**2 * g, lambda f, g, w: f / w**2,
                  left_side="right", right_side="left")
    return report


def verify_ibp_symmetric(p: FracParams, w, f, g, grid: Grid, operator="integral",
                         n_list=DEFAULT_LADDER) -> IdentityReport:
    """``int w f Op_{a,w}(g / w) = int w g Op_{b,w}(f / w)``."""
    ident = (IdentityId.IBP_SYMMETRIC_INTEGRAL if OperatorChoice(operator) is OperatorChoice.INTEGRAL
             else IdentityId.IBP_SYMMETRIC_DERIVATIVE)
    return _ibp(ident, p, w, f, g, grid, operator, n_list,
                lambda f, g, w: w * f, lambda f, g, w: g / w,
                lambda f, g, w: w * g, lambda f, g, w: f / w)


def verify_ab_reduction(alpha: float, f, g, grid: Grid, n_list=DEFAULT_LADDER) -> IdentityReport:
    """Compare the specialized operators with independently built AB operators.

    ``abs_gap`` is the largest entrywise difference over the four matrices
    (left/right integral and derivative) on ``grid``; ``lhs``/``rhs`` are the
    two entries where it occurs. The derivative integration-by-parts identity
    in AB form goes to ``details``, and its gap over the ladder goes to
    ``convergence_rows``.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    p = FracParams(float(alpha), float(alpha), Normalization.AB)
    w = as_weight(None)

    ref = ab_matrices(grid, alpha)
    ours = {
        "int_left": _matrix(grid, p, w, "left", "integral"),
        "int_right": _matrix(grid, p, w, "right", "integral"),
        "der_left": _matrix(grid, p, w, "left", "derivative"),
        "der_right": _matrix(grid, p, w, "right", "derivative"),
    }
    worst = (0.0, 0.0, -1.0, "")
    for name, m in ours.items():
        diff = np.abs(m - ref[name])
        idx = np.unravel_index(np.argmax(diff), diff.shape)
        if diff[idx] > worst[2]:
            worst = (m[idx], ref[name][idx], diff[idx], name)

    def ibp(gr, mats):
        fv, gv = _samples(f, gr), _samples(g, gr)
        om = gr.trapezoid_weights()
        return om @ (fv * (mats["der_left"] @ gv)), om @ (gv * (mats["der_right"] @ fv))

    lhs, rhs = ibp(grid, ref)
    rows = []
    for gr in _ladder_grids(grid, n_list):
        l2, r2 = ibp(gr, {"der_left": _matrix(gr, p, w, "left", "derivative"),
                          "der_right": _matrix(gr, p, w, "right", "derivative")})
        rows.append((gr.n, abs(l2 - r2)))
    details = {
        "matrix_gap": float(worst[2]),
        "worst_matrix": worst[3],
        "ibp_lhs": float(lhs),
        "ibp_rhs": float(rhs),
        "ibp_gap": float(abs(lhs - rhs)),
    }
    echo = {**p.echo(), "f": _describe(f), "g": _describe(g)}
    report = IdentityReport.from_sides(IdentityId.AB_REDUCTION, worst[0], worst[1], grid.n,
                                       echo, rows, details)
    return report
