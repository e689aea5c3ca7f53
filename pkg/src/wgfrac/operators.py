r"""Dense matrix representations of the weighted fractional operators.

Every weakly singular integral is discretized by product-trapezoidal
quadrature: on each cell the weighted data ``w * f`` is replaced by its
linear interpolant and the kernel moments are integrated in closed form.
On a uniform grid the unweighted left rule of order ``gamma`` is

.. math::

    (I^\gamma f)(t_i) \approx \frac{h^\gamma}{\Gamma(\gamma+2)} \Big[
        a_{i} f_0 + \sum_{j=1}^{i-1} c_{i-j} f_j + f_i \Big]

with ``c_k`` the second difference of ``k^(gamma+1)`` and ``a_i`` the
one-sided end correction. The weighted operator is the conjugation
``diag(1/w) M diag(w)``, and right-sided rules are the left rules
reflected through ``x -> a + b - x``.

Derivatives are never obtained by numerical differentiation. They are
assembled from the Mittag-Leffler series

.. math:: D = \frac{\pm 1}{\phi} \sum_{j \ge 0} (-\mu)^j I^{\beta j},
    \qquad I^0 = \mathrm{Id}.

:func:`gen_derivative_direct_oracle` is an independent, test-only route
that differentiates the kernel integral directly.
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .core import FracParams, Grid, SampledFunction, WeightFunction, as_weight
from .errors import DomainError, GridMismatch
from .mlf import MLEvalOptions, ml_kernel

logger = logging.getLogger(__name__)

DEFAULT_SERIES_TOL = 1e-14
DEFAULT_MAX_TERMS = 200
# mu * (b - a)^beta above this: series terms grow before the Gamma decay wins
LARGE_MU_THRESHOLD = 30.0


class OperatorKind(str, enum.Enum):
    RL_INT_LEFT = "RLIntLeft"
    RL_INT_RIGHT = "RLIntRight"
    GEN_INT_LEFT = "GenIntLeft"
    GEN_INT_RIGHT = "GenIntRight"
    GEN_DER_LEFT = "GenDerLeft"
    GEN_DER_RIGHT = "GenDerRight"
    REFLECTION = "Reflection"
    IDENTITY = "Identity"


class Side(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"


class SignConvention(str, enum.Enum):
    """Leading sign of the right derivative.

    ``DEFINITION`` expands the right derivative's kernel definition, which
    yields ``+1/phi`` and keeps reflection duality and integration by parts
    intact. ``PRINTED`` reproduces the ``-1/phi`` series as written in the
    source, under which ``I_b D_b f = -f``.
    """

    DEFINITION = "definition"
    PRINTED = "printed"


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    grid: Grid
    entries: np.ndarray
    kind: OperatorKind
    params: FracParams | float | None = None
    weight_description: str = "1"

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        size = self.grid.n + 1
        if m.shape != (size, size):
            raise GridMismatch(f"expected a {size}x{size} matrix, got {m.shape}")
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)

    def __matmul__(self, other):
        if isinstance(other, SampledFunction):
            return apply(self, other)
        if isinstance(other, OperatorMatrix):
            if other.grid != self.grid:
                raise GridMismatch(f"{self.grid} != {other.grid}")
            return self.entries @ other.entries
        return self.entries @ other


@dataclass(frozen=True)
class SeriesReport:
    terms_used: int
    last_term_norm: float
    warning_flags: frozenset = field(default_factory=frozenset)


# ------------------------------------------------------------ RL building blocks


def rl_left_weights(n: int, gamma: float, h: float) -> np.ndarray:
    """Unweighted product-trapezoid matrix of the left RL integral of order gamma.

    The second differences of ``k^(gamma+1)`` are formed as
    ``k^(gamma+1) * (expm1(g log1p(1/k)) + expm1(g log1p(-1/k)))`` so that the
    leading terms cancel analytically rather than in floating point.
    """
    g1 = gamma + 1.0
    k = np.arange(1, n + 1, dtype=float)
    # (k h)^(gamma+1) / (h Gamma(gamma+2)), evaluated in logs to avoid overflow
    scaled = np.exp(g1 * np.log(k) + gamma * math.log(h) - math.lgamma(gamma + 2.0))
    with np.errstate(divide="ignore"):
        up = np.expm1(g1 * np.log1p(1.0 / k))
        down = np.expm1(g1 * np.log1p(-1.0 / k))
    down[0] = -1.0
    c = np.empty(n + 1)
    c[0] = scaled[0]
    c[1:] = scaled * (up + down)
    m = toeplitz(c, np.zeros(n + 1))
    # end correction for the j = 0 column: (i-1)^(g+1) - (i-g-1) i^g
    m[1:, 0] = scaled * (down + g1 / k)
    m[0, 0] = 0.0
    return m


def _conjugate(m: np.ndarray, wv: np.ndarray | None) -> np.ndarray:
    if wv is None:
        return m
    return m * (wv[None, :] / wv[:, None])


def _flip(m: np.ndarray) -> np.ndarray:
    return m[::-1, ::-1]


def _weight_values(grid: Grid, w: WeightFunction) -> np.ndarray | None:
    return None if w.is_unit else w.on(grid)


def _rl(grid: Grid, beta: float, w, side: Side) -> np.ndarray:
    if not beta > 0:
        raise DomainError(f"integral order must be positive, got {beta}")
    w = as_weight(w)
    m = rl_left_weights(grid.n, beta, grid.h)
    if side is Side.RIGHT:
        m = _flip(m)
    return _conjugate(m, _weight_values(grid, w))


def rl_integral_left(grid: Grid, beta: float, w=None) -> OperatorMatrix:
    """Left weighted Riemann-Liouville integral of order ``beta``; row 0 is zero."""
    w = as_weight(w)
    return OperatorMatrix(grid, _rl(grid, beta, w, Side.LEFT), OperatorKind.RL_INT_LEFT,
                          float(beta), w.description)


def rl_integral_right(grid: Grid, beta: float, w=None) -> OperatorMatrix:
    """Right weighted Riemann-Liouville integral of order ``beta``; row n is zero."""
    w = as_weight(w)
    return OperatorMatrix(grid, _rl(grid, beta, w, Side.RIGHT), OperatorKind.RL_INT_RIGHT,
                          float(beta), w.description)


def identity(grid: Grid) -> OperatorMatrix:
    return OperatorMatrix(grid, np.eye(grid.n + 1), OperatorKind.IDENTITY)


def reflection(grid: Grid) -> OperatorMatrix:
    return OperatorMatrix(grid, np.eye(grid.n + 1)[::-1], OperatorKind.REFLECTION)


# ------------------------------------------------------ generalized operators


def _gen_integral(grid, p: FracParams, w, side: Side) -> np.ndarray:
    m = p.phi * np.eye(grid.n + 1)
    if p.psi != 0.0:
        m += p.psi * _rl(grid, p.beta, w, side)
    return m


def gen_integral_left(grid: Grid, p: FracParams, w=None) -> OperatorMatrix:
    """``phi * f + psi * I^beta_{a,w} f``."""
    w = as_weight(w)
    return OperatorMatrix(grid, _gen_integral(grid, p, w, Side.LEFT),
                          OperatorKind.GEN_INT_LEFT, p, w.description)


def gen_integral_right(grid: Grid, p: FracParams, w=None) -> OperatorMatrix:
    """``phi * f + psi * I^beta_{b,w} f``."""
    w = as_weight(w)
    return OperatorMatrix(grid, _gen_integral(grid, p, w, Side.RIGHT),
                          OperatorKind.GEN_INT_RIGHT, p, w.description)


def _series(grid: Grid, p: FracParams, w: WeightFunction, side: Side,
            series_tol: float, max_terms: int) -> tuple[np.ndarray, SeriesReport]:
    if not series_tol > 0:
        raise DomainError(f"series_tol must be positive, got {series_tol}")
    if max_terms < 1:
        raise DomainError(f"max_terms must be >= 1, got {max_terms}")
    n = grid.n
    total = np.eye(n + 1)
    flags = set()
    if p.mu * (grid.b - grid.a) ** p.beta > LARGE_MU_THRESHOLD:
        flags.add("large-mu")
    if p.mu == 0.0:
        return total, SeriesReport(1, 0.0, frozenset(flags))

    wv = _weight_values(grid, w)
    # accumulate in unweighted left orientation; conjugate and flip once at the end
    acc = np.zeros((n + 1, n + 1))
    ratio = None if wv is None else wv[None, :] / wv[:, None]
    if ratio is not None and side is Side.RIGHT:
        ratio_left = _flip(ratio)
    else:
        ratio_left = ratio
    norm = math.inf
    terms = 1
    for j in range(1, max_terms):
        term = (-p.mu) ** j * rl_left_weights(n, p.beta * j, grid.h)
        acc += term
        terms = j + 1
        weighted = term if ratio_left is None else term * ratio_left
        norm = float(np.abs(weighted).sum(axis=1).max())
        if norm < series_tol:
            break
    else:
        flags.add("max-terms")
        logger.warning(
            "derivative series not converged: %d terms, last term norm %.3e", terms, norm
        )
    if ratio_left is not None:
        acc *= ratio_left
    if side is Side.RIGHT:
        acc = _flip(acc)
    total += acc
    return total, SeriesReport(terms, norm, frozenset(flags))


def gen_derivative_left(grid: Grid, p: FracParams, w=None,
                        series_tol: float = DEFAULT_SERIES_TOL,
                        max_terms: int = DEFAULT_MAX_TERMS) -> tuple[OperatorMatrix, SeriesReport]:
    """Left weighted generalized derivative, ``(1/phi) sum (-mu)^j I^{beta j}_{a,w}``.

    The series is truncated at the first term whose max-row-sum norm falls
    below ``series_tol``; hitting ``max_terms`` sets the ``"max-terms"`` flag.
    """
    w = as_weight(w)
    s, report = _series(grid, p, w, Side.LEFT, series_tol, max_terms)
    return OperatorMatrix(grid, s / p.phi, OperatorKind.GEN_DER_LEFT, p, w.description), report


def gen_derivative_right(grid: Grid, p: FracParams, w=None,
                         series_tol: float = DEFAULT_SERIES_TOL,
                         max_terms: int = DEFAULT_MAX_TERMS,
                         sign_convention: SignConvention | str = SignConvention.DEFINITION,
                         ) -> tuple[OperatorMatrix, SeriesReport]:
    """Right weighted generalized derivative.

    With the default convention this is ``(+1/phi) sum (-mu)^j I^{beta j}_{b,w}``,
    i.e. the kernel definition expanded term by term, which equals the
    reflected left derivative. ``sign_convention="printed"`` negates it.
    """
    w = as_weight(w)
    sign = -1.0 if SignConvention(sign_convention) is SignConvention.PRINTED else 1.0
    s, report = _series(grid, p, w, Side.RIGHT, series_tol, max_terms)
    return OperatorMatrix(grid, sign * s / p.phi, OperatorKind.GEN_DER_RIGHT, p,
                          w.description), report


def gen_derivative(grid: Grid, p: FracParams, w=None, side: Side | str = Side.LEFT, **kwargs):
    if Side(side) is Side.LEFT:
        return gen_derivative_left(grid, p, w, **kwargs)
    return gen_derivative_right(grid, p, w, **kwargs)


def gen_integral(grid: Grid, p: FracParams, w=None, side: Side | str = Side.LEFT):
    if Side(side) is Side.LEFT:
        return gen_integral_left(grid, p, w)
    return gen_integral_right(grid, p, w)


def build_many(builder, arg_list, max_workers: int | None = None) -> list:
    """Build several operators concurrently; builders share no mutable state."""
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(lambda args: builder(*args), arg_list))


# ------------------------------------------------------------ direct oracle


def gen_derivative_direct_oracle(f: SampledFunction, p: FracParams, w=None,
                                 side: Side | str = Side.LEFT,
                                 opts: MLEvalOptions | None = None) -> SampledFunction:
    """Differentiate the Mittag-Leffler kernel integral numerically.

    Test-only cross-check. ``F(t_i) = int (w f)(s) E_beta(-mu |t_i - s|^beta) ds``
    by the plain trapezoid rule, then second-order finite differences, then
    scaling by ``+-1 / (phi w(t_i))``. Needs smooth ``f``.
    """
    side = Side(side)
    w = as_weight(w)
    grid = f.grid
    n, h = grid.n, grid.h
    wv = w.on(grid)
    kernel = np.array([ml_kernel(p.beta, p.mu, k * h, opts) for k in range(n + 1)])
    wf = wv * f.values
    if side is Side.RIGHT:
        wf = wf[::-1]
    # F_i = h * sum' wf_j K_{i-j}, trapezoid over j = 0..i
    F = np.zeros(n + 1)
    for i in range(1, n + 1):
        prod = wf[: i + 1] * kernel[i::-1]
        F[i] = h * (prod.sum() - 0.5 * (prod[0] + prod[-1]))
    if side is Side.RIGHT:
        # F was accumulated on the reflected axis: F_right(t_i) = F[n - i]
        F = F[::-1]
    dF = np.gradient(F, h, edge_order=2)
    sign = 1.0 if side is Side.LEFT else -1.0
    return SampledFunction(grid, sign * dF / (p.phi * wv))


# ------------------------------------------------------------- application


def reflect(f: SampledFunction) -> SampledFunction:
    """``(Qf)(x) = f(a + b - x)`` on the grid: reverse the samples."""
    return SampledFunction(f.grid, f.values[::-1])


def apply(m: OperatorMatrix, f: SampledFunction) -> SampledFunction:
    if m.grid != f.grid:
        raise GridMismatch(f"operator on {m.grid}, samples on {f.grid}")
    return SampledFunction(f.grid, m.entries @ f.values)
