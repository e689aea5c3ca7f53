r"""One-parameter Mittag-Leffler function on the real line.

.. math:: E_\beta(z) = \sum_{j \ge 0} \frac{z^j}{\Gamma(\beta j + 1)}

The series is summed directly with Neumaier compensation. This is accurate
for the moderate arguments met by the operator kernels; for large negative
``z`` the alternating terms cancel and digits are lost, which is reported
through :class:`MLInfo` rather than hidden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, NonConvergence

# largest argument for which math.gamma stays finite
_GAMMA_DIRECT_MAX = 171.0
# ratio of the largest term to the result above which cancellation is flagged
CANCELLATION_RATIO = 1e8


@dataclass(frozen=True)
class MLEvalOptions:
    abs_tol: float = 1e-15
    max_terms: int = 400

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise DomainError(f"abs_tol must be positive, got {self.abs_tol}")
        if self.max_terms < 1:
            raise DomainError(f"max_terms must be >= 1, got {self.max_terms}")


DEFAULT_OPTIONS = MLEvalOptions()


@dataclass(frozen=True)
class MLInfo:
    """Diagnostics of one series evaluation."""

    value: float
    terms: int
    last_term: float
    max_term: float
    precision_warning: bool


def _term(beta: float, z: float, j: int) -> float:
    arg = beta * j + 1.0
    if arg < _GAMMA_DIRECT_MAX:
        try:
            return z**j / math.gamma(arg)
        except OverflowError:
            pass
    sign = -1.0 if (z < 0 and j % 2) else 1.0
    return sign * math.exp(j * math.log(abs(z)) - math.lgamma(arg))


def mittag_leffler_info(beta: float, z: float, opts: MLEvalOptions | None = None) -> MLInfo:
    """Evaluate :math:`E_\\beta(z)` and return the value with diagnostics.

    Raises
    ------
    DomainError
        If ``beta <= 0`` or ``z`` is not finite.
    NonConvergence
        If ``opts.max_terms`` terms were summed and the last one is still
        not below ``opts.abs_tol``.
    """
    opts = opts or DEFAULT_OPTIONS
    beta = float(beta)
    z = float(z)
    if not beta > 0:
        raise DomainError(f"Mittag-Leffler parameter must be positive, got {beta}")
    if not math.isfinite(z):
        raise DomainError(f"argument must be finite, got {z}")
    if z == 0.0:
        return MLInfo(1.0, 1, 1.0, 1.0, False)

    total = 0.0
    comp = 0.0
    max_term = 0.0
    term = 0.0
    for j in range(opts.max_terms):
        term = _term(beta, z, j)
        # Neumaier: keep the low-order bits lost by each addition
        t = total + term
        if abs(total) >= abs(term):
            comp += (total - t) + term
        else:
            comp += (term - t) + total
        total = t
        max_term = max(max_term, abs(term))
        if abs(term) < opts.abs_tol:
            break
    else:
        raise NonConvergence(
            f"E_{beta}({z}): last term {abs(term):.3e} >= abs_tol {opts.abs_tol:.1e} "
            f"after {opts.max_terms} terms"
        )
    value = total + comp
    warn = max_term > CANCELLATION_RATIO * abs(value)
    return MLInfo(value, j + 1, abs(term), max_term, warn)


def mittag_leffler(beta: float, z: float, opts: MLEvalOptions | None = None) -> float:
    """Return :math:`E_\\beta(z)` for real ``z``."""
    return mittag_leffler_info(beta, z, opts).value


def ml_kernel(beta: float, mu: float, d: float, opts: MLEvalOptions | None = None) -> float:
    """Kernel value ``E_beta(-mu * d**beta)`` for a displacement ``d >= 0``."""
    if d < 0:
        raise DomainError(f"displacement must be nonnegative, got {d}")
    if mu < 0:
        raise DomainError(f"mu must be nonnegative, got {mu}")
    return mittag_leffler(beta, -mu * d**beta, opts)
