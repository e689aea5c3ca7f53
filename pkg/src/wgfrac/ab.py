"""Atangana-Baleanu operators built independently of :mod:`wgfrac.operators`.

With ``w = 1`` and ``beta = alpha`` the weighted generalized operators reduce
to the AB integral and the AB derivative in the Riemann-Liouville sense.
This module builds those from the closed-form kernel weights instead of the
truncated term-by-term series. The weights come from the two-parameter
Mittag-Leffler function, summed in extended precision with mpmath. The
matrices are meant as a cross-check only.

For the AB derivative the product-trapezoid weights of the summed kernel
are second differences of ``S(k) = k (E_{alpha,2}(-lam (k h)^alpha) - 1)``
with ``lam = alpha / (1 - alpha)``, plus the end correction
``E_alpha(-lam (i h)^alpha) - 1`` in the first column.
"""

from __future__ import annotations

import mpmath as mp
import numpy as np

from .core import Grid

_DPS = 40


def _ml2(alpha, b, z):
    """Two-parameter Mittag-Leffler ``E_{alpha,b}(z)`` by direct mp summation."""
    total = mp.mpf(0)
    j = 0
    while True:
        term = z**j / mp.gamma(alpha * j + b)
        total += term
        if j > 5 and abs(term) < mp.mpf(10) ** (-_DPS):
            return total
        j += 1


def _assemble(n, diag, second_diff, first_col):
    out = np.zeros((n + 1, n + 1))
    for i in range(1, n + 1):
        out[i, 0] = float(first_col(i))
        out[i, i] = float(diag)
        for j in range(1, i):
            out[i, j] = float(second_diff[i - j])
    return out


def ab_matrices(grid: Grid, alpha: float) -> dict[str, np.ndarray]:
    """Return ``{"int_left", "int_right", "der_left", "der_right"}`` AB matrices."""
    with mp.workdps(_DPS):
        n = grid.n
        a = mp.mpf(alpha)
        h = (mp.mpf(grid.b) - mp.mpf(grid.a)) / n
        B = 1 - a + a / mp.gamma(a)
        lam = a / (1 - a)

        # RL integral of order alpha
        p = [mp.mpf(0)] + [(k * h) ** (a + 1) / (h * mp.gamma(a + 2)) for k in range(1, n + 2)]
        c = [None] + [p[k + 1] - 2 * p[k] + p[k - 1] for k in range(1, n + 1)]
        rl = _assemble(n, p[1], c, lambda i: p[i - 1] - (i - a - 1) * p[i] / i)
        int_left = float((1 - a) / B) * np.eye(n + 1) + float(a / B) * rl

        # summed derivative kernel
        S = [mp.mpf(0)] + [k * (_ml2(a, 2, -lam * (k * h) ** a) - 1) for k in range(1, n + 2)]
        E1 = [None] + [_ml2(a, 1, -lam * (i * h) ** a) - 1 for i in range(1, n + 1)]
        cs = [None] + [S[k + 1] - 2 * S[k] + S[k - 1] for k in range(1, n + 1)]
        tail = _assemble(n, S[1], cs, lambda i: S[i - 1] - S[i] + E1[i])
        scale = float(B / (1 - a))
        der_left = scale * (np.eye(n + 1) + tail)

    flip = lambda m: m[::-1, ::-1].copy()  # noqa: E731
    return {
        "int_left": int_left,
        "int_right": flip(int_left),
        "der_left": der_left,
        "der_right": flip(der_left),
    }
