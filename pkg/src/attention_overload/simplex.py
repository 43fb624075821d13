"""Dense phase-one simplex for ``A x = b, x >= 0`` feasibility.

Bland's smallest-index rule is used for both entering and leaving
variables, so the method cannot cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["FeasibilityResult", "phase_one"]


@dataclass
class FeasibilityResult:
    feasible: bool
    x: np.ndarray | None
    infeasibility: float
    iterations: int


def phase_one(A, b, tol: float = 1e-9, max_iter: int = 50_000) -> FeasibilityResult:
    """Find ``x >= 0`` with ``A x = b`` or certify there is none.

    One artificial variable is added per row and their sum is minimized.
    The system is feasible when that minimum is at most ``tol``.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float).ravel()
    m, n = A.shape
    if b.shape != (m,):
        raise ValueError("dimension mismatch between A and b")
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # tableau columns: n structural, m artificial, rhs
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = A
    tab[:m, n : n + m] = np.eye(m)
    tab[:m, -1] = b
    basis = list(range(n, n + m))
    # reduced costs of the phase-one objective (sum of artificials)
    tab[m, :n] = -A.sum(axis=0)
    tab[m, -1] = -b.sum()

    it = 0
    while it < max_iter:
        cost = tab[m, : n + m]
        entering = np.flatnonzero(cost < -tol)
        if entering.size == 0:
            break
        j = int(entering[0])
        col = tab[:m, j]
        rows = np.flatnonzero(col > tol)
        if rows.size == 0:  # unbounded direction; cannot happen in phase one
            break
        ratios = tab[rows, -1] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        # Bland: among tied rows, leave the smallest basic index
        r = int(min(ties, key=lambda k: basis[k]))
        tab[r] /= tab[r, j]
        for k in range(m + 1):
            if k != r and tab[k, j] != 0.0:
                tab[k] -= tab[k, j] * tab[r]
        basis[r] = j
        it += 1

    infeas = float(-tab[m, -1])
    x = np.zeros(n + m)
    for r, j in enumerate(basis):
        x[j] = tab[r, -1]
    feasible = infeas <= tol * max(1.0, float(np.abs(b).sum()))
    xs = np.clip(x[:n], 0.0, None) if feasible else None
    return FeasibilityResult(feasible, xs, max(infeas, 0.0), it)
