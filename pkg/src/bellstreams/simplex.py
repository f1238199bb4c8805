"""Two-phase tableau simplex over exact rationals.

Small dense problems only (a handful of rows, a few dozen columns). Uses
Bland's rule, so it terminates without anti-cycling tricks.

    minimize    c @ x
    subject to  A @ x == b,  x >= 0
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LPResult:
    status: str
    x: list[Fraction] | None
    objective: Fraction | None
    # Phase-one minimum of the summed artificial variables (L1 residual of A x = b).
    residual: Fraction

    @property
    def feasible(self) -> bool:
        return self.status != INFEASIBLE


def _pivot(T: list[list[Fraction]], basis: list[int], r: int, c: int) -> None:
    row = T[r]
    p = row[c]
    if p != 1:
        T[r] = row = [v / p for v in row]
    for i, other in enumerate(T):
        if i == r:
            continue
        f = other[c]
        if f:
            T[i] = [o - f * v for o, v in zip(other, row)]
    basis[r] = c


def _iterate(T, basis, allowed: int) -> str:
    """Run Bland's-rule pivots on the last row as the objective."""
    m = len(T) - 1
    while True:
        cost = T[-1]
        col = next((j for j in range(allowed) if cost[j] < 0), None)
        if col is None:
            return OPTIMAL
        best = None
        for i in range(m):
            a = T[i][col]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return UNBOUNDED
        _pivot(T, basis, best[1], col)


def solve(A: Sequence[Sequence], b: Sequence, c: Sequence | None = None, tol=0) -> LPResult:
    """Solve the standard-form LP exactly.

    ``tol`` is the phase-one residual accepted as feasible (0 for exact
    rational data). Entries are converted with ``Fraction``, so floats are
    taken at their exact binary value.
    """
    A = [[Fraction(v) for v in row] for row in A]
    b = [Fraction(v) for v in b]
    m, n = len(A), len(A[0]) if A else 0
    tol = Fraction(tol)

    # Phase one: artificials on every row, rows flipped so b >= 0.
    T = []
    for i in range(m):
        sign = -1 if b[i] < 0 else 1
        row = [sign * v for v in A[i]] + [Fraction(int(k == i)) for k in range(m)] + [sign * b[i]]
        T.append(row)
    cost = [Fraction(0)] * (n + m + 1)
    for row in T:
        for j in range(n):
            cost[j] -= row[j]
        cost[-1] -= row[-1]
    T.append(cost)
    basis = list(range(n, n + m))
    _iterate(T, basis, n)
    residual = -T[-1][-1]
    if residual > tol:
        return LPResult(INFEASIBLE, None, None, residual)

    # Drive zero-level artificials out of the basis; drop redundant rows.
    keep = []
    for i in range(m):
        if basis[i] >= n and T[i][-1] == 0:
            col = next((j for j in range(n) if T[i][j] != 0), None)
            if col is None:
                continue
            _pivot(T, basis, i, col)
        keep.append(i)
    T = [T[i] for i in keep]
    basis = [basis[i] for i in keep]

    if c is None:
        x = _extract(T, basis, n)
        return LPResult(OPTIMAL, x, Fraction(0), residual)

    # Phase two: artificial columns stay in the tableau but may not re-enter.
    c = [Fraction(v) for v in c]
    obj = c + [Fraction(0)] * m + [Fraction(0)]
    for i, j in enumerate(basis):
        if j < n and c[j]:
            f = c[j]
            obj = [o - f * v for o, v in zip(obj, T[i])]
    T.append(obj)
    status = _iterate(T, basis, n)
    T.pop()
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED, None, None, residual)
    x = _extract(T, basis, n)
    value = sum((ci * xi for ci, xi in zip(c, x)), Fraction(0))
    art = sum((T[i][-1] for i, j in enumerate(basis) if j >= n), Fraction(0))
    return LPResult(OPTIMAL, x, value, max(residual, art))


def _extract(T, basis, n) -> list[Fraction]:
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = T[i][-1]
    return x
