"""Dense two-phase simplex over exact rationals.

Meant for the small linear programs of the deterministic vertex oracle
(at most ~1100 columns and ~25 rows), where exact arithmetic settles
boundary cases that floating point cannot.  Bland's rule, no scaling, no
performance tricks; everything is fractions.Fraction.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

ZERO = Fraction(0)
ONE = Fraction(1)


class ExactLPError(RuntimeError):
    """The exact simplex could not finish (infeasible, unbounded or stuck)."""


def solve_min(
    cost: Sequence[Fraction],
    rows: Sequence[Sequence[Fraction]],
    rhs: Sequence[Fraction],
    max_pivots: int = 200_000,
) -> tuple[list[Fraction], Fraction, list[Fraction]]:
    """Minimize cost.z subject to rows.z == rhs and z >= 0, exactly.

    Returns (z, objective, duals) where duals has one multiplier per row of
    the original system.  Raises ExactLPError on infeasible or unbounded
    programs or if the pivot budget runs out.
    """
    m = len(rows)
    n = len(cost)
    if len(rhs) != m:
        raise ValueError("rhs length must match the number of rows")

    # Flip rows to make the right-hand side non-negative, then append an
    # identity of artificial columns and the rhs column.
    tableau: list[list[Fraction]] = []
    flipped = []
    for i in range(m):
        row = list(rows[i])
        if len(row) != n:
            raise ValueError("all rows must have one entry per cost coefficient")
        b = rhs[i]
        if b < 0:
            row = [-x for x in row]
            b = -b
            flipped.append(True)
        else:
            flipped.append(False)
        tableau.append(row + [ZERO] * m + [b])
    for i in range(m):
        tableau[i][n + i] = ONE

    basis = [n + i for i in range(m)]
    total_cols = n + m

    def reduced_row(cvec: list[Fraction]) -> list[Fraction]:
        obj = list(cvec) + [ZERO]
        for i, bv in enumerate(basis):
            cb = cvec[bv]
            if cb != 0:
                ri = tableau[i]
                for j in range(total_cols + 1):
                    obj[j] -= cb * ri[j]
        return obj

    def run(obj: list[Fraction], allowed_limit: int, budget: list[int]) -> list[Fraction]:
        while True:
            enter = -1
            for j in range(allowed_limit):
                if obj[j] < 0:
                    enter = j
                    break
            if enter < 0:
                return obj
            leave = -1
            best = None
            for i in range(m):
                a = tableau[i][enter]
                if a > 0:
                    ratio = tableau[i][-1] / a
                    if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                        best = ratio
                        leave = i
            if leave < 0:
                raise ExactLPError("objective is unbounded below")
            piv = tableau[leave][enter]
            inv = ONE / piv
            tableau[leave] = [x * inv for x in tableau[leave]]
            prow = tableau[leave]
            for i in range(m):
                if i != leave and tableau[i][enter] != 0:
                    f = tableau[i][enter]
                    tableau[i] = [x - f * p for x, p in zip(tableau[i], prow)]
            if obj[enter] != 0:
                f = obj[enter]
                for j in range(total_cols + 1):
                    obj[j] -= f * prow[j]
            basis[leave] = enter
            budget[0] -= 1
            if budget[0] <= 0:
                raise ExactLPError("pivot budget exhausted")

    budget = [max_pivots]

    # Phase 1: drive the artificials to zero.
    phase1_cost = [ZERO] * n + [ONE] * m
    obj = run(reduced_row(phase1_cost), total_cols, budget)
    if -obj[-1] > 0:
        raise ExactLPError("the program is infeasible")

    # Phase 2: artificial columns may stay basic at zero but never re-enter.
    phase2_cost = list(cost) + [ZERO] * m
    obj = run(reduced_row(phase2_cost), n, budget)

    z = [ZERO] * n
    for i, bv in enumerate(basis):
        if bv < n:
            z[bv] = tableau[i][-1]
    objective = -obj[-1]
    duals = []
    for i in range(m):
        y = -obj[n + i]
        duals.append(-y if flipped[i] else y)
    return z, objective, duals
