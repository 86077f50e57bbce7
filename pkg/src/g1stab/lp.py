"""Exact rational linear programming.

Two engines, both exact and deterministic:

* :func:`solve_lp` -- a two-phase simplex over ``fractions.Fraction``
  with Bland's smallest-index rule, used for witness searches and as
  the reference implementation;
* :func:`feasible_eq` -- a phase-1-only feasibility test for
  ``A x = b, x >= 0`` that keeps rows as scaled integer vectors (one
  gcd per row per pivot instead of one per entry), an order of
  magnitude faster on the many tiny systems the membership oracle
  solves.

No floating point is involved anywhere.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import List, Optional, Sequence

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


class LPResult:
    __slots__ = ("status", "x", "objective")

    def __init__(self, status, x=None, objective=None):
        self.status = status
        self.x = x
        self.objective = objective

    def __repr__(self):
        return f"LPResult({self.status}, obj={self.objective})"


def _pivot(rows: List[List[Fraction]], basis: List[int], p: int, q: int) -> None:
    piv = rows[p][q]
    rows[p] = [v / piv for v in rows[p]]
    for i in range(len(rows)):
        if i != p and rows[i][q] != 0:
            f = rows[i][q]
            rp = rows[p]
            rows[i] = [v - f * w for v, w in zip(rows[i], rp)]
    basis[p] = q


def _bland_max(rows, basis, cost, allowed_cols):
    """Maximize; ``cost`` is the reduced-cost row (index -1 is the value)."""
    m = len(rows)
    while True:
        enter = -1
        for j in allowed_cols:
            if cost[j] > 0:
                enter = j
                break
        if enter < 0:
            return OPTIMAL
        leave = -1
        best = None
        for i in range(m):
            a = rows[i][enter]
            if a > 0:
                ratio = rows[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            return UNBOUNDED
        _pivot(rows, basis, leave, enter)
        f = cost[enter]
        rp = rows[leave]
        for j in range(len(cost)):
            cost[j] -= f * rp[j]


def solve_lp(
    c: Sequence,
    A_ub: Sequence[Sequence] = (),
    b_ub: Sequence = (),
    A_eq: Sequence[Sequence] = (),
    b_eq: Sequence = (),
) -> LPResult:
    """Maximize ``c . x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``."""
    c = [Fraction(v) for v in c]
    n = len(c)
    rows = []
    kinds = []
    for a, b in zip(A_ub, b_ub):
        rows.append([Fraction(v) for v in a] + [Fraction(b)])
        kinds.append("ub")
    for a, b in zip(A_eq, b_eq):
        rows.append([Fraction(v) for v in a] + [Fraction(b)])
        kinds.append("eq")
    m = len(rows)
    nslack = sum(1 for k in kinds if k == "ub")
    width = n + nslack + m + 1  # structural + slacks + artificials + rhs
    tab = []
    si = 0
    for i, row in enumerate(rows):
        r = row[:-1] + [Fraction(0)] * (nslack + m) + [row[-1]]
        if kinds[i] == "ub":
            r[n + si] = Fraction(1)
            si += 1
        if r[-1] < 0:
            r = [-v for v in r]
        r[n + nslack + i] = Fraction(1)
        tab.append(r)
    basis = [n + nslack + i for i in range(m)]

    structurals = list(range(n + nslack))
    # phase 1: maximize -sum(artificials); reduced costs = column sums
    cost = [Fraction(0)] * width
    for j in structurals + [width - 1]:
        cost[j] = sum(r[j] for r in tab)
    status = _bland_max(tab, basis, cost, structurals)
    if cost[-1] != 0:
        return LPResult(INFEASIBLE)
    # drive leftover artificial basics out, drop redundant rows
    for i in range(m - 1, -1, -1):
        if basis[i] >= n + nslack:
            for j in structurals:
                if tab[i][j] != 0:
                    _pivot(tab, basis, i, j)
                    break
            else:
                tab.pop(i)
                basis.pop(i)
    # phase 2 (cost[-1] holds minus the objective value throughout)
    cost = [Fraction(0)] * width
    for j in range(n):
        cost[j] = c[j]
    for i, bi in enumerate(basis):
        if bi < n and c[bi] != 0:
            f = c[bi]
            for j in range(width):
                cost[j] -= f * tab[i][j]
    status = _bland_max(tab, basis, cost, structurals)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED)
    x = [Fraction(0)] * n
    for i, bi in enumerate(basis):
        if bi < n:
            x[bi] = tab[i][-1]
    return LPResult(OPTIMAL, x, -cost[-1])


# ---------------------------------------------------------------------------
# fast integer feasibility


def _normalize_row(row: List[int]) -> List[int]:
    g = 0
    for v in row:
        if v:
            g = gcd(g, v)
            if g == 1:
                return row
    if g > 1:
        return [v // g for v in row]
    return row


def feasible_eq(A: Sequence[Sequence], b: Sequence) -> bool:
    """Exact feasibility of ``A x = b`` with ``x >= 0``.

    Rows are scaled to integers; every pivot keeps rows integral with a
    single gcd-normalization per row, and Bland's rule picks pivots, so
    the test terminates and is fully deterministic.
    """
    if len(A) == 0:
        return True
    rows: List[List[int]] = []
    for a, bv in zip(A, b):
        fr = [Fraction(v) for v in a] + [Fraction(bv)]
        den = 1
        for v in fr:
            den = den * v.denominator // gcd(den, v.denominator)
        r = [int(v * den) for v in fr]
        rows.append(r)
    return feasible_int_rows(rows)


def feasible_int_rows(rows: Sequence[Sequence[int]]) -> bool:
    """Phase-1 feasibility for integer rows ``[A | b]`` of ``A x = b, x >= 0``."""
    m = len(rows)
    if m == 0:
        return True
    n = len(rows[0]) - 1
    rows = [
        _normalize_row([-v for v in r] if r[-1] < 0 else list(r)) for r in rows
    ]

    basis: List[int] = [n + i for i in range(m)]  # >= n marks an artificial
    # reduced-cost row for minimizing the artificial sum
    cost = [0] * (n + 1)
    for j in range(n + 1):
        cost[j] = sum(r[j] for r in rows)

    while True:
        enter = -1
        for j in range(n):
            if cost[j] > 0:
                enter = j
                break
        if enter < 0:
            return cost[-1] == 0
        leave = -1
        bn = bd = None  # best ratio as bn/bd
        for i in range(m):
            a = rows[i][enter]
            if a > 0:
                num, den = rows[i][-1], a
                if leave < 0 or num * bd < bn * den or (
                    num * bd == bn * den and basis[i] < basis[leave]
                ):
                    bn, bd, leave = num, den, i
        if leave < 0:
            # the artificial objective is bounded, so a positive reduced
            # cost always admits a ratio row; guard anyway
            return False
        piv_row = rows[leave]
        piv = piv_row[enter]
        for i in range(m):
            if i != leave:
                a = rows[i][enter]
                if a:
                    ri = rows[i]
                    rows[i] = _normalize_row(
                        [piv * x - a * y for x, y in zip(ri, piv_row)]
                    )
        a = cost[enter]
        if a:
            cost = _normalize_row([piv * x - a * y for x, y in zip(cost, piv_row)])
        basis[leave] = enter
