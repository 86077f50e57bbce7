"""Wall-and-chamber structure of the character space.

The walls in R^n are the hyperplanes ``a_i = 0`` (axis walls) and
``sum_{i in S} a_i = 1`` over nonempty subsets S (level walls),
n + 2^n - 1 walls in total.  On each connected component of the
complement, stability of every curve class is constant and coincides
with semistability.

Chambers are enumerated exactly: starting from a known off-wall point,
a breadth-first search flips one wall sign at a time and keeps the sign
vectors whose open cell meets the open bounding box, certified by an
exact LP that also returns an interior rational witness with maximum
margin.  Cells differing in exactly one sign always share a facet, so
the search reaches every cell meeting the box.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Optional, Sequence

from . import lp
from .curves import Curve, canonical_form
from .polytopes import verdict

DEFAULT_CHAMBER_CAP = 4


class ConstancyViolation(RuntimeError):
    """Classification changed inside one chamber (must never happen)."""


@dataclass(frozen=True)
class Wall:
    """A hyperplane a_i = 0 (axis) or sum_{i in S} a_i = 1 (level)."""

    kind: str  # "axis" | "level"
    index: Optional[int]  # axis walls
    subset: Optional[frozenset]  # level walls

    @property
    def name(self) -> str:
        if self.kind == "axis":
            return f"a{self.index}=0"
        return "a(" + "+".join(str(i) for i in sorted(self.subset)) + ")=1"

    def coeffs(self, n):
        if self.kind == "axis":
            return tuple(
                Fraction(1) if i == self.index else Fraction(0)
                for i in range(1, n + 1)
            )
        return tuple(
            Fraction(1) if i in self.subset else Fraction(0)
            for i in range(1, n + 1)
        )

    @property
    def rhs(self) -> Fraction:
        return Fraction(0) if self.kind == "axis" else Fraction(1)

    def evaluate(self, point) -> Fraction:
        if self.kind == "axis":
            return Fraction(point[self.index - 1])
        return sum(Fraction(point[i - 1]) for i in sorted(self.subset))

    def side(self, point) -> int:
        v = self.evaluate(point) - self.rhs
        return (v > 0) - (v < 0)


def wall_arrangement(n: int):
    """All n + 2^n - 1 walls, in a fixed deterministic order."""
    if n < 1:
        raise ValueError("need n >= 1")
    walls = [Wall("axis", i, None) for i in range(1, n + 1)]
    items = list(range(1, n + 1))
    for size in range(1, n + 1):
        for sub in combinations(items, size):
            walls.append(Wall("level", None, frozenset(sub)))
    return walls


def default_box(n: int):
    return (Fraction(-1), Fraction(n + 1))


@dataclass(frozen=True)
class Chamber:
    """An open cell of the arrangement with an exact interior witness."""

    index: int
    signs: tuple  # +1 / -1 per wall, in wall_arrangement order
    witness: tuple  # rational interior point

    def sign_string(self) -> str:
        return "".join("+" if s > 0 else "-" for s in self.signs)


def _witness_lp(walls, signs, n, box):
    """Max-margin LP for the open cell; returns a witness or None.

    Variables are y = x - lo >= 0 and the margin t >= 0; maximized t
    must be positive for the cell to meet the open box.
    """
    lo, hi = box
    nv = n + 1  # y_1..y_n, t
    A_ub, b_ub = [], []
    for w, s in zip(walls, signs):
        c = w.coeffs(n)
        # s * (c.x - rhs) >= t  <=>  -s*c.y + t <= s*(c.lo_shift... )
        row = [-s * v for v in c] + [Fraction(1)]
        rhs = s * (sum(v * lo for v in c) - w.rhs)
        A_ub.append(row)
        b_ub.append(rhs)
    for i in range(n):
        row = [Fraction(0)] * nv
        row[i] = Fraction(-1)
        row[n] = Fraction(1)
        A_ub.append(row)
        b_ub.append(Fraction(0))  # y_i >= t
        row = [Fraction(0)] * nv
        row[i] = Fraction(1)
        row[n] = Fraction(1)
        A_ub.append(row)
        b_ub.append(hi - lo)  # y_i + t <= hi - lo
    c_obj = [Fraction(0)] * n + [Fraction(1)]
    res = lp.solve_lp(c_obj, A_ub, b_ub)
    if res.status != lp.OPTIMAL or res.objective <= 0:
        return None
    return tuple(y + lo for y in res.x[:n])


def enumerate_chambers(n: int, box=None, cap: int = DEFAULT_CHAMBER_CAP):
    """Every full-dimensional cell meeting the open box, with witnesses."""
    if n > cap:
        raise ValueError(f"chamber enumeration capped at n <= {cap}")
    if box is None:
        box = default_box(n)
    walls = wall_arrangement(n)
    start = tuple(Fraction(-1, i + 2) for i in range(n))
    signs0 = tuple(w.side(start) for w in walls)
    assert all(s != 0 for s in signs0)
    found = {}
    queue = [signs0]
    witness0 = _witness_lp(walls, signs0, n, box)
    assert witness0 is not None
    found[signs0] = witness0
    while queue:
        sv = queue.pop()
        for k in range(len(walls)):
            cand = sv[:k] + (-sv[k],) + sv[k + 1 :]
            if cand in found:
                continue
            wit = _witness_lp(walls, cand, n, box)
            if wit is not None:
                found[cand] = wit
                queue.append(cand)
    chambers = []
    for i, sv in enumerate(sorted(found)):
        chambers.append(Chamber(i, sv, found[sv]))
    return chambers


def sample_interior(walls, chamber: Chamber, box, rng: random.Random, steps: int = 2):
    """A random rational point in the open cell, by exact hit-and-run."""
    n = len(chamber.witness)
    lo, hi = box
    point = list(chamber.witness)
    for _ in range(steps):
        d = [Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for _ in range(n)]
        if all(v == 0 for v in d):
            continue
        s_lo, s_hi = None, None  # open interval for the step size
        for w, sign in zip(walls, chamber.signs):
            c = w.coeffs(n)
            val = sum(ci * pi for ci, pi in zip(c, point)) - w.rhs
            der = sum(ci * di for ci, di in zip(c, d))
            if der == 0:
                continue
            bound = -val / der
            if der * sign > 0:
                s_lo = bound if s_lo is None else max(s_lo, bound)
            else:
                s_hi = bound if s_hi is None else min(s_hi, bound)
        for i in range(n):
            if d[i] == 0:
                continue
            for edge in (lo, hi):
                bound = (edge - point[i]) / d[i]
                if (d[i] > 0) == (edge == hi):
                    s_hi = bound if s_hi is None else min(s_hi, bound)
                else:
                    s_lo = bound if s_lo is None else max(s_lo, bound)
        assert s_lo is not None and s_hi is not None and s_lo < 0 < s_hi
        frac = Fraction(rng.randint(1, 15), 16)
        s = s_lo + (s_hi - s_lo) * frac
        if s == 0 or s == s_lo or s == s_hi:
            continue
        point = [p + s * di for p, di in zip(point, d)]
    return tuple(point)


def classify_chamber(
    chamber: Chamber,
    curves: Sequence[Curve],
    n: int,
    box=None,
    rng: Optional[random.Random] = None,
    extra_points: int = 5,
):
    """Stable/unstable verdict per curve class, constant on the chamber.

    Evaluates at the witness and at ``extra_points`` further interior
    samples; any disagreement raises :class:`ConstancyViolation`.  Off
    the walls stability and semistability coincide, which is asserted.
    """
    if box is None:
        box = default_box(n)
    if rng is None:
        rng = random.Random(0)
    walls = wall_arrangement(n)
    points = [chamber.witness]
    for _ in range(extra_points):
        points.append(sample_interior(walls, chamber, box, rng))
    table = {}
    for curve in curves:
        verdicts = []
        for p in points:
            v = verdict(curve, p)
            if v.semistable != v.stable:
                raise ConstancyViolation(
                    f"stable != semistable off the walls at {p} "
                    f"for {canonical_form(curve).decode()}"
                )
            verdicts.append(v.stable)
        if any(x != verdicts[0] for x in verdicts):
            raise ConstancyViolation(
                f"classification varies inside chamber {chamber.index} "
                f"for {canonical_form(curve).decode()}"
            )
        table[canonical_form(curve).decode()] = "stable" if verdicts[0] else "unstable"
    return table


def atlas_report(n: int, curves=None, seed: int = 0, box=None, cap: int = DEFAULT_CHAMBER_CAP):
    """Chambers, per-chamber classifications and wall-crossing diffs."""
    from .enumerate import enumerate_curves  # local import to avoid a cycle

    if curves is None:
        curves = enumerate_curves(n)
    if box is None:
        box = default_box(n)
    walls = wall_arrangement(n)
    chambers = enumerate_chambers(n, box=box, cap=cap)
    rng = random.Random(seed)
    classifications = [
        classify_chamber(ch, curves, n, box=box, rng=rng) for ch in chambers
    ]
    by_signs = {ch.signs: ch.index for ch in chambers}
    flips = []
    for ch in chambers:
        for k in range(len(walls)):
            cand = ch.signs[:k] + (-ch.signs[k],) + ch.signs[k + 1 :]
            other = by_signs.get(cand)
            if other is None or other <= ch.index:
                continue
            mine = classifications[ch.index]
            theirs = classifications[other]
            gained = sorted(
                c for c in mine if mine[c] == "unstable" and theirs[c] == "stable"
            )
            lost = sorted(
                c for c in mine if mine[c] == "stable" and theirs[c] == "unstable"
            )
            if gained or lost:
                flips.append(
                    {
                        "wall": walls[k].name,
                        "from": ch.index,
                        "to": other,
                        "gained": gained,
                        "lost": lost,
                    }
                )
    return {
        "n": n,
        "walls": [w.name for w in walls],
        "chambers": [
            {
                "id": ch.index,
                "signs": ch.sign_string(),
                "witness": [str(x) for x in ch.witness],
                "stable": sorted(
                    c for c, s in classifications[ch.index].items() if s == "stable"
                ),
            }
            for ch in chambers
        ],
        "flips": flips,
    }
