"""GIT (semi)stability of a pointed genus-1 curve from its combinatorics.

For a fully marked curve with index sets (I, J, I0) the semistable
characters chi = (a_1, ..., a_n) are exactly

    a_i >= 0 for all i,      a_i = 0 for i not in I u J,
    sum_{i in I} a_i >= 1,   sum_{i in I0} a_i <= 1,

an exact rational H-polytope.  Stability strengthens the inequalities
to strict ones and additionally requires the curve to have a finite
reduced stabilizer under the torus action.

An independent route to the same set goes through the generator data:
the semistable characters form ``Conv(Omega1) + Cone(Omega0)`` where
Omega1 = {e_i : i in I} and the cone rays are e_j for j in J together
with e_i for i in I \\ I0.  :func:`membership_lp` decides membership in
that Minkowski sum by exact LP feasibility, giving a second opinion
that never consults the H-polytope.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from . import lp
from .curves import FOLD, Curve, IndexSets, special_point_counts, stability_index_sets


class DimensionMismatch(ValueError):
    """Character length differs from the curve's number of marks."""


def parse_rational(text) -> Fraction:
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    return Fraction(str(text).strip())


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}" if q.denominator != 1 else str(q.numerator)


def character(values) -> tuple:
    """Normalize a character: a sequence (or comma string) of rationals."""
    if isinstance(values, str):
        values = [v for v in values.split(",") if v.strip()]
    return tuple(parse_rational(v) for v in values)


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: tuple
    rel: str  # ">=", "<=", "=="
    rhs: Fraction

    def evaluate(self, point) -> Fraction:
        return sum(c * x for c, x in zip(self.coeffs, point))

    def holds_at(self, point) -> bool:
        v = self.evaluate(point)
        if self.rel == ">=":
            return v >= self.rhs
        if self.rel == "<=":
            return v <= self.rhs
        return v == self.rhs

    def tight_at(self, point) -> bool:
        return self.evaluate(point) == self.rhs


@dataclass(frozen=True)
class HPolytope:
    """Exact half-space description with named constraints."""

    dim: int
    constraints: tuple

    def contains(self, point) -> bool:
        return not self.violations(point)

    def violations(self, point):
        if len(point) != self.dim:
            raise DimensionMismatch(f"expected {self.dim} coordinates")
        return [c.name for c in self.constraints if not c.holds_at(point)]

    def tight_constraints(self, point):
        return [
            c.name
            for c in self.constraints
            if c.rel != "==" and c.tight_at(point)
        ]

    def is_empty(self) -> bool:
        """Exact LP emptiness test (variables are shifted to x+t >= 0)."""
        # feasibility of the system by phase-1 on x = xp - xn split
        A_ub, b_ub, A_eq, b_eq = [], [], [], []
        for c in self.constraints:
            row = list(c.coeffs) + [-v for v in c.coeffs]
            if c.rel == ">=":
                A_ub.append([-v for v in row])
                b_ub.append(-c.rhs)
            elif c.rel == "<=":
                A_ub.append(row)
                b_ub.append(c.rhs)
            else:
                A_eq.append(row)
                b_eq.append(c.rhs)
        res = lp.solve_lp([0] * (2 * self.dim), A_ub, b_ub, A_eq, b_eq)
        return res.status == lp.INFEASIBLE


@dataclass(frozen=True)
class OmegaSets:
    """Index sets of the hull and cone generators (all standard basis vectors)."""

    omega1: frozenset  # indices i with e_i a hull generator
    omega0_rays: frozenset  # indices of cone ray generators

    def omega1_vectors(self, n):
        return [_basis_vector(n, i) for i in sorted(self.omega1)]

    def omega0_vectors(self, n):
        return [_basis_vector(n, i) for i in sorted(self.omega0_rays)]


def _basis_vector(n, i):
    v = [Fraction(0)] * n
    v[i - 1] = Fraction(1)
    return tuple(v)


@dataclass(frozen=True)
class StabilityVerdict:
    semistable: bool
    stable: bool
    finite_reduced_stabilizer: bool
    index_sets: IndexSets
    violations: tuple
    tight: tuple  # semistability constraints holding with equality

    def to_dict(self):
        return {
            "semistable": self.semistable,
            "stable": self.stable,
            "finite_reduced_stabilizer": self.finite_reduced_stabilizer,
            "I": sorted(self.index_sets.I),
            "J": sorted(self.index_sets.J),
            "I0": sorted(self.index_sets.I0),
            "violations": list(self.violations),
            "tight": list(self.tight),
        }


@lru_cache(maxsize=65536)
def _index_sets(curve: Curve) -> IndexSets:
    return stability_index_sets(curve)


@lru_cache(maxsize=65536)
def semistability_polytope(curve: Curve) -> HPolytope:
    """The exact H-polytope of semistable characters of a full curve."""
    n = curve.n
    idx = _index_sets(curve)
    support = idx.I | idx.J
    cons = []
    for i in range(1, n + 1):
        coeffs = _basis_vector(n, i)
        cons.append(Constraint(f"nonneg[{i}]", coeffs, ">=", Fraction(0)))
    for i in range(1, n + 1):
        if i not in support:
            cons.append(Constraint(f"support[{i}]", _basis_vector(n, i), "==", Fraction(0)))
    core = tuple(Fraction(1) if i in idx.I else Fraction(0) for i in range(1, n + 1))
    cons.append(Constraint("core_sum", core, ">=", Fraction(1)))
    if idx.I0:
        cap = tuple(Fraction(1) if i in idx.I0 else Fraction(0) for i in range(1, n + 1))
        cons.append(Constraint("fold_cap", cap, "<=", Fraction(1)))
    return HPolytope(n, tuple(cons))


@lru_cache(maxsize=65536)
def has_finite_reduced_stabilizer(curve: Curve) -> bool:
    """True when the reduced stabilizer of the torus action is finite.

    Combinatorially: every tail component carries >= 3 special points,
    and a fold core has at least one component with >= 3 special
    points.  This agrees with ``I u J = [1,n] and I0 != I``; both
    routes are computed and compared.
    """
    infos = special_point_counts(curve)
    cond = all(info.on_component >= 3 for info in infos if not info.is_core)
    if curve.core_kind == FOLD:
        cond = cond and any(
            info.on_component >= 3 for info in infos if info.is_core
        )
    idx = _index_sets(curve)
    formula = (idx.I | idx.J) == frozenset(range(1, curve.n + 1)) and idx.I0 != idx.I
    assert cond == formula, "stabilizer criteria disagree (internal bug)"
    return cond


@lru_cache(maxsize=65536)
def _index_lists(curve: Curve):
    idx = _index_sets(curve)
    support = idx.I | idx.J
    outside = tuple(i for i in range(1, curve.n + 1) if i not in support)
    return idx, outside, tuple(sorted(idx.I)), tuple(sorted(idx.I0))


def verdict(curve: Curve, chi) -> StabilityVerdict:
    """Full (semi)stability verdict of ``curve`` at the character ``chi``.

    The violation names match the constraints of
    :func:`semistability_polytope`; agreement of the two evaluations is
    pinned by tests.
    """
    chi = character(chi)
    if len(chi) != curve.n:
        raise DimensionMismatch(f"character has {len(chi)} entries, curve has n={curve.n}")
    idx, outside, I_list, I0_list = _index_lists(curve)
    violations = []
    for i, a in enumerate(chi, start=1):
        if a < 0:
            violations.append(f"nonneg[{i}]")
    for i in outside:
        if chi[i - 1] != 0:
            violations.append(f"support[{i}]")
    core_sum = sum(chi[i - 1] for i in I_list)
    if core_sum < 1:
        violations.append("core_sum")
    cap_sum = sum(chi[i - 1] for i in I0_list)
    if I0_list and cap_sum > 1:
        violations.append("fold_cap")
    semistable = not violations
    tight = ()
    if semistable:
        t = [f"nonneg[{i}]" for i, a in enumerate(chi, start=1) if a == 0]
        if core_sum == 1:
            t.append("core_sum")
        if I0_list and cap_sum == 1:
            t.append("fold_cap")
        tight = tuple(t)
    finite = has_finite_reduced_stabilizer(curve)
    stable = (
        finite
        and all(a > 0 for a in chi)
        and core_sum > 1
        and cap_sum < 1
    )
    return StabilityVerdict(semistable, stable, finite, idx, tuple(violations), tight)


def is_semistable(curve: Curve, chi) -> StabilityVerdict:
    return verdict(curve, chi)


def is_stable(curve: Curve, chi) -> StabilityVerdict:
    return verdict(curve, chi)


@lru_cache(maxsize=65536)
def omega_sets(curve: Curve) -> OmegaSets:
    """Hull and cone generators of the semistable set.

    The cone rays for a fold core are recomputed from scratch via the
    attachment rule (a core component contributes its marks when some
    other mark sits on it or on a tail anchored at one of its smooth
    points); the result must agree with J u (I \\ I0) and is asserted
    to.
    """
    idx = _index_sets(curve)
    omega1 = idx.I
    if curve.core_kind == FOLD:
        rays = set(idx.J)
        for k in range(curve.core_m):
            attached = set(curve.core_marks[k])
            for t in curve.tails:
                if t.anchor == ("smooth", k):
                    for b in t.iter_branches():
                        attached |= b.marks
            for i in curve.core_marks[k]:
                if attached - {i}:
                    rays.add(i)
        rays = frozenset(rays)
        assert rays == idx.J | (idx.I - idx.I0), "cone generators disagree (internal bug)"
    else:
        rays = idx.J | idx.I
    return OmegaSets(frozenset(omega1), frozenset(rays))


def membership_lp(chi, omega: OmegaSets, n=None) -> bool:
    """Exact LP: is chi in Conv(Omega1) + Cone(Omega0)?

    Solves for t >= 0, s >= 0 with sum(t) = 1 and
    ``sum t_w w + sum s_r r = chi`` by phase-1 simplex; independent of
    the H-polytope route.
    """
    chi = character(chi)
    if n is None:
        n = len(chi)
    if len(chi) != n:
        raise DimensionMismatch("character length mismatch")
    if not omega.omega1:
        raise ValueError("omega1 must be nonempty")
    hull = sorted(omega.omega1)
    rays = sorted(omega.omega0_rays)
    cols = len(hull) + len(rays)
    rows = []
    for i in range(1, n + 1):
        a = Fraction(chi[i - 1])
        den = a.denominator
        row = [den if j == i else 0 for j in hull]
        row += [den if j == i else 0 for j in rays]
        row.append(a.numerator)
        rows.append(row)
    rows.append([1] * len(hull) + [0] * len(rays) + [1])
    return lp.feasible_int_rows(rows)
