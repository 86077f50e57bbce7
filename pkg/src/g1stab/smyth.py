"""Smyth-style stability notions and the contraction of unmarked components.

``is_m_stable`` tests the geometric m-stability of a pointed genus-1
curve that may carry unmarked components: the core must be smooth,
nodal, or an elliptic m'-fold with m' <= m; tails must be nodal trees
attached at smooth core points; the level condition

    (#tails attached to E) + (#marks on E)  >  m

must hold; and the curve must have no infinitesimal symmetries.

``contract_unmarked`` implements the contraction map rho: every
connected subcurve built from unmarked components collapses to a single
point.  A collapsed subcurve carrying the genus (the whole smooth core,
the whole cycle of an n-gon, or the whole elliptic core) leaves an
elliptic k-fold point behind, where k counts the branches of marked
components that met it; a genus-0 subcurve leaves a rational k-fold
point.  A subcurve that swallows part of a fold core merges into the
elliptic point, whose surviving branches keep the genus.  The result is
renormalized into fundamental-decomposition form and must validate as a
fully marked curve with the same marks.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Optional, Sequence

from .curves import (
    FOLD,
    NGON,
    SMOOTH,
    Branch,
    Curve,
    CurveError,
    Tail,
    canonical_form,
    make_curve,
    special_point_counts,
)
from .enumerate import EnumOptions, enumerate_curves
from .polytopes import character, parse_rational, stability_index_sets, verdict


class InvalidForMStability(ValueError):
    """Input curve is outside the m-stability domain (non-nodal tails)."""


class HypothesisViolated(ValueError):
    """Character fails the inequalities required by the inclusion mode."""


class GenusLost(RuntimeError):
    """Internal consistency failure of the contraction (must never fire)."""


# ---------------------------------------------------------------------------
# stability notions


def no_infinitesimal_symmetries(curve: Curve) -> bool:
    """Combinatorial test for the absence of infinitesimal automorphisms.

    Every tail component needs >= 3 special points; every cycle
    component of an n-gon core needs >= 3 on its normalization; a fold
    core needs >= 2 special points on every component and >= 3 on at
    least one.  A smooth core never contributes: its translation fields
    die on the first special point.
    """
    infos = special_point_counts(curve)
    for info in infos:
        if not info.is_core and info.on_component < 3:
            return False
    if curve.core_kind == NGON:
        if any(i.is_core and i.on_normalization < 3 for i in infos):
            return False
    if curve.core_kind == FOLD:
        core = [i for i in infos if i.is_core]
        if any(i.on_component < 2 for i in core):
            return False
        if all(i.on_component < 3 for i in core):
            return False
    return True


def _require_nodal(curve: Curve) -> None:
    for t in curve.tails:
        if t.anchor[0] != "smooth":
            raise InvalidForMStability("tail attached at a singular point of the core")
        if len(t.roots) != 1:
            raise InvalidForMStability("anchor is not a node (several branches)")
        for b in t.iter_branches():
            for j in b.joints:
                if len(j) != 1:
                    raise InvalidForMStability("tail joint is not a node")


def is_m_stable(curve: Curve, m: int) -> bool:
    """Smyth m-stability of a (possibly partially marked) curve."""
    if not (1 <= m < curve.n):
        raise ValueError("m-stability needs 1 <= m < n")
    _require_nodal(curve)
    if curve.core_kind == FOLD and curve.core_m > m:
        return False
    level = len(curve.tails) + sum(len(ms) for ms in curve.core_marks)
    if level <= m:
        return False
    return no_infinitesimal_symmetries(curve)


def is_zu_stable(curve: Curve) -> bool:
    """Stability for the extremal assignment of all unmarked components.

    For fully marked curves this is: every rational irreducible
    component carries >= 3 special points on its normalization (the
    smooth core is the only non-rational component).
    """
    if curve.allow_unmarked:
        raise CurveError("zu-stability is evaluated on fully marked curves")
    for info in special_point_counts(curve):
        if info.is_core and curve.core_kind == SMOOTH:
            continue
        if info.on_normalization < 3:
            return False
    return True


# ---------------------------------------------------------------------------
# contraction of unmarked components
#
# The curve is flattened to a bipartite incidence structure between
# components and singular points; the contraction is computed there and
# the result is reassembled into fundamental-decomposition form.


class _Comp:
    __slots__ = ("key", "marks", "is_core", "genus")

    def __init__(self, key, marks, is_core, genus):
        self.key = key
        self.marks = marks
        self.is_core = is_core
        self.genus = genus


class _Point:
    __slots__ = ("inc", "elliptic", "edge")

    def __init__(self, inc, elliptic=False, edge=None):
        self.inc = inc  # list of component keys, with multiplicity
        self.elliptic = elliptic
        self.edge = edge  # original edge index for n-gon nodes


def _flatten(curve: Curve):
    comps = {}
    points = []
    kind, m = curve.core_kind, curve.core_m
    for k in range(m):
        comps[("core", k)] = _Comp(
            ("core", k), curve.core_marks[k], True, 1 if kind == SMOOTH else 0
        )
    tail_roots = {}

    def add_branch(tname, path, branch):
        key = ("tail", tname, path)
        comps[key] = _Comp(key, branch.marks, False, 0)
        for ji, joint in enumerate(branch.joints):
            inc = [key]
            for bi, child in enumerate(joint):
                inc.append(add_branch(tname, path + (ji, bi), child))
            points.append(_Point(inc))
        return key

    for ti, t in enumerate(curve.tails):
        tail_roots[ti] = [add_branch(ti, (ri,), r) for ri, r in enumerate(t.roots)]

    if kind == FOLD:
        inc = [("core", k) for k in range(m)]
        for ti, t in enumerate(curve.tails):
            if t.anchor[0] == "fold_point":
                inc += tail_roots[ti]
        points.append(_Point(inc, elliptic=True))
    if kind == NGON:
        for e in range(m):
            if m == 1:
                inc = [("core", 0), ("core", 0)]
            else:
                inc = [("core", e), ("core", (e + 1) % m)]
            for ti, t in enumerate(curve.tails):
                if t.anchor == ("node", e):
                    inc += tail_roots[ti]
            points.append(_Point(inc, edge=e))
    for ti, t in enumerate(curve.tails):
        if t.anchor[0] == "smooth":
            points.append(_Point([("core", t.anchor[1])] + tail_roots[ti]))
    return comps, points


def contract_unmarked(curve: Curve) -> Curve:
    """Contract every connected unmarked subcurve to a point.

    Fully marked curves come back unchanged (as a fully marked copy).
    The output carries the same marks, validates with
    ``allow_unmarked=False`` and has arithmetic genus one by
    construction; a bookkeeping failure raises :class:`GenusLost`.
    """
    comps, points = _flatten(curve)
    unmarked = {k for k, c in comps.items() if not c.marks}
    if not unmarked:
        return make_curve(
            curve.n, curve.core_kind, curve.core_marks, curve.tails, allow_unmarked=False
        )

    # connected unmarked subcurves, by union-find over shared points
    parent = {k: k for k in unmarked}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for p in points:
        u = [k for k in p.inc if k in unmarked]
        for a, b in zip(u, u[1:]):
            union(a, b)
    groups = {}
    for k in unmarked:
        groups.setdefault(find(k), set()).add(k)

    new_points = []
    consumed = set()
    genus_swallowed_point = None
    for root, U in groups.items():
        P_U = [p for p in points if any(k in U for k in p.inc)]
        inc = []
        elliptic = False
        edges = []
        for p in P_U:
            inc += [k for k in p.inc if k not in U]
            elliptic = elliptic or p.elliptic
            if p.edge is not None:
                edges.append(p.edge)
            consumed.add(id(p))
        swallowed_genus = any(comps[k].genus == 1 for k in U)
        if curve.core_kind == NGON:
            cycle_in_U = {k for k in U if k[0] == "core"}
            if len(cycle_in_U) == curve.core_m:
                swallowed_genus = True
        merged = _Point(inc, elliptic=elliptic)
        merged.edge = None
        if swallowed_genus or (elliptic and not any(k[0] == "core" for k in inc)):
            # the merged point carries the genus: elliptic k-fold over
            # every remaining branch
            merged.elliptic = True
            if genus_swallowed_point is not None:
                raise GenusLost("two subcurves claim the genus")
            genus_swallowed_point = merged
        surviving_cycle = [k for k in merged.inc if k[0] == "core"]
        if curve.core_kind == NGON and not merged.elliptic:
            if len(surviving_cycle) == 2:
                merged.edge = ("merged", tuple(sorted(edges)))
            elif surviving_cycle:
                raise GenusLost("cycle contraction left a dangling node")
        new_points.append(merged)
    points = [p for p in points if id(p) not in consumed] + new_points
    for k in unmarked:
        del comps[k]

    return _reassemble(curve.n, curve, comps, points, genus_swallowed_point)


def _reassemble(n, curve, comps, points, genus_swallowed_point) -> Curve:
    """Rebuild a fundamental decomposition from the contracted incidences."""
    kind = curve.core_kind
    core_keys: list
    new_kind: str
    if genus_swallowed_point is not None:
        new_kind = FOLD
        core_keys = list(dict.fromkeys(genus_swallowed_point.inc))
        if len(core_keys) != len(genus_swallowed_point.inc):
            raise GenusLost("component meets the elliptic point twice")
        if not core_keys:
            raise GenusLost("elliptic point with no branches")
        fold_point = genus_swallowed_point
    elif kind == SMOOTH:
        new_kind = SMOOTH
        core_keys = [("core", 0)]
        fold_point = None
    elif kind == FOLD:
        new_kind = FOLD
        core_keys = [k for k in comps if k[0] == "core"]
        core_keys.sort()
        fold_point = next(p for p in points if p.elliptic)
    else:
        new_kind = NGON
        core_keys = sorted(
            (k for k in comps if k[0] == "core"), key=lambda k: k[1]
        )
        fold_point = None

    core_index = {k: i for i, k in enumerate(core_keys)}
    core_set = set(core_keys)

    # n-gon: rebuild the cyclic edge order on the surviving components
    edge_points = {}
    if new_kind == NGON:
        mm = len(core_keys)
        node_pts = [
            p for p in points if sum(1 for k in p.inc if k in core_set) == 2
        ]
        if mm == 1:
            if len(node_pts) != 1:
                raise GenusLost("1-gon needs exactly one node")
            edge_points[0] = node_pts[0]
        else:
            # walk the cycle: successive components share one node
            order = [core_keys[0]]
            used = set()
            for _ in range(mm):
                cur = order[-1]
                nxt = None
                for p in node_pts:
                    if id(p) in used or cur not in p.inc:
                        continue
                    other = [k for k in p.inc if k in core_set and k != cur]
                    if not other:
                        raise GenusLost("broken cycle node")
                    nxt = other[0]
                    used.add(id(p))
                    edge_points[len(order) - 1] = p
                    break
                if nxt is None:
                    raise GenusLost("cycle does not close")
                if len(order) < mm:
                    order.append(nxt)
                elif nxt != order[0]:
                    raise GenusLost("cycle does not close up")
            core_keys = order
            core_index = {k: i for i, k in enumerate(core_keys)}

    # tails: BFS outward from the core
    children_of = {}
    anchors = []  # (anchor tuple, [root comp keys])
    reached = set(core_keys)
    point_done = set()

    def roots_at(p):
        return [k for k in p.inc if k not in core_set]

    if fold_point is not None:
        rts = roots_at(fold_point)
        if rts:
            anchors.append((("fold_point",), rts))
        point_done.add(id(fold_point))
    if new_kind == NGON:
        for e, p in edge_points.items():
            rts = roots_at(p)
            if rts:
                anchors.append((("node", e), rts))
            point_done.add(id(p))
    for p in points:
        if id(p) in point_done:
            continue
        core_inc = [k for k in p.inc if k in core_set]
        if core_inc:
            if len(core_inc) != 1:
                raise GenusLost("unexpected multi-core point")
            rts = roots_at(p)
            if rts:
                # a merged point with no branches left dissolves into a
                # smooth point and is simply dropped
                anchors.append((("smooth", core_index[core_inc[0]]), rts))
            point_done.add(id(p))

    pending = [p for p in points if id(p) not in point_done]
    for _, rts in anchors:
        reached.update(rts)
    while pending:
        progressed = False
        rest = []
        for p in pending:
            base = [k for k in p.inc if k in reached]
            if base:
                if len(base) != 1:
                    raise GenusLost("tail point with two bases")
                kids = [k for k in p.inc if k not in reached]
                if not kids:
                    raise GenusLost("joint without attached branches")
                children_of.setdefault(base[0], []).append(kids)
                reached.update(kids)
                progressed = True
            else:
                rest.append(p)
        if rest and not progressed:
            raise GenusLost("disconnected components after contraction")
        pending = rest
    if set(comps) - reached:
        raise GenusLost("components unreachable from the core")

    def build_branch(key) -> Branch:
        joints = tuple(
            tuple(build_branch(k) for k in kids) for kids in children_of.get(key, [])
        )
        return Branch(comps[key].marks, joints)

    tails = []
    for anchor, rts in anchors:
        tails.append(Tail(anchor, tuple(build_branch(k) for k in rts)))
    core_marks = [comps[k].marks for k in core_keys]
    try:
        return make_curve(n, new_kind, core_marks, tuple(tails), allow_unmarked=False)
    except CurveError as exc:
        raise GenusLost(f"contraction produced an invalid curve: {exc}") from exc


# ---------------------------------------------------------------------------
# enumeration of m-stable classes and the inclusion checks


def m_stable_options(m: int, max_unmarked: int = 2, budget=None) -> EnumOptions:
    return EnumOptions(
        allow_unmarked=True,
        nodal_tails=True,
        max_unmarked_components=max_unmarked,
        min_tail_special=3,
        prune_symmetric=True,
        max_fold_m=m,
        budget=budget,
    )


def enumerate_m_stable(n: int, m: int, max_unmarked: int = 2, budget=None):
    """All m-stable classes with ``n`` marks and at most ``max_unmarked``
    unmarked components."""
    opts = m_stable_options(m, max_unmarked=max_unmarked, budget=budget)
    return enumerate_curves(n, opts, curve_filter=lambda c: is_m_stable(c, m))


def _check_hypothesis(mode: str, chi, n: int) -> int:
    """Validate the character hypothesis; returns the level m."""
    chi = character(chi)
    if len(chi) != n:
        raise HypothesisViolated("character length differs from n")
    if any(a < 0 for a in chi):
        raise HypothesisViolated("all coefficients must be nonnegative")
    total = sum(chi)
    if mode == "n-1":
        if n < 2:
            raise HypothesisViolated("mode n-1 needs n >= 2")
        if total < 1:
            raise HypothesisViolated("sum of coefficients must be >= 1")
        for S in combinations(range(n), n - 2):
            if sum(chi[i] for i in S) > 1:
                raise HypothesisViolated(
                    "every coefficient sum over n-2 indices must be <= 1"
                )
        return n - 1
    if mode == "n-2":
        if n < 3:
            raise HypothesisViolated("mode n-2 needs n >= 3")
        for S in combinations(range(n), n - 2):
            if sum(chi[i] for i in S) < 1:
                raise HypothesisViolated(
                    "every coefficient sum over n-2 indices must be >= 1"
                )
        for S in combinations(range(n), n - 3):
            if sum(chi[i] for i in S) > 1:
                raise HypothesisViolated(
                    "every coefficient sum over n-3 indices must be <= 1"
                )
        return n - 2
    if mode == "n-3":
        if n <= 4:
            raise HypothesisViolated("mode n-3 needs n > 4")
        target = Fraction(1, n - 4)
        if any(a != target for a in chi):
            raise HypothesisViolated(f"every coefficient must equal 1/{n - 4}")
        return n - 3
    raise ValueError(f"unknown inclusion mode {mode!r}")


def check_inclusion(mode: str, chi, n: int, max_unmarked: int = 2, budget=None) -> dict:
    """Exhaustively test that contracted m-stable classes are semistable.

    ``mode`` is one of ``"n-1"``, ``"n-2"``, ``"n-3"``; the character
    must satisfy the matching hypothesis, otherwise
    :class:`HypothesisViolated` is raised.  The report's ``violations``
    list must come back empty.
    """
    chi = character(chi)
    m = _check_hypothesis(mode, chi, n)
    classes = enumerate_m_stable(n, m, max_unmarked=max_unmarked, budget=budget)
    violations = []
    for c in classes:
        image = contract_unmarked(c)
        if not verdict(image, chi).semistable:
            violations.append(
                {
                    "curve": canonical_form(c).decode(),
                    "image": canonical_form(image).decode(),
                }
            )
    return {
        "mode": mode,
        "m": m,
        "n": n,
        "chi": [str(a) for a in chi],
        "classes": len(classes),
        "violations": violations,
    }


# ---------------------------------------------------------------------------
# uniform-character windows


@dataclass(frozen=True)
class ChiWindow:
    """Interval of uniform coefficients a with a*(1,...,1) semistable.

    ``lower`` = None means unbounded below, ``upper`` = None unbounded
    above; ``infeasible`` marks a window emptied by a support condition
    rather than by crossing bounds.
    """

    lower: Optional[Fraction]
    upper: Optional[Fraction]
    infeasible: bool = False

    def is_empty(self) -> bool:
        return self.infeasible or (
            self.lower is not None and self.upper is not None and self.lower > self.upper
        )

    def intersect(self, other: "ChiWindow") -> "ChiWindow":
        lo = _opt_max(self.lower, other.lower)
        hi = _opt_min(self.upper, other.upper)
        return ChiWindow(lo, hi, self.infeasible or other.infeasible)

    def to_dict(self):
        return {
            "lower": None if self.lower is None else str(self.lower),
            "upper": None if self.upper is None else str(self.upper),
            "empty": self.is_empty(),
        }


def _opt_max(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


def _opt_min(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


FULL_WINDOW = ChiWindow(None, None)


def semistable_uniform_window(curve: Curve) -> ChiWindow:
    """Window of a with a*(1,...,1) semistable for a fully marked curve."""
    idx = stability_index_sets(curve)
    if (idx.I | idx.J) != frozenset(range(1, curve.n + 1)):
        # some coefficient is forced to vanish, but then the core sum
        # cannot reach 1: no uniform character works
        return ChiWindow(None, None, infeasible=True)
    lower = Fraction(1, len(idx.I))
    upper = Fraction(1, len(idx.I0)) if idx.I0 else None
    return ChiWindow(lower, upper)


def uniform_chi_window(curves: Sequence[Curve], m: Optional[int] = None) -> ChiWindow:
    """Intersection of the uniform windows of the contracted curves.

    An empty input list returns the full line.  When ``m`` is given the
    inputs are checked to be m-stable first.
    """
    window = FULL_WINDOW
    for c in curves:
        if m is not None and not is_m_stable(c, m):
            raise ValueError("input curve is not m-stable")
        image = contract_unmarked(c)
        window = window.intersect(semistable_uniform_window(image))
    return window
