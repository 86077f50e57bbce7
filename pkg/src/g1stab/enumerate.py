"""Exhaustive enumeration of isomorphism classes of pointed genus-1 curves.

Classes are generated compositionally: pick a core kind, distribute the
labelled marks over the core components, then attach rational tail trees
built from the leftover marks.  Mark labels are fixed; core symmetries
(the full symmetric group for a fold core, the dihedral group for an
n-gon) and tail-internal reorderings are quotiented by deduplicating on
:func:`g1stab.curves.canonical_form`.  Output order is the canonical
byte-string order, so runs are reproducible.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from itertools import combinations, combinations_with_replacement, permutations
from typing import Optional

from .curves import (
    FOLD,
    NGON,
    SMOOTH,
    Branch,
    Curve,
    Tail,
    canonical_form,
)

DEFAULT_BUDGET = 200_000


class BudgetExceeded(RuntimeError):
    """Enumeration produced more classes than the configured cap."""


@dataclass(frozen=True)
class EnumOptions:
    """Caps and structural restrictions for enumeration.

    ``nodal_tails`` restricts tails to trees of nodally attached lines
    anchored at smooth core points (every joint, including the anchor,
    carries a single branch).  ``min_tail_special`` discards tail
    components with fewer special points; pre-filtering with 3 keeps
    searches for curves without infinitesimal symmetries exhaustive
    while pruning hopeless shapes early.
    """

    allow_unmarked: bool = False
    max_core_m: Optional[int] = None
    max_fold_m: Optional[int] = None
    max_tail_components: Optional[int] = None
    nodal_tails: bool = False
    max_unmarked_components: Optional[int] = None
    min_tail_special: int = 0
    prune_symmetric: bool = False
    budget: Optional[int] = None


def _env_budget() -> int:
    raw = os.environ.get("GIT1_BUDGET")
    if raw:
        try:
            return int(raw)
        except ValueError:
            pass
    return DEFAULT_BUDGET


def _subsets(items):
    items = sorted(items)
    for r in range(len(items) + 1):
        yield from (frozenset(c) for c in combinations(items, r))


def _set_partitions_exact(items, j):
    """Unordered partitions of ``items`` into exactly j nonempty blocks."""
    items = sorted(items)
    if j == 0:
        if not items:
            yield []
        return
    if len(items) < j:
        return

    def rec(rest, blocks):
        if not rest:
            if len(blocks) == j:
                yield [frozenset(b) for b in blocks]
            return
        x, tail = rest[0], rest[1:]
        for b in blocks:
            b.append(x)
            yield from rec(tail, blocks)
            b.pop()
        if len(blocks) < j:
            blocks.append([x])
            yield from rec(tail, blocks)
            blocks.pop()

    yield from rec(items, [])


class _Enumerator:
    def __init__(self, n: int, opts: EnumOptions):
        self.n = n
        self.opts = opts
        self.max_core_m = n if opts.max_core_m is None else opts.max_core_m
        self.max_tail_comps = n if opts.max_tail_components is None else opts.max_tail_components
        if opts.max_unmarked_components is not None:
            self.max_unmarked = opts.max_unmarked_components
        else:
            self.max_unmarked = 2 if opts.allow_unmarked else 0
        if not opts.allow_unmarked:
            self.max_unmarked = 0
        self.budget = opts.budget if opts.budget is not None else _env_budget()
        self._branch_cache = {}
        self._joint_cache = {}
        self._multiset_cache = {}

    # -- tail trees --------------------------------------------------------

    def branches(self, marks: frozenset, unmarked_budget: int):
        """All branch trees using exactly ``marks``: (branch, comps, unmarked)."""
        key = (marks, unmarked_budget)
        if key in self._branch_cache:
            return self._branch_cache[key]
        out = []
        min_special = self.opts.min_tail_special
        for own in _subsets(marks):
            own_unm = 0 if own else 1
            if own_unm > unmarked_budget:
                continue
            rest = marks - own
            for joints, c_used, u_used in self.joint_lists(rest, unmarked_budget - own_unm):
                if 1 + c_used > self.max_tail_comps:
                    continue
                if len(own) + 1 + len(joints) < min_special:
                    continue
                out.append((Branch(own, joints), 1 + c_used, own_unm + u_used))
        self._branch_cache[key] = out
        return out

    def joint_lists(self, marks: frozenset, unmarked_budget: int):
        """Unordered joint collections consuming exactly ``marks``."""
        key = (marks, unmarked_budget)
        if key in self._joint_cache:
            return self._joint_cache[key]
        self._joint_cache[key] = out = self._joint_lists(marks, unmarked_budget)
        return out

    def _joint_lists(self, marks: frozenset, unmarked_budget: int):
        if not marks:
            results = [((), 0, 0)]
            if unmarked_budget > 0 and self.opts.allow_unmarked:
                # extra fully unmarked joints
                singles = self.joint_groups(frozenset(), unmarked_budget)
                extended = []
                for base_joints, c0, u0 in results:
                    for count in range(1, unmarked_budget + 1):
                        for combo in combinations_with_replacement(
                            range(len(singles)), count
                        ):
                            joints = list(base_joints)
                            c, u = c0, u0
                            ok = True
                            for idx in combo:
                                j, cj, uj = singles[idx]
                                c += cj
                                u += uj
                                if u > unmarked_budget or c > self.max_tail_comps:
                                    ok = False
                                    break
                                joints.append(j)
                            if ok:
                                extended.append((tuple(joints), c, u))
                results = results + extended
            return results
        mn = min(marks)
        results = []
        for group in _subsets(marks - {mn}):
            g = group | {mn}
            for joint, cj, uj in self.joint_groups(frozenset(g), unmarked_budget):
                for more, cm, um in self.joint_lists(marks - g, unmarked_budget - uj):
                    c, u = cj + cm, uj + um
                    if c <= self.max_tail_comps and u <= unmarked_budget:
                        results.append(((joint,) + more, c, u))
        return results

    def joint_groups(self, marks: frozenset, unmarked_budget: int):
        """One joint (a branch multiset with >= 1 branch) over ``marks``."""
        max_att = 1 if self.opts.nodal_tails else self.n
        return self.branch_multisets(marks, 1, max_att, unmarked_budget)

    def branch_multisets(self, marks, min_count, max_count, unmarked_budget):
        """Unordered branch collections over exactly ``marks``."""
        key = (frozenset(marks), min_count, max_count, unmarked_budget)
        if key in self._multiset_cache:
            return self._multiset_cache[key]
        out = []
        self._multiset_cache[key] = out

        def rec(rest, acc, c_acc, u_acc):
            if len(acc) > max_count:
                return
            if not rest:
                if len(acc) >= min_count:
                    out.append((tuple(acc), c_acc, u_acc))
                # optionally extend with unmarked branches
                if self.opts.allow_unmarked and u_acc < unmarked_budget:
                    room = max_count - len(acc)
                    if room > 0:
                        unm = self.branches(frozenset(), unmarked_budget - u_acc)
                        for count in range(1, room + 1):
                            for combo in combinations_with_replacement(
                                range(len(unm)), count
                            ):
                                acc2 = list(acc)
                                c2, u2 = c_acc, u_acc
                                ok = True
                                for idx in combo:
                                    b, cb, ub = unm[idx]
                                    c2 += cb
                                    u2 += ub
                                    if (
                                        u2 > unmarked_budget
                                        or c2 > self.max_tail_comps
                                    ):
                                        ok = False
                                        break
                                    acc2.append(b)
                                if ok and len(acc2) >= min_count:
                                    out.append((tuple(acc2), c2, u2))
                return
            mn = min(rest)
            for group in _subsets(rest - {mn}):
                g = frozenset(group | {mn})
                for b, cb, ub in self.branches(g, unmarked_budget - u_acc):
                    if c_acc + cb > self.max_tail_comps:
                        continue
                    rec(rest - g, acc + [b], c_acc + cb, u_acc + ub)

        rec(frozenset(marks), [], 0, 0)
        return out

    # -- anchors -----------------------------------------------------------

    def _anchor_slots(self, kind, m):
        slots = [(("smooth", k), self.n) for k in range(m)]
        if not self.opts.nodal_tails:
            if kind == FOLD and self.n - m >= 1:
                slots.append((("fold_point",), self.n - m))
            if kind == NGON:
                for e in range(m):
                    slots.append((("node", e), self.n - 1))
        return slots

    def tail_sets(self, marks, kind, m, comp_budget, unmarked_budget):
        """All ways of attaching tails over exactly ``marks``: (tails, unmarked)."""
        slots = self._anchor_slots(kind, m)
        single_root = self.opts.nodal_tails

        def rec(rest, used_special, c_left, u_left):
            if not rest:
                yield [], u_left
                return
            mn = min(rest)
            for group in _subsets(rest - {mn}):
                g = frozenset(group | {mn})
                for anchor, max_roots in slots:
                    if anchor[0] != "smooth" and anchor in used_special:
                        continue
                    if single_root:
                        max_roots = 1
                    for roots, c, u in self.branch_multisets(g, 1, max_roots, u_left):
                        if c > c_left or u > u_left:
                            continue
                        t = Tail(anchor, roots)
                        nxt = used_special | {anchor} if anchor[0] != "smooth" else used_special
                        for tails, u_rem in rec(rest - g, nxt, c_left - c, u_left - u):
                            yield [t] + tails, u_rem
        yield from rec(frozenset(marks), frozenset(), comp_budget, unmarked_budget)

    # -- cores -------------------------------------------------------------

    def core_assignments(self, marks, tail_mark_count):
        """Yield (kind, comp_marks tuple, unmarked_used)."""
        M = frozenset(marks)
        allow_unm = self.opts.allow_unmarked
        # smooth
        if M or (allow_unm and self.max_unmarked >= 1):
            yield SMOOTH, (M,), (0 if M else 1)
        max_fold = self.max_core_m
        if self.opts.max_fold_m is not None:
            max_fold = min(max_fold, self.opts.max_fold_m)
        for m in range(1, self.max_core_m + 1):
            for kind in (FOLD, NGON):
                if kind == FOLD and m > max_fold:
                    continue
                max_empty = min(self.max_unmarked, m) if allow_unm else 0
                for empty in range(0, max_empty + 1):
                    j = m - empty
                    if j < 0 or len(M) < j:
                        continue
                    if j == 0 and m > 0 and not allow_unm:
                        continue
                    # with pruning on, an unmarked core component must be
                    # able to pick up a marked tail later (otherwise the
                    # class keeps a one-parameter symmetry group)
                    if self.opts.prune_symmetric and empty > tail_mark_count:
                        continue
                    for blocks in _set_partitions_exact(M, j):
                        blocks = blocks + [frozenset()] * empty
                        if kind == FOLD:
                            yield FOLD, tuple(sorted(blocks, key=sorted)), empty
                        else:
                            if m == 1:
                                yield NGON, (blocks[0],), empty
                                continue
                            distinct = blocks[:j]
                            for pos in permutations(range(m), j):
                                arr = [frozenset()] * m
                                for b, p in zip(distinct, pos):
                                    arr[p] = b
                                yield NGON, tuple(arr), empty


def generate_curves(n: int, opts: EnumOptions = EnumOptions()):
    """Yield valid curves with ``n`` marks, possibly with duplicates.

    Curves are valid by construction (anchor capacities and unmarked
    budgets are enforced during generation); deduplication is the
    caller's job.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    en = _Enumerator(n, opts)
    all_marks = frozenset(range(1, n + 1))
    for tail_marks in _subsets(all_marks):
        core_marks = all_marks - tail_marks
        for kind, comp_marks, unm_core in en.core_assignments(core_marks, len(tail_marks)):
            m = len(comp_marks)
            if kind == FOLD and m > n:
                continue
            u_left = en.max_unmarked - unm_core
            if u_left < 0:
                continue
            for tails, _u in en.tail_sets(tail_marks, kind, m, en.max_tail_comps, u_left):
                yield Curve(
                    n, kind, comp_marks, tuple(tails), allow_unmarked=opts.allow_unmarked
                ), en.budget


def enumerate_curves(n: int, opts: EnumOptions = EnumOptions(), curve_filter=None):
    """All isomorphism classes of valid curves with ``n`` marks.

    Marks are labelled and every label is placed.  Tails carry at least
    one mark each (a completely unmarked tail never survives contraction
    or any stability test at the scales handled here).  ``curve_filter``
    drops classes failing a predicate before the canonical-form work,
    which keeps targeted searches cheap.  Raises
    :class:`BudgetExceeded` when the class count passes the cap.
    """
    seen = {}
    budget = None
    for curve, budget in generate_curves(n, opts):
        if curve_filter is not None and not curve_filter(curve):
            continue
        key = canonical_form(curve)
        if key not in seen:
            seen[key] = curve
            if len(seen) > budget:
                raise BudgetExceeded(f"more than {budget} classes at n={n}")
    return [seen[k] for k in sorted(seen)]
