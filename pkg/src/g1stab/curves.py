"""Combinatorial model of n-pointed curves of arithmetic genus one.

A curve is stored as its fundamental decomposition

    C = E  u  R_1 u ... u R_r,

where the minimal elliptic subcurve E is one of

* ``smooth``   -- a smooth genus-1 curve,
* ``ngon(m)``  -- the standard m-gon: m projective lines glued in a cycle
  (m = 1 is the irreducible nodal curve),
* ``fold(m)``  -- the elliptic m-fold curve: m lines through one genus-1
  singular point q (m = 1 the cusp, m = 2 the tacnode),

and the rational tails R_i are trees of projective lines attached to E
transversally at pairwise distinct points.  Tails may attach at smooth
points of E, at a node of an n-gon core, or at the singular point q of a
fold core.  Marked points are labelled 1..n and live at smooth points;
their exact positions are irrelevant here -- stability depends only on
the combinatorics.  Continuous data (positions, tangent scalings) lives
in :mod:`g1stab.charts`.

All values are immutable; operations are pure functions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator, Optional


class CurveError(ValueError):
    """Base class for curve validation failures."""


class CurveFormatError(CurveError):
    """Raw description does not parse structurally."""


class UnmarkedComponent(CurveError):
    """A component carries no mark while allow_unmarked is off."""


class DuplicateMark(CurveError):
    """A mark label occurs more than once (or is out of range)."""


class AnchorClash(CurveError):
    """Two tails anchored at the same point of the core."""


class SingularityBoundExceeded(CurveError):
    """A singular point exceeds the admissible number of branches."""


class BadAnchor(CurveError):
    """Anchor type incompatible with the core kind."""


SMOOTH = "smooth"
NGON = "ngon"
FOLD = "fold"

# anchor tuples
# ("smooth", comp_index) | ("fold_point",) | ("node", edge_index)


@dataclass(frozen=True)
class Branch:
    """One tail component: its marks and the joints based on it.

    Each joint is a singular point of C on this component where a
    nonempty set of further components is attached; the attached
    components are again Branch values, so a tail is a finite rooted
    tree and can never acquire genus.
    """

    marks: frozenset
    joints: tuple  # tuple of joints; a joint is a tuple of Branch

    def component_count(self) -> int:
        return 1 + sum(b.component_count() for j in self.joints for b in j)

    def iter_branches(self):
        yield self
        for j in self.joints:
            for b in j:
                yield from b.iter_branches()


@dataclass(frozen=True)
class Tail:
    """A rational tail: anchor point on the core plus root components.

    ``roots`` are the components passing through the anchor point; more
    than one root makes the anchor a rational (1+len(roots))-fold point
    of C (or fatter when the anchor is itself singular on E).
    """

    anchor: tuple
    roots: tuple  # tuple of Branch

    def component_count(self) -> int:
        return sum(b.component_count() for b in self.roots)

    def iter_branches(self):
        for b in self.roots:
            yield from b.iter_branches()


@dataclass(frozen=True)
class Curve:
    """Validated n-pointed genus-1 curve in fundamental-decomposition form."""

    n: int
    core_kind: str
    core_marks: tuple  # tuple of frozenset, cyclic order for ngon
    tails: tuple  # tuple of Tail
    allow_unmarked: bool = False

    @property
    def core_m(self) -> int:
        return len(self.core_marks)

    def core_component_count(self) -> int:
        return len(self.core_marks)

    def component_count(self) -> int:
        return self.core_component_count() + sum(t.component_count() for t in self.tails)

    def smooth_anchor_counts(self):
        """Number of tails anchored at smooth points of each core component."""
        counts = [0] * self.core_m
        for t in self.tails:
            if t.anchor[0] == "smooth":
                counts[t.anchor[1]] += 1
        return counts

    def tail_at_fold_point(self) -> Optional[Tail]:
        for t in self.tails:
            if t.anchor[0] == "fold_point":
                return t
        return None

    def tail_at_node(self, edge: int) -> Optional[Tail]:
        for t in self.tails:
            if t.anchor == ("node", edge):
                return t
        return None

    def all_marks(self) -> frozenset:
        marks = set()
        for ms in self.core_marks:
            marks |= ms
        for t in self.tails:
            for b in t.iter_branches():
                marks |= b.marks
        return frozenset(marks)

    def canonical_form(self) -> bytes:
        return canonical_form(self)

    def __hash__(self):
        return hash(canonical_form(self))

    def __repr__(self):
        return f"Curve({canonical_form(self).decode()})"

    def __eq__(self, other):
        if not isinstance(other, Curve):
            return NotImplemented
        return canonical_form(self) == canonical_form(other)


@dataclass(frozen=True)
class ComponentInfo:
    """Special-point statistics of one irreducible component."""

    address: tuple  # ("core", k) or ("tail", tail_index, path)
    is_core: bool
    marks: frozenset
    on_component: int
    on_normalization: int


@dataclass(frozen=True)
class IndexSets:
    """The stability index sets of a fully marked curve.

    I  -- marks lying on the minimal elliptic subcurve E;
    J  -- marks on tail components carrying >= 3 special points;
    I0 -- marks on fold-core components with exactly 2 special points
          (empty unless the core is a fold).
    """

    I: frozenset
    J: frozenset
    I0: frozenset


# ---------------------------------------------------------------------------
# construction and validation


def make_curve(n, core_kind, core_marks, tails=(), allow_unmarked=False) -> Curve:
    """Assemble and validate a curve from already-structured pieces.

    ``core_marks`` is a sequence of mark collections, one per core
    component (a single collection for a smooth core); ``tails`` is a
    sequence of Tail values.  Raises a CurveError subclass when any
    model invariant fails.
    """
    marks = tuple(frozenset(ms) for ms in core_marks)
    curve = Curve(n, core_kind, marks, tuple(tails), allow_unmarked)
    validate(curve)
    return curve


def validate(curve: Curve) -> Curve:
    n = curve.n
    if n < 1:
        raise CurveFormatError("need n >= 1")
    kind, m = curve.core_kind, curve.core_m
    if kind not in (SMOOTH, NGON, FOLD):
        raise CurveFormatError(f"unknown core kind {kind!r}")
    if kind == SMOOTH and m != 1:
        raise CurveFormatError("smooth core has exactly one component")
    if m < 1:
        raise CurveFormatError("core needs at least one component")

    # anchors
    seen_points = set()
    for t in curve.tails:
        a = t.anchor
        if not t.roots:
            raise CurveFormatError("tail without components")
        if a[0] == "smooth":
            if not (0 <= a[1] < m):
                raise BadAnchor(f"smooth anchor on missing component {a[1]}")
        elif a[0] == "fold_point":
            if kind != FOLD:
                raise BadAnchor("singular-point anchor needs a fold core")
            if a in seen_points:
                raise AnchorClash("two tails at the core singular point")
            seen_points.add(a)
        elif a[0] == "node":
            if kind != NGON:
                raise BadAnchor("node anchor needs an n-gon core")
            if not (0 <= a[1] < m):
                raise BadAnchor(f"node anchor at missing edge {a[1]}")
            if a in seen_points:
                raise AnchorClash(f"two tails at node {a[1]}")
            seen_points.add(a)
        else:
            raise CurveFormatError(f"unknown anchor {a!r}")

    # marks
    seen_marks = set()
    def check_marks(ms):
        for lbl in ms:
            if not (isinstance(lbl, int) and 1 <= lbl <= n):
                raise DuplicateMark(f"mark label {lbl!r} outside 1..{n}")
            if lbl in seen_marks:
                raise DuplicateMark(f"mark {lbl} used twice")
            seen_marks.add(lbl)

    for ms in curve.core_marks:
        check_marks(ms)
        if not ms and not curve.allow_unmarked:
            raise UnmarkedComponent("core component without a mark")
    for t in curve.tails:
        for b in t.iter_branches():
            check_marks(b.marks)
            if not b.marks and not curve.allow_unmarked:
                raise UnmarkedComponent("tail component without a mark")
            for j in b.joints:
                if not j:
                    raise CurveFormatError("empty joint")
    if not curve.allow_unmarked and seen_marks != set(range(1, n + 1)):
        missing = set(range(1, n + 1)) - seen_marks
        raise DuplicateMark(f"marks {sorted(missing)} not placed")

    # singularity bounds: rational r-fold needs r <= n+1, elliptic m-fold
    # needs m <= n, elliptic-m + rational-r transversal union needs m+r <= n
    if kind == FOLD:
        q_tail = curve.tail_at_fold_point()
        r = len(q_tail.roots) if q_tail else 0
        if r == 0:
            if m > n:
                raise SingularityBoundExceeded(f"elliptic {m}-fold point needs m <= n")
        else:
            if m + r > n:
                raise SingularityBoundExceeded(
                    f"elliptic {m}-fold with {r} extra branches needs m+r <= n")
    if kind == NGON:
        for e in range(m if m > 1 else 1):
            t = curve.tail_at_node(e)
            r = len(t.roots) if t else 0
            if 2 + r > n + 1:
                raise SingularityBoundExceeded(
                    f"node with {r} extra branches is a rational {2 + r}-fold point")
    for t in curve.tails:
        if t.anchor[0] == "smooth" and 1 + len(t.roots) > n + 1:
            raise SingularityBoundExceeded(
                f"smooth-point anchor with {len(t.roots)} branches")
        for b in t.iter_branches():
            for j in b.joints:
                if 1 + len(j) > n + 1:
                    raise SingularityBoundExceeded(
                        f"tail joint with {len(j)} attached branches")
    return curve


# ---------------------------------------------------------------------------
# special points


def special_point_counts(curve: Curve) -> list:
    """Per-component special-point statistics.

    ``on_component`` counts marks plus distinct singular points of C on
    the component; ``on_normalization`` counts branch preimages instead,
    so the two differ exactly at the self-node of a 1-gon core.
    """
    out = []
    kind, m = curve.core_kind, curve.core_m
    smooth_anchors = curve.smooth_anchor_counts()
    for k in range(m):
        mk = len(curve.core_marks[k])
        if kind == SMOOTH:
            sing_pts = sing_pre = 0
        elif kind == FOLD:
            sing_pts = sing_pre = 1
        else:
            sing_pts = 1 if m == 1 else 2
            sing_pre = 2
        cnt = mk + sing_pts + smooth_anchors[k]
        pre = mk + sing_pre + smooth_anchors[k]
        out.append(ComponentInfo(("core", k), True, curve.core_marks[k], cnt, pre))
    for ti, t in enumerate(curve.tails):
        def walk(branch: Branch, path):
            cnt = len(branch.marks) + 1 + len(branch.joints)
            out.append(ComponentInfo(("tail", ti, path), False, branch.marks, cnt, cnt))
            for ji, j in enumerate(branch.joints):
                for bi, b in enumerate(j):
                    walk(b, path + (ji, bi))
        for ri, root in enumerate(t.roots):
            walk(root, (ri,))
    return out


def stability_index_sets(curve: Curve) -> IndexSets:
    """Compute (I, J, I0) for a fully marked curve."""
    if curve.allow_unmarked:
        raise CurveError("index sets need a fully marked curve")
    I = set()
    for ms in curve.core_marks:
        I |= ms
    J = set()
    I0 = set()
    for info in special_point_counts(curve):
        if info.is_core:
            if curve.core_kind == FOLD and info.on_component == 2:
                I0 |= info.marks
        else:
            if info.on_component >= 3:
                J |= info.marks
    if curve.core_kind != FOLD:
        I0 = set()
    return IndexSets(frozenset(I), frozenset(J), frozenset(I0))


# ---------------------------------------------------------------------------
# canonical form

# Tails attached to a fold core are interchangeable under any permutation
# of the core components; an n-gon core admits the dihedral group acting
# on the cyclic order of components and nodes.  Tail trees are unordered
# at every level.  The canonical form is the minimum serialization over
# these symmetries, so equal byte strings mean isomorphic labelled curves.


def _canon_branch(b: Branch):
    joints = tuple(sorted(tuple(sorted(_canon_branch(x) for x in j)) for j in b.joints))
    return (tuple(sorted(b.marks)), joints)


def _canon_tail_body(t: Tail):
    return tuple(sorted(_canon_branch(r) for r in t.roots))


def canonical_key(curve: Curve):
    kind, m = curve.core_kind, curve.core_m
    smooth_tails = [[] for _ in range(m)]
    node_tails = [None] * (m if kind == NGON else 0)
    q_tail = None
    for t in curve.tails:
        if t.anchor[0] == "smooth":
            smooth_tails[t.anchor[1]].append(_canon_tail_body(t))
        elif t.anchor[0] == "fold_point":
            q_tail = _canon_tail_body(t)
        else:
            node_tails[t.anchor[1]] = _canon_tail_body(t)
    comp_entries = [
        (tuple(sorted(curve.core_marks[k])), tuple(sorted(smooth_tails[k])))
        for k in range(m)
    ]
    if kind == SMOOTH:
        return (SMOOTH, comp_entries[0])
    if kind == FOLD:
        return (FOLD, m, tuple(sorted(comp_entries)), q_tail)
    # ngon: minimize over the 2m dihedral symmetries; edge e joins
    # components e and e+1 (mod m), so a reflection sending component k
    # to -k sends edge e to -e-1.
    edge_entries = [nt if nt is not None else () for nt in node_tails]
    best = None
    for refl in (False, True):
        for r in range(m):
            if not refl:
                seq = tuple(
                    (comp_entries[(k + r) % m], edge_entries[(k + r) % m])
                    for k in range(m)
                )
            else:
                seq = tuple(
                    (comp_entries[(-k + r) % m], edge_entries[(-k - 1 + r) % m])
                    for k in range(m)
                )
            if best is None or seq < best:
                best = seq
    return (NGON, m, best)


def canonical_form(curve: Curve) -> bytes:
    cached = getattr(curve, "_canon", None)
    if cached is None:
        cached = repr(canonical_key(curve)).encode()
        object.__setattr__(curve, "_canon", cached)
    return cached


# ---------------------------------------------------------------------------
# JSON interchange
#
# {"n": 3, "core": {"kind": "fold", "m": 2}, "core_marks": [[1], [2]],
#  "tails": [{"anchor": {"kind": "smooth", "component": 0},
#             "components": [{"id": "c0", "marks": [3]}],
#             "joints": [{"base": "anchor", "attached": ["c0"]}]}]}


def curve_from_dict(raw: dict, allow_unmarked=None) -> Curve:
    try:
        n = raw["n"]
        core = raw["core"]
        kind = core["kind"]
        m = 1 if kind == SMOOTH else core["m"]
        core_marks = raw["core_marks"]
        tails_raw = raw.get("tails", [])
    except (KeyError, TypeError) as exc:
        raise CurveFormatError(f"malformed curve object: {exc}") from exc
    if allow_unmarked is None:
        allow_unmarked = bool(raw.get("allow_unmarked", False))
    if not isinstance(core_marks, list) or len(core_marks) != m:
        raise CurveFormatError("core_marks must list one mark set per core component")
    tails = tuple(_tail_from_dict(t) for t in tails_raw)
    return make_curve(n, kind, core_marks, tails, allow_unmarked)


def _tail_from_dict(raw: dict) -> Tail:
    try:
        a = raw["anchor"]
        akind = a["kind"]
        comps = raw["components"]
        joints = raw["joints"]
    except (KeyError, TypeError) as exc:
        raise CurveFormatError(f"malformed tail object: {exc}") from exc
    if akind == "smooth":
        anchor = ("smooth", a["component"])
    elif akind == "singular":
        anchor = ("fold_point",)
    elif akind == "node":
        anchor = ("node", a["edge"])
    else:
        raise CurveFormatError(f"unknown anchor kind {akind!r}")
    marks_of = {}
    for c in comps:
        cid = c["id"]
        if cid in marks_of:
            raise CurveFormatError(f"component id {cid!r} repeated")
        marks_of[cid] = frozenset(c.get("marks", []))
    children = {cid: [] for cid in marks_of}
    anchor_joints = []
    attached_once = set()
    for j in joints:
        base = j["base"]
        att = j["attached"]
        if not att:
            raise CurveFormatError("joint with empty attached set")
        for cid in att:
            if cid not in marks_of:
                raise CurveFormatError(f"joint attaches unknown component {cid!r}")
            if cid in attached_once:
                raise CurveFormatError(f"component {cid!r} attached twice")
            attached_once.add(cid)
        if base == "anchor":
            anchor_joints.append(list(att))
        elif base in marks_of:
            children[base].append(list(att))
        else:
            raise CurveFormatError(f"joint based on unknown component {base!r}")
    if len(anchor_joints) != 1:
        raise CurveFormatError("tail needs exactly one joint based at the anchor")
    if attached_once != set(marks_of):
        raise CurveFormatError("every tail component must be attached exactly once")

    building = set()

    def build(cid) -> Branch:
        if cid in building:
            raise CurveFormatError("cycle in tail joints")
        building.add(cid)
        js = tuple(tuple(build(x) for x in att) for att in children[cid])
        building.discard(cid)
        return Branch(marks_of[cid], js)

    roots = tuple(build(cid) for cid in anchor_joints[0])
    # reachability: every component must hang below the anchor
    tail = Tail(anchor, roots)
    if tail.component_count() != len(marks_of):
        raise CurveFormatError("tail joints do not form a tree rooted at the anchor")
    return tail


def curve_to_dict(curve: Curve) -> dict:
    tails = []
    for t in curve.tails:
        comps = []
        joints = []
        counter = [0]

        def fresh():
            cid = f"c{counter[0]}"
            counter[0] += 1
            return cid

        def emit(branch: Branch):
            cid = fresh()
            comps.append({"id": cid, "marks": sorted(branch.marks)})
            for j in branch.joints:
                ids = [emit(b) for b in j]
                joints.append({"base": cid, "attached": ids})
            return cid

        root_ids = [emit(r) for r in t.roots]
        joints.insert(0, {"base": "anchor", "attached": root_ids})
        if t.anchor[0] == "smooth":
            a = {"kind": "smooth", "component": t.anchor[1]}
        elif t.anchor[0] == "fold_point":
            a = {"kind": "singular"}
        else:
            a = {"kind": "node", "edge": t.anchor[1]}
        tails.append({"anchor": a, "components": comps, "joints": joints})
    out = {
        "n": curve.n,
        "core": {"kind": curve.core_kind, "m": curve.core_m},
        "core_marks": [sorted(ms) for ms in curve.core_marks],
        "tails": tails,
    }
    if curve.allow_unmarked:
        out["allow_unmarked"] = True
    return out


def curve_from_json(text: str, allow_unmarked=None) -> Curve:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CurveFormatError(f"invalid JSON: {exc}") from exc
    return curve_from_dict(raw, allow_unmarked=allow_unmarked)


def curve_to_json(curve: Curve) -> str:
    return json.dumps(curve_to_dict(curve), sort_keys=True)
