"""Marked tree maps: piecewise-linear self-maps of a tree.

A marked tree map carries a tree with vertex set ``X0``, a finite set of
interior subdivision points (together with ``X0`` they form ``X1``), an
image vertex for every ``X1`` point, and a positive weight for every
``X1`` segment.  Each segment (an interval between consecutive marked
points) is sent affinely onto the whole edge spanned by its endpoint
images; this determines the map on all of the tree.

All data is exact: coordinates, weights and every computed point are
:class:`fractions.Fraction` values, so fixed points and pullbacks are
computed without rounding.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    BAD_SUBDIVISION,
    COLLAPSED_SEGMENT,
    MISSING_IMAGE,
    MISSING_WEIGHT,
    NON_ADJACENT_IMAGES,
    NONPOSITIVE_WEIGHT,
    UNKNOWN_EDGE,
    UNKNOWN_MARK,
    VERTEX_ESCAPES_X0,
    ResourceLimitError,
    UntaggedCycleError,
    ValidationError,
    Violation,
)
from .ratio import to_fraction
from .tree import ONE, ZERO, RationalPoint, Tag, Tree, coerce_tag

DEFAULT_POINT_CAP = 250_000

#: A finite set of points on a tree (always kept in normal form).
MarkedSet = frozenset


@dataclass(frozen=True)
class Segment:
    """One ``X1`` segment together with the affine map onto its image edge.

    The image coordinate of a source coordinate ``t`` in ``[lo, hi]`` is
    ``c0 + slope * t``; the segment covers its image edge exactly.
    """

    edge: int
    index: int
    lo: Fraction
    hi: Fraction
    image_edge: int
    c0: Fraction
    slope: Fraction
    weight: Fraction

    def image_coord(self, t: Fraction) -> Fraction:
        return self.c0 + self.slope * t

    def preimage_coord(self, y: Fraction) -> Fraction:
        return (y - self.c0) / self.slope

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    @property
    def is_whole_edge(self) -> bool:
        return self.lo == 0 and self.hi == 1


class MarkedTreeMap:
    """A validated piecewise-linear tree map.  Use :func:`build_tree_map`."""

    def __init__(self, tree, subdivisions, vertex_image, mark_image, weights):
        self.tree: Tree = tree
        self.subdivisions: tuple[tuple[Fraction, ...], ...] = subdivisions
        self.vertex_image: dict[str, str] = dict(vertex_image)
        self.mark_image: dict[tuple[int, Fraction], str] = dict(mark_image)
        self.weights: tuple[tuple[Fraction, ...], ...] = weights
        self.breakpoints: tuple[tuple[Fraction, ...], ...] = tuple(
            (ZERO, *subs, ONE) for subs in subdivisions
        )
        self.segments: tuple[Segment, ...] = self._build_segments()
        self._segments_by_edge: tuple[tuple[Segment, ...], ...] = tuple(
            tuple(s for s in self.segments if s.edge == e)
            for e in range(tree.n_edges)
        )

    def _mark_name(self, edge: int, t: Fraction) -> str:
        """Image vertex of the breakpoint at coordinate t of an edge."""
        if t == 0:
            return self.vertex_image[self.tree.edges[edge][0]]
        if t == 1:
            return self.vertex_image[self.tree.edges[edge][1]]
        return self.mark_image[(edge, t)]

    def _build_segments(self) -> tuple[Segment, ...]:
        segs = []
        for e in range(self.tree.n_edges):
            bps = self.breakpoints[e]
            for k in range(len(bps) - 1):
                lo, hi = bps[k], bps[k + 1]
                w_lo = self._mark_name(e, lo)
                w_hi = self._mark_name(e, hi)
                j = self.tree.edge_between(w_lo, w_hi)
                y_lo = self.tree.coordinate_on(self.tree.vertex_point(w_lo), j)
                y_hi = ONE - y_lo
                slope = (y_hi - y_lo) / (hi - lo)
                c0 = y_lo - slope * lo
                segs.append(
                    Segment(e, k, lo, hi, j, c0, slope, self.weights[e][k])
                )
        return tuple(segs)

    # -- structure --------------------------------------------------------

    def segments_of_edge(self, edge: int) -> tuple[Segment, ...]:
        return self._segments_by_edge[edge]

    def segment_label(self, seg: Segment) -> str:
        return f"{self.tree.edge_label(seg.edge)}[{seg.index}]"

    def segment_at(self, edge: int, t: Fraction) -> Segment:
        """The segment containing coordinate ``t``; boundaries resolve right."""
        bps = self.breakpoints[edge]
        k = min(bisect_right(bps, t) - 1, len(bps) - 2)
        return self._segments_by_edge[edge][k]

    def x0_points(self) -> MarkedSet:
        return frozenset(self.tree.vertex_point(v) for v in self.tree.vertices)

    def x1_points(self) -> MarkedSet:
        pts = set(self.x0_points())
        for e, subs in enumerate(self.subdivisions):
            pts.update(RationalPoint(e, t) for t in subs)
        return frozenset(pts)

    # -- dynamics ---------------------------------------------------------

    def evaluate(self, p: RationalPoint) -> RationalPoint:
        """Exact image of a point under the tree map, in normal form."""
        p = self.tree.normalize(p)
        v = self.tree.point_vertex(p)
        if v is not None:
            return self.tree.vertex_point(self.vertex_image[v])
        seg = self.segment_at(p.edge, p.t)
        return self.tree.normalize(
            RationalPoint(seg.image_edge, seg.image_coord(p.t))
        )

    def evaluate_iter(self, p: RationalPoint, n: int) -> RationalPoint:
        for _ in range(n):
            p = self.evaluate(p)
        return p

    def pullback_points(self, points) -> MarkedSet:
        """Exact preimage of a finite point set, as a normalized set."""
        per_edge: dict[int, set[Fraction]] = {}
        for p in points:
            p = self.tree.normalize(p)
            v = self.tree.point_vertex(p)
            if v is None:
                per_edge.setdefault(p.edge, set()).add(p.t)
            else:
                for e, c in self.tree.incident_edges(v):
                    per_edge.setdefault(e, set()).add(c)
        out: set[RationalPoint] = set()
        for seg in self.segments:
            for y in per_edge.get(seg.image_edge, ()):
                t = seg.preimage_coord(y)
                if seg.lo <= t <= seg.hi:
                    out.add(self.tree.normalize(RationalPoint(seg.edge, t)))
        return frozenset(out)

    def refine(self, n: int, cap: int = DEFAULT_POINT_CAP) -> MarkedSet:
        """The n-fold preimage of the vertex set (``refine(0)`` is ``X0``)."""
        if n < 0:
            raise ValueError("n must be nonnegative")
        pts = self.x0_points()
        for _ in range(n):
            pts = self.pullback_points(pts)
            if len(pts) > cap:
                raise ResourceLimitError(
                    f"refinement exceeded {cap} points; raise the cap to continue"
                )
        return pts

    # -- vertex dynamics ----------------------------------------------------

    def vertex_dynamics(self) -> "VertexDynamics":
        """Restriction of the map to vertices, with its labelled cycles."""
        fmap = {v: self.vertex_image[v] for v in self.tree.vertices}
        cycles = []
        seen: set[str] = set()
        for start in self.tree.vertices:
            if start in seen:
                continue
            trail = []
            pos: dict[str, int] = {}
            v = start
            while v not in pos and v not in seen:
                pos[v] = len(trail)
                trail.append(v)
                v = fmap[v]
            if v in pos:  # new cycle discovered on this trail
                cyc = trail[pos[v]:]
                lead = min(range(len(cyc)), key=lambda i: cyc[i])
                cyc = tuple(cyc[lead:] + cyc[:lead])
                tags = {self.tree.tag(u) for u in cyc}
                if tags == {Tag.JULIA}:
                    label = "JULIA"
                elif tags == {Tag.FATOU}:
                    label = "FATOU"
                else:
                    label = "MIXED"
                cycles.append(VertexCycle(cyc, label))
            seen.update(trail)
        cycles.sort(key=lambda c: (len(c.vertices), c.vertices))
        return VertexDynamics(fmap, tuple(cycles))

    def count_julia_cycles(self) -> int:
        """Number of vertex cycles whose vertices are all JULIA-tagged."""
        dyn = self.vertex_dynamics()
        for cyc in dyn.cycles:
            untagged = [
                v for v in cyc.vertices if self.tree.tag(v) is Tag.UNTAGGED
            ]
            if untagged:
                raise UntaggedCycleError(
                    f"periodic vertices without tags: {', '.join(untagged)}"
                )
        return sum(1 for c in dyn.cycles if c.label == "JULIA")

    # -- equality ---------------------------------------------------------

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MarkedTreeMap)
            and self.tree == other.tree
            and self.subdivisions == other.subdivisions
            and self.vertex_image == other.vertex_image
            and self.mark_image == other.mark_image
            and self.weights == other.weights
        )

    def __repr__(self) -> str:
        return (
            f"MarkedTreeMap({self.tree.n_vertices} vertices, "
            f"{len(self.segments)} segments)"
        )


@dataclass(frozen=True)
class VertexCycle:
    vertices: tuple[str, ...]
    label: str  # JULIA, FATOU or MIXED

    @property
    def period(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class VertexDynamics:
    mapping: dict[str, str]
    cycles: tuple[VertexCycle, ...]


def build_tree_map(tree, subdivisions, vertex_image, weights, tags=None):
    """Validate raw data and assemble a :class:`MarkedTreeMap`.

    ``tree`` is a :class:`Tree` or a raw ``(vertices, edges)`` pair.
    ``subdivisions`` maps edges to strictly increasing interior coordinates,
    ``vertex_image`` maps vertex ids and ``(edge, coordinate)`` marks to
    vertex ids, and ``weights`` maps edges to one positive rational per
    segment.  Every violated invariant is collected and reported at once
    through :class:`ValidationError`.
    """
    violations: list[Violation] = []
    if not isinstance(tree, Tree):
        vertices, edges = tree
        violations.extend(Tree.violations(vertices, edges))
        if violations:
            raise ValidationError(violations)
        tree = Tree(vertices, edges, tags)
    elif tags:
        tree = Tree(tree.vertices, tree.edges, {**tree.tags, **dict(tags)})

    def resolve_edge(key):
        try:
            return tree.edge_index(key)
        except KeyError as exc:
            violations.append(Violation(UNKNOWN_EDGE, str(exc)))
            return None

    subs: list[tuple[Fraction, ...]] = [()] * tree.n_edges
    for key, coords in dict(subdivisions or {}).items():
        e = resolve_edge(key)
        if e is None:
            continue
        try:
            vals = tuple(to_fraction(c) for c in coords)
        except Exception as exc:
            violations.append(Violation(BAD_SUBDIVISION, f"{key}: {exc}"))
            continue
        if any(not 0 < c < 1 for c in vals):
            violations.append(
                Violation(BAD_SUBDIVISION, f"{key}: coordinates must lie in (0,1)")
            )
            continue
        if any(vals[i] >= vals[i + 1] for i in range(len(vals) - 1)):
            violations.append(
                Violation(BAD_SUBDIVISION, f"{key}: not strictly increasing")
            )
            continue
        subs[e] = vals

    vmap: dict[str, str] = {}
    mmap: dict[tuple[int, Fraction], str] = {}
    for key, target in dict(vertex_image).items():
        target = str(target)
        if isinstance(key, str) and ":" in key:
            lbl, _, coord = key.partition(":")
            key = (lbl, coord)
        if isinstance(key, str):
            if key not in tree.tags:
                violations.append(Violation(UNKNOWN_MARK, f"unknown vertex {key!r}"))
                continue
            vmap[key] = target
        else:
            edge_key, coord = key
            e = resolve_edge(edge_key)
            if e is None:
                continue
            mmap[(e, to_fraction(coord))] = target

    wts: list[tuple[Fraction, ...]] = [None] * tree.n_edges
    weights = dict(weights or {})
    for key, values in weights.items():
        e = resolve_edge(key)
        if e is None:
            continue
        if not isinstance(values, (list, tuple)):
            values = [values]
        try:
            wts[e] = tuple(to_fraction(w) for w in values)
        except Exception as exc:
            violations.append(Violation(MISSING_WEIGHT, f"{key}: {exc}"))

    for e in range(tree.n_edges):
        n_segs = len(subs[e]) + 1
        if wts[e] is None:
            wts[e] = (Fraction(1),) * n_segs if not weights else None
        if wts[e] is None or len(wts[e]) != n_segs:
            violations.append(
                Violation(
                    MISSING_WEIGHT,
                    f"edge {tree.edge_label(e)} needs {n_segs} weights",
                )
            )
            wts[e] = (Fraction(1),) * n_segs
        for w in wts[e]:
            if w <= 0:
                violations.append(
                    Violation(
                        NONPOSITIVE_WEIGHT,
                        f"edge {tree.edge_label(e)} has weight {w}",
                    )
                )

    for v in tree.vertices:
        if v not in vmap:
            violations.append(Violation(MISSING_IMAGE, f"vertex {v} has no image"))
        elif vmap[v] not in tree.tags:
            violations.append(
                Violation(
                    VERTEX_ESCAPES_X0,
                    f"image of vertex {v} is {vmap[v]!r}, not a vertex",
                )
            )
    for e in range(tree.n_edges):
        for c in subs[e]:
            if (e, c) not in mmap:
                violations.append(
                    Violation(
                        MISSING_IMAGE,
                        f"mark {tree.edge_label(e)}:{c} has no image",
                    )
                )
            elif mmap[(e, c)] not in tree.tags:
                violations.append(
                    Violation(
                        VERTEX_ESCAPES_X0,
                        f"image of mark {tree.edge_label(e)}:{c} is not a vertex",
                    )
                )
    for key in mmap:
        if key[1] not in subs[key[0]]:
            violations.append(
                Violation(
                    UNKNOWN_MARK,
                    f"image given for {tree.edge_label(key[0])}:{key[1]}, "
                    "which is not a subdivision point",
                )
            )

    if not violations:
        # Segment geometry: endpoint images must be distinct and adjacent.
        for e in range(tree.n_edges):
            bps = (ZERO, *subs[e], ONE)
            names = []
            for t in bps:
                if t == 0:
                    names.append(vmap[tree.edges[e][0]])
                elif t == 1:
                    names.append(vmap[tree.edges[e][1]])
                else:
                    names.append(mmap[(e, t)])
            for k in range(len(bps) - 1):
                a, b = names[k], names[k + 1]
                where = f"segment {tree.edge_label(e)}[{k}]"
                if a == b:
                    violations.append(
                        Violation(COLLAPSED_SEGMENT, f"{where} maps both ends to {a}")
                    )
                elif tree.edge_between(a, b) is None:
                    violations.append(
                        Violation(
                            NON_ADJACENT_IMAGES,
                            f"{where} ends map to non-adjacent {a}, {b}",
                        )
                    )

    if violations:
        raise ValidationError(violations)
    return MarkedTreeMap(tree, tuple(subs), vmap, mmap, tuple(wts))


def insert_vertices(tm: MarkedTreeMap, new_points: dict[str, RationalPoint]):
    """Promote interior points to vertices, refining the same map.

    The promoted set must be forward invariant together with ``X0``: the
    image of each new point has to be a vertex or another new point.
    Returns the refined map and a dict sending each new edge label to the
    label of the edge of ``tm`` containing it.
    """
    tree = tm.tree
    named = {}
    for name, p in new_points.items():
        p = tree.normalize(p)
        if tree.point_vertex(p) is not None:
            raise ValueError(f"{name} is already a vertex")
        named[name] = p

    def identify(q: RationalPoint) -> str | None:
        v = tree.point_vertex(q)
        if v is not None:
            return v
        for name, p in named.items():
            if p == q:
                return name
        return None

    for name, p in named.items():
        img = identify(tm.evaluate(p))
        if img is None:
            raise ValueError(f"image of {name} is neither a vertex nor promoted")

    vertices = list(tree.vertices) + list(named)
    tags = {v: tree.tags[v] for v in tree.vertices}
    tags.update({name: Tag.JULIA for name in named})

    edges: list[tuple[str, str]] = []
    containment: dict[tuple[str, str], int] = {}
    pieces: dict[int, list[tuple[Fraction, Fraction, str, str]]] = {}
    for e in range(tree.n_edges):
        u, v = tree.edges[e]
        cuts = sorted((p.t, name) for name, p in named.items() if p.edge == e)
        marks = [(ZERO, u), *cuts, (ONE, v)]
        pieces[e] = []
        for k in range(len(marks) - 1):
            (a, na), (b, nb) = marks[k], marks[k + 1]
            edges.append((na, nb))
            containment[(na, nb)] = e
            pieces[e].append((a, b, na, nb))

    new_tree = Tree(vertices, edges, tags)
    sub_of: dict[int, tuple[int, Fraction, Fraction]] = {}
    for (na, nb), e in containment.items():
        for a, b, pa, pb in pieces[e]:
            if (pa, pb) == (na, nb):
                sub_of[new_tree.edge_index((na, nb))] = (e, a, b)

    x2 = tm.pullback_points(
        set(tm.x0_points()) | set(named.values())
    )
    coords_by_edge: dict[int, list[Fraction]] = {}
    for q in x2:
        if tree.point_vertex(q) is None:
            coords_by_edge.setdefault(q.edge, []).append(q.t)

    subdivisions: dict[int, list[Fraction]] = {}
    images: dict = {}
    wts: dict[int, list[Fraction]] = {}
    for new_e, (e, a, b) in sub_of.items():
        inner = sorted(
            t for t in coords_by_edge.get(e, []) if a < t < b
        )
        span = b - a
        subdivisions[new_e] = [(t - a) / span for t in inner]
        wts[new_e] = []
        for lo, hi in zip([a, *inner], [*inner, b]):
            wts[new_e].append(tm.segment_at(e, (lo + hi) / 2).weight)
        for t in inner:
            images[(new_e, (t - a) / span)] = identify(
                tm.evaluate(RationalPoint(e, t))
            )
    for v in tree.vertices:
        images[v] = tm.vertex_image[v]
    for name, p in named.items():
        images[name] = identify(tm.evaluate(p))

    refined = build_tree_map(new_tree, subdivisions, images, wts)
    label_containment = {
        new_tree.edge_label(i): tree.edge_label(e)
        for i, (e, _, _) in sub_of.items()
    }
    return refined, label_containment
