"""Finite combinatorial trees and exact rational points on them.

A tree is a connected acyclic graph on named vertices.  Each edge is stored
as an ordered pair ``(u, v)``; the orientation fixes a coordinate on the
edge with ``u`` at 0 and ``v`` at 1.  Edges are kept in a canonical order
(sorted by endpoint pair) so that edge indices, matrix labels and point
normal forms are reproducible across runs.

Points are coordinates on edges.  A topological point sitting at a vertex
can be written on any incident edge; its normal form uses the lowest
incident edge index.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from .errors import NOT_A_TREE, ValidationError, Violation

ZERO = Fraction(0)
ONE = Fraction(1)


class Tag(enum.Enum):
    """Caller-supplied vertex metadata recording what the vertex stands for."""

    FATOU = "FATOU"
    JULIA = "JULIA"
    UNTAGGED = "UNTAGGED"


def coerce_tag(value) -> Tag:
    if isinstance(value, Tag):
        return value
    if value is None:
        return Tag.UNTAGGED
    return Tag(str(value).upper())


@dataclass(frozen=True, order=True)
class RationalPoint:
    """A point on a tree: an edge index and an exact coordinate in [0, 1]."""

    edge: int
    t: Fraction

    def __str__(self) -> str:
        return f"{self.edge}:{self.t}"


class Tree:
    """A finite tree with tagged vertices and canonically ordered edges."""

    def __init__(self, vertices, edges, tags=None):
        violations = self.violations(vertices, edges)
        if violations:
            raise ValidationError(violations)
        self.vertices: tuple[str, ...] = tuple(sorted(vertices))
        self.edges: tuple[tuple[str, str], ...] = tuple(
            sorted((str(u), str(v)) for u, v in edges)
        )
        tags = dict(tags or {})
        self.tags: dict[str, Tag] = {
            v: coerce_tag(tags.get(v)) for v in self.vertices
        }
        self._edge_index: dict[frozenset, int] = {
            frozenset(e): i for i, e in enumerate(self.edges)
        }
        self._incident: dict[str, list[tuple[int, Fraction]]] = {
            v: [] for v in self.vertices
        }
        for i, (u, v) in enumerate(self.edges):
            self._incident[u].append((i, ZERO))
            self._incident[v].append((i, ONE))

    @staticmethod
    def violations(vertices, edges) -> list[Violation]:
        """All tree-structure violations of the raw data (empty when valid)."""
        out: list[Violation] = []
        vlist = [str(v) for v in vertices]
        vset = set(vlist)
        if len(vlist) != len(vset):
            out.append(Violation(NOT_A_TREE, "duplicate vertex ids"))
        if not vlist:
            out.append(Violation(NOT_A_TREE, "no vertices"))
            return out
        pairs = []
        seen = set()
        for e in edges:
            u, v = (str(e[0]), str(e[1]))
            if u not in vset or v not in vset:
                out.append(Violation(NOT_A_TREE, f"edge ({u},{v}) uses unknown vertex"))
                continue
            if u == v:
                out.append(Violation(NOT_A_TREE, f"self-loop at {u}"))
                continue
            key = frozenset((u, v))
            if key in seen:
                out.append(Violation(NOT_A_TREE, f"duplicate edge ({u},{v})"))
                continue
            seen.add(key)
            pairs.append((u, v))
        if out:
            return out
        if len(pairs) != len(vset) - 1:
            out.append(
                Violation(
                    NOT_A_TREE,
                    f"{len(pairs)} edges on {len(vset)} vertices (need |V|-1)",
                )
            )
        # Connectivity check; together with the edge count this rules out cycles.
        adj: dict[str, list[str]] = {v: [] for v in vset}
        for u, v in pairs:
            adj[u].append(v)
            adj[v].append(u)
        stack = [vlist[0]]
        reached = {vlist[0]}
        while stack:
            for w in adj[stack.pop()]:
                if w not in reached:
                    reached.add(w)
                    stack.append(w)
        if reached != vset:
            out.append(Violation(NOT_A_TREE, "graph is not connected"))
        return out

    # -- basic queries ----------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_label(self, i: int) -> str:
        u, v = self.edges[i]
        return f"{u}-{v}"

    def edge_labels(self) -> tuple[str, ...]:
        return tuple(self.edge_label(i) for i in range(self.n_edges))

    def edge_index(self, key) -> int:
        """Resolve an edge given an index, a ``u-v`` label or an endpoint pair."""
        if isinstance(key, int):
            if not 0 <= key < self.n_edges:
                raise KeyError(f"edge index {key} out of range")
            return key
        if isinstance(key, str):
            if "-" in key:
                u, _, v = key.partition("-")
                return self.edge_index((u, v))
            raise KeyError(f"bad edge label {key!r}")
        u, v = key
        idx = self._edge_index.get(frozenset((str(u), str(v))))
        if idx is None:
            raise KeyError(f"no edge between {u} and {v}")
        return idx

    def edge_between(self, u: str, v: str) -> int | None:
        return self._edge_index.get(frozenset((u, v)))

    def incident_edges(self, v: str) -> tuple[tuple[int, Fraction], ...]:
        """Edges at a vertex as ``(edge index, coordinate of v on it)`` pairs."""
        return tuple(self._incident[v])

    def tag(self, v: str) -> Tag:
        return self.tags[v]

    # -- points -----------------------------------------------------------

    def vertex_point(self, v: str) -> RationalPoint:
        """Normal form of the vertex as a point (lowest incident edge)."""
        i, c = min(self._incident[v])
        return RationalPoint(i, c)

    def point(self, edge_key, t) -> RationalPoint:
        return self.normalize(RationalPoint(self.edge_index(edge_key), Fraction(t)))

    def normalize(self, p: RationalPoint) -> RationalPoint:
        """Canonicalize a point; vertex points move to their lowest edge."""
        if not 0 <= p.t <= 1:
            raise ValueError(f"coordinate {p.t} outside [0,1]")
        u, v = self.edges[p.edge]
        if p.t == 0:
            return self.vertex_point(u)
        if p.t == 1:
            return self.vertex_point(v)
        return p

    def point_vertex(self, p: RationalPoint) -> str | None:
        """The vertex a point sits at, or None for an interior point."""
        if p.t == 0:
            return self.edges[p.edge][0]
        if p.t == 1:
            return self.edges[p.edge][1]
        return None

    def coordinate_on(self, p: RationalPoint, edge: int) -> Fraction | None:
        """Coordinate of the (normalized) point on the given edge, if it lies there."""
        v = self.point_vertex(p)
        if v is None:
            return p.t if p.edge == edge else None
        for i, c in self._incident[v]:
            if i == edge:
                return c
        return None

    # -- equality ---------------------------------------------------------

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Tree)
            and self.vertices == other.vertices
            and self.edges == other.edges
            and self.tags == other.tags
        )

    def __repr__(self) -> str:
        return f"Tree({self.n_vertices} vertices, {self.n_edges} edges)"
