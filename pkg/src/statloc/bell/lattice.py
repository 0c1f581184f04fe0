"""Discrete 2D Minkowski lattice with lightlike edges.

Vertices live in lightcone coordinates (u, v): u counts right-moving steps,
v counts left-moving steps, both nonnegative, so time is t = u + v and the
spatial offset from the origin is d = u - v.  Every edge is one lightlike
step into the future, either 'R' (u+1, spatially rightward) or 'L' (v+1,
leftward).  The lattice is the causal diamond {u >= 0, v >= 0, u + v <=
extent}: each vertex has at most two outgoing future edges, and none on the
t = extent boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

Vertex = tuple[int, int]  # (u, v)
Edge = tuple[Vertex, str]  # (start vertex, move), move in {"L", "R"}

MOVES = ("L", "R")


def step(vertex: Vertex, move: str) -> Vertex:
    u, v = vertex
    if move == "R":
        return (u + 1, v)
    if move == "L":
        return (u, v + 1)
    raise ValueError(f"move must be 'L' or 'R', got {move!r}")


def coord_t(vertex: Vertex) -> int:
    """Lattice time of a vertex."""
    return vertex[0] + vertex[1]


def coord_d(vertex: Vertex) -> int:
    """Spatial offset of a vertex (positive = right of the origin)."""
    return vertex[0] - vertex[1]


@dataclass(frozen=True)
class DiamondLattice:
    extent: int

    def __post_init__(self) -> None:
        if self.extent < 1:
            raise ValueError("extent must be at least 1")

    def contains(self, vertex: Vertex) -> bool:
        u, v = vertex
        return u >= 0 and v >= 0 and u + v <= self.extent

    def vertices(self) -> tuple[Vertex, ...]:
        """All vertices, ordered by (t, u)."""
        return tuple(
            (u, t - u) for t in range(self.extent + 1) for u in range(t + 1)
        )

    @cached_property
    def edges(self) -> tuple[Edge, ...]:
        """All lightlike edges, ordered by start vertex then move."""
        out: list[Edge] = []
        for vertex in self.vertices():
            if coord_t(vertex) < self.extent:
                for move in MOVES:
                    out.append((vertex, move))
        return tuple(out)

    @cached_property
    def edge_index(self) -> dict[Edge, int]:
        return {edge: k for k, edge in enumerate(self.edges)}

    def out_edges(self, vertex: Vertex) -> tuple[Edge, ...]:
        return tuple(
            (vertex, move)
            for move in MOVES
            if self.contains(step(vertex, move))
        )

    def in_edges(self, vertex: Vertex) -> tuple[Edge, ...]:
        """Edges arriving at the vertex, keyed by their start vertex."""
        u, v = vertex
        found: list[Edge] = []
        if v >= 1:  # arrived via an 'L' step from (u, v-1)
            found.append(((u, v - 1), "L"))
        if u >= 1:  # arrived via an 'R' step from (u-1, v)
            found.append(((u - 1, v), "R"))
        return tuple(found)
