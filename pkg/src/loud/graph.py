"""Road network representation and the location model.

Travel times are nonnegative integers in units of 0.1 s. A location is
either a vertex or a point on an edge, given as an integer offset (in time
units) from the edge's tail.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

INF = (2**63 - 1) // 2


class NetworkFormatError(ValueError):
    """Raised for malformed graph files."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Location:
    """A vertex (``edge == -1``) or a point ``offset`` units along ``edge``."""

    vertex: int = -1
    edge: int = -1
    offset: int = 0

    @classmethod
    def at_vertex(cls, v: int) -> "Location":
        return cls(vertex=v)

    @classmethod
    def on_edge(cls, e: int, offset: int) -> "Location":
        return cls(edge=e, offset=offset)

    @property
    def is_vertex(self) -> bool:
        return self.edge < 0

    def __str__(self) -> str:
        if self.is_vertex:
            return str(self.vertex)
        return f"{self.edge}:{self.offset}"

    @classmethod
    def parse(cls, text: str) -> "Location":
        text = text.strip()
        if text.startswith("edge:"):
            text = text[5:]
        if ":" in text:
            e, o = text.split(":", 1)
            return cls.on_edge(int(e), int(o))
        return cls.at_vertex(int(text))


@dataclass
class PathDescription:
    edges: list[int]
    length: int


@dataclass
class RoadNetwork:
    """Directed graph with integer edge lengths and CSR adjacency in both directions.

    ``out_first[v]:out_first[v+1]`` indexes ``out_head``/``out_len``/``out_edge``;
    the ``in_*`` arrays are the same for incoming edges (``in_tail``).
    """

    num_vertices: int
    tails: list[int]
    heads: list[int]
    lengths: list[int]
    out_first: list[int] = field(init=False, repr=False)
    out_head: list[int] = field(init=False, repr=False)
    out_len: list[int] = field(init=False, repr=False)
    out_edge: list[int] = field(init=False, repr=False)
    in_first: list[int] = field(init=False, repr=False)
    in_tail: list[int] = field(init=False, repr=False)
    in_len: list[int] = field(init=False, repr=False)
    in_edge: list[int] = field(init=False, repr=False)

    def __post_init__(self):
        n = self.num_vertices
        if not (len(self.tails) == len(self.heads) == len(self.lengths)):
            raise ValueError("edge arrays differ in length")
        for e, (u, v, w) in enumerate(zip(self.tails, self.heads, self.lengths)):
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge {e} references a vertex outside [0, {n})")
            if w < 0:
                raise ValueError(f"edge {e} has negative length {w}")
        self.out_first, order = _csr(n, self.tails)
        self.out_head = [self.heads[e] for e in order]
        self.out_len = [self.lengths[e] for e in order]
        self.out_edge = order
        self.in_first, order = _csr(n, self.heads)
        self.in_tail = [self.tails[e] for e in order]
        self.in_len = [self.lengths[e] for e in order]
        self.in_edge = order

    @property
    def num_edges(self) -> int:
        return len(self.tails)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "RoadNetwork":
        tails, heads, lengths = [], [], []
        for u, v, w in edges:
            tails.append(u)
            heads.append(v)
            lengths.append(w)
        return cls(n, tails, heads, lengths)

    def edges(self):
        return zip(self.tails, self.heads, self.lengths)

    def with_lengths(self, lengths: Sequence[int]) -> "RoadNetwork":
        if len(lengths) != self.num_edges:
            raise ValueError(f"metric has {len(lengths)} lengths, network has {self.num_edges} edges")
        return RoadNetwork(self.num_vertices, list(self.tails), list(self.heads), list(lengths))

    def out_edges(self, v: int):
        a, b = self.out_first[v], self.out_first[v + 1]
        return zip(self.out_head[a:b], self.out_len[a:b], self.out_edge[a:b])

    def in_edges(self, v: int):
        a, b = self.in_first[v], self.in_first[v + 1]
        return zip(self.in_tail[a:b], self.in_len[a:b], self.in_edge[a:b])

    # ---- location helpers -------------------------------------------------

    def validate_location(self, loc: Location) -> None:
        if loc.is_vertex:
            if not 0 <= loc.vertex < self.num_vertices:
                raise ValueError(f"vertex {loc.vertex} out of range")
        else:
            if not 0 <= loc.edge < self.num_edges:
                raise ValueError(f"edge {loc.edge} out of range")
            if not 0 <= loc.offset <= self.lengths[loc.edge]:
                raise ValueError(f"offset {loc.offset} outside edge {loc.edge}")

    def forward_start(self, loc: Location) -> tuple[int, int]:
        """Vertex and initial label for a search leaving ``loc``."""
        if loc.is_vertex:
            return loc.vertex, 0
        return self.heads[loc.edge], self.lengths[loc.edge] - loc.offset

    def reverse_start(self, loc: Location) -> tuple[int, int]:
        """Vertex and initial label for a search arriving at ``loc``."""
        if loc.is_vertex:
            return loc.vertex, 0
        return self.tails[loc.edge], loc.offset

    def same_edge_distance(self, a: Location, b: Location) -> int:
        """Direct travel time from ``a`` to ``b`` along a shared edge, or INF."""
        if not a.is_vertex and a.edge == b.edge and b.offset >= a.offset:
            return b.offset - a.offset
        return INF

    def normalize(self, loc: Location) -> Location:
        """Map edge endpoints to their vertex."""
        if loc.is_vertex:
            return loc
        if loc.offset == 0:
            return Location.at_vertex(self.tails[loc.edge])
        if loc.offset == self.lengths[loc.edge]:
            return Location.at_vertex(self.heads[loc.edge])
        return loc


def _csr(n: int, keys: Sequence[int]) -> tuple[list[int], list[int]]:
    first = [0] * (n + 1)
    for k in keys:
        first[k + 1] += 1
    for v in range(n):
        first[v + 1] += first[v]
    pos = first[:-1].copy()
    order = [0] * len(keys)
    for e, k in enumerate(keys):
        order[pos[k]] = e
        pos[k] += 1
    return first, order


def parse_network(text: str) -> RoadNetwork:
    """Parse the ``v <n> e <m>`` header format; ``#`` starts a comment."""
    n = m = None
    tails, heads, lengths = [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 4 or parts[0] != "v" or parts[2] != "e":
                raise NetworkFormatError("expected header 'v <count> e <count>'", lineno)
            try:
                n, m = int(parts[1]), int(parts[3])
            except ValueError:
                raise NetworkFormatError("non-integer count in header", lineno) from None
            if n < 0 or m < 0:
                raise NetworkFormatError("negative count in header", lineno)
            continue
        if len(parts) != 3:
            raise NetworkFormatError(f"expected 'tail head length', got {line!r}", lineno)
        try:
            u, v, w = (int(x) for x in parts)
        except ValueError:
            raise NetworkFormatError(f"non-integer field in {line!r}", lineno) from None
        if w < 0:
            raise NetworkFormatError(f"negative edge length {w}", lineno)
        if not (0 <= u < n and 0 <= v < n):
            raise NetworkFormatError(f"dangling vertex id in edge {u} -> {v}", lineno)
        tails.append(u)
        heads.append(v)
        lengths.append(w)
    if n is None:
        raise NetworkFormatError("missing header")
    if len(tails) != m:
        raise NetworkFormatError(f"header announces {m} edges, found {len(tails)}")
    return RoadNetwork(n, tails, heads, lengths)


def load_network(path) -> RoadNetwork:
    with open(path) as f:
        return parse_network(f.read())


def format_network(net: RoadNetwork) -> str:
    lines = [f"v {net.num_vertices} e {net.num_edges}"]
    lines.extend(f"{u} {v} {w}" for u, v, w in net.edges())
    return "\n".join(lines) + "\n"


def write_network(net: RoadNetwork, path) -> None:
    with open(path, "w") as f:
        f.write(format_network(net))


def line_network(n: int, length: int = 100) -> RoadNetwork:
    """Bidirected path 0 - 1 - ... - n-1 with uniform edge length."""
    edges = []
    for i in range(n - 1):
        edges.append((i, i + 1, length))
        edges.append((i + 1, i, length))
    return RoadNetwork.from_edges(n, edges)


def grid_network(rows: int, cols: int, lengths=None) -> RoadNetwork:
    """Bidirected grid; ``lengths`` is a callable ``(u, v) -> int`` or None for 100."""
    edges = []

    def vid(r, c):
        return r * cols + c

    for r in range(rows):
        for c in range(cols):
            for dr, dc in ((0, 1), (1, 0)):
                rr, cc = r + dr, c + dc
                if rr < rows and cc < cols:
                    u, v = vid(r, c), vid(rr, cc)
                    edges.append((u, v, lengths(u, v) if lengths else 100))
                    edges.append((v, u, lengths(v, u) if lengths else 100))
    return RoadNetwork.from_edges(rows * cols, edges)
