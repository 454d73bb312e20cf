"""Plain Dijkstra searches on the original road network."""
from __future__ import annotations

from dataclasses import dataclass
from heapq import heappop, heappush
from typing import Callable, Iterator, Optional

from .graph import INF, Location, PathDescription, RoadNetwork

FORWARD = "forward"
REVERSE = "reverse"


@dataclass
class SearchResult:
    """Labels and parent edges of a one-to-all search.

    ``dist[v]`` is exact for every vertex in ``settled``; ``parent_edge[v]`` is the
    original edge through which ``v`` was last improved (-1 at the root).
    """

    direction: str
    dist: list[int]
    parent_edge: list[int]
    settled: list[int]

    def is_settled(self, v: int) -> bool:
        return v in self._settled_set

    def __post_init__(self):
        self._settled_set = set(self.settled)


def iterate(net: RoadNetwork, source: Location, direction: str = FORWARD,
            dist: list[int] | None = None, parent_edge: list[int] | None = None) -> Iterator[tuple[int, int]]:
    """Yield ``(vertex, label)`` in settle order.

    The caller may stop consuming at any point; the yielded vertex counts as
    settled only once the caller resumes the generator (edges are relaxed then).
    """
    n = net.num_vertices
    if dist is None:
        dist = [INF] * n
    if parent_edge is None:
        parent_edge = [-1] * n
    if direction == FORWARD:
        first, other, lens, eids = net.out_first, net.out_head, net.out_len, net.out_edge
        root, init = net.forward_start(source)
    elif direction == REVERSE:
        first, other, lens, eids = net.in_first, net.in_tail, net.in_len, net.in_edge
        root, init = net.reverse_start(source)
    else:
        raise ValueError(f"unknown direction {direction!r}")
    dist[root] = init
    queue = [(init, root)]
    done = bytearray(n)
    while queue:
        d, v = heappop(queue)
        if done[v]:
            continue
        done[v] = 1
        yield v, d
        for x in range(first[v], first[v + 1]):
            w = other[x]
            nd = d + lens[x]
            if nd < dist[w]:
                dist[w] = nd
                parent_edge[w] = eids[x]
                heappush(queue, (nd, w))


def dijkstra(net: RoadNetwork, source: Location, direction: str = FORWARD,
             stop_rule: Optional[Callable[[int], bool]] = None) -> SearchResult:
    """Run Dijkstra from ``source``; halt at the first extraction whose key satisfies ``stop_rule``."""
    n = net.num_vertices
    dist = [INF] * n
    parent_edge = [-1] * n
    settled = []
    for v, d in iterate(net, source, direction, dist, parent_edge):
        if stop_rule is not None and stop_rule(d):
            break
        settled.append(v)
    # Labels of unsettled vertices are tentative; expose only settled ones as exact.
    settled_set = set(settled)
    for v in range(n):
        if v not in settled_set:
            dist[v] = INF
            parent_edge[v] = -1
    return SearchResult(direction, dist, parent_edge, settled)


def retrieve_path(net: RoadNetwork, result: SearchResult, target: int) -> Optional[PathDescription]:
    """Edge path from the search root to ``target`` (forward) or ``target`` to root (reverse).

    For an edge-based root the partially traversed root edge is not part of the path;
    ``length`` still equals the label and so includes that partial traversal.
    """
    if not result.is_settled(target):
        return None
    edges = []
    v = target
    if result.direction == FORWARD:
        while result.parent_edge[v] >= 0:
            e = result.parent_edge[v]
            edges.append(e)
            v = net.tails[e]
        edges.reverse()
    else:
        while result.parent_edge[v] >= 0:
            e = result.parent_edge[v]
            edges.append(e)
            v = net.heads[e]
    return PathDescription(edges, result.dist[target])


def distance(net: RoadNetwork, a: Location, b: Location) -> int:
    """Exact point-to-point travel time, INF if unreachable."""
    best = net.same_edge_distance(a, b)
    target, tail_label = net.reverse_start(b)
    for v, d in iterate(net, a, FORWARD):
        if d + tail_label >= best:
            break
        if v == target:
            best = d + tail_label
            break
    return best


def location_distance(net: RoadNetwork, labels: list[int], a: Location, b: Location, direction: str) -> int:
    """Distance between ``a`` and ``b`` read off one-to-all labels.

    ``direction == FORWARD``: ``labels`` come from a forward search rooted at ``a``.
    ``direction == REVERSE``: ``labels`` come from a reverse search rooted at ``b``.
    """
    best = net.same_edge_distance(a, b)
    if direction == FORWARD:
        v, extra = net.reverse_start(b)
    else:
        v, extra = net.forward_start(a)
    d = labels[v]
    if d < INF and d + extra < best:
        best = d + extra
    return best


def floyd_warshall(net: RoadNetwork) -> list[list[int]]:
    """All-pairs vertex distances in O(n^3); for small test graphs only."""
    n = net.num_vertices
    d = [[INF] * n for _ in range(n)]
    for v in range(n):
        d[v][v] = 0
    for u, v, w in net.edges():
        if w < d[u][v]:
            d[u][v] = w
    for k in range(n):
        dk = d[k]
        for i in range(n):
            dik = d[i][k]
            if dik >= INF:
                continue
            di = d[i]
            for j in range(n):
                nd = dik + dk[j]
                if nd < di[j]:
                    di[j] = nd
    return d
