"""Contraction hierarchies: preprocessing and the CH search primitives.

A :class:`Hierarchy` stores the augmented graph as two upward-pointing CSR
structures over *arcs* (directed hierarchy edges):

* ``fwd``: for each vertex ``v`` the arcs ``v -> w`` with ``rank[w] > rank[v]``
  (relaxed by forward CH searches);
* ``bwd``: for each vertex ``v`` the arcs ``u -> v`` with ``rank[u] > rank[v]``
  (relaxed, from ``v`` to ``u``, by reverse CH searches).

Every arc carries a middle vertex (-1 for original edges) so up-down paths can
be unpacked into original edges.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from heapq import heappop, heappush
from typing import Optional

from .graph import INF, Location, PathDescription, RoadNetwork

MAGIC = "LOUD-HIERARCHY 1"


@dataclass
class SearchSpace:
    """Vertices settled by a hierarchy search, with labels and parent arcs (-1 at the root)."""

    settled: list[int]
    dist: dict[int, int]
    parent: dict[int, int]

    def label(self, v: int) -> int:
        return self.dist.get(v, INF)


@dataclass
class QueryResult:
    distance: int
    meeting_vertex: int
    up_arcs: list[int]
    down_arcs: list[int]
    same_edge: bool = False

    @property
    def reachable(self) -> bool:
        return self.distance < INF


class Hierarchy:
    """Ranked augmented graph shared by CH and CCH."""

    kind = "ch"

    def __init__(self, net: RoadNetwork, rank: list[int], arcs: list[tuple[int, int, int, int, int]]):
        """``arcs`` holds ``(tail, head, length, middle, original_edge)`` tuples."""
        self.net = net
        self.n = net.num_vertices
        self.rank = rank
        self.arc_tail = [a[0] for a in arcs]
        self.arc_head = [a[1] for a in arcs]
        self.arc_len = [a[2] for a in arcs]
        self.arc_mid = [a[3] for a in arcs]
        self.arc_orig = [a[4] for a in arcs]
        self.arc_live = [True] * len(arcs)
        self.arc_index = {(t, h): i for i, (t, h) in enumerate(zip(self.arc_tail, self.arc_head))}
        self._build_csr()

    # ---- layout -------------------------------------------------------------

    @property
    def num_arcs(self) -> int:
        return sum(self.arc_live)

    def _build_csr(self) -> None:
        n, rank = self.n, self.rank
        fwd = [[] for _ in range(n)]
        bwd = [[] for _ in range(n)]
        for a, (t, h) in enumerate(zip(self.arc_tail, self.arc_head)):
            # an arc of infinite length never relaxes anything, so searches skip it
            if not self.arc_live[a] or self.arc_len[a] >= INF:
                continue
            if rank[t] < rank[h]:
                fwd[t].append((self.rank[h], h, a))
            else:
                bwd[h].append((self.rank[t], t, a))
        self.fwd_first, self.fwd_head, self.fwd_arc = _flatten(fwd)
        self.bwd_first, self.bwd_tail, self.bwd_arc = _flatten(bwd)
        self.refresh_lengths()
        self._dist_f = [INF] * n
        self._dist_b = [INF] * n

    def refresh_lengths(self) -> None:
        al = self.arc_len
        self.fwd_len = [al[a] for a in self.fwd_arc]
        self.bwd_len = [al[a] for a in self.bwd_arc]
        # per-vertex (other end, length, arc) tuples for the query loops
        self.fwd_adj = _adjacency(self.fwd_first, self.fwd_head, self.fwd_len, self.fwd_arc)
        self.bwd_adj = _adjacency(self.bwd_first, self.bwd_tail, self.bwd_len, self.bwd_arc)

    def up_neighbors(self, v: int):
        a, b = self.fwd_first[v], self.fwd_first[v + 1]
        return list(zip(self.fwd_head[a:b], self.fwd_len[a:b], self.fwd_arc[a:b]))

    def down_neighbors(self, v: int):
        """Arcs ``u -> v`` from higher-ranked ``u``."""
        a, b = self.bwd_first[v], self.bwd_first[v + 1]
        return list(zip(self.bwd_tail[a:b], self.bwd_len[a:b], self.bwd_arc[a:b]))

    # ---- searches -----------------------------------------------------------

    def forward_search(self, source: Location, bound: int = INF, stall: bool = False) -> SearchSpace:
        """Dijkstra over upward arcs from ``source``, settling labels ``<= bound``."""
        root, init = self.net.forward_start(source)
        return self._dijkstra(root, init, bound, stall,
                              self.fwd_first, self.fwd_head, self.fwd_len, self.fwd_arc,
                              self.bwd_first, self.bwd_tail, self.bwd_len)

    def reverse_search(self, target: Location, bound: int = INF, stall: bool = True) -> SearchSpace:
        """Reverse CH search: labels are distances *to* ``target``; stops once the min key exceeds ``bound``."""
        root, init = self.net.reverse_start(target)
        return self._dijkstra(root, init, bound, stall,
                              self.bwd_first, self.bwd_tail, self.bwd_len, self.bwd_arc,
                              self.fwd_first, self.fwd_head, self.fwd_len)

    def _dijkstra(self, root, init, bound, stall, first, other, lens, arcs, sfirst, sother, slens):
        dist = self._dist_f
        touched = [root]
        dist[root] = init
        parent = {root: -1}
        queue = [(init, root)]
        settled = []
        out = {}
        while queue:
            d, v = heappop(queue)
            if v in out or d > dist[v]:
                continue
            if d > bound:
                break
            out[v] = d
            if stall:
                stalled = False
                for x in range(sfirst[v], sfirst[v + 1]):
                    u = sother[x]
                    if dist[u] + slens[x] < d:
                        stalled = True
                        break
                if stalled:
                    del out[v]
                    continue
            settled.append(v)
            for x in range(first[v], first[v + 1]):
                w = other[x]
                nd = d + lens[x]
                if nd < dist[w]:
                    if dist[w] == INF:
                        touched.append(w)
                    dist[w] = nd
                    parent[w] = arcs[x]
                    heappush(queue, (nd, w))
        for v in touched:
            dist[v] = INF
        return SearchSpace(settled, out, {v: parent[v] for v in settled})

    def topological_forward_search(self, source: Location, bound: int = INF) -> SearchSpace:
        """Upward search processing vertices in rank order; vertices above ``bound`` are not expanded."""
        root, init = self.net.forward_start(source)
        return self._topological(root, init, bound, self.fwd_first, self.fwd_head, self.fwd_len, self.fwd_arc)

    def topological_reverse_search(self, target: Location, bound: int = INF) -> SearchSpace:
        root, init = self.net.reverse_start(target)
        return self._topological(root, init, bound, self.bwd_first, self.bwd_tail, self.bwd_len, self.bwd_arc)

    def _topological(self, root, init, bound, first, other, lens, arcs):
        rank = self.rank
        dist = {root: init}
        parent = {root: -1}
        queue = [(rank[root], root)]
        settled = []
        while queue:
            _, v = heappop(queue)
            d = dist[v]
            if d > bound:
                continue
            settled.append(v)
            for x in range(first[v], first[v + 1]):
                w = other[x]
                nd = d + lens[x]
                old = dist.get(w)
                if old is None:
                    dist[w] = nd
                    parent[w] = arcs[x]
                    heappush(queue, (rank[w], w))
                elif nd < old:
                    dist[w] = nd
                    parent[w] = arcs[x]
        return SearchSpace(settled, {v: dist[v] for v in settled}, {v: parent[v] for v in settled})

    # ---- upward search used during bucket generation ------------------------

    def upward_space(self, loc: Location, bound: int, forward: bool) -> SearchSpace:
        """Topological upward search (forward from or reverse to ``loc``) pruned at ``bound``."""
        if forward:
            return self.topological_forward_search(loc, bound)
        return self.topological_reverse_search(loc, bound)

    def bounded_search(self, loc: Location, bound: int, forward: bool) -> SearchSpace:
        """Distance-ordered CH search with stall-on-demand, stopping once keys exceed ``bound``."""
        if forward:
            return self.forward_search(loc, bound, stall=True)
        return self.reverse_search(loc, bound, stall=True)

    def bch_search(self, loc: Location, forward: bool) -> SearchSpace:
        return self.bounded_search(loc, INF, forward)

    # ---- point-to-point -----------------------------------------------------

    def query(self, s: Location, t: Location) -> QueryResult:
        """Bidirectional CH query with stall-on-demand."""
        same = self.net.same_edge_distance(s, t)
        sroot, sinit = self.net.forward_start(s)
        troot, tinit = self.net.reverse_start(t)
        df, db = self._dist_f, self._dist_b
        touched_f, touched_b = [sroot], [troot]
        df[sroot] = sinit
        db[troot] = tinit
        pf, pb = {sroot: -1}, {troot: -1}
        qf, qb = [(sinit, sroot)], [(tinit, troot)]
        done_f, done_b = set(), set()
        best, meet = same, -1
        fadj, badj = self.fwd_adj, self.bwd_adj
        forward_turn = True
        while qf or qb:
            if not qf:
                forward_turn = False
            elif not qb:
                forward_turn = True
            if forward_turn:
                d, v = heappop(qf)
                if v not in done_f and d <= df[v]:
                    if d >= best:
                        qf.clear()
                    else:
                        done_f.add(v)
                        if db[v] < INF and d + db[v] < best:
                            best, meet = d + db[v], v
                        stalled = False
                        for u, ln, _ in badj[v]:
                            if df[u] + ln < d:
                                stalled = True
                                break
                        if not stalled:
                            for w, ln, a in fadj[v]:
                                nd = d + ln
                                if nd < df[w]:
                                    if df[w] == INF:
                                        touched_f.append(w)
                                    df[w] = nd
                                    pf[w] = a
                                    heappush(qf, (nd, w))
            else:
                d, v = heappop(qb)
                if v not in done_b and d <= db[v]:
                    if d >= best:
                        qb.clear()
                    else:
                        done_b.add(v)
                        if df[v] < INF and d + df[v] < best:
                            best, meet = d + df[v], v
                        stalled = False
                        for u, ln, _ in fadj[v]:
                            if db[u] + ln < d:
                                stalled = True
                                break
                        if not stalled:
                            for w, ln, a in badj[v]:
                                nd = d + ln
                                if nd < db[w]:
                                    if db[w] == INF:
                                        touched_b.append(w)
                                    db[w] = nd
                                    pb[w] = a
                                    heappush(qb, (nd, w))
            forward_turn = not forward_turn
        for v in touched_f:
            df[v] = INF
        for v in touched_b:
            db[v] = INF
        if meet < 0:
            return QueryResult(best, -1, [], [], same_edge=best < INF)
        return QueryResult(best, meet, self._chain(pf, meet), self._chain(pb, meet)[::-1])

    def distance(self, s: Location, t: Location) -> int:
        return self.query(s, t).distance

    def _chain(self, parent: dict[int, int], v: int) -> list[int]:
        arcs = []
        while parent[v] >= 0:
            a = parent[v]
            arcs.append(a)
            v = self.arc_tail[a] if self.arc_head[a] == v else self.arc_head[a]
        arcs.reverse()
        return arcs

    # ---- path unpacking -----------------------------------------------------

    def unpack_arc(self, a: int, out: list[int]) -> None:
        stack = [a]
        while stack:
            a = stack.pop()
            m = self.arc_mid[a]
            if m < 0:
                out.append(self.arc_orig[a])
                continue
            t, h = self.arc_tail[a], self.arc_head[a]
            stack.append(self.arc_index[(m, h)])
            stack.append(self.arc_index[(t, m)])

    def unpack_path(self, arcs: list[int]) -> PathDescription:
        edges: list[int] = []
        for a in arcs:
            self.unpack_arc(a, edges)
        return PathDescription(edges, sum(self.net.lengths[e] for e in edges))

    def query_path(self, s: Location, t: Location) -> Optional[PathDescription]:
        """Unpacked path of the vertex part of the shortest s-t path (partial end edges excluded)."""
        res = self.query(s, t)
        if not res.reachable:
            return None
        if res.same_edge:
            return PathDescription([], res.distance)
        path = self.unpack_path(res.up_arcs + res.down_arcs)
        return PathDescription(path.edges, res.distance)

    # ---- serialization ------------------------------------------------------

    def dump(self, f) -> None:
        f.write(f"{MAGIC}\n{self.kind} {self.n} {len(self.arc_tail)}\n")
        f.write(" ".join(map(str, self.rank)) + "\n")
        for a in range(len(self.arc_tail)):
            f.write(f"{self.arc_tail[a]} {self.arc_head[a]} {self.arc_len[a]} "
                    f"{self.arc_mid[a]} {self.arc_orig[a]} {int(self.arc_live[a])}\n")
        self._dump_extra(f)

    def _dump_extra(self, f) -> None:
        pass

    def dumps(self) -> str:
        buf = io.StringIO()
        self.dump(buf)
        return buf.getvalue()


def _adjacency(first, other, lens, arcs):
    return [list(zip(other[first[v]:first[v + 1]], lens[first[v]:first[v + 1]], arcs[first[v]:first[v + 1]]))
            for v in range(len(first) - 1)]


def _flatten(adj):
    first = [0]
    heads, arcs = [], []
    for lst in adj:
        lst.sort()
        for _, h, a in lst:
            heads.append(h)
            arcs.append(a)
        first.append(len(heads))
    return first, heads, arcs


def load_hierarchy(net: RoadNetwork, f) -> Hierarchy:
    """Inverse of :meth:`Hierarchy.dump`; returns a CH or CCH object."""
    if f.readline().strip() != MAGIC:
        raise ValueError("not a hierarchy file (bad magic header)")
    kind, n, m = f.readline().split()
    n, m = int(n), int(m)
    if n != net.num_vertices:
        raise ValueError(f"hierarchy has {n} vertices, network has {net.num_vertices}")
    rank = [int(x) for x in f.readline().split()]
    arcs, live = [], []
    for _ in range(m):
        t, h, ln, mid, orig, lv = (int(x) for x in f.readline().split())
        arcs.append((t, h, ln, mid, orig))
        live.append(bool(lv))
    if kind == "ch":
        h = Hierarchy(net, rank, arcs)
    elif kind == "cch":
        from .cch import CustomizableHierarchy
        parent = [int(x) for x in f.readline().split()]
        h = CustomizableHierarchy._from_parts(net, rank, arcs, parent)
        state = f.readline().split()
        if state and state[0] == "customized" and state[1] != "none":
            h.customized = state[1]
            metric = f.readline().split()
            if metric and metric[0] == "metric":
                h.net = net.with_lengths([int(x) for x in metric[1:]])
    else:
        raise ValueError(f"unknown hierarchy kind {kind!r}")
    if not all(live):
        h.arc_live = live
        h._build_csr()
    return h


# ---- preprocessing ------------------------------------------------------------

WITNESS_SETTLE_LIMIT = 50


class _Contractor:
    def __init__(self, net: RoadNetwork, witness: bool):
        n = net.num_vertices
        self.n = n
        self.witness = witness
        # out[v][w] = (length, middle, original edge); only uncontracted vertices
        self.out: list[dict[int, tuple[int, int, int]]] = [dict() for _ in range(n)]
        self.inc: list[dict[int, tuple[int, int, int]]] = [dict() for _ in range(n)]
        for e, (u, v, w) in enumerate(net.edges()):
            if u == v:
                continue
            old = self.out[u].get(v)
            if old is None or w < old[0]:
                self.out[u][v] = (w, -1, e)
                self.inc[v][u] = (w, -1, e)
        self.contracted = bytearray(n)
        self.contracted_neighbors = [0] * n

    def witness_distance(self, source: int, avoid: int, targets: dict[int, int], limit_key: int) -> dict[int, int]:
        """Bounded local Dijkstra from ``source`` avoiding ``avoid``; tentative labels for ``targets``."""
        dist = {source: 0}
        queue = [(0, source)]
        settled = 0
        remaining = len(targets)
        done = set()
        out = self.out
        while queue and remaining and settled < WITNESS_SETTLE_LIMIT:
            d, v = heappop(queue)
            if v in done:
                continue
            if d > limit_key:
                break
            done.add(v)
            settled += 1
            if v in targets:
                remaining -= 1
            for w, (ln, _, _) in out[v].items():
                if w == avoid:
                    continue
                nd = d + ln
                if nd < dist.get(w, INF):
                    dist[w] = nd
                    heappush(queue, (nd, w))
        return dist

    def shortcuts(self, v: int) -> list[tuple[int, int, int]]:
        """Shortcuts ``(u, w, length)`` needed when contracting ``v``."""
        result = []
        outs = self.out[v]
        for u, (lu, _, _) in self.inc[v].items():
            targets = {w: lu + lw for w, (lw, _, _) in outs.items() if w != u}
            if not targets:
                continue
            if self.witness:
                found = self.witness_distance(u, v, targets, max(targets.values()))
            else:
                found = {}
            for w, via in targets.items():
                if found.get(w, INF) <= via:
                    continue
                existing = self.out[u].get(w)
                if existing is not None and existing[0] <= via:
                    continue
                result.append((u, w, via))
        return result

    def priority(self, v: int) -> int:
        added = len(self.shortcuts(v))
        removed = len(self.out[v]) + len(self.inc[v])
        return added - removed + self.contracted_neighbors[v]

    def contract(self, v: int, arcs: list) -> None:
        for w, (ln, mid, orig) in self.out[v].items():
            arcs.append((v, w, ln, mid, orig))
        for u, (ln, mid, orig) in self.inc[v].items():
            arcs.append((u, v, ln, mid, orig))
        for u, w, ln in self.shortcuts(v):
            self.out[u][w] = (ln, v, -1)
            self.inc[w][u] = (ln, v, -1)
        for w in self.out[v]:
            del self.inc[w][v]
        for u in self.inc[v]:
            del self.out[u][v]
        neighbors = set(self.out[v]) | set(self.inc[v])
        self.out[v] = {}
        self.inc[v] = {}
        self.contracted[v] = 1
        for x in neighbors:
            self.contracted_neighbors[x] += 1
        self._last_neighbors = neighbors


def build_ch(net: RoadNetwork, witness: bool = True, order: Optional[list[int]] = None) -> Hierarchy:
    """Contract vertices by lazy minimum of edge difference plus contracted neighbours.

    Ties go to the lowest vertex id. ``order`` (vertices from lowest to highest
    rank) bypasses the heuristic. With ``witness=False`` every potential
    shortcut is kept (useful only to cross-check witness suppression).
    """
    c = _Contractor(net, witness)
    n = net.num_vertices
    if order is not None:
        if sorted(order) != list(range(n)):
            raise ValueError("order must be a permutation of the vertices")
        rank = [0] * n
        arcs: list = []
        for r, v in enumerate(order):
            c.contract(v, arcs)
            rank[v] = r
        return Hierarchy(net, rank, arcs)
    heap = [(c.priority(v), v) for v in range(n)]
    heap.sort()
    current = {v: p for p, v in heap}
    rank = [0] * n
    arcs: list = []
    next_rank = 0
    while heap:
        p, v = heappop(heap)
        if c.contracted[v] or current[v] != p:
            continue
        fresh = c.priority(v)
        if fresh != p:
            current[v] = fresh
            heappush(heap, (fresh, v))
            if heap[0][1] != v:
                continue
            heappop(heap)
        c.contract(v, arcs)
        rank[v] = next_rank
        next_rank += 1
        for x in c._last_neighbors:
            if not c.contracted[x]:
                px = c.priority(x)
                if px != current[x]:
                    current[x] = px
                    heappush(heap, (px, x))
    return Hierarchy(net, rank, arcs)
