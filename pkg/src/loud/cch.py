"""Customizable contraction hierarchies.

The vertex order comes from recursive nested dissection: each part is split
at the smallest BFS layer (from one of a few distant start vertices) that
keeps both sides at least ``balance`` of the part. Contracting in that order without witness searches
gives a chordal supergraph whose topology is metric-independent; a metric is
installed afterwards by customization.
"""
from __future__ import annotations

from collections import deque
from typing import Sequence

from .ch import Hierarchy, QueryResult, SearchSpace
from .graph import INF, Location, RoadNetwork

LEAF_SIZE = 2
SEPARATOR_STARTS = 4


def _undirected(net: RoadNetwork) -> list[set[int]]:
    adj = [set() for _ in range(net.num_vertices)]
    for u, v, _ in net.edges():
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
    return adj


def _components(vertices: Sequence[int], adj: list[set[int]], inside: set[int]) -> list[list[int]]:
    seen = set()
    comps = []
    for s in sorted(vertices):
        if s in seen:
            continue
        seen.add(s)
        comp = [s]
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if w in inside and w not in seen:
                    seen.add(w)
                    comp.append(w)
                    queue.append(w)
        comps.append(comp)
    return comps


def _bfs_layers(start: int, adj: list[set[int]], inside: set[int]) -> list[list[int]]:
    layers = [[start]]
    seen = {start}
    while True:
        nxt = []
        for v in layers[-1]:
            for w in sorted(adj[v]):
                if w in inside and w not in seen:
                    seen.add(w)
                    nxt.append(w)
        if not nxt:
            return layers
        layers.append(nxt)


def _farthest(sources: list[int], adj: list[set[int]], inside: set[int]) -> int:
    """Last vertex reached by a BFS started from all ``sources`` at once."""
    seen = set(sources)
    frontier = list(sources)
    last = frontier[-1]
    while frontier:
        nxt = []
        for v in frontier:
            for w in sorted(adj[v]):
                if w in inside and w not in seen:
                    seen.add(w)
                    nxt.append(w)
        if nxt:
            last = nxt[-1]
        frontier = nxt
    return last


def _layer_split(start, adj, inside, size, balance):
    """Best BFS-layer cut from ``start``: ((separator size, imbalance), low, high, separator) or None."""
    layers = _bfs_layers(start, adj, inside)
    best = None
    before = 0
    for i in range(1, len(layers) - 1):
        before += len(layers[i - 1])
        after = size - before - len(layers[i])
        if min(before, after) < balance * size:
            continue
        # layer vertices with no neighbour further out add nothing to the cut
        nxt = set(layers[i + 1])
        sep = [v for v in layers[i] if any(w in nxt for w in adj[v])]
        low_size = before + len(layers[i]) - len(sep)
        score = (len(sep), abs(low_size - after))
        if best is None or score < best[0]:
            best = (score, i, sep)
    if best is None:
        return None
    score, i, sep = best
    cut = set(sep)
    low = [v for layer in layers[:i + 1] for v in layer if v not in cut]
    high = [v for layer in layers[i + 1:] for v in layer]
    return score, low, high, sorted(sep)


def _separator(part: list[int], adj: list[set[int]], balance: float) -> tuple[list[int], list[int], list[int]] | None:
    """Split a connected part into (side, other side, separator), or None if no layer qualifies.

    BFS layerings from a few mutually distant start vertices are tried and the
    smallest balanced cut wins.
    """
    inside = set(part)
    size = len(part)
    starts = [_farthest([min(part)], adj, inside)]
    for _ in range(SEPARATOR_STARTS - 1):
        far = _farthest(starts, adj, inside)
        if far in starts:
            break
        starts.append(far)
    best = None
    for start in starts:
        found = _layer_split(start, adj, inside, size, balance)
        if found is not None and (best is None or found[0] < best[0]):
            best = found
    if best is None:
        return None
    return best[1], best[2], best[3]


def compute_order(net: RoadNetwork, balance: float = 0.3) -> list[int]:
    """Nested dissection order; returns ``rank`` (rank[v] = position of v)."""
    adj = _undirected(net)
    order: list[int] = []
    # explicit stack of (vertices, emit_only) to avoid deep recursion
    stack: list[tuple[list[int], bool]] = []
    for comp in reversed(_components(range(net.num_vertices), adj, set(range(net.num_vertices)))):
        stack.append((comp, False))
    while stack:
        part, emit = stack.pop()
        if emit:
            order.extend(part)
            continue
        if len(part) <= LEAF_SIZE:
            order.extend(sorted(part))
            continue
        split = _separator(part, adj, balance)
        if split is None:
            # no balanced layer (e.g. a star); peel off the highest-degree vertex
            inside = set(part)
            hub = max(part, key=lambda v: (sum(1 for w in adj[v] if w in inside), -v))
            rest = [v for v in part if v != hub]
            stack.append(([hub], True))
            for comp in reversed(_components(rest, adj, set(rest))):
                stack.append((comp, False))
            continue
        low, high, sep = split
        stack.append((sep, True))
        for side in (high, low):
            for comp in reversed(_components(side, adj, set(side))):
                stack.append((comp, False))
    rank = [0] * net.num_vertices
    for r, v in enumerate(order):
        rank[v] = r
    return rank


class CustomizableHierarchy(Hierarchy):
    """Metric-independent chordal hierarchy plus the current customization."""

    kind = "cch"

    @classmethod
    def build(cls, net: RoadNetwork, rank: list[int] | None = None, balance: float = 0.3) -> "CustomizableHierarchy":
        if rank is None:
            rank = compute_order(net, balance)
        n = net.num_vertices
        if sorted(rank) != list(range(n)):
            raise ValueError("rank is not a permutation of the vertices")
        adj = _undirected(net)
        order = sorted(range(n), key=rank.__getitem__)
        upper = [set() for _ in range(n)]
        for v in range(n):
            for w in adj[v]:
                if rank[w] > rank[v]:
                    upper[v].add(w)
        parent = [-1] * n
        for v in order:
            ups = upper[v]
            if not ups:
                continue
            p = min(ups, key=rank.__getitem__)
            parent[v] = p
            # eliminating v makes its upper neighbourhood a clique; the lowest
            # neighbour inherits the others (enough to make the fill-in chordal)
            upper[p].update(u for u in ups if u != p)
        arcs = []
        for v in range(n):
            for w in sorted(upper[v]):
                arcs.append((v, w, INF, -1, -1))
                arcs.append((w, v, INF, -1, -1))
        h = cls(net, rank, arcs)
        h.parent = parent
        h._finish_topology()
        return h

    @classmethod
    def _from_parts(cls, net, rank, arcs, parent):
        h = cls(net, rank, arcs)
        h.parent = parent
        h._finish_topology()
        return h

    def _finish_topology(self) -> None:
        n = self.n
        rank = self.rank
        ups = [[] for _ in range(n)]
        for a, (t, h) in enumerate(zip(self.arc_tail, self.arc_head)):
            if rank[t] < rank[h]:
                ups[t].append(h)
        for lst in ups:
            lst.sort(key=rank.__getitem__)
        self.upper = ups
        self.order = sorted(range(n), key=rank.__getitem__)
        self.customized = None
        self._base_net = self.net

    def _dump_extra(self, f) -> None:
        f.write(" ".join(map(str, self.parent)) + "\n")
        f.write(f"customized {self.customized or 'none'}\n")
        if self.customized is not None and self.net is not self._base_net:
            f.write("metric " + " ".join(map(str, self.net.lengths)) + "\n")

    @property
    def num_edges(self) -> int:
        """Undirected edges of the chordal graph."""
        return len(self.arc_tail) // 2

    @property
    def num_live_arcs(self) -> int:
        return self.num_arcs

    # ---- customization ------------------------------------------------------

    def _install_metric(self, lengths: Sequence[int]) -> None:
        net = self.net
        if len(lengths) != net.num_edges:
            raise ValueError(f"metric has {len(lengths)} lengths, network has {net.num_edges} edges")
        if list(lengths) != net.lengths:
            self.net = net = net.with_lengths(lengths)
        m = len(self.arc_tail)
        self.arc_len = [INF] * m
        self.arc_mid = [-1] * m
        self.arc_orig = [-1] * m
        self.arc_live = [True] * m
        idx = self.arc_index
        for e, (u, v) in enumerate(zip(net.tails, net.heads)):
            if u == v:
                continue
            a = idx[(u, v)]
            if lengths[e] < self.arc_len[a]:
                self.arc_len[a] = lengths[e]
                self.arc_orig[a] = e
        self.metric = list(lengths)

    def customize_basic(self, lengths: Sequence[int] | None = None) -> None:
        """Lower-triangle relaxation, bottom-up."""
        if lengths is None:
            lengths = self.net.lengths
        self._install_metric(lengths)
        self._lower_triangles()
        self._build_csr()
        self.customized = "basic"

    def _lower_triangles(self) -> None:
        idx = self.arc_index
        ln, mid = self.arc_len, self.arc_mid
        for v in self.order:
            ups = self.upper[v]
            if len(ups) < 2:
                continue
            down = [ln[idx[(u, v)]] for u in ups]
            up = [ln[idx[(v, u)]] for u in ups]
            for i, u in enumerate(ups):
                du = down[i]
                uu = up[i]
                for j in range(i + 1, len(ups)):
                    w = ups[j]
                    a = idx[(u, w)]
                    c = du + up[j]
                    if c < ln[a]:
                        ln[a] = c
                        mid[a] = v
                    a = idx[(w, u)]
                    c = down[j] + uu
                    if c < ln[a]:
                        ln[a] = c
                        mid[a] = v

    def customize_perfect(self, lengths: Sequence[int] | None = None) -> None:
        """Basic customization, then a top-down pass to exact arc lengths and removal of unneeded arcs."""
        if lengths is None:
            lengths = self.net.lengths
        self._install_metric(lengths)
        self._lower_triangles()
        idx = self.arc_index
        ln, mid = self.arc_len, self.arc_mid
        for v in reversed(self.order):
            ups = self.upper[v]
            for i, y in enumerate(ups):
                a_vy, a_yv = idx[(v, y)], idx[(y, v)]
                for z in ups:
                    if z == y:
                        continue
                    c = ln[idx[(v, z)]] + ln[idx[(z, y)]]
                    if c < ln[a_vy]:
                        ln[a_vy] = c
                        mid[a_vy] = z
                    c = ln[idx[(y, z)]] + ln[idx[(z, v)]]
                    if c < ln[a_yv]:
                        ln[a_yv] = c
                        mid[a_yv] = z
        live = self.arc_live
        for v in self.order:
            ups = self.upper[v]
            for y in ups:
                for a, other in ((idx[(v, y)], True), (idx[(y, v)], False)):
                    if ln[a] >= INF:
                        live[a] = False
                        continue
                    for z in ups:
                        if z == y:
                            continue
                        if other:
                            first, second = ln[idx[(v, z)]], ln[idx[(z, y)]]
                        else:
                            first, second = ln[idx[(y, z)]], ln[idx[(z, v)]]
                        # both parts strictly shorter keeps removal well-founded with zero lengths
                        if first + second <= ln[a] and first < ln[a] and second < ln[a]:
                            live[a] = False
                            break
        self._build_csr()
        self.customized = "perfect"

    def load_metric(self, path) -> None:
        with open(path) as f:
            values = [int(x) for x in f.read().split()]
        self.customize_basic(values)

    def _require_customized(self) -> None:
        if self.customized is None:
            raise RuntimeError("hierarchy has not been customized")

    def unpack_arc(self, a: int, out: list[int]) -> None:
        self._require_customized()
        stack = [a]
        steps = 0
        while stack:
            a = stack.pop()
            steps += 1
            if steps > 8 * len(self.arc_tail) + 16:
                raise RuntimeError("arc unpacking does not terminate (zero-length cycle?)")
            m = self.arc_mid[a]
            if m < 0:
                out.append(self.arc_orig[a])
                continue
            t, h = self.arc_tail[a], self.arc_head[a]
            stack.append(self.arc_index[(m, h)])
            stack.append(self.arc_index[(t, m)])

    # ---- elimination-tree searches ------------------------------------------

    def elimination_tree_search(self, source: Location, bound: int = INF, forward: bool = True) -> SearchSpace:
        """Walk the ancestors of the root vertex in rank order; vertices with label > bound are not expanded."""
        self._require_customized()
        if forward:
            root, init = self.net.forward_start(source)
            adj = self.fwd_adj
        else:
            root, init = self.net.reverse_start(source)
            adj = self.bwd_adj
        dist = {root: init}
        parent = {root: -1}
        settled = []
        par = self.parent
        v = root
        while v >= 0:
            d = dist.get(v, INF)
            if d <= bound and d < INF:
                settled.append(v)
                for w, ln, a in adj[v]:
                    nd = d + ln
                    if nd < dist.get(w, INF):
                        dist[w] = nd
                        parent[w] = a
            v = par[v]
        return SearchSpace(settled, {v: dist[v] for v in settled}, {v: parent[v] for v in settled})

    def upward_space(self, loc: Location, bound: int, forward: bool) -> SearchSpace:
        return self.elimination_tree_search(loc, bound, forward)

    def bounded_search(self, loc: Location, bound: int, forward: bool) -> SearchSpace:
        return self.elimination_tree_search(loc, bound, forward)

    def bch_search(self, loc: Location, forward: bool) -> SearchSpace:
        return self.elimination_tree_search(loc, INF, forward)

    def etree_query(self, s: Location, t: Location) -> QueryResult:
        """Point-to-point query along both ancestor chains with pruning at the tentative distance."""
        self._require_customized()
        net = self.net
        same = net.same_edge_distance(s, t)
        sroot, sinit = net.forward_start(s)
        troot, tinit = net.reverse_start(t)
        df, db = self._dist_f, self._dist_b
        touched = [sroot, troot]
        df[sroot] = sinit
        db[troot] = tinit
        pf, pb = {sroot: -1}, {troot: -1}
        fadj, badj = self.fwd_adj, self.bwd_adj
        rank, par = self.rank, self.parent
        best, meet = same, -1
        u, v = sroot, troot
        while u >= 0 or v >= 0:
            if v < 0 or (u >= 0 and rank[u] < rank[v]):
                x, fwd_side, bwd_side = u, True, False
                u = par[u]
            elif u < 0 or rank[v] < rank[u]:
                x, fwd_side, bwd_side = v, False, True
                v = par[v]
            else:
                x, fwd_side, bwd_side = u, True, True
                u = par[u]
                v = par[v]
                if df[x] < INF and db[x] < INF and df[x] + db[x] < best:
                    best, meet = df[x] + db[x], x
            if fwd_side:
                d = df[x]
                if d < best:
                    for w, ln, a in fadj[x]:
                        nd = d + ln
                        if nd < df[w]:
                            if df[w] == INF:
                                touched.append(w)
                            df[w] = nd
                            pf[w] = a
            if bwd_side:
                d = db[x]
                if d < best:
                    for w, ln, a in badj[x]:
                        nd = d + ln
                        if nd < db[w]:
                            if db[w] == INF:
                                touched.append(w)
                            db[w] = nd
                            pb[w] = a
        for x in touched:
            df[x] = INF
            db[x] = INF
        if meet < 0:
            return QueryResult(best, -1, [], [], same_edge=best < INF)
        return QueryResult(best, meet, self._chain(pf, meet), self._chain(pb, meet)[::-1])

    def query(self, s: Location, t: Location) -> QueryResult:
        self._require_customized()
        return super().query(s, t)


def write_metric(lengths: Sequence[int], path) -> None:
    with open(path, "w") as f:
        f.write("\n".join(map(str, lengths)) + "\n")
