"""Source and target buckets with elliptic pruning.

A source entry ``(stop, vehicle, d)`` at vertex ``h`` says that ``h`` lies in
the upward search space of the stop at upward distance ``d``. Entries are only
kept where they can matter: ``h`` must be the unique highest vertex on its
shortest paths from the stop (checked against witnesses found during
propagation) and must lie inside the ellipse bounded by the leeway towards the
next stop. Target entries mirror this with the previous stop.
"""
from __future__ import annotations

from dataclasses import dataclass

from .blocks import BlockArrays
from .ch import Hierarchy
from .graph import INF, Location

SOURCE = "source"
TARGET = "target"
ENTRY_FIELDS = ("stop", "vehicle", "dist")


@dataclass
class GenerationStats:
    generations: int = 0
    entries: int = 0
    parent_chain_extra: int = 0
    search_space: int = 0
    removed: int = 0

    def add(self, other: "GenerationStats") -> None:
        self.generations += other.generations
        self.entries += other.entries
        self.parent_chain_extra += other.parent_chain_extra
        self.search_space += other.search_space
        self.removed += other.removed


class BucketStore:
    """Per-vertex entry blocks, one store for source and one for target entries."""

    def __init__(self, num_vertices: int):
        self.n = num_vertices
        self.blocks = {SOURCE: BlockArrays(num_vertices, ENTRY_FIELDS),
                       TARGET: BlockArrays(num_vertices, ENTRY_FIELDS)}

    def insert(self, kind: str, v: int, stop: int, vehicle: int, dist: int) -> None:
        self.blocks[kind].append(v, {"stop": stop, "vehicle": vehicle, "dist": dist})

    def entries(self, kind: str, v: int) -> list[tuple[int, int, int]]:
        b = self.blocks[kind]
        s, e = b.start[v], b.end[v]
        vals = b.values
        return list(zip(vals["stop"][s:e], vals["vehicle"][s:e], vals["dist"][s:e]))

    def remove_at(self, kind: str, v: int, stop: int) -> bool:
        b = self.blocks[kind]
        col = b.values["stop"]
        s, e = b.start[v], b.end[v]
        for p in range(s, e):
            if col[p] == stop:
                b.remove_unordered(v, p - s)
                return True
        return False

    def count(self, kind: str | None = None) -> int:
        kinds = (kind,) if kind else (SOURCE, TARGET)
        return sum(self.blocks[k].end[v] - self.blocks[k].start[v] for k in kinds for v in range(self.n))

    def all_entries(self, kind: str) -> list[tuple[int, int, int, int]]:
        """``(vertex, stop, vehicle, dist)`` for every entry, in vertex order."""
        out = []
        for v in range(self.n):
            for stop, veh, d in self.entries(kind, v):
                out.append((v, stop, veh, d))
        return out

    def entries_for_stop(self, kind: str, stop: int) -> dict[int, int]:
        return {v: d for v, s, _, d in self.all_entries(kind) if s == stop}

    def dump(self, kind: str) -> str:
        """Debug listing, one ``vertex stop vehicle distance`` line per entry."""
        return "".join(f"{v} {s} {veh} {d}\n" for v, s, veh, d in self.all_entries(kind))

    def clear(self) -> None:
        self.blocks = {SOURCE: BlockArrays(self.n, ENTRY_FIELDS),
                       TARGET: BlockArrays(self.n, ENTRY_FIELDS)}


class BucketIndex:
    """Bucket generation, removal and scanning over one hierarchy."""

    def __init__(self, hierarchy: Hierarchy, elliptic: bool = True):
        self.h = hierarchy
        self.store = BucketStore(hierarchy.n)
        self.elliptic = elliptic
        self.stats = GenerationStats()

    # ---- generation ---------------------------------------------------------

    def generate_source_entries(self, stop: int, vehicle: int, loc: Location,
                                next_loc: Location, leeway: int) -> GenerationStats:
        return self._generate(SOURCE, stop, vehicle, loc, next_loc, leeway)

    def generate_target_entries(self, stop: int, vehicle: int, loc: Location,
                                prev_loc: Location, leeway: int) -> GenerationStats:
        return self._generate(TARGET, stop, vehicle, loc, prev_loc, leeway)

    def _generate(self, kind, stop, vehicle, loc, other_loc, leeway) -> GenerationStats:
        h = self.h
        forward = kind == SOURCE
        st = GenerationStats(generations=1)
        if not self.elliptic:
            space = h.upward_space(loc, INF, forward)
            for v in space.settled:
                self.store.insert(kind, v, stop, vehicle, space.dist[v])
            st.entries = st.search_space = len(space.settled)
            self.stats.add(st)
            return st
        space = h.upward_space(loc, leeway, forward)
        other = h.bounded_search(other_loc, leeway, not forward)
        # source: propagate distances to the next stop over upward arcs, witnesses
        # arrive over arcs from higher vertices; target entries swap the roles
        if forward:
            pfirst, pother, plen = h.fwd_first, h.fwd_head, h.fwd_len
            wfirst, wother, wlen = h.bwd_first, h.bwd_tail, h.bwd_len
        else:
            pfirst, pother, plen = h.bwd_first, h.bwd_tail, h.bwd_len
            wfirst, wother, wlen = h.fwd_first, h.fwd_head, h.fwd_len
        label = dict(space.dist)
        towards = dict(other.dist)
        parent = space.parent
        arc_tail, arc_head = h.arc_tail, h.arc_head
        required = set()
        insert = self.store.insert
        for v in reversed(space.settled):
            dv = towards.get(v, INF)
            for x in range(pfirst[v], pfirst[v + 1]):
                w = pother[x]
                dw = towards.get(w, INF)
                if dw < INF and dw + plen[x] < dv:
                    dv = dw + plen[x]
            if dv < INF:
                towards[v] = dv
            lv = label[v]
            mu = INF
            for x in range(wfirst[v], wfirst[v + 1]):
                lu = label.get(wother[x])
                if lu is not None and lu + wlen[x] < mu:
                    mu = lu + wlen[x]
            keep = mu > lv and lv + dv <= leeway
            if mu < lv:
                lv = mu
                label[v] = mu
            if keep or v in required:
                insert(kind, v, stop, vehicle, lv)
                st.entries += 1
                if not keep:
                    st.parent_chain_extra += 1
                a = parent[v]
                if a >= 0:
                    required.add(arc_tail[a] if arc_head[a] == v else arc_head[a])
        st.search_space = len(space.settled)
        self.stats.add(st)
        return st

    # ---- removal ------------------------------------------------------------

    def remove_entries(self, kind: str, stop: int, loc: Location) -> int:
        """Breadth-first walk from the stop's root, expanding only where an entry was found."""
        h = self.h
        if kind == SOURCE:
            root, _ = h.net.forward_start(loc)
            first, other = h.fwd_first, h.fwd_head
        else:
            root, _ = h.net.reverse_start(loc)
            first, other = h.bwd_first, h.bwd_tail
        reached = {root}
        queue = [root]
        removed = 0
        remove_at = self.store.remove_at
        qi = 0
        while qi < len(queue):
            v = queue[qi]
            qi += 1
            if not remove_at(kind, v, stop):
                continue
            removed += 1
            for x in range(first[v], first[v + 1]):
                w = other[x]
                if w not in reached:
                    reached.add(w)
                    queue.append(w)
        self.stats.removed += removed
        return removed

    # ---- scanning -----------------------------------------------------------

    def reverse_bch(self, target: Location) -> tuple[dict[int, int], set[int]]:
        """Distances ``Dist(s, target)`` for stops with source entries in the reverse search space."""
        space = self.h.bch_search(target, forward=False)
        return self._scan(SOURCE, space)

    def forward_bch(self, source: Location) -> tuple[dict[int, int], set[int]]:
        """Distances ``Dist(source, s)`` for stops with target entries in the forward search space."""
        space = self.h.bch_search(source, forward=True)
        return self._scan(TARGET, space)

    def _scan(self, kind, space) -> tuple[dict[int, int], set[int]]:
        b = self.store.blocks[kind]
        start, end = b.start, b.end
        col_s, col_v, col_d = b.values["stop"], b.values["vehicle"], b.values["dist"]
        best: dict[int, int] = {}
        seen: set[int] = set()
        get = best.get
        for v in space.settled:
            s, e = start[v], end[v]
            if s == e:
                continue
            dv = space.dist[v]
            for p in range(s, e):
                d = col_d[p] + dv
                sid = col_s[p]
                if d < get(sid, INF):
                    best[sid] = d
                seen.add(col_v[p])
        return best, seen
