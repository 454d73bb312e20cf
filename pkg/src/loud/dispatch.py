"""Request resolution with bucket-based distances (LOUD) over a CH or CCH.

An engine owns the fleet's dispatching data. The simulation tells it about
vehicle startups, stop completions and shutdowns, and asks it to resolve each
request; the engine then updates its indices after performing the insertion.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from heapq import heappop, heappush
from time import perf_counter_ns
from typing import Callable, Optional

from .buckets import SOURCE, TARGET, BucketIndex
from .ch import Hierarchy
from .fleet import (DRIVING, CostParameters, Fleet, Insertion, InsertionResult, Request, RouteView,
                    better, cost, evaluate, leeway)
from .graph import INF, Location, RoadNetwork

# (vehicle, now) -> (current location, time driven since dep(s_0))
PositionFn = Callable[[int, int], tuple[Location, int]]

__all__ = ["CostParameters", "Decision", "Engine", "EngineOptions", "LoudEngine", "cost"]


@dataclass
class EngineOptions:
    """Switches for the pruning rules; turning them off must not change any decision."""

    elliptic: bool = True
    stopping: bool = True  # special-case stopping criteria and the diversion lower bound


@dataclass
class Decision:
    """Chosen insertion together with the distances needed to perform it."""

    request: Request
    insertion: Optional[Insertion] = None
    to_pickup: int = INF
    pickup_to_next: int = INF
    to_dropoff: int = INF
    dropoff_to_next: int = INF
    current_location: Optional[Location] = None
    timings: list[int] = field(default_factory=lambda: [0, 0, 0, 0])

    @property
    def accepted(self) -> bool:
        return self.insertion is not None


class Engine:
    """Common lifecycle handling; subclasses implement ``resolve`` and the index hooks."""

    name = "engine"

    def __init__(self, net: RoadNetwork, fleet: Fleet, position: Optional[PositionFn] = None):
        self.net = net
        self.fleet = fleet
        self.params = fleet.params
        self.position = position
        self.counters: Counter = Counter()
        self._best: Optional[Insertion] = None
        self._best_dists: tuple = ()
        self._best_loc: Optional[Location] = None

    # ---- vehicle lifecycle --------------------------------------------------

    def start_vehicle(self, v: int, now: int) -> None:
        self.fleet.start_vehicle(v, now)
        self._vehicle_started(v)

    def reach_next_stop(self, v: int) -> None:
        """The vehicle arrived at s_1, which becomes its new s_0."""
        self._before_stop_completed(v)
        self.fleet.complete_stop(v)

    def retire_vehicle(self, v: int) -> None:
        """Service ended while stops remain: finish the route but take no new requests."""
        self._vehicle_leaving(v)
        self.fleet.retiring[v] = True

    def shutdown_vehicle(self, v: int) -> None:
        if not self.fleet.retiring[v]:
            self._vehicle_leaving(v)
        self.fleet.shutdown_vehicle(v)

    def _vehicle_started(self, v: int) -> None:
        pass

    def _before_stop_completed(self, v: int) -> None:
        pass

    def _vehicle_leaving(self, v: int) -> None:
        pass

    # ---- requests -----------------------------------------------------------

    def resolve(self, req: Request, now: int) -> Decision:
        raise NotImplementedError

    def commit(self, dec: Decision, now: int) -> Optional[InsertionResult]:
        """Perform the chosen insertion and bring the engine's indices up to date."""
        ins = dec.insertion
        if ins is None:
            return None
        t0 = perf_counter_ns()
        self._before_insertion(dec, now)
        res = self.fleet.perform_insertion(dec.request, ins, now, dec.to_pickup, dec.pickup_to_next,
                                           dec.to_dropoff, dec.dropoff_to_next, dec.current_location)
        self._after_insertion(dec, res, now)
        dec.timings[3] = (perf_counter_ns() - t0) // 1000
        return res

    def handle(self, req: Request, now: int) -> tuple[Decision, Optional[InsertionResult]]:
        dec = self.resolve(req, now)
        return dec, self.commit(dec, now)

    def _before_insertion(self, dec: Decision, now: int) -> None:
        pass

    def _after_insertion(self, dec: Decision, res: InsertionResult, now: int) -> None:
        pass

    # ---- incumbent ----------------------------------------------------------

    def _reset(self) -> None:
        self._best = None
        self._best_dists = ()
        self._best_loc = None

    def _offer(self, ins: Optional[Insertion], dists: tuple, loc: Optional[Location] = None) -> None:
        if better(ins, self._best):
            self._best = ins
            self._best_dists = dists
            self._best_loc = loc

    def _best_cost(self) -> int:
        return self._best.cost if self._best is not None else INF

    def _decision(self, req: Request, timings: list[int]) -> Decision:
        dec = Decision(req, self._best, timings=timings)
        if self._best is not None:
            dec.to_pickup, dec.pickup_to_next, dec.to_dropoff, dec.dropoff_to_next = self._best_dists
            dec.current_location = self._best_loc
        self._reset()
        return dec

    def _current_position(self, v: int, now: int) -> tuple[Location, int]:
        if self.position is None:
            raise RuntimeError("engine needs a position callback to divert driving vehicles")
        return self.position(v, now)


class LoudEngine(Engine):
    """Exact dispatching with elliptically pruned buckets and last-stop searches."""

    def __init__(self, hierarchy: Hierarchy, fleet: Fleet, options: Optional[EngineOptions] = None,
                 position: Optional[PositionFn] = None):
        super().__init__(hierarchy.net, fleet, position)
        self.h = hierarchy
        self.options = options or EngineOptions()
        self.name = "loud-" + hierarchy.kind
        self.buckets = BucketIndex(hierarchy, elliptic=self.options.elliptic)
        # last stops: forward-start vertex -> {vehicle: offset to that vertex}
        self.last_at: dict[int, dict[int, int]] = {}
        self.last_on_edge: dict[int, set[int]] = {}
        self._indexed_last: dict[int, Location] = {}

    # ---- last-stop index ----------------------------------------------------

    def _index_last(self, v: int, loc: Location) -> None:
        root, offset = self.net.forward_start(loc)
        self.last_at.setdefault(root, {})[v] = offset
        if not loc.is_vertex:
            self.last_on_edge.setdefault(loc.edge, set()).add(v)
        self._indexed_last[v] = loc

    def _unindex_last(self, v: int) -> None:
        loc = self._indexed_last.pop(v, None)
        if loc is None:
            return
        root, _ = self.net.forward_start(loc)
        group = self.last_at[root]
        del group[v]
        if not group:
            del self.last_at[root]
        if not loc.is_vertex:
            edge_group = self.last_on_edge[loc.edge]
            edge_group.discard(v)
            if not edge_group:
                del self.last_on_edge[loc.edge]

    # ---- lifecycle hooks ----------------------------------------------------

    def _vehicle_started(self, v: int) -> None:
        self._index_last(v, self.fleet.value(v, 0, "loc"))

    def _before_stop_completed(self, v: int) -> None:
        f = self.fleet
        self.buckets.remove_entries(SOURCE, f.value(v, 0, "stop"), f.value(v, 0, "loc"))
        self.buckets.remove_entries(TARGET, f.value(v, 1, "stop"), f.value(v, 1, "loc"))

    def _vehicle_leaving(self, v: int) -> None:
        self._unindex_last(v)

    # ---- bucket generation helpers ------------------------------------------

    def _leeway(self, v: int, x: int) -> int:
        """Leeway of the leg from stop index ``x`` to ``x + 1``."""
        f = self.fleet
        return leeway(f.value(v, x, "dep"), f.value(v, x + 1, "arr_max"), f.value(v, x + 1, "dep"),
                      self.params.t_stop)

    def _generate_source(self, v: int, x: int) -> None:
        f = self.fleet
        self.buckets.generate_source_entries(f.value(v, x, "stop"), v, f.value(v, x, "loc"),
                                             f.value(v, x + 1, "loc"), self._leeway(v, x))

    def _generate_target(self, v: int, x: int) -> None:
        f = self.fleet
        self.buckets.generate_target_entries(f.value(v, x, "stop"), v, f.value(v, x, "loc"),
                                             f.value(v, x - 1, "loc"), self._leeway(v, x - 1))

    def _before_insertion(self, dec: Decision, now: int) -> None:
        ins = dec.insertion
        v = ins.vehicle
        if ins.i == 0 and self.fleet.state[v] == DRIVING:
            f = self.fleet
            self.buckets.remove_entries(SOURCE, f.value(v, 0, "stop"), f.value(v, 0, "loc"))

    def _after_insertion(self, dec: Decision, res: InsertionResult, now: int) -> None:
        v = res.vehicle
        n_stops = self.fleet.num_stops(v)
        pi, di = res.pickup_index, res.dropoff_index
        if res.diverted:
            self._generate_source(v, 0)
        if res.pickup_new:
            self._generate_source(v, pi)
            self._generate_target(v, pi)
        if res.dropoff_new:
            self._generate_target(v, di)
            if di < n_stops - 1:
                self._generate_source(v, di)
            else:
                # the previous last stop now has a successor
                self._generate_source(v, self.fleet.stop_index(res.old_last_stop))
        if res.new_last_stop != res.old_last_stop:
            self._unindex_last(v)
            self._index_last(v, self.fleet.value(v, n_stops - 1, "loc"))

    # ---- resolution ---------------------------------------------------------

    def resolve(self, req: Request, now: int) -> Decision:
        t0 = perf_counter_ns()
        self._reset()
        fleet, params = self.fleet, self.params
        p, d = req.pickup, req.dropoff
        direct = self.h.query(p, d).distance
        req.derive(direct, params)
        if direct >= INF:
            self.counters["unreachable"] += 1
            return self._decision(req, [(perf_counter_ns() - t0) // 1000, 0, 0, 0])
        to_p, seen = self.buckets.reverse_bch(p)
        from_p, seen_b = self.buckets.forward_bch(p)
        to_d, seen_c = self.buckets.reverse_bch(d)
        from_d, seen_d = self.buckets.forward_bch(d)
        seen |= seen_b | seen_c | seen_d
        seen |= self._same_edge(p, to_p, from_p)
        seen |= self._same_edge(d, to_d, from_d)
        candidates = sorted(v for v in seen if fleet.in_service(v))
        views = {v: fleet.view(v, now) for v in candidates}
        t1 = perf_counter_ns()

        for v in candidates:
            self._ordinary(req, views[v], to_p, from_p, to_d, from_d)
        t2 = perf_counter_ns()

        exact_to_p: dict[int, tuple[Location, int]] = {}
        for v in candidates:
            self._pickup_before_next(req, views[v], now, to_p, from_p, to_d, from_d, exact_to_p)
        self._pickup_after_last(req, now, views)
        self._dropoff_after_last(req, now, views, to_p, from_p, exact_to_p)
        t3 = perf_counter_ns()
        return self._decision(req, [(t1 - t0) // 1000, (t2 - t1) // 1000, (t3 - t2) // 1000, 0])

    def _same_edge(self, loc: Location, to_loc: dict, from_loc: dict) -> set[int]:
        """Add direct distances along ``loc``'s edge, which CH searches do not see."""
        vehicles = set()
        if loc.is_vertex:
            return vehicles
        fleet = self.fleet
        for sid in fleet.edge_stops.get(loc.edge, ()):
            offset = fleet.stop_location(sid).offset
            if offset <= loc.offset and loc.offset - offset < to_loc.get(sid, INF):
                to_loc[sid] = loc.offset - offset
            if offset >= loc.offset and offset - loc.offset < from_loc.get(sid, INF):
                from_loc[sid] = offset - loc.offset
            vehicles.add(fleet.stop_vehicle[sid])
        return vehicles

    def _ordinary(self, req, view: RouteView, to_p, from_p, to_d, from_d) -> None:
        """Insertions with 0 < i <= j < k, priced entirely by bucket distances."""
        k = view.k
        stops, occ, c = view.stops, view.occ, view.capacity
        params, direct = self.params, req.direct
        for i in range(1, k):
            if occ[i] >= c:
                continue
            dist_to_p = to_p.get(stops[i], INF)
            dist_p_next = from_p.get(stops[i + 1], INF)
            for j in range(i, k):
                if j == i:
                    dists = (dist_to_p, INF, direct, from_d.get(stops[i + 1], INF))
                else:
                    dists = (dist_to_p, dist_p_next, to_d.get(stops[j], INF), from_d.get(stops[j + 1], INF))
                self._offer(evaluate(params, req, view, i, j, *dists), dists)
                if occ[j] >= c:
                    break

    def _pickup_distance(self, req, view: RouteView, now, j, to_p, exact_to_p, dists_rest):
        """Evaluate an insertion with i = 0; diverting a driving vehicle needs its exact distance to p.

        ``dists_rest`` holds (pickup_to_next, to_dropoff, dropoff_to_next).
        """
        v = view.vehicle
        params = self.params
        lower = to_p.get(view.stops[0], INF)
        if not view.driving:
            dists = (lower,) + dists_rest
            self._offer(evaluate(params, req, view, 0, j, *dists), dists)
            return
        if lower >= INF:
            # the bucket distance from s_0 bounds the true one from below
            return
        if self.options.stopping and v not in exact_to_p:
            bound = evaluate(params, req, view, 0, j, lower, *dists_rest)
            if not better(bound, self._best):
                self.counters["diversion_pruned"] += 1
                return
        if v not in exact_to_p:
            loc, elapsed = self._current_position(v, now)
            self.counters["diversion_queries"] += 1
            exact_to_p[v] = (loc, elapsed, self.h.query(loc, req.pickup).distance)
        loc, elapsed, dist = exact_to_p[v]
        if dist >= INF:
            return
        ins = evaluate(params, req, view, 0, j, elapsed + dist, *dists_rest)
        self._offer(ins, (dist,) + dists_rest, loc)

    def _pickup_before_next(self, req, view: RouteView, now, to_p, from_p, to_d, from_d, exact_to_p) -> None:
        k = view.k
        if k == 0 or view.occ[0] >= view.capacity:
            return
        stops, occ, c = view.stops, view.occ, view.capacity
        dist_p_next = from_p.get(stops[1], INF)
        for j in range(0, k):
            if j == 0:
                rest = (INF, req.direct, from_d.get(stops[1], INF))
            else:
                rest = (dist_p_next, to_d.get(stops[j], INF), from_d.get(stops[j + 1], INF))
            self._pickup_distance(req, view, now, j, to_p, exact_to_p, rest)
            if occ[j] >= c:
                break

    def _view(self, views: dict, v: int, now: int) -> RouteView:
        view = views.get(v)
        if view is None:
            view = views[v] = self.fleet.view(v, now)
        return view

    def _pickup_after_last(self, req, now, views) -> None:
        """Insertions (k, k): reverse Dijkstra from p over the last-stop index."""
        params = self.params
        p, direct = req.pickup, req.direct
        t_stop = params.t_stop
        trip_max = req.t_arr_max - req.t_req
        handled = set()

        def try_vehicle(v, dist):
            view = self._view(views, v, now)
            if view.occ[view.k] >= view.capacity:
                return
            dists = (dist, INF, direct, INF)
            self._offer(evaluate(params, req, view, view.k, view.k, *dists), dists)

        for v, loc in self._last_stop_matches(p):
            handled.add(v)
            try_vehicle(v, self.h.query(loc, p).distance)
        def lower_bound(kappa):
            return (kappa + 2 * t_stop + direct
                    + params.gamma_wait * max(kappa + t_stop - params.w_max, 0)
                    + params.gamma_trip * max(kappa + t_stop + direct - trip_max, 0))

        self._last_stop_search(p, lower_bound, try_vehicle, handled)

    def _last_stop_matches(self, loc: Location):
        """Vehicles whose last stop is at ``loc`` or on ``loc``'s edge; handled before the search."""
        out = []
        root, _ = self.net.forward_start(loc)
        if loc.is_vertex:
            for v in sorted(self.last_at.get(loc.vertex, {})):
                if self._indexed_last[v] == loc:
                    out.append((v, loc))
        else:
            for v in sorted(self.last_on_edge.get(loc.edge, ())):
                out.append((v, self._indexed_last[v]))
        return out

    def _dropoff_after_last(self, req, now, views, to_p, from_p, exact_to_p) -> None:
        """Insertions (i, k) with i < k: reverse Dijkstra from d, pickups priced by buckets."""
        params = self.params
        d = req.dropoff
        t_stop = params.t_stop
        trip_max = req.t_arr_max - req.t_req
        handled = set()

        def try_vehicle(v, dist_to_d):
            view = self._view(views, v, now)
            k = view.k
            if k == 0:
                return
            stops, occ, c = view.stops, view.occ, view.capacity
            d_merge = view.locs[k] == d
            if not d_merge and occ[k] >= c:
                return
            # capacity must hold on every stop from i to k - 1
            lowest = k
            while lowest > 0 and occ[lowest - 1] < c:
                lowest -= 1
            for i in range(lowest, k):
                if i == 0:
                    rest = (from_p.get(stops[1], INF), dist_to_d, INF)
                    self._pickup_distance(req, view, now, k, to_p, exact_to_p, rest)
                    continue
                dists = (to_p.get(stops[i], INF), from_p.get(stops[i + 1], INF), dist_to_d, INF)
                self._offer(evaluate(params, req, view, i, k, *dists), dists)

        for v, loc in self._last_stop_matches(d):
            handled.add(v)
            try_vehicle(v, self.h.query(loc, d).distance)
        def lower_bound(kappa):
            return kappa + t_stop + params.gamma_trip * max(t_stop + kappa - trip_max, 0)

        self._last_stop_search(d, lower_bound, try_vehicle, handled)

    def _last_stop_search(self, root: Location, lower_bound, visit, handled: set[int]) -> None:
        """Reverse Dijkstra from ``root`` handing each last stop to ``visit`` in distance order.

        With stopping enabled the search ends once ``lower_bound`` of the settled
        distance exceeds the incumbent's cost (equality continues so ties survive).
        """
        net = self.net
        first, other, lens = net.in_first, net.in_tail, net.in_len
        start, init = net.reverse_start(root)
        dist = [INF] * net.num_vertices
        done = bytearray(net.num_vertices)
        dist[start] = init
        queue = [(init, start)]
        last_at = self.last_at
        stopping = self.options.stopping
        limit, limit_for = INF, None
        settled = 0
        while queue:
            kappa, v = heappop(queue)
            if done[v]:
                continue
            if stopping and self._best is not None:
                if self._best is not limit_for:
                    limit_for = self._best
                    limit = _largest_within(lower_bound, limit_for.cost)
                if kappa > limit:
                    break
            done[v] = 1
            settled += 1
            group = last_at.get(v)
            if group:
                for veh in sorted(group):
                    if veh not in handled:
                        visit(veh, kappa + group[veh])
            for x in range(first[v], first[v + 1]):
                w = other[x]
                nd = kappa + lens[x]
                if nd < dist[w]:
                    dist[w] = nd
                    heappush(queue, (nd, w))
        self.counters["last_stop_searches"] += 1
        self.counters["last_stop_settled"] += settled


def _largest_within(lower_bound, budget: int) -> int:
    """Largest integer x >= 0 with lower_bound(x) <= budget (-1 if none).

    ``lower_bound`` must be nondecreasing with ``lower_bound(x) >= x``, so the answer is at most ``budget``.
    """
    if lower_bound(0) > budget:
        return -1
    lo, hi = 0, max(budget, 0) + 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if lower_bound(mid) <= budget:
            lo = mid
        else:
            hi = mid
    return lo
