"""Exact three-phase insertion: admissible filtering, Dijkstra detours, exact evaluation.

Phase 1 tries every insertion with lower-bound travel times, phase 2 runs four
Dijkstra searches (to p, from p, to d, from d) that stop once every needed
endpoint is settled, and phase 3 evaluates the survivors exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from time import perf_counter_ns
from typing import Optional, Sequence

from .dijkstra import FORWARD, REVERSE, distance, iterate, location_distance
from .dispatch import Decision, Engine, PositionFn
from .fleet import Fleet, Request, RouteView, evaluate
from .graph import INF, Location, RoadNetwork


@dataclass
class HeuristicFilter:
    """Fixed-speed travel-time guess with scaling factors; inexact by design.

    Coordinates are taken to be meters.
    """

    speed_kmh: float = 30.0
    distance_factor: float = 1.3
    speed_factor: float = 1.5

    def units_per_meter(self) -> float:
        # 0.1 s units needed per meter of straight-line distance
        return self.distance_factor / (self.speed_factor * self.speed_kmh / 3.6) * 10


class TravelTimeEstimate:
    """Straight-line distance over the fastest speed found on any edge; never overestimates.

    Without coordinates every estimate is 0, which keeps the filter exact but useless.
    With a ``heuristic`` the speed comes from it instead and estimates may overshoot.
    """

    def __init__(self, net: RoadNetwork, coords: Optional[Sequence[tuple[float, float]]] = None,
                 heuristic: Optional[HeuristicFilter] = None):
        self.net = net
        self.coords = coords
        self.speed = 0.0
        if coords is None:
            return
        if heuristic is not None:
            self.speed = 1.0 / heuristic.units_per_meter()
            return
        for u, v, length in net.edges():
            geo = math.dist(coords[u], coords[v])
            if geo == 0:
                continue
            if length == 0:
                self.speed = math.inf
                return
            self.speed = max(self.speed, geo / length)

    def point(self, loc: Location) -> tuple[float, float]:
        if loc.is_vertex:
            return self.coords[loc.vertex]
        net = self.net
        (x0, y0), (x1, y1) = self.coords[net.tails[loc.edge]], self.coords[net.heads[loc.edge]]
        share = loc.offset / net.lengths[loc.edge]
        return x0 + share * (x1 - x0), y0 + share * (y1 - y0)

    def __call__(self, a: Location, b: Location) -> int:
        if self.coords is None or self.speed == 0 or math.isinf(self.speed):
            return 0
        geo = math.dist(self.point(a), self.point(b))
        # shave a relative epsilon so float rounding cannot overshoot the true time
        return max(0, math.floor(geo / self.speed * (1 - 1e-9)))


class BaselineEngine(Engine):
    """Exhaustive exact dispatcher used as oracle and as benchmark competitor."""

    name = "baseline-exact"

    def __init__(self, net: RoadNetwork, fleet: Fleet, coords=None, position: Optional[PositionFn] = None,
                 filtering: bool = True, heuristic: Optional[HeuristicFilter] = None):
        super().__init__(net, fleet, position)
        if heuristic is not None:
            if coords is None:
                raise ValueError("the heuristic filter needs vertex coordinates")
            self.name = "baseline-heuristic"
        self.estimate = TravelTimeEstimate(net, coords if filtering else None, heuristic)
        self.last_filtered: list[tuple[int, int, int]] = []

    def _candidates(self, now: int) -> list[RouteView]:
        fleet = self.fleet
        return [fleet.view(v, now) for v in range(len(fleet.vehicles)) if fleet.in_service(v)]

    @staticmethod
    def _patterns(view: RouteView):
        """All (i, j) passing the capacity loop."""
        k, occ, c = view.k, view.occ, view.capacity
        for i in range(k + 1):
            if occ[i] >= c:
                continue
            for j in range(i, k + 1):
                yield i, j
                if occ[j] >= c:
                    break

    def resolve(self, req: Request, now: int) -> Decision:
        t0 = perf_counter_ns()
        self._reset()
        net, params, est = self.net, self.params, self.estimate
        p, d = req.pickup, req.dropoff
        direct = distance(net, p, d)
        req.derive(direct, params)
        if direct >= INF:
            return self._decision(req, [(perf_counter_ns() - t0) // 1000, 0, 0, 0])

        # phase 1: filter with admissible estimates
        survivors = []
        positions: dict[int, tuple[Location, int]] = {}
        for view in self._candidates(now):
            v, k, locs = view.vehicle, view.k, view.locs
            start = locs[0]
            elapsed = 0
            if view.driving:
                start, elapsed = positions[v] = self._current_position(v, now)
            for i, j in self._patterns(view):
                lb_pickup = elapsed + est(start, p) if i == 0 else est(locs[i], p)
                lb = (lb_pickup,
                      est(p, locs[i + 1]) if i < k else INF,
                      direct if j == i else est(locs[j], d),
                      est(d, locs[j + 1]) if j < k else INF)
                if evaluate(params, req, view, i, j, *lb) is not None:
                    survivors.append((view, i, j))
        self.last_filtered = [(view.vehicle, i, j) for view, i, j in survivors]
        t1 = perf_counter_ns()

        # phase 2: four searches, each stopping when its endpoints are settled
        need = {"to_p": set(), "from_p": set(), "to_d": set(), "from_d": set()}
        for view, i, j in survivors:
            k, locs = view.k, view.locs
            start = positions[view.vehicle][0] if i == 0 and view.driving else locs[i]
            if not view.pickup_merges(i, p):
                need["to_p"].add(net.forward_start(start)[0])
                if j > i:
                    need["from_p"].add(net.reverse_start(locs[i + 1])[0])
            if j > i and not view.dropoff_merges(i, j, d):
                need["to_d"].add(net.forward_start(locs[j])[0])
            if j < k and not view.dropoff_merges(i, j, d):
                need["from_d"].add(net.reverse_start(locs[j + 1])[0])
        labels = {
            "to_p": self._search(p, REVERSE, need["to_p"]),
            "from_p": self._search(p, FORWARD, need["from_p"]),
            "to_d": self._search(d, REVERSE, need["to_d"]),
            "from_d": self._search(d, FORWARD, need["from_d"]),
        }
        t2 = perf_counter_ns()

        # phase 3: exact evaluation
        for view, i, j in survivors:
            k, locs = view.k, view.locs
            loc = None
            elapsed = 0
            start = locs[i]
            if i == 0 and view.driving:
                loc, elapsed = positions[view.vehicle]
                start = loc
            to_pickup = location_distance(net, labels["to_p"], start, p, REVERSE)
            dists = (to_pickup,
                     location_distance(net, labels["from_p"], p, locs[i + 1], FORWARD) if i < k and j > i else INF,
                     direct if j == i else location_distance(net, labels["to_d"], locs[j], d, REVERSE),
                     location_distance(net, labels["from_d"], d, locs[j + 1], FORWARD) if j < k else INF)
            ins = evaluate(params, req, view, i, j, elapsed + to_pickup if to_pickup < INF else INF, *dists[1:])
            self._offer(ins, dists, loc)
        t3 = perf_counter_ns()
        return self._decision(req, [(t1 - t0) // 1000, (t2 - t1) // 1000, (t3 - t2) // 1000, 0])

    def _search(self, root: Location, direction: str, targets: set[int]) -> list[int]:
        labels = [INF] * self.net.num_vertices
        if not targets:
            return labels
        remaining = set(targets)
        for v, _ in iterate(self.net, root, direction, labels):
            remaining.discard(v)
            if not remaining:
                break
        self.counters["dijkstra_searches"] += 1
        return labels
