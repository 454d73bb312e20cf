"""Discrete-event simulation of a dispatched fleet.

Events are vehicle startups and shutdowns, arrivals at and departures from
stops, and request receipts. Simultaneous events run shutdowns first, then
arrivals, departures, startups, and finally receipts, each group by subject id.
"""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import Optional

from .dijkstra import FORWARD, iterate
from .dispatch import Engine, EngineOptions
from .fleet import DRIVING, IDLE, STOPPING, Fleet
from .graph import INF, Location, RoadNetwork
from .heap import QuadHeap
from .instance import Instance

SHUTDOWN, ARRIVAL, DEPARTURE, STARTUP, RECEIPT = range(5)
EVENT_NAMES = ("shutdown", "arrival", "departure", "startup", "receipt")
ENGINES = ("loud-ch", "loud-cch", "baseline-exact")


class LegTracker:
    """Where a driving vehicle is: along a canonical shortest path of its current leg.

    The path comes from a plain Dijkstra with (distance, vertex) tie-breaking, so
    every engine sees the same positions.
    """

    def __init__(self, net: RoadNetwork, fleet: Fleet):
        self.net = net
        self.fleet = fleet
        self._cache: dict[int, tuple[Location, Location, list[tuple[int, int, int]]]] = {}

    def segments(self, a: Location, b: Location) -> list[tuple[int, int, int]]:
        """``(edge, from_offset, to_offset)`` pieces of a shortest path from ``a`` to ``b``."""
        net = self.net
        direct = net.same_edge_distance(a, b)
        target, tail_label = net.reverse_start(b)
        parent = [-1] * net.num_vertices
        via = INF
        for v, d in iterate(net, a, FORWARD, parent_edge=parent):
            if d + tail_label >= direct:
                break
            if v == target:
                via = d + tail_label
                break
        if direct <= via:
            if direct >= INF:
                raise ValueError(f"no path from {a} to {b}")
            return [(a.edge, a.offset, b.offset)]
        edges = []
        v = target
        while parent[v] >= 0:
            edges.append(parent[v])
            v = net.tails[parent[v]]
        edges.reverse()
        segs = []
        if not a.is_vertex:
            segs.append((a.edge, a.offset, net.lengths[a.edge]))
        segs.extend((e, 0, net.lengths[e]) for e in edges)
        if not b.is_vertex:
            segs.append((b.edge, 0, b.offset))
        return segs

    def _leg(self, v: int):
        f = self.fleet
        a, b = f.value(v, 0, "loc"), f.value(v, 1, "loc")
        cached = self._cache.get(v)
        if cached is None or cached[0] != a or cached[1] != b:
            cached = self._cache[v] = (a, b, self.segments(a, b))
        return cached[2]

    def __call__(self, v: int, now: int) -> tuple[Location, int]:
        """Current location of driving vehicle ``v`` and the time driven since dep(s_0)."""
        f = self.fleet
        if f.state[v] != DRIVING:
            raise ValueError(f"vehicle {v} is not driving")
        elapsed = now - f.value(v, 0, "dep")
        x = elapsed
        for e, start, end in self._leg(v):
            if x < end - start:
                return self.net.normalize(Location.on_edge(e, start + x)), elapsed
            x -= end - start
        return f.value(v, 1, "loc"), elapsed


@dataclass
class RequestRecord:
    request: int
    t_req: int
    vehicle: int = -1
    pickup_departure: int = -1
    dropoff_arrival: int = -1

    @property
    def wait(self) -> int:
        return self.pickup_departure - self.t_req

    @property
    def ride(self) -> int:
        return self.dropoff_arrival - self.pickup_departure

    @property
    def trip(self) -> int:
        return self.dropoff_arrival - self.t_req


@dataclass
class VehicleRecord:
    vehicle: int
    empty: int = 0
    occupied: int = 0
    stopping: int = 0

    @property
    def operation(self) -> int:
        return self.empty + self.occupied + self.stopping


@dataclass
class SimStats:
    requests: list[RequestRecord]
    vehicles: list[VehicleRecord]

    @property
    def rejected(self) -> int:
        return sum(1 for r in self.requests if r.vehicle < 0)

    def summary(self) -> dict[str, object]:
        served = [r for r in self.requests if r.vehicle >= 0]
        out: dict[str, object] = {
            "requests": len(self.requests),
            "accepted": len(served),
            "rejected": self.rejected,
        }
        for name in ("wait", "ride", "trip"):
            values = sorted(getattr(r, name) for r in served)
            out[f"avg_{name}"] = f"{sum(values) / len(values):.3f}" if values else ""
            out[f"p95_{name}"] = values[math.ceil(0.95 * len(values)) - 1] if values else ""
        for name in ("empty", "occupied", "stopping", "operation"):
            out[f"{name}_time"] = sum(getattr(v, name) for v in self.vehicles)
        return out


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


@dataclass
class SimResult:
    engine: str
    stats: SimStats
    decisions: list[tuple[int, int, int, int, int]] = field(default_factory=list)
    timings: list[tuple[int, int, int, int, int]] = field(default_factory=list)
    counters: dict = field(default_factory=dict)

    def stats_csv(self) -> str:
        summary = self.stats.summary()
        return _csv(list(summary), [list(summary.values())])

    def decisions_csv(self) -> str:
        return _csv(["request", "vehicle", "pickup_index", "dropoff_index", "cost"], self.decisions)

    def timings_csv(self) -> str:
        rows = [(r, *phases, sum(phases)) for r, *phases in self.timings]
        return _csv(["request", "phase1_us", "phase2_us", "phase3_us", "phase4_us", "total_us"], rows)

    def requests_csv(self) -> str:
        return _csv(["request", "vehicle", "t_req", "pickup_departure", "dropoff_arrival", "wait", "ride", "trip"],
                    [(r.request, r.vehicle, r.t_req, r.pickup_departure, r.dropoff_arrival,
                      r.wait if r.vehicle >= 0 else "", r.ride if r.vehicle >= 0 else "",
                      r.trip if r.vehicle >= 0 else "") for r in self.stats.requests])

    def vehicles_csv(self) -> str:
        return _csv(["vehicle", "empty", "occupied", "stopping", "operation"],
                    [(v.vehicle, v.empty, v.occupied, v.stopping, v.operation) for v in self.stats.vehicles])

    def mean_request_us(self) -> float:
        if not self.timings:
            return 0.0
        return sum(sum(phases) for _, *phases in self.timings) / len(self.timings)

    def write(self, directory) -> dict[str, str]:
        os.makedirs(directory, exist_ok=True)
        files = {"stats.csv": self.stats_csv(), "decisions.csv": self.decisions_csv(),
                 "timings.csv": self.timings_csv(), "requests.csv": self.requests_csv(),
                 "vehicles.csv": self.vehicles_csv()}
        paths = {}
        for name, text in files.items():
            paths[name] = os.path.join(directory, name)
            with open(paths[name], "w") as f:
                f.write(text)
        return paths


def make_engine(name: str, inst: Instance, fleet: Fleet, hierarchy=None,
                options: Optional[EngineOptions] = None, use_coords: bool = True,
                heuristic: bool = False) -> Engine:
    """Engine by name; a matching hierarchy is built when none is given.

    ``heuristic`` swaps the baseline's admissible filter for the fixed-speed one.
    """
    if name == "baseline-exact":
        from .baseline import BaselineEngine, HeuristicFilter
        return BaselineEngine(inst.net, fleet, coords=inst.coords if use_coords else None,
                              heuristic=HeuristicFilter() if heuristic else None)
    from .dispatch import LoudEngine
    if name == "loud-ch":
        if hierarchy is None:
            from .ch import build_ch
            hierarchy = build_ch(inst.net)
    elif name == "loud-cch":
        if hierarchy is None:
            from .cch import CustomizableHierarchy
            hierarchy = CustomizableHierarchy.build(inst.net)
            hierarchy.customize_perfect()
    else:
        raise ValueError(f"unknown engine {name!r}; expected one of {', '.join(ENGINES)}")
    expected = "ch" if name == "loud-ch" else "cch"
    if hierarchy.kind != expected:
        raise ValueError(f"engine {name} needs a {expected} hierarchy, got {hierarchy.kind}")
    return LoudEngine(hierarchy, fleet, options)


class Simulation:
    """Event loop; engines are called synchronously from the handlers."""

    def __init__(self, inst: Instance, engine: Engine):
        self.inst = inst
        self.engine = engine
        self.fleet = engine.fleet
        self.tracker = LegTracker(inst.net, self.fleet)
        engine.position = self.tracker
        nv, nr = len(inst.vehicles), len(inst.requests)
        self.nv = nv
        self.queue = QuadHeap(3 * nv + nr)
        self.now = 0
        self.stats = SimStats([RequestRecord(r.id, r.t_req) for r in inst.requests],
                              [VehicleRecord(v.id) for v in inst.vehicles])
        self.result = SimResult(engine.name, self.stats)
        self._pickups_seen: set[int] = set()
        self._dropoffs_seen: set[int] = set()
        for v in inst.vehicles:
            if v.t_min == v.t_max:
                continue  # an empty service interval serves nothing
            self._schedule(v.id, STARTUP, v.t_min)
            self._schedule(v.id, SHUTDOWN, v.t_max)
        for r in inst.requests:
            self._schedule(r.id, RECEIPT, r.t_req)

    # ---- queue --------------------------------------------------------------

    def _slot(self, subject: int, kind: int) -> int:
        if kind == RECEIPT:
            return 3 * self.nv + subject
        if kind == STARTUP:
            return subject
        if kind == SHUTDOWN:
            return self.nv + subject
        return 2 * self.nv + subject  # one pending arrival or departure per vehicle

    def _schedule(self, subject: int, kind: int, time: int) -> None:
        if time < self.now:
            raise RuntimeError(f"event scheduled in the past ({time} < {self.now})")
        self.queue.update(self._slot(subject, kind), time * 5 + kind)

    def _decode(self, slot: int) -> int:
        if slot >= 3 * self.nv:
            return slot - 3 * self.nv
        return slot % self.nv

    # ---- handlers -----------------------------------------------------------

    def run(self) -> SimResult:
        queue = self.queue
        while queue:
            slot, key = queue.pop()
            time, kind = divmod(key, 5)
            if time < self.now:
                raise RuntimeError(f"event time went backwards: {time} < {self.now}")
            self.now = time
            subject = self._decode(slot)
            if kind == SHUTDOWN:
                self._shutdown(subject)
            elif kind == ARRIVAL:
                self._arrival(subject)
            elif kind == DEPARTURE:
                self._departure(subject)
            elif kind == STARTUP:
                self._startup(subject)
            else:
                self._receipt(subject)
        self.result.counters = dict(self.engine.counters)
        return self.result

    def _charge_driving(self, v: int, until: int) -> None:
        f = self.fleet
        driven = until - f.value(v, 0, "dep")
        rec = self.stats.vehicles[v]
        if f.value(v, 0, "occ") > 0:
            rec.occupied += driven
        else:
            rec.empty += driven

    def _startup(self, v: int) -> None:
        self.engine.start_vehicle(v, self.now)
        self.fleet.state[v] = IDLE

    def _shutdown(self, v: int) -> None:
        f = self.fleet
        if f.num_stops(v) > 1:
            self.engine.retire_vehicle(v)
            return
        if f.state[v] == STOPPING:
            self.queue.remove(self._slot(v, DEPARTURE))
        self.engine.shutdown_vehicle(v)

    def _arrival(self, v: int) -> None:
        f = self.fleet
        self._charge_driving(v, self.now)
        sid = f.value(v, 1, "stop")
        for r in f.stop_dropoffs[sid]:
            if r in self._dropoffs_seen:
                raise AssertionError(f"request {r} dropped off twice")
            self._dropoffs_seen.add(r)
            self.stats.requests[r].dropoff_arrival = self.now
        self.stats.vehicles[v].stopping += self.fleet.params.t_stop
        self.engine.reach_next_stop(v)
        f.state[v] = STOPPING
        dep = f.value(v, 0, "dep")
        if dep != self.now + f.params.t_stop:
            raise AssertionError(f"vehicle {v} arrived at {self.now}, scheduled departure {dep}")
        self._schedule(v, DEPARTURE, dep)

    def _board(self, v: int) -> None:
        f = self.fleet
        for r in f.stop_pickups[f.value(v, 0, "stop")]:
            if r in self._pickups_seen:
                continue
            self._pickups_seen.add(r)
            self.stats.requests[r].pickup_departure = self.now

    def _departure(self, v: int) -> None:
        f = self.fleet
        self._board(v)
        if f.num_stops(v) > 1:
            self._start_leg(v)
        elif f.retiring[v]:
            self.engine.shutdown_vehicle(v)
        else:
            f.state[v] = IDLE

    def _start_leg(self, v: int) -> None:
        f = self.fleet
        f.state[v] = DRIVING
        self._schedule(v, ARRIVAL, f.value(v, 1, "dep") - f.params.t_stop)

    def _receipt(self, r: int) -> None:
        req = self.inst.requests[r]
        engine, f = self.engine, self.fleet
        dec = engine.resolve(req, self.now)
        ins = dec.insertion
        if ins is not None:
            v = ins.vehicle
            state = f.state[v]
            if ins.i == 0 and state == DRIVING:
                self._charge_driving(v, self.now)
            engine.commit(dec, self.now)
            self.stats.requests[r].vehicle = v
            if state == IDLE:
                self._start_leg(v)
            elif state == DRIVING:
                self._schedule(v, ARRIVAL, f.value(v, 1, "dep") - f.params.t_stop)
            self.result.decisions.append((r, v, ins.i, ins.j, ins.cost))
        else:
            self.result.decisions.append((r, -1, -1, -1, -1))
        self.result.timings.append((r, *dec.timings))


def simulate(inst: Instance, engine: str | Engine = "loud-ch", hierarchy=None,
             options: Optional[EngineOptions] = None, use_coords: bool = True,
             heuristic: bool = False) -> SimResult:
    """Run one engine over a fresh fleet built from ``inst``."""
    import copy
    requests = [copy.copy(r) for r in inst.requests]
    run_inst = Instance(inst.net, inst.vehicles, requests, inst.params, inst.coords)
    if isinstance(engine, Engine):
        eng = engine
    else:
        fleet = Fleet(inst.vehicles, inst.params)
        eng = make_engine(engine, run_inst, fleet, hierarchy, options, use_coords, heuristic)
    return Simulation(run_inst, eng).run()
