"""Vehicle routes with per-stop schedule values and the shared insertion evaluator.

Each route ``<s_0, ..., s_k>`` keeps, per stop, the scheduled departure
``dep``, the latest arrival ``arr_max`` that keeps every later pickup and
dropoff on time, and the occupancy ``occ`` after departing. With these the
time constraints of any insertion are checked in constant time.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .blocks import BlockArrays
from .graph import INF, Location

OUT, IDLE, DRIVING, STOPPING = 0, 1, 2, 3
STATE_NAMES = {OUT: "out-of-service", IDLE: "idle", DRIVING: "driving", STOPPING: "stopping"}


@dataclass
class CostParameters:
    """Times in 0.1 s units. Defaults: 1 min stop, 5 min wait, alpha 1.7, beta 2 min."""

    t_stop: int = 600
    w_max: int = 3000
    alpha: Fraction = Fraction(17, 10)
    beta: int = 1200
    gamma_wait: int = 1
    gamma_trip: int = 10

    def __post_init__(self):
        self.alpha = Fraction(str(self.alpha)) if not isinstance(self.alpha, Fraction) else self.alpha
        for name in ("t_stop", "w_max", "beta", "gamma_wait", "gamma_trip"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")

    def max_trip_time(self, direct: int) -> int:
        return int(self.alpha * direct) + self.beta


@dataclass
class Vehicle:
    id: int
    location: Location
    capacity: int
    t_min: int
    t_max: int

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError(f"vehicle {self.id}: capacity must be >= 1")
        if self.t_min > self.t_max:
            raise ValueError(f"vehicle {self.id}: service interval ends before it starts")


@dataclass
class Request:
    id: int
    pickup: Location
    dropoff: Location
    t_req: int
    direct: int = -1
    t_dep_max: int = -1
    t_arr_max: int = -1

    def derive(self, direct: int, params: CostParameters) -> None:
        self.direct = direct
        self.t_dep_max = self.t_req + params.w_max
        self.t_arr_max = self.t_req + params.max_trip_time(direct)


@dataclass
class Insertion:
    vehicle: int
    request: int
    i: int
    j: int
    delta_p: int
    delta_d: int
    cost: int
    dep_pickup: int = 0
    arr_dropoff: int = 0

    def key(self):
        return (self.cost, self.vehicle, self.i, self.j)


def better(a: Optional[Insertion], b: Optional[Insertion]) -> bool:
    """True if ``a`` beats ``b`` under (cost, vehicle, i, j) order."""
    if a is None:
        return False
    return b is None or a.key() < b.key()


def cost(params: CostParameters, detour: int, dep_pickup: int, arr_dropoff: int, req: Request) -> int:
    return (detour + params.gamma_wait * max(dep_pickup - req.t_dep_max, 0)
            + params.gamma_trip * max(arr_dropoff - req.t_arr_max, 0))


class RouteView:
    """Snapshot of one vehicle's route for evaluating insertions."""

    __slots__ = ("vehicle", "locs", "stops", "dep", "arr_max", "occ", "capacity", "t_max",
                 "k", "dep0", "stopping", "driving")

    def __init__(self, fleet: "Fleet", v: int, now: int):
        r = fleet.routes
        s, e = r.start[v], r.end[v]
        self.vehicle = v
        self.stops = r.values["stop"][s:e]
        self.locs = r.values["loc"][s:e]
        self.dep = r.values["dep"][s:e]
        self.arr_max = r.values["arr_max"][s:e]
        self.occ = r.values["occ"][s:e]
        veh = fleet.vehicles[v]
        self.capacity = veh.capacity
        self.t_max = veh.t_max
        self.k = e - s - 1
        state = fleet.state[v]
        self.stopping = state == STOPPING
        self.driving = state == DRIVING
        # idle vehicles prolong their last stop up to the present
        self.dep0 = max(self.dep[0], now) if state == IDLE else self.dep[0]

    def dep_at(self, i: int) -> int:
        return self.dep0 if i == 0 else self.dep[i]

    def leg(self, i: int, t_stop: int) -> int:
        """Travel time from s_i to s_{i+1} as scheduled."""
        return self.dep[i + 1] - t_stop - self.dep[i]

    def pickup_merges(self, i: int, p: Location) -> bool:
        return self.locs[i] == p and (i > 0 or self.stopping)

    def dropoff_merges(self, i: int, j: int, d: Location) -> bool:
        return j > i and self.locs[j] == d

    def capacity_ok(self, i: int, j: int, dropoff_merge: bool) -> bool:
        occ, c = self.occ, self.capacity
        for x in range(i, j):
            if occ[x] >= c:
                return False
        return dropoff_merge or occ[j] < c


def evaluate(params: CostParameters, req: Request, view: RouteView, i: int, j: int,
             to_pickup: int, pickup_to_next: int, to_dropoff: int, dropoff_to_next: int) -> Optional[Insertion]:
    """Exact cost of inserting ``req`` into ``view`` with pickup after s_i and dropoff after s_j.

    Distances not needed for the pattern are ignored:

    * ``to_pickup``: departure at s_i to p (for a diverted vehicle this includes the
      time already driven on the current leg); ignored if p merges with s_i.
    * ``pickup_to_next``: p to s_{i+1} (``j > i`` and ``i < k``).
    * ``to_dropoff``: s_j to d for ``j > i``; p to d for ``j == i``.
    * ``dropoff_to_next``: d to s_{j+1} when ``j < k``.

    Returns None when a hard constraint (capacity, service end, or an existing
    rider's deadline) fails or a required distance is infinite.
    """
    k = view.k
    t_stop = params.t_stop
    p_merge = view.pickup_merges(i, req.pickup)
    d_merge = view.dropoff_merges(i, j, req.dropoff)
    if not view.capacity_ok(i, j, d_merge):
        return None
    dep = view.dep
    arr_max = view.arr_max
    dep_i = view.dep_at(i)
    if p_merge:
        dep_p = dep_i
        pickup_time = 0
    else:
        if to_pickup >= INF:
            return None
        dep_p = dep_i + to_pickup + t_stop
        pickup_time = to_pickup + t_stop
    if j == i:
        if to_dropoff >= INF:
            return None
        arr_d = dep_p + to_dropoff
        if i < k:
            if dropoff_to_next >= INF:
                return None
            detour = pickup_time + to_dropoff + t_stop + dropoff_to_next - view.leg(i, t_stop)
            if dep[i + 1] - t_stop + detour > arr_max[i + 1]:
                return None
            if dep[k] + detour > view.t_max:
                return None
        else:
            detour = pickup_time + to_dropoff + t_stop
            if arr_d + t_stop > view.t_max:
                return None
        return Insertion(view.vehicle, req.id, i, j, detour, 0,
                         cost(params, detour, dep_p, arr_d, req), dep_p, arr_d)
    # j > i, so i < k
    if p_merge:
        delta_p = 0
    else:
        if pickup_to_next >= INF:
            return None
        delta_p = to_pickup + t_stop + pickup_to_next - view.leg(i, t_stop)
        if dep[i + 1] - t_stop + delta_p > arr_max[i + 1]:
            return None
    if d_merge:
        delta_d = 0
        arr_d = dep[j] - t_stop + delta_p
    else:
        if to_dropoff >= INF:
            return None
        arr_d = dep[j] + delta_p + to_dropoff
        if j < k:
            if dropoff_to_next >= INF:
                return None
            delta_d = to_dropoff + t_stop + dropoff_to_next - view.leg(j, t_stop)
            if dep[j + 1] - t_stop + delta_p + delta_d > arr_max[j + 1]:
                return None
        else:
            delta_d = to_dropoff + t_stop
    if dep[k] + delta_p + delta_d > view.t_max:
        return None
    detour = delta_p + delta_d
    return Insertion(view.vehicle, req.id, i, j, delta_p, delta_d,
                     cost(params, detour, dep_p, arr_d, req), dep_p, arr_d)


def feasibility_check(dep: list[int], arr_max: list[int], t_max: int, t_stop: int,
                      i: int, j: int, delta_p: int, delta_d: int) -> bool:
    """The three constant-time time-window inequalities for an ordinary insertion 0 < i <= j < k."""
    k = len(dep) - 1
    if not (0 <= i <= j < k):
        raise IndexError(f"insertion ({i}, {j}) outside route with {k + 1} stops")
    return (dep[i + 1] - t_stop + delta_p <= arr_max[i + 1]
            and dep[j + 1] - t_stop + delta_p + delta_d <= arr_max[j + 1]
            and dep[k] + delta_p + delta_d <= t_max)


def leeway(dep_s: int, arr_max_next: int, dep_next: int, t_stop: int) -> int:
    """Detour budget between consecutive stops, never below the leg itself."""
    if arr_max_next >= INF:
        return INF
    leg = dep_next - t_stop - dep_s
    return max(arr_max_next - dep_s - t_stop, leg)


class StopIdPool:
    """LIFO pool of stop ids; fresh ids are one above the largest handed out."""

    def __init__(self):
        self.free: list[int] = []
        self.next_id = 0

    def take(self) -> int:
        if self.free:
            return self.free.pop()
        sid = self.next_id
        self.next_id += 1
        return sid

    def give(self, sid: int) -> None:
        self.free.append(sid)


@dataclass
class InsertionResult:
    """What changed, so the caller can update buckets and events."""

    vehicle: int
    pickup_stop: int
    dropoff_stop: int
    pickup_index: int
    dropoff_index: int
    pickup_new: bool
    dropoff_new: bool
    diverted: bool
    old_last_stop: int
    old_last_location: Location
    new_last_stop: int


ROUTE_FIELDS = ("stop", "loc", "dep", "arr_max", "occ", "seed")


class Fleet:
    """Vehicles, their routes, and the stop bookkeeping (value arrays plus index array)."""

    def __init__(self, vehicles: list[Vehicle], params: CostParameters):
        for idx, v in enumerate(vehicles):
            if v.id != idx:
                raise ValueError(f"vehicle ids must be dense and ordered; got {v.id} at position {idx}")
        self.vehicles = vehicles
        self.params = params
        self.routes = BlockArrays(len(vehicles), ROUTE_FIELDS)
        self.pool = StopIdPool()
        self.state = [OUT] * len(vehicles)
        self.stop_vehicle: dict[int, int] = {}
        self.stop_pickups: dict[int, list[int]] = {}
        self.stop_dropoffs: dict[int, list[int]] = {}
        self.retiring = [False] * len(vehicles)
        # stops located strictly inside an edge, for same-edge distances
        self.edge_stops: dict[int, set[int]] = {}

    # ---- accessors ----------------------------------------------------------

    def num_stops(self, v: int) -> int:
        return self.routes.size(v)

    def stops(self, v: int) -> list[int]:
        return self.routes.get(v, "stop")

    def locations(self, v: int) -> list[Location]:
        return self.routes.get(v, "loc")

    def deps(self, v: int) -> list[int]:
        return self.routes.get(v, "dep")

    def arr_maxes(self, v: int) -> list[int]:
        return self.routes.get(v, "arr_max")

    def occupancies(self, v: int) -> list[int]:
        return self.routes.get(v, "occ")

    def _slot(self, v: int, index: int) -> int:
        return self.routes.start[v] + index

    def value(self, v: int, index: int, name: str):
        return self.routes.values[name][self._slot(v, index)]

    def set_value(self, v: int, index: int, name: str, value) -> None:
        self.routes.values[name][self._slot(v, index)] = value

    def stop_index(self, sid: int) -> int:
        v = self.stop_vehicle[sid]
        r = self.routes
        col = r.values["stop"]
        for p in range(r.start[v], r.end[v]):
            if col[p] == sid:
                return p - r.start[v]
        raise KeyError(sid)

    def last_stop(self, v: int) -> int:
        return self.routes.values["stop"][self.routes.end[v] - 1]

    def view(self, v: int, now: int) -> RouteView:
        return RouteView(self, v, now)

    def in_service(self, v: int) -> bool:
        """Vehicles that may receive new requests."""
        return self.state[v] != OUT and not self.retiring[v]

    def _index_location(self, sid: int, loc: Location) -> None:
        if not loc.is_vertex:
            self.edge_stops.setdefault(loc.edge, set()).add(sid)

    def _unindex_location(self, sid: int, loc: Location) -> None:
        if not loc.is_vertex:
            group = self.edge_stops[loc.edge]
            group.discard(sid)
            if not group:
                del self.edge_stops[loc.edge]

    def set_location(self, v: int, index: int, loc: Location) -> None:
        sid = self.value(v, index, "stop")
        self._unindex_location(sid, self.value(v, index, "loc"))
        self.set_value(v, index, "loc", loc)
        self._index_location(sid, loc)

    def stop_location(self, sid: int) -> Location:
        return self.value(self.stop_vehicle[sid], self.stop_index(sid), "loc")

    # ---- lifecycle ----------------------------------------------------------

    def _new_stop(self, v: int, index: int, loc: Location, dep: int, occ: int, seed: int) -> int:
        sid = self.pool.take()
        self.routes.insert(v, index, {"stop": sid, "loc": loc, "dep": dep, "arr_max": INF, "occ": occ, "seed": seed})
        self.stop_vehicle[sid] = v
        self.stop_pickups[sid] = []
        self.stop_dropoffs[sid] = []
        self._index_location(sid, loc)
        return sid

    def start_vehicle(self, v: int, now: int) -> int:
        """Bring a vehicle into service at its initial location (a one-stop route)."""
        if self.routes.size(v) != 0:
            raise RuntimeError(f"vehicle {v} already has a route")
        veh = self.vehicles[v]
        sid = self._new_stop(v, 0, veh.location, now, 0, INF)
        self.state[v] = IDLE
        return sid

    def shutdown_vehicle(self, v: int) -> list[int]:
        """Take a vehicle out of service; frees the stops still on its route."""
        freed = self.stops(v)
        for sid, loc in zip(freed, self.locations(v)):
            self._unindex_location(sid, loc)
            self._free_stop(sid)
        self.routes.clear_block(v)
        self.state[v] = OUT
        self.retiring[v] = False
        return freed

    def _free_stop(self, sid: int) -> None:
        del self.stop_vehicle[sid]
        del self.stop_pickups[sid]
        del self.stop_dropoffs[sid]
        self.pool.give(sid)

    def complete_stop(self, v: int) -> int:
        """Drop s_0 when the vehicle reaches s_1; returns the freed stop id."""
        if self.routes.size(v) < 2:
            raise RuntimeError(f"vehicle {v} has no next stop to reach")
        sid = self.value(v, 0, "stop")
        self._unindex_location(sid, self.value(v, 0, "loc"))
        self.routes.remove(v, 0)
        self._free_stop(sid)
        return sid

    # ---- insertion ----------------------------------------------------------

    def perform_insertion(self, req: Request, ins: Insertion, now: int,
                          to_pickup: int, pickup_to_next: int, to_dropoff: int, dropoff_to_next: int,
                          current_location: Optional[Location] = None) -> InsertionResult:
        """Apply ``ins`` using the same distances it was evaluated with.

        For a diversion (``i == 0`` while driving) ``to_pickup`` is the distance
        from ``current_location``; s_0 is moved there and departs now.
        """
        v, i, j = ins.vehicle, ins.i, ins.j
        t_stop = self.params.t_stop
        view = RouteView(self, v, now)
        k = view.k
        veh = self.vehicles[v]
        p_merge = view.pickup_merges(i, req.pickup)
        d_merge = view.dropoff_merges(i, j, req.dropoff)
        if not view.capacity_ok(i, j, d_merge):
            raise ValueError(f"insertion ({v}, {i}, {j}) exceeds capacity")
        old_last = view.stops[k]
        old_last_loc = view.locs[k]
        legs = [view.leg(x, t_stop) for x in range(k)]
        diverted = i == 0 and self.state[v] == DRIVING
        if diverted:
            if current_location is None:
                raise ValueError("diversion requires the vehicle's current location")
            self.set_location(v, 0, current_location)
            self.set_value(v, 0, "dep", now)
        elif self.state[v] == IDLE:
            self.set_value(v, 0, "dep", view.dep0)

        # positions and legs in the new route
        if p_merge:
            pi = i
            pickup_sid = view.stops[i]
        else:
            pi = i + 1
            pickup_sid = self._new_stop(v, pi, req.pickup, 0, self.value(v, i, "occ"), INF)
        if j == i:
            di = pi + 1
            dropoff_sid = self._new_stop(v, di, req.dropoff, 0, self.value(v, pi, "occ"), INF)
            new_legs = legs[:i]
            if not p_merge:
                new_legs.append(to_pickup)
            new_legs.append(to_dropoff)
            if i < k:
                new_legs.append(dropoff_to_next)
                new_legs.extend(legs[i + 1:])
        else:
            shift = 0 if p_merge else 1
            if d_merge:
                di = j + shift
                dropoff_sid = view.stops[j]
            else:
                di = j + shift + 1
                dropoff_sid = self._new_stop(v, di, req.dropoff, 0, self.value(v, di - 1, "occ"), INF)
            new_legs = legs[:i]
            if not p_merge:
                new_legs.append(to_pickup)
                new_legs.append(pickup_to_next)
            else:
                new_legs.append(legs[i])
            new_legs.extend(legs[i + 1:j])
            if not d_merge:
                new_legs.append(to_dropoff)
                if j < k:
                    new_legs.append(dropoff_to_next)
                    new_legs.extend(legs[j + 1:])
            else:
                new_legs.extend(legs[j:])
        for x in range(pi, di):
            self.set_value(v, x, "occ", self.value(v, x, "occ") + 1)
        self.stop_pickups[pickup_sid].append(req.id)
        self.stop_dropoffs[dropoff_sid].append(req.id)

        n_stops = self.routes.size(v)
        assert len(new_legs) == n_stops - 1, (new_legs, n_stops)
        self._reschedule(v, new_legs)
        # soft constraints of the new request become hard, but never stricter than its schedule
        dep_p = self.value(v, pi, "dep")
        arr_p = dep_p - t_stop if not (p_merge and pi == 0) else dep_p
        arr_d = self.value(v, di, "dep") - t_stop
        seed_p = max(req.t_dep_max - t_stop, arr_p)
        seed_d = max(req.t_arr_max, arr_d)
        self.set_value(v, pi, "seed", min(self.value(v, pi, "seed"), seed_p))
        self.set_value(v, di, "seed", min(self.value(v, di, "seed"), seed_d))
        self._propagate_arr_max(v, new_legs)
        if dep_p != ins.dep_pickup or arr_d != ins.arr_dropoff:
            raise AssertionError(f"schedule after insertion ({dep_p}, {arr_d}) differs from evaluation "
                                 f"({ins.dep_pickup}, {ins.arr_dropoff})")
        if self.value(v, n_stops - 1, "dep") > veh.t_max:
            raise AssertionError("insertion exceeds the service interval")
        return InsertionResult(v, pickup_sid, dropoff_sid, pi, di, not p_merge, not d_merge or j == i,
                               diverted, old_last, old_last_loc, self.last_stop(v))

    def _reschedule(self, v: int, legs: list[int]) -> None:
        t_stop = self.params.t_stop
        r = self.routes
        s = r.start[v]
        dep = r.values["dep"]
        for x, leg in enumerate(legs):
            dep[s + x + 1] = dep[s + x] + leg + t_stop

    def _propagate_arr_max(self, v: int, legs: list[int]) -> None:
        t_stop = self.params.t_stop
        r = self.routes
        s, e = r.start[v], r.end[v]
        am, seed = r.values["arr_max"], r.values["seed"]
        am[e - 1] = seed[e - 1]
        for p in range(e - 2, s - 1, -1):
            nxt = am[p + 1]
            bound = nxt - legs[p - s] - t_stop if nxt < INF else INF
            am[p] = min(seed[p], bound)

    # ---- validation ---------------------------------------------------------

    def check_route(self, v: int) -> None:
        """Recurrences on dep/arr_max/occ must hold exactly."""
        t_stop = self.params.t_stop
        dep = self.deps(v)
        am = self.arr_maxes(v)
        occ = self.occupancies(v)
        seed = self.routes.get(v, "seed")
        k = len(dep) - 1
        if k < 0:
            return
        legs = [dep[x + 1] - t_stop - dep[x] for x in range(k)]
        if any(leg < 0 for leg in legs):
            raise AssertionError(f"vehicle {v}: negative leg in {dep}")
        if am[k] != seed[k]:
            raise AssertionError(f"vehicle {v}: arr_max of last stop != its seed")
        for x in range(k - 1, -1, -1):
            bound = am[x + 1] - legs[x] - t_stop if am[x + 1] < INF else INF
            if am[x] != min(seed[x], bound):
                raise AssertionError(f"vehicle {v}: arr_max recurrence broken at {x}")
        c = self.vehicles[v].capacity
        load = occ[0]
        for x in range(1, k + 1):
            sid = self.value(v, x, "stop")
            load += len(self.stop_pickups[sid]) - len(self.stop_dropoffs[sid])
            if load != occ[x]:
                raise AssertionError(f"vehicle {v}: occupancy mismatch at stop {x}")
        if any(o < 0 or o > c for o in occ):
            raise AssertionError(f"vehicle {v}: occupancy outside [0, {c}]")
