"""Instance files (vehicles, requests, parameters, coordinates) and a seeded generator."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .fleet import CostParameters, Request, Vehicle
from .graph import Location, NetworkFormatError, RoadNetwork, load_network, write_network

PARAM_KEYS = ("t_stop", "w_max", "alpha", "beta", "gamma_wait", "gamma_trip")


def _records(text: str, width: int, what: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != width:
            raise NetworkFormatError(f"{what}: expected {width} fields, got {len(parts)}", lineno)
        yield lineno, parts


def _int(text: str, lineno: int, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise NetworkFormatError(f"{what}: non-integer field {text!r}", lineno) from None


def _location(text: str, lineno: int, net: Optional[RoadNetwork], what: str) -> Location:
    try:
        loc = Location.parse(text)
    except ValueError:
        raise NetworkFormatError(f"{what}: bad location {text!r}", lineno) from None
    if net is not None:
        try:
            net.validate_location(loc)
        except ValueError as exc:
            raise NetworkFormatError(f"{what}: {exc}", lineno) from None
        loc = net.normalize(loc)
    return loc


def parse_vehicles(text: str, net: Optional[RoadNetwork] = None) -> list[Vehicle]:
    out = []
    for lineno, (vid, loc, cap, t0, t1) in _records(text, 5, "vehicle file"):
        veh_id = _int(vid, lineno, "vehicle file")
        if veh_id != len(out):
            raise NetworkFormatError(f"vehicle file: ids must be 0, 1, 2, ... (got {veh_id})", lineno)
        try:
            out.append(Vehicle(veh_id, _location(loc, lineno, net, "vehicle file"),
                               _int(cap, lineno, "vehicle file"), _int(t0, lineno, "vehicle file"),
                               _int(t1, lineno, "vehicle file")))
        except ValueError as exc:
            if isinstance(exc, NetworkFormatError):
                raise
            raise NetworkFormatError(f"vehicle file: {exc}", lineno) from None
    return out


def parse_requests(text: str, net: Optional[RoadNetwork] = None) -> list[Request]:
    out = []
    for lineno, (rid, p, d, t) in _records(text, 4, "request file"):
        req_id = _int(rid, lineno, "request file")
        if req_id != len(out):
            raise NetworkFormatError(f"request file: ids must be 0, 1, 2, ... (got {req_id})", lineno)
        t_req = _int(t, lineno, "request file")
        if t_req < 0:
            raise NetworkFormatError("request file: negative request time", lineno)
        out.append(Request(req_id, _location(p, lineno, net, "request file"),
                           _location(d, lineno, net, "request file"), t_req))
    for a, b in zip(out, out[1:]):
        if b.t_req < a.t_req:
            raise NetworkFormatError(f"request file: request {b.id} is earlier than request {a.id}")
    return out


def parse_params(text: str) -> CostParameters:
    """``key value`` lines; unknown keys are an error, missing keys keep their defaults."""
    values = {}
    for lineno, (key, value) in _records(text, 2, "parameter file"):
        if key not in PARAM_KEYS:
            raise NetworkFormatError(f"parameter file: unknown key {key!r}", lineno)
        try:
            values[key] = Fraction(value) if key == "alpha" else int(value)
        except ValueError:
            raise NetworkFormatError(f"parameter file: bad value {value!r} for {key}", lineno) from None
    try:
        return CostParameters(**values)
    except ValueError as exc:
        raise NetworkFormatError(f"parameter file: {exc}") from None


def parse_coords(text: str, num_vertices: int) -> list[tuple[float, float]]:
    coords: list[Optional[tuple[float, float]]] = [None] * num_vertices
    for lineno, (v, x, y) in _records(text, 3, "coordinate file"):
        vid = _int(v, lineno, "coordinate file")
        if not 0 <= vid < num_vertices:
            raise NetworkFormatError(f"coordinate file: vertex {vid} out of range", lineno)
        try:
            coords[vid] = (float(x), float(y))
        except ValueError:
            raise NetworkFormatError("coordinate file: non-numeric coordinate", lineno) from None
    missing = [v for v, c in enumerate(coords) if c is None]
    if missing:
        raise NetworkFormatError(f"coordinate file: no coordinates for vertex {missing[0]}")
    return coords  # type: ignore[return-value]


def format_vehicles(vehicles: list[Vehicle]) -> str:
    return "".join(f"{v.id} {v.location} {v.capacity} {v.t_min} {v.t_max}\n" for v in vehicles)


def format_requests(requests: list[Request]) -> str:
    return "".join(f"{r.id} {r.pickup} {r.dropoff} {r.t_req}\n" for r in requests)


def format_params(params: CostParameters) -> str:
    return "".join(f"{k} {getattr(params, k)}\n" for k in PARAM_KEYS)


def format_coords(coords) -> str:
    return "".join(f"{v} {x:.3f} {y:.3f}\n" for v, (x, y) in enumerate(coords))


@dataclass
class Instance:
    net: RoadNetwork
    vehicles: list[Vehicle]
    requests: list[Request]
    params: CostParameters = field(default_factory=CostParameters)
    coords: Optional[list[tuple[float, float]]] = None


def _read(path) -> str:
    with open(path) as f:
        return f.read()


def load_instance(graph, vehicles, requests, params=None, coords=None) -> Instance:
    net = load_network(graph)
    inst = Instance(net, parse_vehicles(_read(vehicles), net), parse_requests(_read(requests), net))
    if params is not None:
        inst.params = parse_params(_read(params))
    if coords is not None:
        inst.coords = parse_coords(_read(coords), net.num_vertices)
    return inst


def write_instance(inst: Instance, directory) -> dict[str, str]:
    os.makedirs(directory, exist_ok=True)
    paths = {name: os.path.join(directory, f"{name}.txt")
             for name in ("graph", "vehicles", "requests", "params")}
    write_network(inst.net, paths["graph"])
    with open(paths["vehicles"], "w") as f:
        f.write(format_vehicles(inst.vehicles))
    with open(paths["requests"], "w") as f:
        f.write(format_requests(inst.requests))
    with open(paths["params"], "w") as f:
        f.write(format_params(inst.params))
    if inst.coords is not None:
        paths["coords"] = os.path.join(directory, "coords.txt")
        with open(paths["coords"], "w") as f:
            f.write(format_coords(inst.coords))
    return paths


# ---- generation -------------------------------------------------------------

def random_road_network(n: int, seed: int, spacing: float = 150.0, extra_fraction: float = 0.4,
                        one_way_fraction: float = 0.15) -> tuple[RoadNetwork, list[tuple[float, float]]]:
    """Planar-ish road network: a Delaunay triangulation thinned to its spanning tree plus extras.

    Spanning-tree edges are two-way, so the result is strongly connected; a share
    of the extra edges is one-way. Travel times use per-edge speeds of 30-60 km/h.
    """
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import minimum_spanning_tree
    from scipy.spatial import Delaunay

    rng = np.random.default_rng(seed)
    if n == 1:
        return RoadNetwork(1, [], [], []), [(0.0, 0.0)]
    side = spacing * math.sqrt(n)
    pts = rng.uniform(0.0, side, size=(n, 2))
    if n == 2:
        pairs = [(0, 1)]
    else:
        tri = Delaunay(pts)
        pairs = set()
        for a, b, c in tri.simplices:
            for u, v in ((a, b), (b, c), (a, c)):
                pairs.add((min(u, v), max(u, v)))
        pairs = sorted(pairs)
    us = np.array([u for u, _ in pairs])
    vs = np.array([v for _, v in pairs])
    lens = np.hypot(*(pts[us] - pts[vs]).T)
    tree = minimum_spanning_tree(coo_matrix((lens + 1e-9, (us, vs)), shape=(n, n))).tocoo()
    in_tree = {(min(a, b), max(a, b)) for a, b in zip(tree.row.tolist(), tree.col.tolist())}
    edges = []
    for (u, v), geo in zip(pairs, lens.tolist()):
        tree_edge = (u, v) in in_tree
        if not tree_edge and rng.random() >= extra_fraction:
            continue
        speed = rng.uniform(30.0, 60.0) / 3.6  # m/s
        units = max(1, int(round(geo / speed * 10)))
        if not tree_edge and rng.random() < one_way_fraction:
            if rng.random() < 0.5:
                u, v = v, u
            edges.append((int(u), int(v), units))
        else:
            edges.append((int(u), int(v), units))
            edges.append((int(v), int(u), units))
    coords = [(float(x), float(y)) for x, y in pts]
    return RoadNetwork.from_edges(n, edges), coords


def generate_instance(seed: int, num_vertices: int, num_vehicles: int, num_requests: int,
                      horizon: int, service_tail: int = 36000,
                      params: Optional[CostParameters] = None, capacity: int = 4) -> Instance:
    """Uniform synthetic demand on a random network.

    Vehicles start at random vertices and serve from 0 to ``horizon + service_tail``
    so requests near the end of the horizon can still be completed.
    """
    net, coords = random_road_network(num_vertices, seed)
    rng = np.random.default_rng(seed + 1)
    vehicles = [Vehicle(v, Location.at_vertex(int(rng.integers(num_vertices))), capacity, 0,
                        horizon + service_tail) for v in range(num_vehicles)]
    times = sorted(int(t) for t in rng.integers(0, max(horizon, 1), size=num_requests))
    requests = []
    for r, t in enumerate(times):
        p = int(rng.integers(num_vertices))
        d = int(rng.integers(num_vertices - 1)) if num_vertices > 1 else 0
        if num_vertices > 1 and d >= p:
            d += 1
        requests.append(Request(r, Location.at_vertex(p), Location.at_vertex(d), t))
    return Instance(net, vehicles, requests, params or CostParameters(), coords)
