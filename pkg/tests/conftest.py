import os
import random
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from loud.fleet import CostParameters, Request, Vehicle  # noqa: E402
from loud.graph import INF, Location, RoadNetwork, grid_network, line_network  # noqa: E402
from loud.instance import Instance, generate_instance, random_road_network  # noqa: E402


@pytest.fixture
def l5():
    return line_network(5, 100)


def random_graph(n, m, seed, max_len=50, zero_share=0.0) -> RoadNetwork:
    """Random digraph, not necessarily connected; may contain parallel edges."""
    rng = random.Random(seed)
    edges = []
    for _ in range(m):
        u, v = rng.randrange(n), rng.randrange(n)
        if u == v:
            continue
        w = 0 if rng.random() < zero_share else rng.randint(1, max_len)
        edges.append((u, v, w))
    return RoadNetwork.from_edges(n, edges)


def random_location(net, rng, edge_share=0.4) -> Location:
    if net.num_edges and rng.random() < edge_share:
        e = rng.randrange(net.num_edges)
        if net.lengths[e] >= 2:
            return net.normalize(Location.on_edge(e, rng.randrange(1, net.lengths[e])))
    return Location.at_vertex(rng.randrange(net.num_vertices))


def mixed_instance(seed, n=120, vehicles=6, requests=80, horizon=20000, edge_share=0.3,
                   params=None, capacity=3) -> Instance:
    """Small instance whose stops and start points are partly inside edges."""
    net, coords = random_road_network(n, seed)
    rng = random.Random(seed)
    vs = [Vehicle(v, random_location(net, rng, edge_share), capacity, rng.choice([0, 0, 2000]),
                  horizon + 20000 + rng.choice([0, -15000, 0])) for v in range(vehicles)]
    times = sorted(rng.randrange(horizon) for _ in range(requests))
    reqs = []
    for r, t in enumerate(times):
        p = random_location(net, rng, edge_share)
        d = random_location(net, rng, edge_share)
        while d == p:
            d = random_location(net, rng, edge_share)
        reqs.append(Request(r, p, d, t))
    return Instance(net, vs, reqs, params or CostParameters(), coords)


def random_route(rng, k, t_stop):
    """Feasible route schedule: departures, derived arrival deadlines, stop deadlines, t_max."""
    legs = [rng.randint(0, 500) for _ in range(k)]
    dep = [rng.randint(0, 1000)]
    for leg in legs:
        dep.append(dep[-1] + leg + t_stop)
    # deadlines that the current plan meets, some unconstrained
    seeds = [INF] + [INF if rng.random() < 0.3 else dep[x] - t_stop + rng.randint(0, 800) for x in range(1, k + 1)]
    arr_max = [0] * (k + 1)
    arr_max[k] = seeds[k]
    for x in range(k - 1, -1, -1):
        nxt = arr_max[x + 1]
        arr_max[x] = min(seeds[x], nxt - legs[x] - t_stop if nxt < INF else INF)
    t_max = dep[k] + rng.randint(0, 1500)
    return dep, arr_max, seeds, t_max


@pytest.fixture(scope="session")
def grid4():
    rng = random.Random(4)
    return grid_network(4, 4, lambda u, v: rng.randint(1, 20))


@pytest.fixture(scope="session")
def small_instance():
    return generate_instance(5, 150, 8, 120, 30000)


# ---- acceptance report ------------------------------------------------------

_criteria: list[tuple[int, str, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    detail = dict(item.user_properties).get("detail", "")
    _criteria.append((marker.args[0], "PASS" if rep.passed else "FAIL", item.name, detail))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, verdict, name, detail in sorted(_criteria):
        terminalreporter.write_line(f"{verdict} criterion {number} ({name}): {detail}")
