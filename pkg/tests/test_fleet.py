import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loud.blocks import BlockArrays
from loud.fleet import (IDLE, CostParameters, Fleet, Request, StopIdPool, Vehicle, better, cost, evaluate,
                        feasibility_check, leeway)
from loud.graph import INF, Location, line_network
from oracles import Distances, linear_feasible, simulate_insertion
from conftest import random_route

V = Location.at_vertex
PARAMS = CostParameters()


def _fleet(net, starts, capacity=4, t_max=10**7):
    vehicles = [Vehicle(i, V(s), capacity, 0, t_max) for i, s in enumerate(starts)]
    f = Fleet(vehicles, PARAMS)
    for v in range(len(vehicles)):
        f.start_vehicle(v, 0)
    return f


def _insert(f, dist, req, v, i, j, now=0):
    """Evaluate and perform with oracle distances."""
    req.derive(dist(req.pickup, req.dropoff), PARAMS)
    view = f.view(v, now)
    locs, k = view.locs, view.k
    dists = (dist(locs[i], req.pickup),
             dist(req.pickup, locs[i + 1]) if i < k else INF,
             dist(req.pickup, req.dropoff) if j == i else dist(locs[j], req.dropoff),
             dist(req.dropoff, locs[j + 1]) if j < k else INF)
    ins = evaluate(PARAMS, req, view, i, j, *dists)
    assert ins is not None
    return ins, f.perform_insertion(req, ins, now, *dists)


def test_cost_formula_examples():
    req = Request(0, V(0), V(1), 0, t_dep_max=1000, t_arr_max=5000)
    assert cost(PARAMS, 500, 1000, 5000, req) == 500
    assert cost(PARAMS, 500, 1100, 5000, req) == 600
    assert cost(PARAMS, 500, 1000, 5050, req) == 1000


def test_request_derivation():
    req = Request(0, V(0), V(4), 100)
    req.derive(400, PARAMS)
    assert req.t_dep_max == 100 + 3000
    assert req.t_arr_max == 100 + 680 + 1200
    assert req.t_arr_max >= req.t_dep_max - PARAMS.w_max


def test_parameter_validation():
    with pytest.raises(ValueError):
        CostParameters(t_stop=-1)
    with pytest.raises(ValueError):
        Vehicle(0, V(0), 0, 0, 10)
    with pytest.raises(ValueError):
        Vehicle(0, V(0), 1, 10, 5)


def test_feasibility_examples():
    dep, t_stop = [0, 1000], 600
    # pickup at vertex 2 between stops at 0 and 4 on the line
    delta_p = 200 + 600 + 200 - 400
    assert delta_p == 600
    assert feasibility_check(dep, [INF, 1500], INF, t_stop, 0, 0, delta_p, 0)
    assert not feasibility_check(dep, [INF, 900], INF, t_stop, 0, 0, delta_p, 0)
    assert feasibility_check(dep, [INF, 1500], INF, t_stop, 0, 0, 0, 0)
    with pytest.raises(IndexError):
        feasibility_check(dep, [INF, 1500], INF, t_stop, 1, 1, 0, 0)


def test_zero_detour_feasible_on_feasible_route():
    t_stop = 600
    dep = [0, 1000, 2000, 2500]
    arr_max = [INF, 400, 1400, 1900]
    for i in range(3):
        for j in range(i, 3):
            assert feasibility_check(dep, arr_max, 2500, t_stop, i, j, 0, 0)


def test_leeway_examples():
    assert leeway(0, INF, 1000, 600) == INF
    assert leeway(0, 1500, 1000, 600) == 900
    # zero slack: the leeway is the leg itself
    assert leeway(0, 0 + 400 + 600, 1000, 600) == 400
    # a deadline tighter than the current plan still leaves at least the leg
    assert leeway(0, 700, 1000, 600) == 400


def test_insert_into_idle_route():
    net = line_network(5)
    dist = Distances(net)
    f = _fleet(net, [0])
    ins, res = _insert(f, dist, Request(0, V(1), V(3), 0), 0, 0, 0)
    assert f.locations(0) == [V(0), V(1), V(3)]
    assert f.occupancies(0) == [0, 1, 0]
    assert f.deps(0) == [0, 700, 1500]
    assert ins.cost == 100 + 600 + 200 + 600
    assert res.pickup_new and res.dropoff_new and not res.diverted
    f.check_route(0)


def test_line_insertion_schedule():
    net = line_network(5)
    dist = Distances(net)
    f = _fleet(net, [0])
    # a late request time gives the first rider enough slack for the detour
    _insert(f, dist, Request(0, V(4), V(3), 2000), 0, 0, 0)
    assert f.deps(0) == [0, 1000, 1700]
    ins, res = _insert(f, dist, Request(1, V(2), V(4), 0), 0, 0, 1)
    assert f.locations(0) == [V(0), V(2), V(4), V(3)]
    assert f.deps(0) == [0, 800, 1600, 2300]
    assert ins.delta_p == 600 and ins.delta_d == 0
    assert not res.dropoff_new
    assert f.occupancies(0) == [0, 1, 1, 0]
    f.check_route(0)


def test_stop_ids_are_recycled_lifo():
    net = line_network(5)
    dist = Distances(net)
    f = _fleet(net, [0])
    _insert(f, dist, Request(0, V(1), V(2), 0), 0, 0, 0)
    freed = f.complete_stop(0)
    ins, res = _insert(f, dist, Request(1, V(3), V(4), 0), 0, 1, 1)
    assert res.pickup_stop == freed
    pool = StopIdPool()
    a, b = pool.take(), pool.take()
    pool.give(a)
    pool.give(b)
    assert pool.take() == b and pool.take() == a and pool.take() == 2


def test_complete_on_idle_vehicle_fails():
    f = _fleet(line_network(3), [0])
    with pytest.raises(RuntimeError):
        f.complete_stop(0)


def test_capacity_refused():
    net = line_network(5)
    dist = Distances(net)
    f = _fleet(net, [0], capacity=1)
    _insert(f, dist, Request(0, V(1), V(4), 0), 0, 0, 0)
    req = Request(1, V(2), V(3), 0)
    req.derive(100, PARAMS)
    view = f.view(0, 0)
    assert evaluate(PARAMS, req, view, 1, 1, 100, 200, 100, 100) is None
    # dropping at the stop where the first rider leaves is allowed
    req2 = Request(2, V(4), V(0), 0)
    req2.derive(400, PARAMS)
    assert evaluate(PARAMS, req2, f.view(0, 0), 2, 2, 0, INF, 400, INF) is not None


def test_better_tie_break():
    from loud.fleet import Insertion
    a = Insertion(1, 0, 1, 1, 0, 0, 10)
    b = Insertion(0, 0, 2, 2, 0, 0, 10)
    assert better(b, a) and not better(a, b) and better(a, None) and not better(None, a)


def test_block_arrays_against_lists():
    rng = random.Random(3)
    blocks = BlockArrays(6, ("x",))
    model = [[] for _ in range(6)]
    counter = 0
    for _ in range(4000):
        b = rng.randrange(6)
        op = rng.random()
        if op < 0.5 or not model[b]:
            idx = rng.randint(0, len(model[b]))
            blocks.insert(b, idx, {"x": counter})
            model[b].insert(idx, counter)
            counter += 1
        elif op < 0.75:
            idx = rng.randrange(len(model[b]))
            blocks.remove(b, idx)
            model[b].pop(idx)
        elif op < 0.95:
            idx = rng.randrange(len(model[b]))
            blocks.remove_unordered(b, idx)
            last = model[b].pop()
            if idx < len(model[b]):
                model[b][idx] = last
        else:
            blocks.clear_block(b)
            model[b] = []
        blocks.check()
        assert blocks.get(b, "x") == model[b]
    assert [blocks.get(b, "x") for b in range(6)] == model


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 10**9), k=st.integers(1, 8))
def test_constant_time_check_equals_linear_simulation(seed, k):
    rng = random.Random(seed)
    t_stop = 600
    dep, arr_max, seeds, t_max = random_route(rng, k, t_stop)
    for _ in range(20):
        i = rng.randrange(k)
        j = rng.randrange(i, k)
        dp, dd = rng.randint(0, 1200), rng.randint(0, 1200)
        assert feasibility_check(dep, arr_max, t_max, t_stop, i, j, dp, dd) == \
            linear_feasible(dep, seeds, t_max, t_stop, i, j, dp, dd)


def _random_step(f, dist, rng, net, now, rid):
    """Insert a random request with the brute-force best (i, j) for a random vehicle."""
    v = rng.randrange(len(f.vehicles))
    p, d = V(rng.randrange(net.num_vertices)), V(rng.randrange(net.num_vertices))
    req = Request(rid, p, d, now)
    req.derive(dist(p, d), PARAMS)
    k = f.num_stops(v) - 1
    best = None
    for i in range(k + 1):
        for j in range(i, k + 1):
            view = f.view(v, now)
            locs = view.locs
            dists = (dist(locs[i], p), dist(p, locs[i + 1]) if i < k else INF,
                     dist(p, d) if j == i else dist(locs[j], d), dist(d, locs[j + 1]) if j < k else INF)
            ins = evaluate(PARAMS, req, view, i, j, *dists)
            ref = simulate_insertion(PARAMS, req, f, v, now, i, j, dist)
            assert (ins is None) == (ref is None)
            if ins is not None:
                assert (ins.cost, ins.dep_pickup, ins.arr_dropoff) == ref
                if best is None or ins.key() < best[0].key():
                    best = (ins, dists)
    if best is not None:
        f.perform_insertion(req, best[0], now, *best[1])
    return v


def test_random_insert_complete_cycles_keep_structure():
    net = line_network(12, 37)
    dist = Distances(net)
    rng = random.Random(7)
    f = _fleet(net, [0, 5, 11], capacity=3)
    for step in range(1000):
        if rng.random() < 0.5:
            _random_step(f, dist, rng, net, 0, step)
        else:
            v = rng.randrange(3)
            if f.num_stops(v) > 1:
                f.complete_stop(v)
        f.routes.check()
        for v in range(3):
            f.check_route(v)
            load = f.occupancies(v)
            assert all(0 <= o <= 3 for o in load)
            deps = f.deps(v)
            locs = f.locations(v)
            for x in range(1, len(deps) - 1):
                assert deps[x + 1] == deps[x] + dist(locs[x], locs[x + 1]) + PARAMS.t_stop
    live = {sid for v in range(3) for sid in f.stops(v)}
    assert live == set(f.stop_vehicle)


def test_passenger_count_is_boardings_minus_alightings():
    net = line_network(8, 50)
    dist = Distances(net)
    rng = random.Random(11)
    f = _fleet(net, [0, 7], capacity=4)
    for step in range(200):
        _random_step(f, dist, rng, net, 0, step)
        for v in range(2):
            stops = f.stops(v)
            onboard = f.occupancies(v)[0]
            for x, sid in enumerate(stops):
                if x > 0:
                    onboard += len(f.stop_pickups[sid]) - len(f.stop_dropoffs[sid])
                assert onboard == f.occupancies(v)[x]
        if rng.random() < 0.4:
            v = rng.randrange(2)
            if f.num_stops(v) > 1:
                f.complete_stop(v)


def test_shutdown_frees_everything():
    net = line_network(5)
    dist = Distances(net)
    f = _fleet(net, [0])
    _insert(f, dist, Request(0, V(1), V(2), 0), 0, 0, 0)
    freed = f.shutdown_vehicle(0)
    assert len(freed) == 3 and not f.stop_vehicle and f.num_stops(0) == 0
    assert not f.in_service(0)
    assert f.pool.take() == freed[-1]


def test_idle_vehicle_prolongs_last_stop():
    f = _fleet(line_network(3), [1])
    assert f.state[0] == IDLE
    view = f.view(0, 5000)
    assert view.dep_at(0) == 5000 and view.dep[0] == 0


def test_edge_stop_index_tracks_locations():
    net = line_network(4)
    dist = Distances(net)
    f = _fleet(net, [0])
    p = Location.on_edge(2, 30)
    _insert(f, dist, Request(0, p, V(3), 0), 0, 0, 0)
    sid = f.stops(0)[1]
    assert f.edge_stops == {2: {sid}}
    assert f.stop_location(sid) == p
    f.complete_stop(0)
    f.complete_stop(0)
    assert f.edge_stops == {}
