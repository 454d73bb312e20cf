import copy

import pytest

from loud.buckets import SOURCE, TARGET, BucketIndex
from loud.ch import build_ch
from loud.dispatch import EngineOptions, LoudEngine, _largest_within
from loud.fleet import DRIVING, CostParameters, Fleet, Request, Vehicle
from loud.graph import INF, Location, line_network
from loud.instance import Instance
from loud.sim import Simulation, make_engine
from oracles import Distances, best_insertion
from conftest import mixed_instance

V = Location.at_vertex
PARAMS = CostParameters()


def _engine(net, starts, options=None, capacity=4, position=None):
    fleet = Fleet([Vehicle(i, V(s), capacity, 0, 10**7) for i, s in enumerate(starts)], PARAMS)
    eng = LoudEngine(build_ch(net), fleet, options, position)
    for v in range(len(starts)):
        eng.start_vehicle(v, 0)
    return eng


def test_single_idle_vehicle_at_pickup():
    net = line_network(5)
    eng = _engine(net, [2])
    dec = eng.resolve(Request(0, V(2), V(4), 0), 0)
    ins = dec.insertion
    assert (ins.vehicle, ins.i, ins.j) == (0, 0, 0)
    assert ins.cost == PARAMS.t_stop + 200 + PARAMS.t_stop


def test_nearer_idle_vehicle_wins():
    net = line_network(9)
    eng = _engine(net, [7, 3])  # 300 and 100 away from vertex 4
    dec = eng.resolve(Request(0, V(4), V(8), 0), 0)
    assert dec.insertion.vehicle == 1
    assert dec.insertion.cost == 100 + 600 + 400 + 600


def test_far_idle_vehicle_found_without_incumbent():
    net = line_network(60, 500)
    eng = _engine(net, [59])
    dec = eng.resolve(Request(0, V(0), V(1), 0), 0)
    assert dec.insertion.vehicle == 0
    # late pickup is soft: cost includes the wait violation
    wait_violation = 59 * 500 + 600 - PARAMS.w_max
    assert dec.insertion.cost == 59 * 500 + 600 + 500 + 600 + max(wait_violation, 0) + \
        PARAMS.gamma_trip * max(59 * 500 + 600 + 500 - (int(PARAMS.alpha * 500) + PARAMS.beta), 0)


def test_unreachable_request_rejected():
    from loud.graph import RoadNetwork
    net = RoadNetwork.from_edges(3, [(0, 1, 10), (1, 0, 10)])
    eng = _engine(net, [0])
    assert not eng.resolve(Request(0, V(0), V(2), 0), 0).accepted


def test_pickup_search_stops_at_zero_frontier():
    net = line_network(9)
    eng = _engine(net, [4])
    eng._dropoff_after_last = lambda *args: None
    dec = eng.resolve(Request(0, V(4), V(6), 0), 0)
    assert dec.insertion.cost == 2 * PARAMS.t_stop + 200
    assert eng.counters["last_stop_settled"] == 1
    eng.options.stopping = False
    eng.counters.clear()
    eng.resolve(Request(1, V(4), V(6), 0), 0)
    assert eng.counters["last_stop_settled"] == 9


def test_largest_within():
    assert _largest_within(lambda x: x + 5, 4) == -1
    assert _largest_within(lambda x: x + 5, 5) == 0
    assert _largest_within(lambda x: 2 * x, 101) == 50
    assert _largest_within(lambda x: x, 7) == 7


def _force(eng, req, v, i, j, now=0):
    """Commit a chosen insertion regardless of cost, with oracle distances."""
    from loud.dispatch import Decision
    from loud.fleet import evaluate
    dist = Distances(eng.net)
    req.derive(dist(req.pickup, req.dropoff), PARAMS)
    view = eng.fleet.view(v, now)
    locs, k = view.locs, view.k
    dists = (dist(locs[i], req.pickup), dist(req.pickup, locs[i + 1]) if i < k else INF,
             dist(req.pickup, req.dropoff) if j == i else dist(locs[j], req.dropoff),
             dist(req.dropoff, locs[j + 1]) if j < k else INF)
    dec = Decision(req, evaluate(PARAMS, req, view, i, j, *dists), *dists)
    return eng.commit(dec, now)


def test_diversion_lower_bound_prunes_query():
    net = line_network(9)
    eng = _engine(net, [0, 4], position=lambda v, now: (V(0), 0))
    _force(eng, Request(0, V(8), V(7), 0), 0, 0, 0)
    _force(eng, Request(1, V(5), V(6), 0), 1, 0, 0)
    eng.fleet.state[0] = DRIVING
    req = Request(2, V(5), V(6), 0)
    dec = eng.resolve(copy.copy(req), 0)
    # merging into vehicle 1's stops costs nothing, so diverting vehicle 0 cannot win
    assert (dec.insertion.vehicle, dec.insertion.cost) == (1, 0)
    assert eng.counters["diversion_queries"] == 0 and eng.counters["diversion_pruned"] >= 1
    eng.options.stopping = False
    dec2 = eng.resolve(copy.copy(req), 0)
    assert eng.counters["diversion_queries"] >= 1
    assert dec.insertion.key() == dec2.insertion.key()


def test_diversion_at_s0_uses_exact_distance():
    net = line_network(9)
    eng = _engine(net, [0], position=lambda v, now: (V(0), 0))
    # a late request time leaves the first rider room for a detour
    eng.handle(Request(0, V(8), V(7), 5000), 0)
    eng.fleet.state[0] = DRIVING
    dec = eng.resolve(Request(1, V(2), V(3), 0), 0)
    # the vehicle is still at s_0, so the bucket bound is already exact
    assert (dec.insertion.i, dec.insertion.j) == (0, 0)
    assert dec.to_pickup == 200 and dec.current_location == V(0)


def test_dropoff_appended_to_idle_vehicle_sources_former_last_stop():
    net = line_network(5)
    eng = _engine(net, [0])
    s0 = eng.fleet.stops(0)[0]
    assert not eng.buckets.store.entries_for_stop(SOURCE, s0)
    eng.handle(Request(0, V(1), V(3), 0), 0)
    assert eng.buckets.store.entries_for_stop(SOURCE, s0)


def test_merging_insertion_touches_no_buckets():
    net = line_network(5)
    eng = _engine(net, [0])
    eng.handle(Request(0, V(2), V(4), 0), 0)
    before = (eng.buckets.store.dump(SOURCE), eng.buckets.store.dump(TARGET), eng.buckets.stats.generations)
    dec, res = eng.handle(Request(1, V(2), V(4), 0), 0)
    assert (dec.insertion.i, dec.insertion.j) == (1, 2)
    assert not res.pickup_new and not res.dropoff_new
    after = (eng.buckets.store.dump(SOURCE), eng.buckets.store.dump(TARGET), eng.buckets.stats.generations)
    assert before == after


def _rebuild(eng) -> BucketIndex:
    fresh = BucketIndex(eng.h, elliptic=eng.options.elliptic)
    live, eng.buckets = eng.buckets, fresh
    f = eng.fleet
    for v in range(len(f.vehicles)):
        k = f.num_stops(v) - 1
        for x in range(k):
            eng._generate_source(v, x)
        for x in range(1, k + 1):
            eng._generate_target(v, x)
    eng.buckets = live
    return fresh


def _checked_run(inst, name, options=None, rebuild=False):
    """Simulate while comparing every decision with exhaustive enumeration."""
    fleet = Fleet(inst.vehicles, inst.params)
    run_inst = Instance(inst.net, inst.vehicles, [copy.copy(r) for r in inst.requests], inst.params, inst.coords)
    eng = make_engine(name, run_inst, fleet, None, options)
    dist = Distances(inst.net)
    resolve, commit = eng.resolve, eng.commit
    problems = []
    result_counts = {"diversions": 0}

    def checked_resolve(req, now):
        dec = resolve(req, now)
        ref = best_insertion(inst.params, req, fleet, now, dist, eng.position)
        got = dec.insertion.key() if dec.insertion else None
        if got != ref:
            problems.append((req.id, got, ref))
        return dec

    def checked_commit(dec, now):
        res = commit(dec, now)
        if res is not None and res.diverted:
            result_counts["diversions"] += 1
        if rebuild and res is not None:
            fresh = _rebuild(eng)
            for kind in (SOURCE, TARGET):
                have = {(v, s): d for v, s, _, d in eng.buckets.store.all_entries(kind)}
                for v, s, _, d in fresh.store.all_entries(kind):
                    if have.get((v, s)) != d:
                        problems.append(("bucket", kind, v, s, d, have.get((v, s))))
        return res

    eng.resolve, eng.commit = checked_resolve, checked_commit
    result = Simulation(run_inst, eng).run()
    result.counters.update(result_counts)
    return result, problems


@pytest.mark.parametrize("seed", [1, 2, 3])
@pytest.mark.parametrize("name", ["loud-ch", "loud-cch", "baseline-exact"])
def test_decisions_equal_exhaustive_enumeration(seed, name):
    inst = mixed_instance(seed)
    result, problems = _checked_run(inst, name)
    assert problems == []
    assert sum(1 for d in result.decisions if d[1] >= 0) > 0


@pytest.mark.parametrize("seed", [1, 3])
@pytest.mark.parametrize("name", ["loud-ch", "loud-cch", "baseline-exact"])
def test_diversions_equal_exhaustive_enumeration(seed, name):
    # short stops make diverting a driving vehicle worthwhile
    params = CostParameters(t_stop=50, w_max=1500, beta=300)
    result, problems = _checked_run(mixed_instance(seed, params=params), name)
    assert problems == []
    assert result.counters["diversions"] > 0


def test_tight_capacity_and_soft_windows():
    params = CostParameters(t_stop=300, w_max=1500, beta=600)
    inst = mixed_instance(9, vehicles=4, requests=90, capacity=1, params=params)
    for name in ("loud-ch", "baseline-exact"):
        _, problems = _checked_run(inst, name)
        assert problems == []


def test_live_buckets_contain_rebuilt_entries():
    inst = mixed_instance(4, requests=50)
    _, problems = _checked_run(inst, "loud-ch", rebuild=True)
    assert problems == []


@pytest.mark.parametrize("options", [EngineOptions(elliptic=False), EngineOptions(stopping=False),
                                     EngineOptions(elliptic=False, stopping=False)])
def test_switching_pruning_off_keeps_decisions(options):
    inst = mixed_instance(5)
    ref, _ = _checked_run(inst, "loud-ch")
    other, problems = _checked_run(inst, "loud-ch", options)
    assert problems == []
    assert other.decisions == ref.decisions


def test_candidates_cover_every_feasible_ordinary_insertion():
    """Vehicles with a feasible 0 < i <= j < k insertion are always seen by the bucket scans."""
    from loud.fleet import evaluate
    inst = mixed_instance(6, requests=70)
    fleet = Fleet(inst.vehicles, inst.params)
    run_inst = Instance(inst.net, inst.vehicles, [copy.copy(r) for r in inst.requests], inst.params, inst.coords)
    eng = make_engine("loud-ch", run_inst, fleet)
    dist = Distances(inst.net)
    missing = []
    checked = 0
    original = eng.buckets.reverse_bch

    def resolve(req, now, _orig=eng.resolve):
        seen = set()
        eng.buckets.reverse_bch = lambda loc: _record(original(loc), seen)
        fwd = eng.buckets.forward_bch
        eng.buckets.forward_bch = lambda loc: _record(fwd(loc), seen)
        dec = _orig(req, now)
        eng.buckets.reverse_bch, eng.buckets.forward_bch = original, fwd
        nonlocal checked
        for v in range(len(fleet.vehicles)):
            if not fleet.in_service(v):
                continue
            view = fleet.view(v, now)
            locs, k = view.locs, view.k
            for i in range(1, k):
                for j in range(i, k):
                    dists = (dist(locs[i], req.pickup), dist(req.pickup, locs[i + 1]),
                             dist(req.pickup, req.dropoff) if j == i else dist(locs[j], req.dropoff),
                             dist(req.dropoff, locs[j + 1]))
                    checked += 1
                    if evaluate(inst.params, req, view, i, j, *dists) is not None and v not in seen:
                        missing.append((req.id, v, i, j))
        return dec

    eng.resolve = resolve
    Simulation(run_inst, eng).run()
    assert checked > 0
    assert missing == []


def _record(result, seen):
    seen |= result[1]
    return result
