import copy
import random

import pytest

from loud.baseline import BaselineEngine, HeuristicFilter, TravelTimeEstimate
from loud.fleet import CostParameters, Fleet
from loud.graph import Location, line_network
from loud.instance import Instance, random_road_network
from loud.sim import Simulation, simulate
from oracles import Distances, simulate_insertion
from conftest import mixed_instance, random_location


def test_estimate_never_exceeds_distance():
    net, coords = random_road_network(400, 11)
    est = TravelTimeEstimate(net, coords)
    dist = Distances(net)
    rng = random.Random(11)
    tight = 0
    for _ in range(10**4):
        a, b = random_location(net, rng), random_location(net, rng)
        guess, exact = est(a, b), dist(a, b)
        assert 0 <= guess <= exact
        tight += guess * 2 >= exact
    # the bound is not vacuous on a geometric network
    assert tight > 0


def test_estimate_without_coordinates_is_zero():
    net = line_network(4)
    est = TravelTimeEstimate(net)
    assert est(Location.at_vertex(0), Location.at_vertex(3)) == 0


def test_heuristic_speed():
    h = HeuristicFilter()
    # 1.5 * 30 km/h is 12.5 m/s; 1.3 m of road per meter of air takes 0.104 s
    assert h.units_per_meter() == pytest.approx(1.04)
    with pytest.raises(ValueError):
        BaselineEngine(line_network(3), Fleet([], CostParameters()), heuristic=h)


def test_filter_keeps_every_feasible_insertion():
    inst = mixed_instance(7, requests=60)
    fleet = Fleet(inst.vehicles, inst.params)
    run_inst = Instance(inst.net, inst.vehicles, [copy.copy(r) for r in inst.requests], inst.params, inst.coords)
    eng = BaselineEngine(inst.net, fleet, coords=inst.coords)
    dist = Distances(inst.net)
    missing = []
    pruned = 0
    resolve = eng.resolve

    def checked(req, now):
        dec = resolve(req, now)
        nonlocal pruned
        kept = set(eng.last_filtered)
        for v in range(len(fleet.vehicles)):
            if not fleet.in_service(v):
                continue
            k = fleet.num_stops(v) - 1
            for i in range(k + 1):
                for j in range(i, k + 1):
                    if (v, i, j) in kept:
                        continue
                    pruned += 1
                    if simulate_insertion(inst.params, req, fleet, v, now, i, j, dist, eng.position) is not None:
                        missing.append((req.id, v, i, j))
        return dec

    eng.resolve = checked
    Simulation(run_inst, eng).run()
    assert missing == []
    assert pruned > 0


def test_filtering_off_keeps_decisions():
    inst = mixed_instance(8)
    on = simulate(inst, "baseline-exact")
    off = simulate(inst, "baseline-exact", use_coords=False)
    assert on.decisions == off.decisions
    assert on.stats_csv() == off.stats_csv()


def test_heuristic_flag_runs():
    inst = mixed_instance(2, requests=40)
    res = simulate(inst, "baseline-exact", heuristic=True)
    assert res.engine == "baseline-heuristic"
    assert len(res.decisions) == 40
