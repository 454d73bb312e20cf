import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loud.dijkstra import FORWARD, REVERSE, dijkstra, distance, floyd_warshall, retrieve_path
from loud.graph import (INF, Location, NetworkFormatError, RoadNetwork, format_network, line_network,
                        parse_network)
from oracles import Distances, all_pairs
from conftest import random_graph, random_location


def test_line_graph_counts(l5):
    assert l5.num_vertices == 5
    assert l5.num_edges == 8


def test_large_header_parses_without_overflow():
    net = parse_network("v 73689 e 1\n0 73688 159039\n")
    assert net.num_vertices == 73689
    # the header with the full edge count is accepted up to the edge-count check
    with pytest.raises(NetworkFormatError, match="159039"):
        parse_network("v 73689 e 159039\n0 1 5\n")


@pytest.mark.parametrize("text, fragment", [
    ("v 2 e 1\n0 1 -1\n", "negative"),
    ("v 2 e 1\n0 2 5\n", "dangling"),
    ("v 2 e 1\n0 1\n", "expected"),
    ("v 2 e 1\n0 1 x\n", "non-integer"),
    ("0 1 5\n", "header"),
    ("", "missing header"),
    ("v 2 e 2\n0 1 5\n", "announces"),
])
def test_parse_errors(text, fragment):
    with pytest.raises(NetworkFormatError, match=fragment):
        parse_network(text)


def test_parse_error_carries_line_number():
    with pytest.raises(NetworkFormatError) as info:
        parse_network("# comment\nv 2 e 2\n0 1 5\n1 0 -3\n")
    assert info.value.line == 4


def test_negative_length_rejected_in_constructor():
    with pytest.raises(ValueError):
        RoadNetwork.from_edges(2, [(0, 1, -1)])


def test_format_round_trip_and_comments():
    net = random_graph(30, 90, seed=3)
    again = parse_network("# header follows\n" + format_network(net).replace("\n", "  # c\n", 1))
    assert (again.tails, again.heads, again.lengths) == (net.tails, net.heads, net.lengths)


def test_adjacency_reconstructs_edges():
    net = random_graph(40, 150, seed=8)
    out = sorted((v, w, l, e) for v in range(net.num_vertices) for w, l, e in net.out_edges(v))
    inc = sorted((u, v, l, e) for v in range(net.num_vertices) for u, l, e in net.in_edges(v))
    edges = sorted((u, v, l, e) for e, (u, v, l) in enumerate(net.edges()))
    assert out == edges == inc


def test_dijkstra_line_examples(l5):
    res = dijkstra(l5, Location.at_vertex(0))
    assert res.dist[4] == 400
    # edge 0 is (0, 1); halfway is offset 50
    res = dijkstra(l5, Location.on_edge(0, 50))
    assert res.dist[1] == 50


def test_dijkstra_grid_equals_floyd_warshall(grid4):
    fw = floyd_warshall(grid4)
    for s in range(grid4.num_vertices):
        fwd = dijkstra(grid4, Location.at_vertex(s), FORWARD).dist
        rev = dijkstra(grid4, Location.at_vertex(s), REVERSE).dist
        assert fwd == fw[s]
        assert rev == [fw[u][s] for u in range(grid4.num_vertices)]


def test_retrieve_path_line(l5):
    res = dijkstra(l5, Location.at_vertex(0))
    path = retrieve_path(l5, res, 4)
    assert [(l5.tails[e], l5.heads[e]) for e in path.edges] == [(0, 1), (1, 2), (2, 3), (3, 4)]
    assert path.length == 400
    same = retrieve_path(l5, res, 0)
    assert same.edges == [] and same.length == 0


def test_retrieve_path_unsettled_is_absent(l5):
    res = dijkstra(l5, Location.at_vertex(0), stop_rule=lambda key: key > 150)
    assert retrieve_path(l5, res, 3) is None


def test_retrieve_path_grid(grid4):
    fw = floyd_warshall(grid4)
    for s in (0, 5, 15):
        res = dijkstra(grid4, Location.at_vertex(s))
        for t in range(grid4.num_vertices):
            path = retrieve_path(grid4, res, t)
            assert path.length == fw[s][t] == sum(grid4.lengths[e] for e in path.edges)
            for a, b in zip(path.edges, path.edges[1:]):
                assert grid4.heads[a] == grid4.tails[b]


def _check_path(net, path, s, t):
    assert sum(net.lengths[e] for e in path.edges) == path.length
    if path.edges:
        assert net.tails[path.edges[0]] == s and net.heads[path.edges[-1]] == t
    for a, b in zip(path.edges, path.edges[1:]):
        assert net.heads[a] == net.tails[b]


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 60), density=st.floats(0.5, 4.0), seed=st.integers(0, 10**6),
       zero=st.sampled_from([0.0, 0.2]))
def test_labels_equal_brute_force(n, density, seed, zero):
    net = random_graph(n, int(n * density), seed, zero_share=zero)
    m = all_pairs(net)
    s = seed % n
    for direction in (FORWARD, REVERSE):
        res = dijkstra(net, Location.at_vertex(s), direction)
        for v in res.settled:
            exact = m[s, v] if direction == FORWARD else m[v, s]
            assert res.dist[v] == exact
        assert len(res.settled) == sum(1 for v in range(n)
                                       if (m[s, v] if direction == FORWARD else m[v, s]) < INF)
    res = dijkstra(net, Location.at_vertex(s))
    for v in res.settled:
        _check_path(net, retrieve_path(net, res, v), s, v)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), bound=st.integers(0, 200))
def test_stop_rule_settles_a_prefix(seed, bound):
    net = random_graph(50, 160, seed)
    full = dijkstra(net, Location.at_vertex(0))
    part = dijkstra(net, Location.at_vertex(0), stop_rule=lambda key: key > bound)
    assert part.settled == full.settled[:len(part.settled)]
    assert all(full.dist[v] <= bound for v in part.settled)
    assert all(full.dist[v] > bound for v in full.settled[len(part.settled):])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_edge_endpoints_degenerate_to_vertex(seed):
    net = random_graph(30, 100, seed)
    rng = random.Random(seed)
    e = rng.randrange(net.num_edges)
    for direction in (FORWARD, REVERSE):
        at_head = dijkstra(net, Location.on_edge(e, net.lengths[e]), direction)
        at_tail = dijkstra(net, Location.on_edge(e, 0), direction)
        head = dijkstra(net, Location.at_vertex(net.heads[e]), direction)
        tail = dijkstra(net, Location.at_vertex(net.tails[e]), direction)
        if direction == FORWARD:
            assert at_head.dist == head.dist
        else:
            assert at_tail.dist == tail.dist


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_location_distance_equals_oracle(seed):
    net = random_graph(40, 140, seed, zero_share=0.1)
    dist = Distances(net)
    rng = random.Random(seed)
    for _ in range(30):
        a, b = random_location(net, rng, 0.6), random_location(net, rng, 0.6)
        assert distance(net, a, b) == dist(a, b)


def test_same_edge_routes_around_when_behind(l5):
    e = 0  # (0, 1), length 100
    ahead = distance(l5, Location.on_edge(e, 20), Location.on_edge(e, 70))
    behind = distance(l5, Location.on_edge(e, 70), Location.on_edge(e, 20))
    assert ahead == 50
    # up to vertex 1, back to vertex 0, then 20 along the edge
    assert behind == 30 + 100 + 20


def test_location_parse_and_normalize(l5):
    assert Location.parse("3") == Location.at_vertex(3)
    assert Location.parse("edge:2:40") == Location.on_edge(2, 40)
    assert Location.parse("2:40") == Location.on_edge(2, 40)
    assert l5.normalize(Location.on_edge(0, 0)) == Location.at_vertex(0)
    assert l5.normalize(Location.on_edge(0, 100)) == Location.at_vertex(1)
    with pytest.raises(ValueError):
        l5.validate_location(Location.on_edge(0, 101))
    with pytest.raises(ValueError):
        l5.validate_location(Location.at_vertex(5))


def test_line_network_shape():
    net = line_network(3, 7)
    assert sorted(net.edges()) == [(0, 1, 7), (1, 0, 7), (1, 2, 7), (2, 1, 7)]
