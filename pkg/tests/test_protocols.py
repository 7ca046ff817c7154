"""Leader election, BFS trees and tree aggregation against centralized answers."""

from __future__ import annotations

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypermis.congest import Engine, build_network
from hypermis.hypergraph import BY_SIZE, Hypergraph, class_range, degree_profile, gen_random_linear, is_equitable
from hypermis.protocols import (
    MAX,
    OR,
    SUM,
    aggregate,
    aggregate_vector,
    aggregation_schedule,
    build_bfs_tree,
    converge_broadcast,
    count_ui,
    elect_leader,
)


def largest_cluster(h: Hypergraph):
    """Scope of the largest connected piece of the bipartite network."""
    net = build_network(h)
    g = nx.Graph()
    g.add_nodes_from(net.adjacency)
    g.add_edges_from((x, y) for x, ys in net.adjacency.items() for y in ys)
    comp = max(nx.connected_components(g), key=len)
    return net, net.restrict(comp), g.subgraph(comp)


def random_cluster(seed: int, n: int = 60):
    return largest_cluster(gen_random_linear(n, 2 * n, (2, 3, 4), seed=seed))


class TestElectLeader:
    def test_path_of_three(self):
        # servers 3, 9, 5 on a path joined by two 2-edges
        h = Hypergraph.mis([3, 5, 9], [{3, 9}, {9, 5}])
        net = build_network(h)
        eng = Engine(net)
        leaders = elect_leader(eng, net.restrict(net.adjacency))
        # client ids are larger than every server id, so the max id is a client;
        # restricted to servers-only ids the max is 9
        assert set(leaders.values()) == {max(net.adjacency)}
        assert eng.rounds <= 2 * len(net.adjacency)

    def test_servers_only_scope(self):
        h = Hypergraph.mis([3, 5, 9], [{3, 9}, {9, 5}])
        net = build_network(h)
        c0, c1 = net.clients
        # scope where clients are renamed away: use the server graph directly
        scope = {3: (9,), 9: (3, 5), 5: (9,)}

        class _FakeNet:
            adjacency_sets = {k: frozenset(v) for k, v in scope.items()}
            n = 3
            hypergraph = h

        eng = Engine(_FakeNet())
        leaders = elect_leader(eng, scope)
        assert leaders == {3: 9, 9: 9, 5: 9}
        assert eng.rounds <= 2 * 3

    def test_single_node(self):
        net = build_network(Hypergraph.mis([4], []))
        eng = Engine(net)
        assert elect_leader(eng, {4: ()}) == {4: 4}
        assert eng.rounds == 0

    @pytest.mark.parametrize("seed", range(5))
    def test_random_cluster_agrees_on_max(self, seed):
        net, scope, _ = random_cluster(seed)
        leaders = elect_leader(Engine(net), scope)
        assert set(leaders.values()) == {max(scope)}

    def test_padding_to_cap(self):
        net, scope, g = random_cluster(1)
        eng = Engine(net)
        cap = nx.diameter(g) + 2
        elect_leader(eng, scope, d_cap=cap)
        assert eng.rounds == cap


class TestBfsTree:
    def test_star_rooted_at_client(self):
        net = build_network(Hypergraph.mis(range(3), [{0, 1, 2}]))
        c = net.client_of(0)
        tree = build_bfs_tree(Engine(net), net.adjacency, c)
        assert tree.depth == {c: 0, 0: 1, 1: 1, 2: 1}

    def test_path_rooted_at_server(self):
        net = build_network(Hypergraph.mis(range(2), [{0, 1}]))
        tree = build_bfs_tree(Engine(net), net.adjacency, 0)
        assert [tree.depth[x] for x in (0, net.client_of(0), 1)] == [0, 1, 2]
        assert tree.parent[1] == net.client_of(0)

    @pytest.mark.parametrize("seed", range(5))
    def test_depths_equal_bfs_distances(self, seed):
        net, scope, g = random_cluster(seed)
        root = min(scope)
        tree = build_bfs_tree(Engine(net), scope, root)
        assert dict(tree.depth) == nx.single_source_shortest_path_length(g, root)
        for v, p in tree.parent.items():
            if p is not None:
                assert v in tree.children[p]
        assert tree.covers(scope)


class TestConvergeBroadcast:
    def setup_method(self):
        self.net, self.scope, self.g = random_cluster(3)
        self.tree = build_bfs_tree(Engine(self.net), self.scope, max(self.scope))

    def test_count_nodes(self):
        servers = [v for v in self.scope if not self.net.is_client(v)][:5]
        res = converge_broadcast(Engine(self.net), self.tree, {v: 1 for v in servers}, SUM)
        assert set(res.values()) == {5}
        assert res.keys() == set(self.scope)

    def test_max_with_smaller_id_tiebreak(self):
        servers = sorted(v for v in self.scope if not self.net.is_client(v))
        vals = {v: (3, v) for v in servers[2:6]}
        vals[servers[0]] = (1, servers[0])
        res = converge_broadcast(Engine(self.net), self.tree, vals, MAX)
        assert set(res.values()) == {(3, servers[2])}

    def test_or_matches_centralized_equitability(self):
        h = gen_random_linear(80, 160, (2, 3), seed=4)
        net, scope, _ = largest_cluster(h)
        servers = [v for v in scope if not net.is_client(v)]
        prof = degree_profile(h, servers, BY_SIZE)
        n = len(servers)
        for alpha in (0.0, 0.5, 5.0):
            factor = __import__("math").log2(n) ** alpha
            flags = {
                v: 1
                for v in servers
                if any(prof.d(i, v) * n > i * prof.u(i) * factor for i in class_range(BY_SIZE, n))
            }
            tree = build_bfs_tree(Engine(net), scope, max(scope))
            res = converge_broadcast(Engine(net), tree, flags, OR)
            assert set(res.values()) == {int(not is_equitable(prof, 0, alpha))}


class TestCountUi:
    def test_triangle(self):
        net = build_network(Hypergraph.mis(range(3), [{0, 1}, {1, 2}, {0, 2}]))
        tree = build_bfs_tree(Engine(net), net.adjacency, 0)
        contrib = {c: {2: 1} for c in net.clients}
        # floor(log2 3) = 1, so class 2 is asked for explicitly
        assert not class_range(BY_SIZE, 3)
        res = count_ui(Engine(net), tree, contrib, [2])
        assert set(map(lambda d: d[2], res.values())) == {3}

    def test_gmis_range(self):
        net = build_network(Hypergraph.from_edges(range(4), [({0, 1, 2, 3}, 3), ({0, 1}, 1)]))
        tree = build_bfs_tree(Engine(net), net.adjacency, 0)
        contrib = {net.client_of(0): {3: 1}, net.client_of(1): {1: 1}}
        res = count_ui(Engine(net), tree, contrib, range(1, 4))
        assert all(r == {1: 1, 2: 0, 3: 1} for r in res.values())

    @pytest.mark.parametrize("seed", range(4))
    def test_random_instance_recount(self, seed):
        net, scope, _ = random_cluster(seed, 100)
        h = net.hypergraph
        tree = build_bfs_tree(Engine(net), scope, max(scope))
        clients = [c for c in scope if net.is_client(c)]
        contrib = {c: {len(h.edges[net.edge_of(c)]): 1} for c in clients}
        res = count_ui(Engine(net), tree, contrib, range(2, 5))
        expect = {i: sum(1 for c in clients if len(h.edges[net.edge_of(c)]) == i) for i in range(2, 5)}
        assert all(r == expect for r in res.values())


class TestReplayEquivalence:
    """The closed-form schedule reproduces the message-level run exactly."""

    @settings(max_examples=40)
    @given(st.integers(0, 10_000), st.sampled_from([1, 2, 3, 7]))
    def test_schedule_matches_protocol(self, seed, width):
        net, scope, _ = random_cluster(seed, 40)
        tree = build_bfs_tree(Engine(net), scope, max(scope))
        eng = Engine(net, record_messages=True)
        if width == 1:
            converge_broadcast(eng, tree, {v: 1 for v in scope}, SUM)
        else:
            count_ui(eng, tree, {v: {i: 1 for i in range(width)} for v in scope}, range(width))
        assert eng.round_messages == aggregation_schedule(tree, width)

    def test_single_node_tree_costs_nothing(self):
        net = build_network(Hypergraph.mis([0], []))
        tree = build_bfs_tree(Engine(net), {0: ()}, 0)
        assert aggregation_schedule(tree, 3) == []

    @pytest.mark.parametrize("seed", range(3))
    def test_fast_path_matches_recorded(self, seed):
        net, scope, _ = random_cluster(seed, 50)
        tree = build_bfs_tree(Engine(net), scope, max(scope))
        clients = [c for c in scope if net.is_client(c)]
        vals = {v: (v % 5, v) for v in scope}
        contrib = {c: {2 + c % 3: 1} for c in clients}
        out = []
        for record in (False, True):
            eng = Engine(net, record_messages=record)
            a = aggregate(eng, tree, {v: 1 for v in scope}, SUM)
            b = aggregate(eng, tree, vals, MAX)
            c = aggregate_vector(eng, tree, contrib, range(2, 5))
            out.append((a, b, c, eng.round_messages, eng.round_max_bits))
        assert out[0] == out[1]
