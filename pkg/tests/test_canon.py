import random

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphgen import cycle, graphs, near_miss, random_graph, rewired, shuffled
from paxos_mc.canon import canonical_form, certificate, graph_from_certificate, isomorphic_bruteforce
from paxos_mc.graph import GraphState


def to_nx(g: GraphState) -> nx.MultiDiGraph:
    h = nx.MultiDiGraph()
    for v in range(len(g)):
        h.add_node(v, label=g.node_label(v))
    for s, lab, t in g.edges:
        h.add_edge(s, t, label=lab)
    return h


def nx_isomorphic(g1, g2) -> bool:
    return nx.is_isomorphic(
        to_nx(g1),
        to_nx(g2),
        node_match=lambda a, b: a["label"] == b["label"],
        edge_match=lambda a, b: sorted(e["label"] for e in a.values()) == sorted(e["label"] for e in b.values()),
    )


def test_certificate_is_deterministic():
    g = random_graph(random.Random(1))
    assert certificate(g) == certificate(g)
    assert certificate(g).data == certificate(GraphState(g.types, g.attrs, g.edges)).data


def test_relabelled_values_same_certificate():
    g = GraphState.build(
        [("Proposer", {}), ("Proposer", {}), ("Value", {}), ("Value", {})],
        [(0, "myval", 2), (1, "myval", 3)],
    )
    swapped = g.permuted([0, 1, 3, 2])
    assert swapped != g
    assert certificate(swapped) == certificate(g)


def test_bruteforce_basics():
    g = random_graph(random.Random(2), max_nodes=6)
    assert isomorphic_bruteforce(g, g)
    other = GraphState.build([("A", {})] * len(g))
    different_types = GraphState.build([("B", {})] * len(g))
    assert not isomorphic_bruteforce(other, different_types)


def test_bruteforce_rejects_large_graphs():
    big = GraphState.build([("A", {})] * 11)
    with pytest.raises(ValueError):
        isomorphic_bruteforce(big, big)


@pytest.mark.parametrize("seed", range(20))
def test_bruteforce_finds_random_permutation(seed):
    rng = random.Random(seed)
    g = random_graph(rng)
    assert isomorphic_bruteforce(g, shuffled(g, rng))


def test_regular_graphs_need_individualization():
    # colour refinement alone cannot tell an 8-cycle from two 4-cycles
    c8 = GraphState.build([("A", {})] * 8, cycle(8))
    two_c4 = GraphState.build([("A", {})] * 8, cycle(4) + cycle(4, offset=4))
    assert not isomorphic_bruteforce(c8, two_c4)
    assert certificate(c8) != certificate(two_c4)
    rng = random.Random(0)
    assert certificate(shuffled(c8, rng)) == certificate(c8)
    assert certificate(shuffled(two_c4, rng)) == certificate(two_c4)


def test_undirected_regular_pair():
    # 3-regular on 8 nodes: cube vs. the twisted cube-like Moebius ladder
    def sym(pairs):
        return [e for a, b in pairs for e in ((a, "x", b), (b, "x", a))]

    cube = sym([(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4), (0, 4), (1, 5), (2, 6), (3, 7)])
    moebius = sym([(i, (i + 1) % 8) for i in range(8)] + [(i, i + 4) for i in range(4)])
    g1 = GraphState.build([("A", {})] * 8, cube)
    g2 = GraphState.build([("A", {})] * 8, moebius)
    assert not isomorphic_bruteforce(g1, g2)
    assert certificate(g1) != certificate(g2)


@pytest.mark.parametrize("seed", range(40))
def test_certificate_matches_oracles(seed):
    rng = random.Random(1000 + seed)
    g = random_graph(rng)
    for other in (shuffled(g, rng), near_miss(g, rng), rewired(g, rng), random_graph(rng, n_types=1)):
        expected = isomorphic_bruteforce(g, other)
        assert expected == nx_isomorphic(g, other)
        assert (certificate(g) == certificate(other)) == expected


@given(graphs(), st.randoms(use_true_random=False))
@settings(max_examples=150, deadline=None)
def test_permutation_invariance(g, rnd):
    h = shuffled(g, rnd)
    assert certificate(h) == certificate(g)
    assert canonical_form(h)[0] == canonical_form(g)[0]


@given(graphs(max_nodes=6), graphs(max_nodes=6))
@settings(max_examples=150, deadline=None)
def test_certificate_equality_iff_isomorphic(g1, g2):
    assert (certificate(g1) == certificate(g2)) == isomorphic_bruteforce(g1, g2)


@given(graphs())
@settings(max_examples=100, deadline=None)
def test_canonical_form_is_isomorphic_permutation(g):
    cg, order, cert = canonical_form(g)
    assert sorted(order) == list(range(len(g)))
    assert cg == g.permuted(order)
    assert isomorphic_bruteforce(g, cg)
    assert certificate(cg) == cert


@given(graphs())
@settings(max_examples=150, deadline=None)
def test_certificate_decodes_to_canonical_form(g):
    cg, _, cert = canonical_form(g)
    assert graph_from_certificate(cert.data) == cg


def test_empty_graph_certificate_round_trip():
    g = GraphState((), (), frozenset())
    assert graph_from_certificate(certificate(g).data) == g
