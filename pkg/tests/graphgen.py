"""Random typed attributed graphs for canonical-labelling tests."""

import random

from hypothesis import strategies as st

from paxos_mc.graph import GraphState

TYPES = ("A", "B", "C")
EDGE_LABELS = ("x", "y")


def random_graph(rng: random.Random, max_nodes: int = 8, n_types: int = 3, density: float | None = None) -> GraphState:
    n = rng.randint(1, max_nodes)
    density = rng.uniform(0.05, 0.5) if density is None else density
    nodes = []
    for _ in range(n):
        attrs = {}
        if rng.random() < 0.3:
            attrs["k"] = rng.choice([-1, 0, 1])
        nodes.append((TYPES[rng.randrange(n_types)], attrs))
    edges = [
        (s, lab, t)
        for s in range(n)
        for t in range(n)
        for lab in EDGE_LABELS
        if rng.random() < density
    ]
    return GraphState.build(nodes, edges)


def shuffled(g: GraphState, rng: random.Random) -> GraphState:
    order = list(range(len(g)))
    rng.shuffle(order)
    return g.permuted(order)


def near_miss(g: GraphState, rng: random.Random) -> GraphState:
    """Copy of ``g`` with one attribute changed on one node, then shuffled."""
    v = rng.randrange(len(g))
    nodes = [(g.types[u], dict(g.attrs[u])) for u in range(len(g))]
    old = nodes[v][1].get("k")
    nodes[v][1]["k"] = rng.choice([x for x in (-1, 0, 1, 2) if x != old])
    return shuffled(GraphState.build(nodes, g.edges), rng)


def rewired(g: GraphState, rng: random.Random) -> GraphState:
    """Copy of ``g`` with one edge's target moved, then shuffled; may or may not be isomorphic."""
    if not g.edges:
        return shuffled(g, rng)
    edges = sorted(g.edges)
    s, lab, t = edges.pop(rng.randrange(len(edges)))
    edges.append((s, lab, rng.randrange(len(g))))
    nodes = [(g.types[u], dict(g.attrs[u])) for u in range(len(g))]
    return shuffled(GraphState.build(nodes, edges), rng)


def cycle(n: int, offset: int = 0) -> list[tuple[int, str, int]]:
    return [(offset + i, "x", offset + (i + 1) % n) for i in range(n)]


@st.composite
def graphs(draw, max_nodes: int = 7):
    n = draw(st.integers(1, max_nodes))
    types = draw(st.lists(st.sampled_from(TYPES[:2]), min_size=n, max_size=n))
    attrs = draw(st.lists(st.sampled_from([None, -1, 0, 1]), min_size=n, max_size=n))
    nodes = [(t, {} if a is None else {"k": a}) for t, a in zip(types, attrs)]
    edges = draw(st.sets(st.tuples(st.integers(0, n - 1), st.sampled_from(EDGE_LABELS), st.integers(0, n - 1)), max_size=3 * n))
    return GraphState.build(nodes, edges)
