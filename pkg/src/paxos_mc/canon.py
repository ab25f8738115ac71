"""Canonical labelling of typed attributed graphs.

The certificate of a graph is the lexicographically smallest edge
serialisation over all node orderings reachable by individualisation and
refinement, prefixed with the multiset of node labels.  Two graphs get the
same certificate exactly when they are isomorphic.

Search outline:

1. colour nodes by (type, attributes);
2. refine to an equitable colouring: a node's new colour is its old colour
   plus the sorted multisets of (edge label, neighbour colour) for its
   outgoing and incoming edges;
3. if some colour class has more than one node, branch on every node of
   the first such class, individualise it, refine, and recurse;
4. each discrete colouring is a leaf ordering; keep the smallest
   serialisation.

Leaves with identical serialisations yield automorphisms, which are used to
skip branches that are images of branches already explored.  Colours are
always ranks of sorted signatures, never node indices, so every choice in
the search is invariant under renaming.
"""

from __future__ import annotations

import ast
import hashlib
from dataclasses import dataclass

from paxos_mc.graph import GraphState

BRUTEFORCE_MAX_NODES = 10


@dataclass(frozen=True)
class Certificate:
    data: bytes

    def hex_prefix(self, n: int = 8) -> str:
        return hashlib.blake2b(self.data, digest_size=16).hexdigest()[:n]


class _Prepared:
    """Per-graph tables used by refinement and serialisation."""

    def __init__(self, g: GraphState):
        self.n = n = len(g)
        reprs = [repr(g.node_label(v)) for v in range(n)]
        self.label_table = sorted(set(reprs))
        label_rank = {r: i for i, r in enumerate(self.label_table)}
        self.init_colors = [label_rank[r] for r in reprs]
        self.label_counts = [0] * len(self.label_table)
        for c in self.init_colors:
            self.label_counts[c] += 1

        self.edge_labels = sorted({lab for _, lab, _ in g.edges})
        lab_id = {lab: i for i, lab in enumerate(self.edge_labels)}
        self.edges = [(s, lab_id[lab], t) for s, lab, t in g.edges]
        # neighbour entries (direction and label code, neighbour); colours stay
        # below 2n even after individualisation, so code * span + colour packs
        # both into one sortable int
        span = 2 * n + 2
        self.adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        n_labels = len(self.edge_labels)
        for s, lab, t in self.edges:
            self.adj[s].append((lab * span, t))
            self.adj[t].append(((n_labels + lab) * span, s))
        self.width = 1 if max(n, len(self.edge_labels)) < 256 else 2

    def refine(self, colors: list[int]) -> list[int]:
        adj = self.adj
        n_colors = len(set(colors))
        while True:
            sigs = [
                (colors[v], tuple(sorted([code + colors[w] for code, w in adj[v]])))
                for v in range(self.n)
            ]
            rank = {s: i for i, s in enumerate(sorted(set(sigs)))}
            colors = [rank[s] for s in sigs]
            if len(rank) == n_colors:
                return colors
            n_colors = len(rank)

    def serialize_edges(self, order: list[int]) -> bytes:
        pos = [0] * self.n
        for k, v in enumerate(order):
            pos[v] = k
        triples = sorted((pos[s], lab, pos[t]) for s, lab, t in self.edges)
        flat = [x for triple in triples for x in triple]
        if self.width == 1:
            return bytes(flat)
        return b"".join(x.to_bytes(2, "big") for x in flat)

    def header(self) -> bytes:
        # a Python literal: ((label, count), ...) and the edge-label names
        table = "".join(f"({r}, {c}), " for r, c in zip(self.label_table, self.label_counts))
        return f"(({table}), {tuple(self.edge_labels)!r})".encode()


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _search(p: _Prepared) -> tuple[list[int], bytes]:
    best: list = [None, None]  # [serialisation, order]
    automorphisms: list[list[int]] = []

    def leaf(colors: list[int]) -> None:
        order = sorted(range(p.n), key=colors.__getitem__)
        ser = p.serialize_edges(order)
        if best[0] is None or ser < best[0]:
            best[0], best[1] = ser, order
        elif ser == best[0]:
            # best[1][k] -> order[k] preserves every label and edge
            perm = [0] * p.n
            for a, b in zip(best[1], order):
                perm[a] = b
            automorphisms.append(perm)

    def same_orbit(v: int, explored: list[int], path: list[int]) -> bool:
        uf = _UnionFind(p.n)
        for perm in automorphisms:
            if all(perm[x] == x for x in path):
                for x, y in enumerate(perm):
                    uf.union(x, y)
        root = uf.find(v)
        return any(uf.find(u) == root for u in explored)

    def recurse(colors: list[int], path: list[int]) -> None:
        counts: dict[int, int] = {}
        for c in colors:
            counts[c] = counts.get(c, 0) + 1
        target = min((c for c, k in counts.items() if k > 1), default=None)
        if target is None:
            leaf(colors)
            return
        cell = [v for v in range(p.n) if colors[v] == target]
        explored: list[int] = []
        for v in cell:
            if explored and same_orbit(v, explored, path):
                continue
            explored.append(v)
            child = [2 * c + (1 if c == target and u != v else 0) for u, c in enumerate(colors)]
            recurse(p.refine(child), path + [v])

    recurse(p.refine(p.init_colors), [])
    return best[1], best[0]


def canonical_order(g: GraphState) -> tuple[list[int], Certificate]:
    """Canonical node ordering of ``g`` and its certificate."""
    if len(g) == 0:
        return [], Certificate(b"0:")
    p = _Prepared(g)
    order, ser = _search(p)
    header = p.header()
    return order, Certificate(b"%d:" % len(header) + header + ser)


def certificate(g: GraphState) -> Certificate:
    return canonical_order(g)[1]


def canonical_form(g: GraphState) -> tuple[GraphState, list[int], Certificate]:
    """Return ``(cg, order, cert)`` where node ``k`` of ``cg`` is node ``order[k]`` of ``g``.

    Isomorphic inputs produce identical ``cg``.
    """
    order, cert = canonical_order(g)
    return g.permuted(order), order, cert


def graph_from_certificate(data: bytes) -> GraphState:
    """Rebuild the canonical form of every graph with certificate ``data``."""
    if data == b"0:":
        return GraphState((), (), frozenset())
    size, rest = data.split(b":", 1)
    header, ser = rest[: int(size)], rest[int(size):]
    table, edge_labels = ast.literal_eval(header.decode())
    types, attrs = [], []
    for (node_type, node_attrs), count in table:
        types += [node_type] * count
        attrs += [node_attrs] * count
    width = 1 if max(len(types), len(edge_labels)) < 256 else 2
    if width == 1:
        flat = list(ser)
    else:
        flat = [int.from_bytes(ser[i:i + 2], "big") for i in range(0, len(ser), 2)]
    edges = frozenset(
        (flat[i], edge_labels[flat[i + 1]], flat[i + 2]) for i in range(0, len(flat), 3)
    )
    return GraphState(tuple(types), tuple(attrs), edges)


def isomorphic_bruteforce(g1: GraphState, g2: GraphState) -> bool:
    """Search all label-preserving bijections for one that maps edges onto edges.

    Only used as a test oracle; factorial in the size of the label classes.
    """
    for g in (g1, g2):
        if len(g) > BRUTEFORCE_MAX_NODES:
            raise ValueError(f"brute-force isomorphism limited to {BRUTEFORCE_MAX_NODES} nodes, got {len(g)}")
    n = len(g1)
    if n != len(g2) or len(g1.edges) != len(g2.edges):
        return False
    labels1 = [g1.node_label(v) for v in range(n)]
    labels2 = [g2.node_label(v) for v in range(n)]
    if sorted(map(repr, labels1)) != sorted(map(repr, labels2)):
        return False

    edges1 = sorted(g1.edges)
    mapping: dict[int, int] = {}
    used: set[int] = set()

    def consistent(v: int, w: int) -> bool:
        for s, lab, t in edges1:
            if s == v and t in mapping and (w, lab, mapping[t]) not in g2.edges:
                return False
            if t == v and s in mapping and (mapping[s], lab, w) not in g2.edges:
                return False
            if s == v and t == v and (w, lab, w) not in g2.edges:
                return False
        return True

    def extend(v: int) -> bool:
        if v == n:
            return True
        for w in range(n):
            if w in used or labels1[v] != labels2[w] or not consistent(v, w):
                continue
            mapping[v] = w
            used.add(w)
            if extend(v + 1):
                return True
            del mapping[v]
            used.discard(w)
        return False

    # equal edge counts + every edge of g1 mapped into g2 => edge sets correspond
    return extend(0)
