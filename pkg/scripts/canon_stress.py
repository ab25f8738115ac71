"""Compare certificates against networkx VF2 on random typed graphs.

Needs the test extras (networkx) and the tests/ directory for the graph generator.

    python scripts/canon_stress.py --pairs 5000 --max-nodes 12
"""

import argparse
import pathlib
import random
import sys
import time

import networkx as nx

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "tests"))
from graphgen import near_miss, random_graph, rewired, shuffled  # noqa: E402

from paxos_mc.canon import certificate  # noqa: E402


def to_nx(g):
    h = nx.MultiDiGraph()
    for v in range(len(g)):
        h.add_node(v, label=repr(g.node_label(v)))
    for s, lab, t in g.edges:
        h.add_edge(s, t, label=lab)
    return h


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pairs", type=int, default=2000)
    parser.add_argument("--max-nodes", type=int, default=12)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    match = nx.algorithms.isomorphism.categorical_node_match("label", None)
    edge_match = nx.algorithms.isomorphism.categorical_multiedge_match("label", None)
    bad = iso = 0
    started = time.perf_counter()
    for k in range(args.pairs):
        g = random_graph(rng, max_nodes=args.max_nodes)
        h = (shuffled, near_miss, rewired)[k % 3](g, rng)
        expected = nx.is_isomorphic(to_nx(g), to_nx(h), node_match=match, edge_match=edge_match)
        iso += expected
        if (certificate(g) == certificate(h)) != expected:
            bad += 1
            print(f"discrepancy at pair {k}:\n{g.dump()}\n--\n{h.dump()}")
    print(f"{args.pairs} pairs, {iso} isomorphic, {bad} discrepancies, {time.perf_counter() - started:.1f} s")
    sys.exit(1 if bad else 0)


if __name__ == "__main__":
    main()
