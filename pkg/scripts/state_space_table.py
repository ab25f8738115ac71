"""Tabulate state-space sizes of both encodings over a grid of instances.

    python scripts/state_space_table.py --max-acceptors 3 --csv sizes.csv
"""

import argparse
import csv
import sys
import time

from paxos_mc.explorer import compare_encodings
from paxos_mc.protocol import ProtocolConfig

FIELDS = ["proposers", "acceptors", "maj", "verdict", "graph", "graph_exact", "vector", "vector_per_graph", "seconds"]


def rows(max_proposers: int, max_acceptors: int, exact: bool, max_states: int | None):
    for p in range(1, max_proposers + 1):
        for a in range(1, max_acceptors + 1):
            for maj in range(1, a + 1):
                started = time.perf_counter()
                c = compare_encodings(ProtocolConfig(p, a, maj), include_exact=exact, max_states=max_states)
                yield {
                    "proposers": p,
                    "acceptors": a,
                    "maj": maj,
                    "verdict": "Inconclusive" if c.inconclusive else str(c.graph.verdict),
                    "graph": c.graph.states_stored,
                    "graph_exact": c.graph_exact.states_stored if exact else "",
                    "vector": c.vector.states_stored,
                    "vector_per_graph": f"{c.ratio:.2f}",
                    "seconds": f"{time.perf_counter() - started:.1f}",
                }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--max-proposers", type=int, default=2)
    parser.add_argument("--max-acceptors", type=int, default=3)
    parser.add_argument("--exact", action="store_true", help="also count graph states without isomorphism reduction")
    parser.add_argument("--max-states", type=int, default=None)
    parser.add_argument("--csv", default=None, help="also write the table to this file")
    args = parser.parse_args()

    table = list(rows(args.max_proposers, args.max_acceptors, args.exact, args.max_states))
    widths = {f: max(len(f), *(len(str(r[f])) for r in table)) for f in FIELDS}
    print("  ".join(f.rjust(widths[f]) for f in FIELDS))
    for r in table:
        print("  ".join(str(r[f]).rjust(widths[f]) for f in FIELDS))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, FIELDS)
            writer.writeheader()
            writer.writerows(table)
        print(f"wrote {args.csv}", file=sys.stderr)


if __name__ == "__main__":
    main()
