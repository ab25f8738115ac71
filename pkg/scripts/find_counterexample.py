"""Search instances below the safe quorum bound for violations.

Runs DFS-halt under both encodings on every (P, A, maj) with
maj < majority_bound(A) and reports the shortest trace found.

    python scripts/find_counterexample.py --max-proposers 3 --max-acceptors 4
"""

import argparse

from paxos_mc.explorer import EncodingKind, ExplorationConfig, Strategy, explore
from paxos_mc.protocol import ProtocolConfig, majority_bound


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--max-proposers", type=int, default=3)
    parser.add_argument("--max-acceptors", type=int, default=4)
    parser.add_argument("--max-states", type=int, default=200_000)
    args = parser.parse_args()

    print(f"{'instance':<18}{'encoding':<10}{'verdict':<26}{'states':>8}{'steps':>7}")
    for p in range(2, args.max_proposers + 1):
        for a in range(2, args.max_acceptors + 1):
            for maj in range(1, majority_bound(a)):
                cfg = ProtocolConfig(p, a, maj)
                for enc in (EncodingKind.GRAPH, EncodingKind.VECTOR):
                    ecfg = ExplorationConfig(strategy=Strategy.DFS_HALT, encoding=enc, max_states=args.max_states)
                    r = explore(cfg, ecfg)
                    steps = "" if r.trace is None else str(len(r.trace) - 1)
                    verdict = r.verdict_name if r.verdict.safe else str(r.verdict)
                    print(f"{str(cfg):<18}{enc.value:<10}{verdict:<26}{r.states_stored:>8}{steps:>7}")


if __name__ == "__main__":
    main()
