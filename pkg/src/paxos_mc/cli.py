"""Command-line front end.

Exit statuses: 0 safe (or agreeing comparison), 1 usage or configuration
error, 2 unsafe, 3 exploration truncated by a bound, 4 encodings disagree.
The default worker count for full searches comes from ``PAXOS_MC_WORKERS``.
"""

from __future__ import annotations

import argparse
import os
import sys

from paxos_mc import graph_model
from paxos_mc.canon import Certificate, canonical_form
from paxos_mc.explorer import (
    WORKERS_ENV,
    EncodingKind,
    EncodingMismatch,
    ExplorationConfig,
    ExplorationReport,
    Strategy,
    compare_encodings,
    explore,
    state_at,
)
from paxos_mc.protocol import ConfigError, ProtocolConfig, majority_bound, validate_config

EXIT_SAFE = 0
EXIT_USAGE = 1
EXIT_UNSAFE = 2
EXIT_INCONCLUSIVE = 3
EXIT_MISMATCH = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        return _positive(raw)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"{WORKERS_ENV}: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="paxos-mc", description="Explicit-state model checker for single-decree Paxos.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--proposers", type=_positive, required=True)
    common.add_argument("--acceptors", type=_positive, required=True)
    common.add_argument("--maj", type=_positive, default=None, help="quorum size (default: ceil((acceptors+1)/2))")
    common.add_argument("--encoding", choices=["graph", "vector"], default="graph")
    common.add_argument("--max-states", type=_positive, default=None)
    common.add_argument("--max-depth", type=_positive, default=None)
    common.add_argument("--output", default="-", help="output file, '-' for standard output")
    common.add_argument("--workers", type=_positive, default=None, help=f"BFS worker processes (default: ${WORKERS_ENV} or 1)")

    check = sub.add_parser("check", parents=[common], help="explore one encoding and check safety")
    check.add_argument("--strategy", choices=["bfs", "dfs"], default="bfs")
    check.add_argument("--format", choices=["json", "text"], default="text")
    check.add_argument("--no-symmetry", action="store_true", help="graph encoding: key states exactly, without isomorphism reduction")
    check.add_argument("--audit", action="store_true", help="check protocol invariants on every state and step")
    check.add_argument("--timing", action="store_true", help="include wall-clock time (output is then not reproducible)")

    compare = sub.add_parser("compare", parents=[common], help="explore both encodings and report the reduction")
    compare.add_argument("--format", choices=["json", "text"], default="text")
    compare.add_argument("--exact", action="store_true", help="also run the graph encoding without symmetry reduction")
    compare.add_argument("--timing", action="store_true")

    dot = sub.add_parser("export-dot", parents=[common], help="write the state space, or one state, as DOT")
    dot.add_argument(
        "--state",
        default=None,
        help="export a single state graph: 'initial' (before initValues) or a BFS state index",
    )
    return parser


def _config(args) -> ProtocolConfig:
    maj = args.maj if args.maj is not None else majority_bound(args.acceptors)
    return validate_config(ProtocolConfig(args.proposers, args.acceptors, maj))


def _write(args, text: str) -> None:
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)


def _exit_status(report: ExplorationReport) -> int:
    if not report.verdict.safe:
        return EXIT_UNSAFE
    return EXIT_INCONCLUSIVE if report.inconclusive else EXIT_SAFE


def _line_diff(before: str, after: str) -> list[str]:
    old, new = before.splitlines(), after.splitlines()
    old_set, new_set = set(old), set(new)
    return [f"- {line}" for line in old if line not in new_set] + [f"+ {line}" for line in new if line not in old_set]


def _stable_steps(report: ExplorationReport) -> list[tuple[str | None, str]]:
    """(label, dump) pairs for the trace, with node numbering stable across steps.

    Symmetry-reduced traces hold canonical representatives whose node order
    changes from step to step, so they are replayed on uncanonicalised
    graphs and the labels translated accordingly.
    """
    trace = report.trace
    if report.ecfg.encoding is EncodingKind.VECTOR or not report.ecfg.symmetry:
        return [(None if s.label is None else str(s.label), s.state.dump()) for s in trace]
    raw = graph_model.apply_init_values(graph_model.initial_graph(report.cfg))
    steps = [(None, raw.dump())]
    for prev, step in zip(trace, trace[1:]):
        canon, order, _ = canonical_form(raw)
        assert canon == prev.state, "trace replay diverged from the recorded states"
        match = step.label.relabel(order)
        raw = graph_model.apply_match(raw, match)
        steps.append((str(match), raw.dump()))
    return steps


def format_report_text(report: ExplorationReport, include_timing: bool = False) -> str:
    cfg, ecfg = report.cfg, report.ecfg
    bound = majority_bound(cfg.num_acceptors)
    relation = "meets" if cfg.is_theoretically_safe else "is below"
    encoding = ecfg.encoding.value
    if ecfg.encoding is EncodingKind.GRAPH:
        encoding += " (isomorphism reduction)" if ecfg.symmetry else " (exact keys)"
    out = [
        f"instance: {cfg} (maj {relation} the safe bound {bound})",
        f"encoding: {encoding}, strategy: {ecfg.strategy.value}",
        f"verdict: {report.verdict_name if report.verdict.safe else report.verdict}",
        f"states stored: {report.states_stored}",
        f"transitions: {report.transitions}",
        f"max depth: {report.max_depth_reached}",
    ]
    if include_timing:
        out.append(f"wall time: {report.wall_time * 1000:.1f} ms")
    if ecfg.audit:
        out.append(f"audit failures: {len(report.audit_failures)}")
        out += [f"  {p}" for p in report.audit_failures]
    if report.trace is not None:
        steps = _stable_steps(report)
        out.append(f"counterexample ({len(steps) - 1} steps):")
        out.append("  initial state:")
        out += [f"    {line}" for line in steps[0][1].splitlines()]
        for k in range(1, len(steps)):
            label, dump = steps[k]
            out.append(f"  {k}. {label}")
            out += [f"     {line}" for line in _line_diff(steps[k - 1][1], dump)]
    return "\n".join(out) + "\n"


def format_comparison_text(comparison, include_timing: bool = False) -> str:
    rows = [("graph (isomorphism)", comparison.graph)]
    if comparison.graph_exact is not None:
        rows.append(("graph (exact keys)", comparison.graph_exact))
    rows.append(("vector", comparison.vector))
    header = f"{'encoding':<22}{'states':>10}{'transitions':>13}  verdict"
    if include_timing:
        header += "  time"
    out = [f"instance: {comparison.cfg}", header]
    for name, r in rows:
        verdict = r.verdict_name if r.verdict.safe else str(r.verdict)
        line = f"{name:<22}{r.states_stored:>10}{r.transitions:>13}  {verdict}"
        if include_timing:
            line += f"  {r.wall_time * 1000:.1f} ms"
        out.append(line)
    out.append(f"reduction vector/graph: {comparison.ratio:.3f}")
    if comparison.exact_ratio is not None:
        out.append(f"reduction exact/graph: {comparison.exact_ratio:.3f}")
    return "\n".join(out) + "\n"


def run_check(args) -> int:
    cfg = _config(args)
    ecfg = ExplorationConfig(
        strategy=Strategy(args.strategy),
        encoding=EncodingKind(args.encoding),
        max_states=args.max_states,
        max_depth=args.max_depth,
        symmetry=not args.no_symmetry,
        audit=args.audit,
        workers=args.workers,
    )
    report = explore(cfg, ecfg)
    if args.format == "json":
        _write(args, report.to_json(include_timing=args.timing))
    else:
        _write(args, format_report_text(report, include_timing=args.timing))
    return _exit_status(report)


def run_compare(args) -> int:
    cfg = _config(args)
    try:
        comparison = compare_encodings(
            cfg,
            include_exact=args.exact,
            max_states=args.max_states,
            max_depth=args.max_depth,
            workers=args.workers,
        )
    except EncodingMismatch as exc:
        print(f"paxos-mc: internal error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    if args.format == "json":
        _write(args, comparison.to_json(include_timing=args.timing))
    else:
        _write(args, format_comparison_text(comparison, include_timing=args.timing))
    return EXIT_INCONCLUSIVE if comparison.inconclusive else EXIT_SAFE


def lts_to_dot(report: ExplorationReport) -> str:
    lines = ["digraph lts {"]
    for i, key in enumerate(report.state_keys):
        name = Certificate(key).hex_prefix(10)
        lines.append(f'  s{i} [label="{name}"];')
    for src, label, dst in report.lts_edges:
        lines.append(f'  s{src} -> s{dst} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def run_export_dot(args) -> int:
    if args.encoding != "graph":
        raise UsageError("--encoding: DOT export is only available for the graph encoding")
    cfg = _config(args)
    if args.state == "initial":
        g = canonical_form(graph_model.initial_graph(cfg))[0]
        _write(args, g.to_dot())
        return EXIT_SAFE
    ecfg = ExplorationConfig(
        max_states=args.max_states, max_depth=args.max_depth, record_lts=True, workers=args.workers
    )
    report = explore(cfg, ecfg)
    if args.state is None:
        _write(args, lts_to_dot(report))
        return EXIT_INCONCLUSIVE if report.inconclusive else EXIT_SAFE
    try:
        index = int(args.state)
        g = state_at(cfg, ecfg, report, index)
    except (ValueError, IndexError) as exc:
        raise UsageError(f"--state: {exc}") from None
    _write(args, g.to_dot())
    return EXIT_SAFE


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.workers is None:
            args.workers = _default_workers()
        handler = {"check": run_check, "compare": run_compare, "export-dot": run_export_dot}[args.command]
        return handler(args)
    except (UsageError, ConfigError) as exc:
        print(f"paxos-mc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
