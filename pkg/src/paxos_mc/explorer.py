"""State-space exploration over either encoding.

An *encoding* adapts one model to the explorer: it supplies the initial
state, expands a state into ``(label, successor, key)`` triples, and checks
safety.  The key decides what counts as "the same state": canonical graph
certificates for the symmetry-reduced graph encoding, exact fingerprints
otherwise.

Full search is level-synchronous BFS.  Each level is expanded (optionally
by a process pool, since expansion and canonicalisation are pure) and then
merged into the visited set in frontier order, so counts and traces do not
depend on the worker count.  Only keys and parent links are kept for
visited states; traces are rebuilt by replaying labels from the initial
state.
"""

from __future__ import annotations

import enum
import json
import multiprocessing
import time
import zlib
from dataclasses import dataclass, field
from typing import Any

from paxos_mc import graph_model, vector_model
from paxos_mc.canon import canonical_form, graph_from_certificate
from paxos_mc.protocol import ProtocolConfig, Verdict, validate_config

WORKERS_ENV = "PAXOS_MC_WORKERS"


class Strategy(enum.Enum):
    FULL_BFS = "bfs"
    DFS_HALT = "dfs"


class EncodingKind(enum.Enum):
    GRAPH = "graph"
    VECTOR = "vector"


class EncodingMismatch(RuntimeError):
    """The two encodings disagree on a verdict, which means one model is wrong."""


@dataclass(frozen=True)
class ExplorationConfig:
    strategy: Strategy = Strategy.FULL_BFS
    encoding: EncodingKind = EncodingKind.GRAPH
    max_states: int | None = None
    max_depth: int | None = None
    # graph encoding only: False keys states by exact fingerprint instead of certificate
    symmetry: bool = True
    audit: bool = False
    record_lts: bool = False
    workers: int = 1

    def __post_init__(self):
        for name in ("max_states", "max_depth"):
            bound = getattr(self, name)
            if bound is not None and bound < 1:
                raise ValueError(f"{name} must be at least 1, got {bound}")
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")


class GraphEncoding:
    name = "graph"

    def __init__(self, symmetry: bool = True, audit: bool = False):
        self.symmetry = symmetry
        self.audit = audit
        self._zdict: bytes | None = None

    def initial(self, cfg: ProtocolConfig):
        # initValues is the unconditional first step of the control program
        g = graph_model.apply_init_values(graph_model.initial_graph(cfg))
        return canonical_form(g)[0] if self.symmetry else g

    def key(self, g) -> bytes:
        if self.symmetry:
            return canonical_form(g)[2].data
        return graph_model.exact_fingerprint(g)

    def expand(self, g):
        out, problems = [], []
        for match, raw in graph_model.successors(g):
            if self.audit:
                problems += graph_model.audit_transition(g, match, raw)
            if self.symmetry:
                succ, _, cert = canonical_form(raw)
                out.append((match, succ, cert.data))
            else:
                out.append((match, raw, graph_model.exact_fingerprint(raw)))
        return out, problems

    def pack(self, g, key: bytes):
        # a certificate determines the canonical form, so pending states keep only the key
        return key if self.symmetry else g

    def unpack(self, item):
        return graph_from_certificate(item) if self.symmetry else item

    def stored_key(self, key: bytes) -> bytes:
        """Lossless shorter form of ``key`` for the visited set.

        Certificates of one instance share most of their label-table text,
        so raw deflate primed with the first key seen (the initial state's)
        shrinks them several-fold.  Compression is deterministic and
        invertible, so distinct keys stay distinct.
        """
        if not self.symmetry:
            return key
        if self._zdict is None:
            self._zdict = key
        # a 2 KiB window covers a whole certificate and keeps setup cheap
        c = zlib.compressobj(1, zlib.DEFLATED, -11, 8, zlib.Z_DEFAULT_STRATEGY, zdict=self._zdict)
        return c.compress(key) + c.flush()

    def check(self, g) -> Verdict:
        return graph_model.check_safety(g)

    def audit_state(self, g) -> list[str]:
        return graph_model.audit_state(g)

    def dump(self, g) -> str:
        return g.dump()


class VectorEncoding:
    name = "vector"

    def __init__(self, audit: bool = False):
        self.audit = audit

    def initial(self, cfg: ProtocolConfig):
        return vector_model.initial_vector(cfg)

    def key(self, s) -> bytes:
        return vector_model.vector_fingerprint(s)

    def expand(self, s):
        out, problems = [], []
        for label, succ in vector_model.vector_successors(s):
            if self.audit:
                problems += vector_model.audit_transition(s, label, succ)
            out.append((label, succ, vector_model.vector_fingerprint(succ)))
        return out, problems

    def pack(self, s, key: bytes):
        return s

    def unpack(self, item):
        return item

    def stored_key(self, key: bytes) -> bytes:
        return key

    def check(self, s) -> Verdict:
        return vector_model.check_safety_vector(s)

    def audit_state(self, s) -> list[str]:
        return vector_model.audit_state(s)

    def dump(self, s) -> str:
        return s.dump()


def make_encoding(ecfg: ExplorationConfig):
    if ecfg.encoding is EncodingKind.GRAPH:
        return GraphEncoding(symmetry=ecfg.symmetry, audit=ecfg.audit)
    return VectorEncoding(audit=ecfg.audit)


@dataclass
class TraceStep:
    label: Any  # None for the initial state
    state: Any


@dataclass
class ExplorationReport:
    cfg: ProtocolConfig
    ecfg: ExplorationConfig
    verdict: Verdict
    inconclusive: bool
    states_stored: int
    transitions: int
    max_depth_reached: int
    wall_time: float
    trace: list[TraceStep] | None = None
    audit_failures: list[str] = field(default_factory=list)
    # (source index, label, target index) over visited-state indices, when recorded
    lts_edges: list[tuple[int, Any, int]] | None = None
    state_keys: list[bytes] | None = None

    @property
    def verdict_name(self) -> str:
        if not self.verdict.safe:
            return "Unsafe"
        return "Inconclusive" if self.inconclusive else "Safe"

    def to_dict(self, include_timing: bool = False) -> dict:
        encoding = make_encoding(self.ecfg)
        trace = None
        if self.trace is not None:
            trace = [
                {"label": None if step.label is None else str(step.label), "state": encoding.dump(step.state)}
                for step in self.trace
            ]
        doc = {
            "verdict": self.verdict_name,
            "violation": None if self.verdict.violation is None else self.verdict.violation.value,
            "states_stored": self.states_stored,
            "transitions": self.transitions,
            "max_depth_reached": self.max_depth_reached,
            "wall_time_ms": round(self.wall_time * 1000, 3) if include_timing else None,
            "trace": trace,
            "inconclusive": self.inconclusive,
            "config": {
                "proposers": self.cfg.num_proposers,
                "acceptors": self.cfg.num_acceptors,
                "maj": self.cfg.maj,
            },
            "encoding": self.ecfg.encoding.value,
            "symmetry": self.ecfg.symmetry if self.ecfg.encoding is EncodingKind.GRAPH else False,
            "strategy": self.ecfg.strategy.value,
        }
        if self.ecfg.audit:
            doc["audit_failures"] = list(self.audit_failures)
        return doc

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2) + "\n"


# process-pool plumbing: the encoding is installed once per worker
_worker_encoding = None


def _init_worker(encoding) -> None:
    global _worker_encoding
    _worker_encoding = encoding


def _expand_one(item):
    expanded, problems = _worker_encoding.expand(_worker_encoding.unpack(item))
    return [(label, _worker_encoding.pack(succ, key), key) for label, succ, key in expanded], problems


def _expand_local(encoding, item):
    return encoding.expand(encoding.unpack(item))


class _Visited:
    def __init__(self, record_lts: bool, stored_key=None):
        self.stored_key = stored_key or (lambda key: key)
        self.index: dict[bytes, int] = {}
        self.parents: list[tuple[int, Any] | None] = []
        self.depths: list[int] = []
        self.keys: list[bytes] | None = [] if record_lts else None

    def add(self, key: bytes, parent: tuple[int, Any] | None, depth: int) -> int:
        i = len(self.parents)
        self.index[self.stored_key(key)] = i
        self.parents.append(parent)
        self.depths.append(depth)
        if self.keys is not None:
            self.keys.append(key)
        return i

    def get(self, key: bytes) -> int | None:
        return self.index.get(self.stored_key(key))

    def labels_to(self, i: int) -> list[Any]:
        labels = []
        while self.parents[i] is not None:
            i, label = self.parents[i]
            labels.append(label)
        return labels[::-1]


def rebuild_trace(encoding, cfg: ProtocolConfig, labels: list[Any]) -> list[TraceStep]:
    """Replay ``labels`` from the initial state, following the successor with each label."""
    state = encoding.initial(cfg)
    steps = [TraceStep(None, state)]
    for label in labels:
        expanded, _ = encoding.expand(state)
        for lab, succ, _ in expanded:
            if lab == label:
                state = succ
                break
        else:
            raise RuntimeError(f"label {label} is not enabled during trace replay")
        steps.append(TraceStep(label, state))
    return steps


def state_at(cfg: ProtocolConfig, ecfg: ExplorationConfig, report: ExplorationReport, index: int):
    """Re-derive visited state ``index`` from a report recorded with ``record_lts``."""
    if report.lts_edges is None:
        raise ValueError("report has no recorded transition system")
    if not 0 <= index < report.states_stored:
        raise IndexError(f"state index {index} out of range (0..{report.states_stored - 1})")
    discovered: dict[int, tuple[int, Any]] = {}
    for src, label, dst in report.lts_edges:
        if dst != 0 and dst not in discovered:
            discovered[dst] = (src, label)
    labels = []
    while index != 0:
        index, label = discovered[index]
        labels.append(label)
    return rebuild_trace(make_encoding(ecfg), cfg, labels[::-1])[-1].state


def validate_trace(encoding, cfg: ProtocolConfig, trace: list[TraceStep]) -> list[str]:
    """Check that ``trace`` starts initially, follows real transitions, and ends unsafe."""
    problems = []
    if not trace:
        return ["empty trace"]
    if encoding.key(trace[0].state) != encoding.key(encoding.initial(cfg)):
        problems.append("trace does not start at the initial state")
    for k in range(1, len(trace)):
        prev, step = trace[k - 1], trace[k]
        expanded, _ = encoding.expand(prev.state)
        want = encoding.key(step.state)
        if not any(lab == step.label and key == want for lab, _, key in expanded):
            problems.append(f"step {k}: {step.label} does not lead to the recorded state")
    if encoding.check(trace[-1].state).safe:
        problems.append("final state of the trace is safe")
    return problems


def explore(cfg: ProtocolConfig, ecfg: ExplorationConfig | None = None) -> ExplorationReport:
    validate_config(cfg)
    ecfg = ecfg or ExplorationConfig()
    encoding = make_encoding(ecfg)
    started = time.perf_counter()
    if ecfg.strategy is Strategy.FULL_BFS:
        result = _bfs(cfg, ecfg, encoding)
    else:
        result = _dfs(cfg, ecfg, encoding)
    visited, transitions, truncated, violation_at, audit, lts = result
    verdict = Verdict()
    trace = None
    if violation_at is not None:
        idx, verdict = violation_at
        trace = rebuild_trace(encoding, cfg, visited.labels_to(idx))
    return ExplorationReport(
        cfg=cfg,
        ecfg=ecfg,
        verdict=verdict,
        inconclusive=truncated and verdict.safe,
        states_stored=len(visited.parents),
        transitions=transitions,
        max_depth_reached=max(visited.depths),
        wall_time=time.perf_counter() - started,
        trace=trace,
        audit_failures=audit,
        lts_edges=lts,
        state_keys=visited.keys,
    )


def _bfs(cfg, ecfg, encoding):
    visited = _Visited(ecfg.record_lts, encoding.stored_key)
    lts = [] if ecfg.record_lts else None
    audit: list[str] = []
    init = encoding.initial(cfg)
    visited.add(encoding.key(init), None, 0)
    violation_at = None
    verdict = encoding.check(init)
    if not verdict.safe:
        violation_at = (0, verdict)
    if ecfg.audit:
        audit += [f"state 0: {p}" for p in encoding.audit_state(init)]

    frontier = [(0, encoding.pack(init, encoding.key(init)))]
    transitions = 0
    truncated = False
    depth = 0
    pool = None
    if ecfg.workers > 1:
        pool = multiprocessing.get_context("spawn").Pool(ecfg.workers, _init_worker, (encoding,))
    try:
        while frontier:
            if ecfg.max_depth is not None and depth >= ecfg.max_depth:
                truncated = truncated or any(encoding.expand(encoding.unpack(s))[0] for _, s in frontier)
                break
            items = [s for _, s in frontier]
            # consumed lazily so only a slice of the level's successors is alive at once
            if pool is not None:
                expanded_all = pool.imap(_expand_one, items, chunksize=max(1, min(256, len(items) // (4 * ecfg.workers))))
            else:
                expanded_all = (_expand_local(encoding, s) for s in items)
            next_frontier = []
            for (src, _), (expanded, problems) in zip(frontier, expanded_all):
                audit += problems
                for label, succ, key in expanded:
                    transitions += 1
                    dst = visited.get(key)
                    if dst is None:
                        if ecfg.max_states is not None and len(visited.parents) >= ecfg.max_states:
                            truncated = True
                            break
                        dst = visited.add(key, (src, label), depth + 1)
                        # pool results arrive packed, local ones as states
                        if pool is None:
                            next_frontier.append((dst, encoding.pack(succ, key)))
                        else:
                            next_frontier.append((dst, succ))
                            succ = encoding.unpack(succ)
                        v = encoding.check(succ)
                        if not v.safe and violation_at is None:
                            violation_at = (dst, v)
                        if ecfg.audit:
                            audit += [f"state {dst}: {p}" for p in encoding.audit_state(succ)]
                    if lts is not None:
                        lts.append((src, label, dst))
                if truncated:
                    break
            if truncated:
                break
            frontier = next_frontier
            depth += 1
    finally:
        if pool is not None:
            pool.terminate()
            pool.join()
    return visited, transitions, truncated, violation_at, audit, lts


def _dfs(cfg, ecfg, encoding):
    visited = _Visited(ecfg.record_lts, encoding.stored_key)
    lts = [] if ecfg.record_lts else None
    audit: list[str] = []
    init = encoding.initial(cfg)
    visited.add(encoding.key(init), None, 0)
    transitions = 0
    truncated = False
    verdict = encoding.check(init)
    if not verdict.safe:
        return visited, transitions, truncated, (0, verdict), audit, lts
    if ecfg.audit:
        audit += [f"state 0: {p}" for p in encoding.audit_state(init)]

    stack = [(0, encoding.pack(init, encoding.key(init)))]
    while stack:
        src, item = stack.pop()
        expanded, problems = encoding.expand(encoding.unpack(item))
        audit += problems
        depth = visited.depths[src]
        if ecfg.max_depth is not None and depth >= ecfg.max_depth:
            truncated = truncated or bool(expanded)
            continue
        pushed = []
        for label, succ, key in expanded:
            transitions += 1
            dst = visited.get(key)
            if dst is None:
                if ecfg.max_states is not None and len(visited.parents) >= ecfg.max_states:
                    return visited, transitions, True, None, audit, lts
                dst = visited.add(key, (src, label), depth + 1)
                v = encoding.check(succ)
                if lts is not None:
                    lts.append((src, label, dst))
                if not v.safe:
                    return visited, transitions, truncated, (dst, v), audit, lts
                if ecfg.audit:
                    audit += [f"state {dst}: {p}" for p in encoding.audit_state(succ)]
                pushed.append((dst, encoding.pack(succ, key)))
            elif lts is not None:
                lts.append((src, label, dst))
        stack.extend(reversed(pushed))
    return visited, transitions, truncated, None, audit, lts


@dataclass
class Comparison:
    cfg: ProtocolConfig
    graph: ExplorationReport
    vector: ExplorationReport
    graph_exact: ExplorationReport | None = None

    @property
    def ratio(self) -> float:
        return self.vector.states_stored / self.graph.states_stored

    @property
    def exact_ratio(self) -> float | None:
        if self.graph_exact is None:
            return None
        return self.graph_exact.states_stored / self.graph.states_stored

    @property
    def inconclusive(self) -> bool:
        reports = [self.graph, self.vector] + ([self.graph_exact] if self.graph_exact else [])
        return any(r.inconclusive for r in reports)

    def to_dict(self, include_timing: bool = False) -> dict:
        def summary(r: ExplorationReport) -> dict:
            return {
                "verdict": r.verdict_name,
                "violation": None if r.verdict.violation is None else r.verdict.violation.value,
                "states_stored": r.states_stored,
                "transitions": r.transitions,
                "max_depth_reached": r.max_depth_reached,
                "wall_time_ms": round(r.wall_time * 1000, 3) if include_timing else None,
            }

        doc = {
            "config": {
                "proposers": self.cfg.num_proposers,
                "acceptors": self.cfg.num_acceptors,
                "maj": self.cfg.maj,
            },
            "graph": summary(self.graph),
            "vector": summary(self.vector),
            "ratio": round(self.ratio, 6),
        }
        if self.graph_exact is not None:
            doc["graph_exact"] = summary(self.graph_exact)
            doc["exact_ratio"] = round(self.exact_ratio, 6)
        return doc

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2) + "\n"


def compare_encodings(
    cfg: ProtocolConfig,
    include_exact: bool = True,
    max_states: int | None = None,
    max_depth: int | None = None,
    workers: int = 1,
) -> Comparison:
    """Full BFS under both encodings (and the unreduced graph encoding); verdicts must agree."""
    base = dict(strategy=Strategy.FULL_BFS, max_states=max_states, max_depth=max_depth, workers=workers)
    graph = explore(cfg, ExplorationConfig(encoding=EncodingKind.GRAPH, **base))
    vector = explore(cfg, ExplorationConfig(encoding=EncodingKind.VECTOR, **base))
    exact = None
    if include_exact:
        exact = explore(cfg, ExplorationConfig(encoding=EncodingKind.GRAPH, symmetry=False, **base))
    comparison = Comparison(cfg, graph, vector, exact)
    if not comparison.inconclusive:
        reports = [graph, vector] + ([exact] if exact else [])
        if len({r.verdict for r in reports}) != 1:
            found = ", ".join(f"{r.ecfg.encoding.value}: {r.verdict}" for r in reports)
            raise EncodingMismatch(f"verdicts disagree for {cfg}: {found}")
    return comparison
