"""Graph encoding of Paxos: transformation rules over :class:`GraphState`.

State layout (node types and their attributes / outgoing edges):

========  ==========================  ==================
type      attributes                  edges
========  ==========================  ==================
Counters  maj, nextRnd
Proposer  crnd, isPrepared (flag)     myval -> Value
Acceptor  rnd, prnd                   aval -> Value
Learner                               chosen -> Value
Prepare   rnd                         sender -> Proposer
Promise   rnd, prnd                   sender -> Acceptor, pval -> Value
Accept    rnd                         sender -> Proposer, val -> Value
Learn     rnd                         sender -> Acceptor, lval -> Value
Value     default (flag)
========  ==========================  ==================

Processes, messages and values carry no identity attribute, so symmetric
configurations are isomorphic graphs.  A broadcast is a single message node
linked to its sender; any acceptor may react to it.

Each ``apply_*`` function checks its guard and raises :class:`RuleError`
when the rule is not applicable, so the functions double as executable
preconditions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from paxos_mc.graph import GraphBuilder, GraphState
from paxos_mc.protocol import (
    MULTIPLE_CHOSEN,
    NO_ROUND,
    NOT_PROPOSED,
    SAFE,
    ProtocolConfig,
    Verdict,
)

COUNTERS = "Counters"
PROPOSER = "Proposer"
ACCEPTOR = "Acceptor"
LEARNER = "Learner"
PREPARE = "Prepare"
PROMISE = "Promise"
ACCEPT = "Accept"
LEARN = "Learn"
VALUE = "Value"

PROCESS_TYPES = (PROPOSER, ACCEPTOR, LEARNER)
MESSAGE_TYPES = (PREPARE, PROMISE, ACCEPT, LEARN)


class RuleError(ValueError):
    """A rule was applied to a match whose guard does not hold."""


class RuleId(enum.Enum):
    INIT_VALUES = "initValues"
    ON_PROPOSE = "onPropose"
    ON_PROMISE = "onPromise"
    CHANGE_MYVAL = "changeMyval"
    SEND_ACCEPT = "sendAccept"
    ON_PREPARE = "onPrepare"
    ON_ACCEPT = "onAccept"
    ON_LEARN = "onLearn"

    @property
    def order(self) -> int:
        return _RULE_ORDER[self]


_RULE_ORDER = {r: i for i, r in enumerate(RuleId)}


@dataclass(frozen=True)
class Match:
    """Rule plus the node indices it binds.

    ``ON_PROMISE`` stands for the whole onPromise; try changeMyval;
    sendAccept sequence on the bound proposer, which runs as one step.
    ``rnd`` is only used by ``ON_LEARN``, whose match is (learner, value)
    for the Learn messages of that round.
    """

    rule: RuleId
    nodes: tuple[int, ...] = ()
    rnd: int | None = None

    def sort_key(self):
        return (self.rule.order, self.nodes, -2 if self.rnd is None else self.rnd)

    def relabel(self, order: list[int]) -> "Match":
        """Translate node indices of a permuted graph back through ``order``."""
        return Match(self.rule, tuple(order[v] for v in self.nodes), self.rnd)

    def __str__(self) -> str:
        args = [str(v) for v in self.nodes]
        if self.rnd is not None:
            args.append(f"rnd={self.rnd}")
        return f"{self.rule.value}({','.join(args)})"


def initial_graph(cfg: ProtocolConfig) -> GraphState:
    b = GraphBuilder()
    b.add_node(COUNTERS, maj=cfg.maj)
    for _ in range(cfg.num_proposers):
        b.add_node(PROPOSER)
    for _ in range(cfg.num_acceptors):
        b.add_node(ACCEPTOR)
    b.add_node(LEARNER)
    return b.freeze()


def _counters(g: GraphState) -> int:
    (c,) = g.nodes(COUNTERS)
    return c


def is_initialized(g: GraphState) -> bool:
    return g.attr(_counters(g), "nextRnd") is not None


def apply_init_values(g: GraphState) -> GraphState:
    if is_initialized(g) or g.nodes(VALUE):
        raise RuleError("initValues: graph is already initialized")
    b = g.edit()
    b.set_attr(_counters(g), "nextRnd", 0)
    for p in g.nodes(PROPOSER):
        b.set_attr(p, "crnd", NO_ROUND)
        b.add_edge(p, "myval", b.add_node(VALUE))
    default = b.add_node(VALUE, default=True)
    for a in g.nodes(ACCEPTOR):
        b.set_attr(a, "rnd", NO_ROUND)
        b.set_attr(a, "prnd", NO_ROUND)
        b.add_edge(a, "aval", default)
    return b.freeze()


def _maj(g: GraphState) -> int:
    return g.attr(_counters(g), "maj")


def _messages(g: GraphState, kind: str, rnd: int) -> list[int]:
    return [m for m in g.nodes(kind) if g.attr(m, "rnd") == rnd]


def _quorum_ready(g: GraphState, p: int) -> bool:
    if not g.attr(p, "isPrepared", False):
        return False
    return len(_messages(g, PROMISE, g.attr(p, "crnd"))) >= _maj(g)


def _learn_tallies(g: GraphState) -> dict[tuple[int, int], int]:
    tallies: dict[tuple[int, int], int] = {}
    for m in g.nodes(LEARN):
        key = (g.attr(m, "rnd"), g.target(m, "lval"))
        tallies[key] = tallies.get(key, 0) + 1
    return tallies


def _has_learn_from(g: GraphState, a: int, rnd: int) -> bool:
    return any(g.attr(m, "rnd") == rnd for m in g.sources(a, "sender") if g.types[m] == LEARN)


def enabled_matches(g: GraphState) -> list[Match]:
    """All applicable proposer, acceptor and learner steps of an initialized graph.

    onLearn matches whose chosen edge already exists are left out: applying
    them would not change the graph.
    """
    if not is_initialized(g):
        raise RuleError("enabled_matches needs an initialized graph")
    matches = []
    for p in g.nodes(PROPOSER):
        if g.attr(p, "crnd") < 0:
            matches.append(Match(RuleId.ON_PROPOSE, (p,)))
        if _quorum_ready(g, p):
            matches.append(Match(RuleId.ON_PROMISE, (p,)))
    for a in g.nodes(ACCEPTOR):
        rnd = g.attr(a, "rnd")
        for m in g.nodes(PREPARE):
            if g.attr(m, "rnd") > rnd:
                matches.append(Match(RuleId.ON_PREPARE, (a, m)))
        for m in g.nodes(ACCEPT):
            r = g.attr(m, "rnd")
            if r >= rnd and not _has_learn_from(g, a, r):
                matches.append(Match(RuleId.ON_ACCEPT, (a, m)))
    maj = _maj(g)
    for learner in g.nodes(LEARNER):
        chosen = set(g.targets(learner, "chosen"))
        for (rnd, value), count in sorted(_learn_tallies(g).items()):
            if count >= maj and value not in chosen:
                matches.append(Match(RuleId.ON_LEARN, (learner, value), rnd))
    return sorted(matches, key=Match.sort_key)


def apply_on_propose(g: GraphState, match: Match) -> GraphState:
    (p,) = match.nodes
    if g.attr(p, "crnd") != NO_ROUND:
        raise RuleError(f"onPropose: proposer {p} already used round {g.attr(p, 'crnd')}")
    c = _counters(g)
    rnd = g.attr(c, "nextRnd")
    b = g.edit()
    b.set_attr(p, "crnd", rnd)
    b.set_attr(p, "isPrepared", True)
    b.set_attr(c, "nextRnd", rnd + 1)
    b.add_edge(b.add_node(PREPARE, rnd=rnd), "sender", p)
    return b.freeze()


def pick_value(g: GraphState, promises: list[int], own: int) -> int:
    """Value of the promise with the highest prior round, or ``own`` if that is the default."""
    top = max(g.attr(m, "prnd") for m in promises)
    values = {g.target(m, "pval") for m in promises if g.attr(m, "prnd") == top}
    if len(values) != 1:
        raise AssertionError(f"promises for prior round {top} disagree on the value: {sorted(values)}")
    (value,) = values
    if g.attr(value, "default", False):
        return own
    return value


def apply_proposer_quorum(g: GraphState, match: Match) -> GraphState:
    """onPromise, then changeMyval when applicable, then sendAccept, as one step."""
    (p,) = match.nodes
    if not g.attr(p, "isPrepared", False):
        raise RuleError(f"onPromise: proposer {p} is not prepared")
    crnd = g.attr(p, "crnd")
    promises = _messages(g, PROMISE, crnd)
    if len(promises) < _maj(g):
        raise RuleError(f"onPromise: {len(promises)} promises for round {crnd}, need {_maj(g)}")
    own = g.target(p, "myval")
    value = pick_value(g, promises, own)
    b = g.edit()
    b.del_attr(p, "isPrepared")
    if value != own:
        b.redirect(p, "myval", value)
    accept = b.add_node(ACCEPT, rnd=crnd)
    b.add_edge(accept, "sender", p)
    b.add_edge(accept, "val", value)
    return b.freeze()


def apply_on_prepare(g: GraphState, match: Match) -> GraphState:
    a, m = match.nodes
    rnd = g.attr(m, "rnd")
    if rnd <= g.attr(a, "rnd"):
        raise RuleError(f"onPrepare: round {rnd} is stale for acceptor {a} (rnd={g.attr(a, 'rnd')})")
    b = g.edit()
    b.set_attr(a, "rnd", rnd)
    promise = b.add_node(PROMISE, rnd=rnd, prnd=g.attr(a, "prnd"))
    b.add_edge(promise, "sender", a)
    b.add_edge(promise, "pval", g.target(a, "aval"))
    return b.freeze()


def apply_on_accept(g: GraphState, match: Match) -> GraphState:
    a, m = match.nodes
    rnd = g.attr(m, "rnd")
    if rnd < g.attr(a, "rnd"):
        raise RuleError(f"onAccept: round {rnd} is stale for acceptor {a} (rnd={g.attr(a, 'rnd')})")
    if _has_learn_from(g, a, rnd):
        raise RuleError(f"onAccept: acceptor {a} already forwarded round {rnd}")
    value = g.target(m, "val")
    b = g.edit()
    b.set_attr(a, "rnd", rnd)
    b.set_attr(a, "prnd", rnd)
    b.redirect(a, "aval", value)
    learn = b.add_node(LEARN, rnd=rnd)
    b.add_edge(learn, "sender", a)
    b.add_edge(learn, "lval", value)
    return b.freeze()


def apply_on_learn(g: GraphState, match: Match) -> GraphState:
    learner, value = match.nodes
    count = _learn_tallies(g).get((match.rnd, value), 0)
    if count < _maj(g):
        raise RuleError(f"onLearn: {count} learns for (rnd={match.rnd}, value {value}), need {_maj(g)}")
    if value in g.targets(learner, "chosen"):
        return g
    b = g.edit()
    b.add_edge(learner, "chosen", value)
    return b.freeze()


_APPLY = {
    RuleId.ON_PROPOSE: apply_on_propose,
    RuleId.ON_PROMISE: apply_proposer_quorum,
    RuleId.ON_PREPARE: apply_on_prepare,
    RuleId.ON_ACCEPT: apply_on_accept,
    RuleId.ON_LEARN: apply_on_learn,
}


def apply_match(g: GraphState, match: Match) -> GraphState:
    if match.rule is RuleId.INIT_VALUES:
        return apply_init_values(g)
    try:
        fn = _APPLY[match.rule]
    except KeyError:
        raise RuleError(f"{match.rule.value} only runs inside the onPromise step") from None
    return fn(g, match)


def successors(g: GraphState) -> list[tuple[Match, GraphState]]:
    """Control program: initValues once, then any enabled step."""
    if not is_initialized(g):
        return [(Match(RuleId.INIT_VALUES), apply_init_values(g))]
    return [(m, apply_match(g, m)) for m in enabled_matches(g)]


def check_safety(g: GraphState) -> Verdict:
    chosen = sorted({v for learner in g.nodes(LEARNER) for v in g.targets(learner, "chosen")})
    if len(chosen) >= 2:
        return MULTIPLE_CHOSEN
    proposed = {g.target(p, "myval") for p in g.nodes(PROPOSER) if g.targets(p, "myval")}
    for m in g.nodes(ACCEPT):
        if g.types[g.target(m, "sender")] == PROPOSER:
            proposed.add(g.target(m, "val"))
    if any(v not in proposed for v in chosen):
        return NOT_PROPOSED
    return SAFE


def exact_fingerprint(g: GraphState) -> bytes:
    """Identity-aware key: equal only for graphs equal up to message creation order.

    Process and value nodes keep their creation index; messages are ordered
    by content.  Used to measure the state space without symmetry reduction.
    """
    fixed = [v for v in range(len(g)) if g.types[v] not in MESSAGE_TYPES]
    messages = [v for v in range(len(g)) if g.types[v] in MESSAGE_TYPES]

    outs: dict[int, list[tuple[str, int]]] = {m: [] for m in messages}
    for s, lab, t in g.edges:
        if s in outs:
            outs[s].append((lab, t))

    def key(m):
        return (g.types[m], g.attrs[m], tuple(sorted(outs[m])))

    order = fixed + sorted(messages, key=key)
    pos = {v: k for k, v in enumerate(order)}
    labels = tuple(g.node_label(v) for v in order)
    edges = tuple(sorted((pos[s], lab, pos[t]) for s, lab, t in g.edges))
    return repr((labels, edges)).encode()


def audit_state(g: GraphState) -> list[str]:
    """Reachable-state invariants of the graph encoding; returns the failures."""
    problems = []
    if len(g.nodes(COUNTERS)) != 1:
        problems.append("expected exactly one Counters node")
    if len(g.nodes(LEARNER)) != 1:
        problems.append("expected exactly one Learner node")
    for m in (v for t in MESSAGE_TYPES for v in g.nodes(t)):
        senders = g.targets(m, "sender")
        if len(senders) != 1 or g.types[senders[0]] not in PROCESS_TYPES:
            problems.append(f"message {m} lacks a unique process sender")
    if not is_initialized(g):
        return problems
    defaults = [v for v in g.nodes(VALUE) if g.attr(v, "default", False)]
    if len(defaults) != 1:
        problems.append(f"{len(defaults)} default values")
    for p in g.nodes(PROPOSER):
        prepares = [m for m in g.sources(p, "sender") if g.types[m] == PREPARE]
        if len(prepares) > 1:
            problems.append(f"proposer {p} sent {len(prepares)} Prepare messages")
        if g.attr(p, "isPrepared", False) and g.attr(p, "crnd") < 0:
            problems.append(f"proposer {p} prepared without a round")
    rounds = [g.attr(m, "rnd") for m in g.nodes(PREPARE)]
    if len(set(rounds)) != len(rounds):
        problems.append(f"duplicate Prepare rounds {sorted(rounds)}")
    next_rnd = g.attr(_counters(g), "nextRnd")
    if any(r >= next_rnd for r in rounds):
        problems.append(f"Prepare round not below nextRnd={next_rnd}")
    return problems


def audit_transition(before: GraphState, match: Match, after: GraphState) -> list[str]:
    """Step invariants; ``after`` must share node indices with ``before``."""
    problems = []
    if not is_initialized(before):
        return problems
    for a in before.nodes(ACCEPTOR):
        if after.attr(a, "rnd") < before.attr(a, "rnd"):
            problems.append(f"acceptor {a} rnd decreased under {match}")
    for p in before.nodes(PROPOSER):
        if after.attr(p, "isPrepared", False) and not before.attr(p, "isPrepared", False) and before.attr(p, "crnd") >= 0:
            problems.append(f"proposer {p} re-armed under {match}")
    if match.rule is RuleId.ON_PROMISE:
        (p,) = match.nodes
        if len(after.nodes(ACCEPT)) != len(before.nodes(ACCEPT)) + 1:
            problems.append(f"quorum step of proposer {p} did not send exactly one Accept")
    return problems
