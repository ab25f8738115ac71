import random
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paxos_mc import graph_model as gm
from paxos_mc.graph import GraphBuilder
from paxos_mc.protocol import ProtocolConfig, Violation
from paxos_mc.vector_model import (
    AcceptorVars,
    Phase,
    ProposerVars,
    audit_state,
    audit_transition,
    check_safety_vector,
    initial_vector,
    pick_value,
    vector_fingerprint,
    vector_successors,
)


def test_initial_vector_three_four_two():
    s = initial_vector(ProtocolConfig(3, 4, 2))
    assert [p.crnd for p in s.proposers] == [0, 1, 2]
    assert [p.myval for p in s.proposers] == [0, 1, 2]
    assert all(a == AcceptorVars(-1, -1, -1) for a in s.acceptors) and len(s.acceptors) == 4


def test_initial_vector_small():
    s = initial_vector(ProtocolConfig(1, 1, 1))
    assert s.proposers == (ProposerVars(0, 0, Phase.BEFORE_PREPARE),)
    s = initial_vector(ProtocolConfig(2, 3, 2))
    assert len(s.proposers) == 2 and len(s.acceptors) == 3
    assert s.prepare == s.promise == s.accept == s.learn == ()
    assert s.mcount == () and s.chosen == ()


def test_fresh_state_only_prepares():
    succs = vector_successors(initial_vector(ProtocolConfig(2, 3, 2)))
    assert [str(lab) for lab, _ in succs] == ["ProposerPrepare(0)", "ProposerPrepare(1)"]
    _, after = succs[0]
    assert after.prepare == ((0, 0), (1, 0), (2, 0))
    assert after.proposers[0].phase is Phase.AWAITING_QUORUM


def quorum_ready_state():
    s = initial_vector(ProtocolConfig(2, 3, 2))
    return replace(
        s,
        proposers=(ProposerVars(0, 0, Phase.AWAITING_QUORUM), s.proposers[1]),
        acceptors=(AcceptorVars(0, -1, -1), AcceptorVars(0, -1, -1), AcceptorVars(-1, -1, -1)),
        prepare=((2, 0),),
        promise=((0, -1, -1), (0, -1, -1)),
    )


def test_quorum_leaves_promise_channel():
    s = quorum_ready_state()
    quorum = [(lab, t) for lab, t in vector_successors(s) if lab.kind == "ProposerQuorum"]
    assert len(quorum) == 1
    label, after = quorum[0]
    assert label.process == 0
    assert after.promise == s.promise
    assert after.accept == ((0, 0, 0), (1, 0, 0), (2, 0, 0))
    assert after.proposers[0].phase is Phase.DONE
    assert audit_transition(s, label, after) == []


def test_terminal_state_has_no_successors():
    s = initial_vector(ProtocolConfig(1, 1, 1))
    while (succs := vector_successors(s)):
        s = succs[0][1]
    assert vector_successors(s) == []
    assert s.chosen == (0,)


def settled(cfg):
    """Initial state with every proposer already done, so only receives are enabled."""
    s = initial_vector(ProtocolConfig(*cfg))
    return replace(s, proposers=tuple(p._replace(phase=Phase.DONE) for p in s.proposers))


def test_acceptor_steps():
    s = replace(settled((1, 2, 2)), prepare=((0, 0), (0, 0), (1, 0)))
    succs = vector_successors(s)
    # equal tuples collapse: one receive per distinct message
    assert [str(lab) for lab, _ in succs] == ["AcceptorPrepare(0,(0,0))", "AcceptorPrepare(1,(1,0))"]
    _, after = succs[0]
    assert after.prepare == ((0, 0), (1, 0))
    assert after.promise == ((0, -1, -1),)
    assert after.acceptors[0].rnd == 0

    s = replace(s, prepare=(), acceptors=(AcceptorVars(1, -1, -1), AcceptorVars(0, -1, -1)), accept=((0, 0, 0), (1, 0, 0)))
    succs = vector_successors(s)
    assert [str(lab) for lab, _ in succs] == ["AcceptorAccept(1,(1,0,0))"]
    _, after = succs[0]
    assert after.acceptors[1] == AcceptorVars(0, 0, 0)
    assert after.learn == ((0, 0),)


def test_learner_caps_count():
    s = replace(settled((1, 3, 2)), learn=((0, 0), (0, 0), (0, 0)))
    for _ in range(3):
        (label, s), = vector_successors(s)
        assert audit_state(s) == []
    assert s.mcount == ((0, 2),)
    assert s.chosen == (0,)


def test_check_safety_vector():
    s = initial_vector(ProtocolConfig(2, 3, 2))
    assert check_safety_vector(replace(s, chosen=(0, 1))).violation is Violation.MULTIPLE_CHOSEN
    assert check_safety_vector(s).safe
    assert check_safety_vector(replace(s, chosen=(0,))).safe
    assert check_safety_vector(replace(s, chosen=(7,))).violation is Violation.NOT_PROPOSED


def test_fingerprint():
    s = initial_vector(ProtocolConfig(2, 3, 2))
    assert vector_fingerprint(s) == vector_fingerprint(initial_vector(ProtocolConfig(2, 3, 2)))
    assert vector_fingerprint(replace(s, mcount=((0, 1),))) != vector_fingerprint(replace(s, mcount=((0, 2),)))
    a = replace(s, acceptors=(AcceptorVars(0, -1, -1), AcceptorVars(-1, -1, -1), AcceptorVars(-1, -1, -1)))
    b = replace(s, acceptors=(AcceptorVars(-1, -1, -1), AcceptorVars(0, -1, -1), AcceptorVars(-1, -1, -1)))
    assert vector_fingerprint(a) != vector_fingerprint(b)


@given(st.integers(0, 10_000), st.sampled_from([(2, 3, 2), (2, 3, 1), (1, 3, 2), (2, 2, 1)]))
@settings(max_examples=60, deadline=None)
def test_random_walk_keeps_invariants(seed, cfg):
    rng = random.Random(seed)
    s = initial_vector(ProtocolConfig(*cfg))
    while (succs := vector_successors(s)):
        labels = [lab.sort_key() for lab, _ in succs]
        assert labels == sorted(labels)
        label, nxt = rng.choice(succs)
        assert audit_transition(s, label, nxt) == []
        assert audit_state(nxt) == []
        s = nxt


PromiseSets = st.lists(
    st.one_of(st.just((-1, "d")), st.tuples(st.integers(0, 3), st.just("V"))),
    min_size=1,
    max_size=4,
)


@given(PromiseSets)
def test_value_pick_agrees_with_graph_model(promises):
    # one value per prior round, as in any reachable state
    def value_of(prnd):
        return -1 if prnd == -1 else 10 + prnd

    vector_msgs = [(5, prnd, value_of(prnd)) for prnd, _ in promises]
    vector_pick = pick_value(vector_msgs, own=99)

    b = GraphBuilder()
    b.add_node("Counters", maj=1, nextRnd=6)
    p = b.add_node("Proposer", crnd=5, isPrepared=True)
    own = b.add_node("Value")
    b.add_edge(p, "myval", own)
    node_value = {-1: b.add_node("Value", default=True)}
    for prnd in range(4):
        node_value[10 + prnd] = b.add_node("Value")
    node_value[99] = own
    for prnd, _ in promises:
        a = b.add_node("Acceptor", rnd=5, prnd=prnd)
        b.add_edge(a, "aval", node_value[value_of(prnd)])
        m = b.add_node("Promise", rnd=5, prnd=prnd)
        b.add_edge(m, "sender", a)
        b.add_edge(m, "pval", node_value[value_of(prnd)])
    g = b.freeze()
    graph_pick = gm.pick_value(g, g.nodes("Promise"), own)
    assert graph_pick == node_value[vector_pick]


def test_pick_value_rejects_disagreeing_promises():
    with pytest.raises(AssertionError):
        pick_value([(3, 1, 0), (3, 1, 1)], own=2)
