"""Vector encoding of Paxos, after a Promela-style model.

A state is a flat record of process locals plus four channels.  Channels
are multisets stored as sorted tuples: sending inserts in order, receiving
takes any matching element.  Equal messages are therefore indistinguishable
and message order never splits states.  Process identities are fixed
(proposer ``i`` owns round ``i`` and value ``i``) and are not reduced
modulo symmetry.

Message tuples per channel:

* prepare ``(acceptor, rnd)``
* promise ``(rnd, prnd, pval)``
* accept  ``(acceptor, rnd, val)``
* learn   ``(rnd, lval)``
"""

from __future__ import annotations

import bisect
import enum
from dataclasses import dataclass, replace
from typing import NamedTuple

from paxos_mc.protocol import (
    MULTIPLE_CHOSEN,
    NO_ROUND,
    NOT_PROPOSED,
    SAFE,
    ProtocolConfig,
    Verdict,
)

DEFAULT_VALUE = -1
CHANNELS = ("prepare", "promise", "accept", "learn")


class Phase(enum.IntEnum):
    BEFORE_PREPARE = 0
    AWAITING_QUORUM = 1
    DONE = 2

    def __str__(self) -> str:
        return {0: "BeforePrepare", 1: "AwaitingQuorum", 2: "Done"}[self.value]


class ProposerVars(NamedTuple):
    crnd: int
    myval: int
    phase: Phase


class AcceptorVars(NamedTuple):
    rnd: int
    vrnd: int
    vval: int


@dataclass(frozen=True)
class VectorState:
    maj: int
    proposers: tuple[ProposerVars, ...]
    acceptors: tuple[AcceptorVars, ...]
    mcount: tuple[tuple[int, int], ...] = ()
    chosen: tuple[int, ...] = ()
    prepare: tuple[tuple[int, int], ...] = ()
    promise: tuple[tuple[int, int, int], ...] = ()
    accept: tuple[tuple[int, int, int], ...] = ()
    learn: tuple[tuple[int, int], ...] = ()

    def count(self, rnd: int) -> int:
        return dict(self.mcount).get(rnd, 0)

    def dump(self) -> str:
        lines = [f"proposer[{i}] crnd={p.crnd} myval={p.myval} phase={p.phase}" for i, p in enumerate(self.proposers)]
        lines += [f"acceptor[{i}] rnd={a.rnd} vrnd={a.vrnd} vval={a.vval}" for i, a in enumerate(self.acceptors)]
        lines.append(f"learner mcount={dict(self.mcount)} chosen={list(self.chosen)}")
        for name in CHANNELS:
            lines.append(f"chan {name} {list(getattr(self, name))}")
        return "\n".join(lines)


_KIND_ORDER = {k: i for i, k in enumerate(
    ("ProposerPrepare", "ProposerQuorum", "AcceptorPrepare", "AcceptorAccept", "LearnerLearn")
)}


@dataclass(frozen=True)
class VectorLabel:
    kind: str
    process: int | None = None
    message: tuple[int, ...] | None = None

    def sort_key(self):
        return (_KIND_ORDER[self.kind], -1 if self.process is None else self.process, self.message or ())

    def __str__(self) -> str:
        args = []
        if self.process is not None:
            args.append(str(self.process))
        if self.message is not None:
            args.append(str(self.message).replace(" ", ""))
        return f"{self.kind}({','.join(args)})"


def initial_vector(cfg: ProtocolConfig) -> VectorState:
    return VectorState(
        maj=cfg.maj,
        proposers=tuple(ProposerVars(i, i, Phase.BEFORE_PREPARE) for i in range(cfg.num_proposers)),
        acceptors=tuple(AcceptorVars(NO_ROUND, NO_ROUND, DEFAULT_VALUE) for _ in range(cfg.num_acceptors)),
    )


def _insert(channel: tuple, *msgs: tuple) -> tuple:
    items = list(channel)
    for m in msgs:
        bisect.insort(items, m)
    return tuple(items)


def _remove(channel: tuple, msg: tuple) -> tuple:
    items = list(channel)
    items.remove(msg)
    return tuple(items)


def _set(seq: tuple, i: int, value) -> tuple:
    return seq[:i] + (value,) + seq[i + 1:]


def pick_value(promises: list[tuple[int, int, int]], own: int) -> int:
    """Value of the promise with the highest prior round; ``own`` when none was accepted before."""
    top = max(prnd for _, prnd, _ in promises)
    if top == NO_ROUND:
        return own
    values = {pval for _, prnd, pval in promises if prnd == top}
    if len(values) != 1:
        raise AssertionError(f"promises for prior round {top} disagree on the value: {sorted(values)}")
    return values.pop()


def vector_successors(s: VectorState) -> list[tuple[VectorLabel, VectorState]]:
    out = []
    n_acc = len(s.acceptors)

    for i, p in enumerate(s.proposers):
        if p.phase is Phase.BEFORE_PREPARE:
            out.append((
                VectorLabel("ProposerPrepare", i),
                replace(
                    s,
                    proposers=_set(s.proposers, i, p._replace(phase=Phase.AWAITING_QUORUM)),
                    prepare=_insert(s.prepare, *((a, p.crnd) for a in range(n_acc))),
                ),
            ))
        elif p.phase is Phase.AWAITING_QUORUM:
            mine = [m for m in s.promise if m[0] == p.crnd]
            if len(mine) >= s.maj:
                val = pick_value(mine, p.myval)
                out.append((
                    VectorLabel("ProposerQuorum", i),
                    replace(
                        s,
                        proposers=_set(s.proposers, i, p._replace(phase=Phase.DONE)),
                        accept=_insert(s.accept, *((a, p.crnd, val) for a in range(n_acc))),
                    ),
                ))

    for a, acc in enumerate(s.acceptors):
        for msg in sorted(set(s.prepare)):
            if msg[0] == a and msg[1] > acc.rnd:
                r = msg[1]
                out.append((
                    VectorLabel("AcceptorPrepare", a, msg),
                    replace(
                        s,
                        acceptors=_set(s.acceptors, a, acc._replace(rnd=r)),
                        prepare=_remove(s.prepare, msg),
                        promise=_insert(s.promise, (r, acc.vrnd, acc.vval)),
                    ),
                ))
        for msg in sorted(set(s.accept)):
            if msg[0] == a and msg[1] >= acc.rnd:
                _, r, v = msg
                out.append((
                    VectorLabel("AcceptorAccept", a, msg),
                    replace(
                        s,
                        acceptors=_set(s.acceptors, a, AcceptorVars(r, r, v)),
                        accept=_remove(s.accept, msg),
                        learn=_insert(s.learn, (r, v)),
                    ),
                ))

    for msg in sorted(set(s.learn)):
        r, v = msg
        counts = dict(s.mcount)
        chosen = s.chosen
        if counts.get(r, 0) < s.maj:
            counts[r] = counts.get(r, 0) + 1
        if counts.get(r, 0) == s.maj and v not in chosen:
            chosen = tuple(sorted(chosen + (v,)))
        out.append((
            VectorLabel("LearnerLearn", None, msg),
            replace(s, mcount=tuple(sorted(counts.items())), chosen=chosen, learn=_remove(s.learn, msg)),
        ))

    out.sort(key=lambda pair: pair[0].sort_key())
    return out


def check_safety_vector(s: VectorState) -> Verdict:
    if len(s.chosen) >= 2:
        return MULTIPLE_CHOSEN
    proposed = {p.myval for p in s.proposers}
    if any(v not in proposed for v in s.chosen):
        return NOT_PROPOSED
    return SAFE


def vector_fingerprint(s: VectorState) -> bytes:
    fields = (
        s.maj,
        tuple((p.crnd, p.myval, int(p.phase)) for p in s.proposers),
        tuple(tuple(a) for a in s.acceptors),
        s.mcount,
        s.chosen,
        s.prepare,
        s.promise,
        s.accept,
        s.learn,
    )
    return repr(fields).encode()


def audit_state(s: VectorState) -> list[str]:
    problems = []
    for name in CHANNELS:
        chan = getattr(s, name)
        if list(chan) != sorted(chan):
            problems.append(f"channel {name} is not sorted")
    for r, c in s.mcount:
        if c > s.maj:
            problems.append(f"mcount[{r}]={c} exceeds maj={s.maj}")
    rounds = [p.crnd for p in s.proposers]
    if len(set(rounds)) != len(rounds):
        problems.append("proposer rounds are not distinct")
    for p in s.proposers:
        # one broadcast per proposer: never more than one prepare per acceptor and round
        sent = [m for m in s.prepare if m[1] == p.crnd]
        if len(sent) != len(set(sent)) or len(sent) > len(s.acceptors):
            problems.append(f"proposer round {p.crnd} has duplicate prepares")
        if p.phase is Phase.BEFORE_PREPARE and sent:
            problems.append(f"prepare for round {p.crnd} before the proposer prepared")
    return problems


def audit_transition(before: VectorState, label: VectorLabel, after: VectorState) -> list[str]:
    problems = []
    for i, (a0, a1) in enumerate(zip(before.acceptors, after.acceptors)):
        if a1.rnd < a0.rnd:
            problems.append(f"acceptor {i} rnd decreased under {label}")
    for i, (p0, p1) in enumerate(zip(before.proposers, after.proposers)):
        if p1.phase < p0.phase:
            problems.append(f"proposer {i} phase went backwards under {label}")
    n_acc = len(before.acceptors)
    if label.kind == "ProposerQuorum":
        if after.promise != before.promise:
            problems.append(f"{label} changed the promise channel")
        if len(after.accept) - len(before.accept) != n_acc:
            problems.append(f"{label} did not broadcast to every acceptor")
    if label.kind == "ProposerPrepare" and len(after.prepare) - len(before.prepare) != n_acc:
        problems.append(f"{label} did not broadcast to every acceptor")
    return problems
