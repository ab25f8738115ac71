"""Immutable typed attributed graphs.

Nodes carry a type name and a small attribute map (integers and flags);
edges are labelled and directed and form a set, so there is at most one
edge with a given (source, label, target).  Node indices are positional
only: two graphs that differ by a permutation of indices describe the same
configuration, which is what :mod:`paxos_mc.canon` exploits.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

AttrValue = int | bool
Attrs = tuple[tuple[str, AttrValue], ...]
Edge = tuple[int, str, int]


def _freeze_attrs(attrs: Mapping[str, AttrValue]) -> Attrs:
    return tuple(sorted(attrs.items()))


def format_attr(value: AttrValue) -> str:
    if value is True:
        return "true"
    if value is False:
        return "false"
    return str(value)


def node_text(node_type: str, attrs: Attrs) -> str:
    body = ",".join(f"{k}={format_attr(v)}" for k, v in attrs)
    return f"{node_type}{{{body}}}"


@dataclass(frozen=True)
class GraphState:
    types: tuple[str, ...]
    attrs: tuple[Attrs, ...]
    edges: frozenset[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        if len(self.types) != len(self.attrs):
            raise ValueError("types and attrs must have the same length")
        n = len(self.types)
        for s, _, t in self.edges:
            if not (0 <= s < n and 0 <= t < n):
                raise ValueError(f"edge endpoint out of range: {(s, t)}")

    @classmethod
    def build(
        cls,
        nodes: Iterable[tuple[str, Mapping[str, AttrValue]]],
        edges: Iterable[Edge] = (),
    ) -> "GraphState":
        nodes = list(nodes)
        return cls(
            tuple(t for t, _ in nodes),
            tuple(_freeze_attrs(a) for _, a in nodes),
            frozenset(edges),
        )

    def __len__(self) -> int:
        return len(self.types)

    def node_label(self, v: int) -> tuple[str, Attrs]:
        return self.types[v], self.attrs[v]

    def attr(self, v: int, name: str, default=None):
        for k, value in self.attrs[v]:
            if k == name:
                return value
        return default

    @cached_property
    def by_type(self) -> dict[str, list[int]]:
        index = defaultdict(list)
        for v, t in enumerate(self.types):
            index[t].append(v)
        return dict(index)

    @cached_property
    def _out(self) -> dict[tuple[int, str], list[int]]:
        index = defaultdict(list)
        for s, lab, t in sorted(self.edges):
            index[s, lab].append(t)
        return dict(index)

    @cached_property
    def _in(self) -> dict[tuple[int, str], list[int]]:
        index = defaultdict(list)
        for s, lab, t in sorted(self.edges):
            index[t, lab].append(s)
        return dict(index)

    def nodes(self, node_type: str) -> list[int]:
        return self.by_type.get(node_type, [])

    def targets(self, v: int, label: str) -> list[int]:
        return self._out.get((v, label), [])

    def sources(self, v: int, label: str) -> list[int]:
        return self._in.get((v, label), [])

    def target(self, v: int, label: str) -> int:
        """The unique ``label`` successor of ``v``."""
        ts = self.targets(v, label)
        if len(ts) != 1:
            raise ValueError(f"node {v} has {len(ts)} {label!r} edges, expected 1")
        return ts[0]

    def permuted(self, order: list[int]) -> "GraphState":
        """Graph whose node ``k`` is node ``order[k]`` of this graph."""
        pos = {v: k for k, v in enumerate(order)}
        return GraphState(
            tuple(self.types[v] for v in order),
            tuple(self.attrs[v] for v in order),
            frozenset((pos[s], lab, pos[t]) for s, lab, t in self.edges),
        )

    def edit(self) -> "GraphBuilder":
        return GraphBuilder(self)

    def dump(self) -> str:
        """One line per node, in index order, with outgoing edges."""
        lines = []
        for v in range(len(self)):
            outs = sorted((lab, t) for s, lab, t in self.edges if s == v)
            tail = "".join(f" {lab}->n{t}" for lab, t in outs)
            lines.append(f"n{v} {node_text(*self.node_label(v))}{tail}")
        return "\n".join(lines)

    def to_dot(self, name: str = "state") -> str:
        """DOT text with nodes in index order; callers pass a canonical form for stable output."""
        lines = [f"digraph {name} {{"]
        for v in range(len(self)):
            label = node_text(*self.node_label(v)).replace('"', '\\"')
            lines.append(f'  n{v} [label="{label}"];')
        for s, lab, t in sorted(self.edges):
            lines.append(f'  n{s} -> n{t} [label="{lab}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


class GraphBuilder:
    """Mutable scratch copy of a :class:`GraphState`; ``freeze`` yields a new state."""

    def __init__(self, base: GraphState | None = None):
        if base is None:
            self.types: list[str] = []
            self.attrs: list[dict[str, AttrValue]] = []
            self.edges: set[Edge] = set()
        else:
            self.types = list(base.types)
            self.attrs = [dict(a) for a in base.attrs]
            self.edges = set(base.edges)

    def add_node(self, node_type: str, **attrs: AttrValue) -> int:
        self.types.append(node_type)
        self.attrs.append(dict(attrs))
        return len(self.types) - 1

    def set_attr(self, v: int, name: str, value: AttrValue) -> None:
        self.attrs[v][name] = value

    def del_attr(self, v: int, name: str) -> None:
        self.attrs[v].pop(name, None)

    def add_edge(self, s: int, label: str, t: int) -> None:
        self.edges.add((s, label, t))

    def redirect(self, s: int, label: str, t: int) -> None:
        """Replace every ``label`` edge leaving ``s`` by a single edge to ``t``."""
        self.edges = {e for e in self.edges if not (e[0] == s and e[1] == label)}
        self.edges.add((s, label, t))

    def freeze(self) -> GraphState:
        return GraphState(
            tuple(self.types),
            tuple(_freeze_attrs(a) for a in self.attrs),
            frozenset(self.edges),
        )
