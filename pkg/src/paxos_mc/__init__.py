"""Explicit-state model checking of single-decree Paxos.

Two encodings of the same protocol instance are provided: a typed graph
encoding whose visited set is keyed by canonical graph certificates (so
states that differ only by a renaming of anonymous processes and values
are stored once) and a flat vector encoding with sorted multiset channels
keyed by exact equality.
"""

from paxos_mc.protocol import (
    ConfigError,
    MessageKind,
    ProtocolConfig,
    Verdict,
    Violation,
    majority_bound,
    validate_config,
)

__all__ = [
    "ConfigError",
    "MessageKind",
    "ProtocolConfig",
    "Verdict",
    "Violation",
    "majority_bound",
    "validate_config",
]
