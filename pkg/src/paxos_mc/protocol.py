"""Protocol vocabulary shared by the graph and vector encodings."""

from __future__ import annotations

import enum
from dataclasses import dataclass

NO_ROUND = -1


class ConfigError(ValueError):
    """Raised for an invalid protocol instance; ``field`` names the culprit."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class MessageKind(enum.Enum):
    PREPARE = "Prepare"
    PROMISE = "Promise"
    ACCEPT = "Accept"
    LEARN = "Learn"


class Violation(enum.Enum):
    MULTIPLE_CHOSEN = "MultipleChosen"
    NOT_PROPOSED = "NotProposed"


@dataclass(frozen=True)
class Verdict:
    """Outcome of the safety check on one state.

    ``violation`` is ``None`` for a safe state and names exactly one
    violation kind otherwise.
    """

    violation: Violation | None = None

    @property
    def safe(self) -> bool:
        return self.violation is None

    def __str__(self) -> str:
        return "Safe" if self.violation is None else f"Unsafe({self.violation.value})"


SAFE = Verdict()
MULTIPLE_CHOSEN = Verdict(Violation.MULTIPLE_CHOSEN)
NOT_PROPOSED = Verdict(Violation.NOT_PROPOSED)


def majority_bound(num_acceptors: int) -> int:
    """Smallest quorum size for which the protocol is guaranteed safe: ceil((A+1)/2)."""
    return (num_acceptors + 2) // 2


@dataclass(frozen=True)
class ProtocolConfig:
    num_proposers: int
    num_acceptors: int
    maj: int

    @property
    def is_theoretically_safe(self) -> bool:
        return self.maj >= majority_bound(self.num_acceptors)

    def __str__(self) -> str:
        return f"P={self.num_proposers} A={self.num_acceptors} maj={self.maj}"


def validate_config(cfg: ProtocolConfig) -> ProtocolConfig:
    """Check that every count is a positive integer and return ``cfg`` unchanged."""
    for name in ("num_proposers", "num_acceptors", "maj"):
        value = getattr(cfg, name)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(name, f"expected an integer, got {value!r}")
        if value < 1:
            raise ConfigError(name, f"must be at least 1, got {value}")
    return cfg
