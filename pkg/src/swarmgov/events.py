"""Append-only governance event log.

Every observable the engine produces lands here: operator commands, probe
traffic, metric snapshots, alerts, level transitions, gate decisions,
resets, isolations, checkpoints, and review flags. The log is the single
source of truth for replay, audits, and incident reports, so appends are
the only mutation and serialization is canonical (sorted keys, no
wall-clock timestamps, simulated time only).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Sequence

EVENT_KINDS = frozenset(
    {
        "command",
        "probe",
        "metric-snapshot",
        "alert",
        "level-transition",
        "gate-decision",
        "reset",
        "isolation",
        "checkpoint",
        "pigr-flag",
    }
)

ACTOR_OPERATOR = "operator"
ACTOR_GOVERNANCE = "governance"
ACTOR_ADVERSARY = "adversary"
ACTOR_SCRIPT = "script"


def agent_actor(agent_id: str) -> str:
    return f"agent:{agent_id}"


@dataclass(frozen=True)
class EventDraft:
    """An event not yet assigned its position in the log."""

    kind: str
    payload: Mapping[str, Any]
    actor: str

    def __post_init__(self) -> None:
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")


@dataclass(frozen=True)
class GovernanceEvent:
    seq: int
    timestamp: int
    kind: str
    payload: Mapping[str, Any]
    actor: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "t": self.timestamp,
            "kind": self.kind,
            "actor": self.actor,
            "payload": _plain(self.payload),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GovernanceEvent":
        return cls(
            seq=int(data["seq"]),
            timestamp=int(data["t"]),
            kind=str(data["kind"]),
            payload=dict(data["payload"]),
            actor=str(data["actor"]),
        )


def _plain(value: Any) -> Any:
    """Normalize payload values into JSON-stable plain structures."""
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (set, frozenset)):
        return sorted(_plain(v) for v in value)
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, (int, float, str)):
        return value
    raise TypeError(f"payload value of type {type(value).__name__} not serializable")


class EventLog:
    """Strictly ordered, append-only event sequence."""

    def __init__(self) -> None:
        self._events: list[GovernanceEvent] = []

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[GovernanceEvent]:
        return iter(self._events)

    @property
    def events(self) -> tuple[GovernanceEvent, ...]:
        return tuple(self._events)

    def append(self, draft: EventDraft, timestamp: int) -> GovernanceEvent:
        if self._events and timestamp < self._events[-1].timestamp:
            raise ValueError(
                f"timestamp {timestamp} precedes log head "
                f"{self._events[-1].timestamp}"
            )
        event = GovernanceEvent(
            seq=len(self._events),
            timestamp=timestamp,
            kind=draft.kind,
            payload=_plain(draft.payload),
            actor=draft.actor,
        )
        self._events.append(event)
        return event

    def window(self, start: int, end: int) -> tuple[GovernanceEvent, ...]:
        """All events with start <= t <= end, in log order."""
        return tuple(e for e in self._events if start <= e.timestamp <= end)

    def of_kind(self, *kinds: str) -> tuple[GovernanceEvent, ...]:
        unknown = set(kinds) - EVENT_KINDS
        if unknown:
            raise ValueError(f"unknown event kinds: {sorted(unknown)}")
        return tuple(e for e in self._events if e.kind in kinds)

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(e.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"
            for e in self._events
        )

    def write_jsonl(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str) -> "EventLog":
        log = cls()
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"log line {line_no} is not valid JSON") from exc
            event = GovernanceEvent.from_dict(data)
            if event.seq != len(log._events):
                raise ValueError(
                    f"log line {line_no}: sequence {event.seq} breaks append order"
                )
            log._events.append(event)
        return log

    @classmethod
    def read_jsonl(cls, path: str) -> "EventLog":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_jsonl(handle.read())
