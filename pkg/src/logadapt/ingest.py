"""Raw log ingestion and the canonical event stream.

Raw supercomputer logs (alert-label format) are parsed line by line,
normalized into chronological order, and serialized as the canonical
JSON-lines format that every other stage consumes:

    {"seq": int, "ts": int, "label": str, "component": str,
     "level": str, "message": str}

``"label": "-"`` marks a normal event; any other label is anomalous.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MalformedLine, SchemaError

# Tokens recognized as severity levels when splitting the free-form tail of
# a raw line into component / level / message.
SEVERITY_TOKENS = frozenset(
    {
        "info", "notice", "debug", "warn", "warning", "error", "err",
        "fatal", "severe", "failure", "crit", "critical", "alert", "emerg",
    }
)

# How deep into the tail the severity token may sit. The alert-label
# datasets put it within the first few tokens (e.g. "RAS KERNEL INFO ...").
_SEVERITY_SCAN_LIMIT = 4

_PREFIX_FIELDS = 6  # label, epoch, date, node, fine timestamp, location

_CANONICAL_KEYS = ("seq", "ts", "label", "component", "level", "message")

NORMAL_LABEL = "-"


@dataclass(frozen=True)
class RawLogRecord:
    """One parsed raw line; ``node`` is kept but never enters event text."""

    label: str
    timestamp: int
    node: str
    component: str
    level: str
    message: str


@dataclass(frozen=True)
class LogEvent:
    """One canonical event; ``seq`` is its position within its corpus."""

    seq: int
    timestamp: int
    label: str
    component: str
    level: str
    message: str

    @property
    def is_anomaly(self) -> bool:
        return self.label != NORMAL_LABEL

    @property
    def text(self) -> str:
        """Event text: component, severity level, and message concatenated."""
        return f"{self.component} {self.level} {self.message}"


@dataclass
class LogSplit:
    """A run of consecutive events from one system, in chronological order."""

    system_id: str
    start_seq: int
    events: list[LogEvent] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.events)

    def anomaly_count(self) -> int:
        return sum(1 for e in self.events if e.is_anomaly)

    def slice(self, start: int, length: int) -> "LogSplit":
        """Sub-split of ``length`` events beginning at corpus offset ``start``."""
        base = start - self.start_seq
        if base < 0 or base + length > len(self.events):
            raise IndexError(f"slice [{start}, {start + length}) outside split")
        return LogSplit(self.system_id, start, self.events[base : base + length])


def parse_supercomputer_line(line: str) -> RawLogRecord:
    """Parse one line of the whitespace-delimited alert-label format.

    The fixed prefix is six fields: label, epoch seconds, date, node, fine
    timestamp, location. The remaining tail is split heuristically: the
    first severity token found within the leading tail positions marks the
    level, the token just before it the component, and the rest the
    message. Tails without a recognizable severity fall back to treating
    the first token as the component with level "UNKNOWN".

    Raises MalformedLine when the prefix (plus at least one tail token) is
    missing or the epoch field is not a non-negative integer.
    """
    fields = line.split()
    if len(fields) < _PREFIX_FIELDS + 1:
        raise MalformedLine(f"expected >= {_PREFIX_FIELDS + 1} fields, got {len(fields)}")
    label = fields[0]
    try:
        timestamp = int(fields[1])
    except ValueError:
        raise MalformedLine(f"epoch field {fields[1]!r} is not an integer") from None
    if timestamp < 0:
        raise MalformedLine(f"negative epoch {timestamp}")
    node = fields[3]
    tail = fields[_PREFIX_FIELDS:]

    level_idx = -1
    for i, token in enumerate(tail[:_SEVERITY_SCAN_LIMIT]):
        if token.lower() in SEVERITY_TOKENS:
            level_idx = i
            break
    if level_idx >= 1:
        component = tail[level_idx - 1]
        level = tail[level_idx]
        message = " ".join(tail[level_idx + 1 :])
    else:
        component = tail[0]
        level = "UNKNOWN"
        message = " ".join(tail[1:])
    return RawLogRecord(label, timestamp, node, component, level, message)


def parse_raw_file(path: str | Path, encoding: str = "utf-8") -> tuple[list[RawLogRecord], int]:
    """Parse a raw log file; malformed lines are skipped and counted."""
    records: list[RawLogRecord] = []
    skipped = 0
    with open(path, encoding=encoding, errors="replace") as handle:
        for line in handle:
            if not line.strip():
                skipped += 1
                continue
            try:
                records.append(parse_supercomputer_line(line))
            except MalformedLine:
                skipped += 1
    return records, skipped


def normalize_corpus(records: list[RawLogRecord]) -> list[LogEvent]:
    """Drop null records, sort chronologically, and compose event text.

    A record is null when its component, level, or message is empty after
    trimming. The sort is stable, so records with equal timestamps keep
    their original relative order. ``seq`` is reassigned 0..n-1.
    """
    kept = [
        r
        for r in records
        if r.component.strip() and r.level.strip() and r.message.strip()
    ]
    kept.sort(key=lambda r: r.timestamp)
    return [
        LogEvent(
            seq=i,
            timestamp=r.timestamp,
            label=r.label,
            component=r.component,
            level=r.level,
            message=r.message,
        )
        for i, r in enumerate(kept)
    ]


def load_canonical(path: str | Path, system_id: str | None = None) -> LogSplit:
    """Load a canonical JSON-lines file into a LogSplit.

    Events are returned in file order with ``seq`` assigned 0..n-1.
    Raises SchemaError naming the offending line when a required key is
    missing or has the wrong type.
    """
    path = Path(path)
    events: list[LogEvent] = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            for key in _CANONICAL_KEYS:
                if key not in row:
                    raise SchemaError(f"line {lineno}: missing required key {key!r}")
            if not isinstance(row["ts"], int) or not isinstance(row["seq"], int):
                raise SchemaError(f"line {lineno}: 'seq' and 'ts' must be integers")
            for key in ("label", "component", "level", "message"):
                if not isinstance(row[key], str):
                    raise SchemaError(f"line {lineno}: {key!r} must be a string")
            events.append(
                LogEvent(
                    seq=len(events),
                    timestamp=row["ts"],
                    label=row["label"],
                    component=row["component"],
                    level=row["level"],
                    message=row["message"],
                )
            )
    return LogSplit(system_id or path.stem, 0, events)


def write_canonical(events: list[LogEvent] | LogSplit, path: str | Path) -> None:
    """Serialize events to the canonical JSON-lines format."""
    if isinstance(events, LogSplit):
        events = events.events
    with open(path, "w", encoding="utf-8") as handle:
        for event in events:
            handle.write(canonical_line(event))
            handle.write("\n")


def canonical_line(event: LogEvent) -> str:
    """The canonical one-line JSON serialization of one event."""
    return json.dumps(
        {
            "seq": event.seq,
            "ts": event.timestamp,
            "label": event.label,
            "component": event.component,
            "level": event.level,
            "message": event.message,
        },
        ensure_ascii=False,
        separators=(",", ":"),
    )
