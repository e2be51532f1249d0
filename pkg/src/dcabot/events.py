"""Trace data model, CSV trace I/O and time-ordered log merging.

Trace line grammar (UTF-8, ``#`` starts a comment line)::

    ts_ms,process_id,process_name,call_category,call_name,direction,seq

``direction`` is left empty for non-communication calls.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

COMMUNICATION = "communication"
FILE_ACCESS = "file_access"
KEYBOARD_STATE = "keyboard_state"

CALL_INVENTORY: dict[str, frozenset[str]] = {
    COMMUNICATION: frozenset({"socket", "send", "sendto", "recv", "recvfrom"}),
    FILE_ACCESS: frozenset({"CreateFile", "OpenFile", "ReadFile", "WriteFile"}),
    KEYBOARD_STATE: frozenset(
        {"GetAsyncKeyState", "GetKeyboardState", "GetKeyNameText", "keybd_event"}
    ),
}

OUTBOUND = "outbound"
INBOUND = "inbound"
# implied direction of each communication call
CALL_DIRECTION = {
    "socket": OUTBOUND,
    "send": OUTBOUND,
    "sendto": OUTBOUND,
    "recv": INBOUND,
    "recvfrom": INBOUND,
}

TRACE_HEADER = "# ts_ms,process_id,process_name,call_category,call_name,direction,seq"

ANTIGEN = "antigen"
SIGNAL = "signal"
_KIND_ORDER = {ANTIGEN: 0, SIGNAL: 1}


class TraceError(ValueError):
    """Base class for trace ingestion failures."""


class TraceParseError(TraceError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class TraceValidationError(TraceError):
    def __init__(self, message: str, lineno: int | None = None):
        prefix = f"line {lineno}: " if lineno is not None else ""
        super().__init__(prefix + message)
        self.lineno = lineno


class MergeOrderError(TraceError):
    """Raised when an input to :func:`merge_sorted` is not sorted."""

    def __init__(self, source: str, index: int):
        super().__init__(f"{source} input is not sorted by (ts, seq) at index {index}")
        self.source = source
        self.index = index


@dataclass(frozen=True, slots=True)
class EventRecord:
    ts: int
    process_id: str
    process_name: str
    call_category: str
    call_name: str
    direction: str | None
    seq: int

    def __post_init__(self) -> None:
        validate_record(self)

    @property
    def is_outbound(self) -> bool:
        return self.call_category == COMMUNICATION and self._direction() == OUTBOUND

    @property
    def is_inbound(self) -> bool:
        return self.call_category == COMMUNICATION and self._direction() == INBOUND

    def _direction(self) -> str:
        return self.direction or CALL_DIRECTION[self.call_name]

    def to_line(self) -> str:
        return ",".join(
            (
                str(self.ts),
                self.process_id,
                self.process_name,
                self.call_category,
                self.call_name,
                self.direction or "",
                str(self.seq),
            )
        )


@dataclass(frozen=True, slots=True)
class AntigenEvent:
    """One intercepted call, stamped with the id of the calling process."""

    ts: int
    antigen_type: str
    call_name: str
    seq: int = 0

    @classmethod
    def from_record(cls, rec: EventRecord) -> AntigenEvent:
        return cls(ts=rec.ts, antigen_type=rec.process_id, call_name=rec.call_name, seq=rec.seq)


class DatasetItem(NamedTuple):
    ts: int
    kind: str
    seq: int
    payload: AntigenEvent | EventRecord


@dataclass(frozen=True)
class Dataset:
    events: tuple[DatasetItem, ...] = ()
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.events)

    @property
    def records(self) -> list[EventRecord]:
        return [it.payload for it in self.events if it.kind == SIGNAL]

    @property
    def antigens(self) -> list[AntigenEvent]:
        return [it.payload for it in self.events if it.kind == ANTIGEN]

    def process_names(self) -> dict[str, str]:
        """Map process_id -> process_name for every process in the trace."""
        names: dict[str, str] = {}
        for rec in self.records:
            names.setdefault(rec.process_id, rec.process_name)
        return names


def validate_record(rec: EventRecord, lineno: int | None = None) -> None:
    if not isinstance(rec.ts, int) or rec.ts < 0:
        raise TraceValidationError(f"ts must be a non-negative integer, got {rec.ts!r}", lineno)
    calls = CALL_INVENTORY.get(rec.call_category)
    if calls is None:
        raise TraceValidationError(f"unknown call_category {rec.call_category!r}", lineno)
    if rec.call_name not in calls:
        raise TraceValidationError(
            f"call_name {rec.call_name!r} is not a {rec.call_category} call", lineno
        )
    if rec.direction is not None:
        if rec.call_category != COMMUNICATION:
            raise TraceValidationError(
                f"direction given for non-communication call {rec.call_name!r}", lineno
            )
        if rec.direction != CALL_DIRECTION[rec.call_name]:
            raise TraceValidationError(
                f"direction {rec.direction!r} inconsistent with {rec.call_name!r}", lineno
            )
    if not rec.process_id:
        raise TraceValidationError("empty process_id", lineno)


def parse_line(line: str, lineno: int) -> EventRecord:
    parts = line.split(",")
    if len(parts) != 7:
        raise TraceParseError(lineno, f"expected 7 fields, got {len(parts)}")
    ts_s, pid, pname, category, call, direction, seq_s = (p.strip() for p in parts)
    try:
        ts = int(ts_s)
        seq = int(seq_s)
    except ValueError:
        raise TraceParseError(lineno, "ts_ms and seq must be integers") from None
    if direction not in ("", OUTBOUND, INBOUND):
        raise TraceParseError(lineno, f"bad direction {direction!r}")
    try:
        return EventRecord(ts, pid, pname, category, call, direction or None, seq)
    except TraceValidationError as exc:
        raise TraceValidationError(str(exc), lineno) from None


def parse_lines(lines: Iterable[str]) -> list[EventRecord]:
    records: list[EventRecord] = []
    last_seq = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        rec = parse_line(line, lineno)
        if last_seq is not None and rec.seq <= last_seq:
            raise TraceValidationError(f"seq {rec.seq} does not increase", lineno)
        last_seq = rec.seq
        records.append(rec)
    return records


def parse_trace(path: str | Path) -> list[EventRecord]:
    """Read a trace file; records come back in file order."""
    with open(path, encoding="utf-8") as fh:
        return parse_lines(fh)


def serialize_trace(records: Iterable[EventRecord]) -> str:
    lines = [TRACE_HEADER]
    lines.extend(rec.to_line() for rec in records)
    return "\n".join(lines) + "\n"


def _check_sorted(items: Sequence, source: str) -> None:
    for i in range(1, len(items)):
        a, b = items[i - 1], items[i]
        if (b.ts, b.seq) < (a.ts, a.seq):
            raise MergeOrderError(source, i)


def merge_sorted(
    antigen_log: Sequence[AntigenEvent],
    signal_events: Sequence[EventRecord],
    meta: dict | None = None,
) -> Dataset:
    """Merge the antigen and signal logs into one time-ordered Dataset.

    On equal timestamps antigen items come first, then items are ordered by
    their source sequence number.
    """
    _check_sorted(antigen_log, "antigen")
    _check_sorted(signal_events, "signal")
    antigen_items = (DatasetItem(a.ts, ANTIGEN, a.seq, a) for a in antigen_log)
    signal_items = (DatasetItem(r.ts, SIGNAL, r.seq, r) for r in signal_events)
    merged = heapq.merge(
        antigen_items, signal_items, key=lambda it: (it.ts, _KIND_ORDER[it.kind], it.seq)
    )
    return Dataset(events=tuple(merged), meta=dict(meta or {}))


def build_dataset(records: Iterable[EventRecord], meta: dict | None = None) -> Dataset:
    """Every record is both a signal-relevant event and one antigen."""
    ordered = sorted(records, key=lambda r: (r.ts, r.seq))
    antigens = [AntigenEvent.from_record(r) for r in ordered]
    return merge_sorted(antigens, ordered, meta)


def meta_path(trace_path: str | Path) -> Path:
    p = Path(trace_path)
    return p.with_name(p.name + ".meta.json")


def write_dataset(dataset: Dataset, path: str | Path) -> Path:
    """Write the trace plus its JSON meta sidecar; returns the trace path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_trace(dataset.records), encoding="utf-8")
    meta_path(path).write_text(
        json.dumps(dataset.meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return path


def read_dataset(path: str | Path) -> Dataset:
    records = parse_trace(path)
    mp = meta_path(path)
    meta = json.loads(mp.read_text(encoding="utf-8")) if mp.exists() else {}
    meta.setdefault("sources", [str(Path(path).name)])
    return build_dataset(records, meta)
