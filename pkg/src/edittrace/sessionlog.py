"""Canonical session-log record types plus JSON / NDJSON parsing and serialization.

A session log is one JSON document per coding session::

    {
      "session_id": "...",
      "metadata": {"task_id": "...", "condition": "...", "duration_ms": 0},
      "starter": {"<file_path>": "<initial text>"},
      "events": [{"type": "edit" | "chat" | "test_run", ...}, ...]
    }

The same event records stream as NDJSON, one object per line, preceded by a
``session_start`` header record.  The authoritative schema lives in
``schemas/session_log.schema.json``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Union

EDIT_KINDS = ("insert", "delete", "replace", "file_action")
INPUT_HINTS = ("keystroke", "paste", "completion_accept", "unknown")
FILE_ACTIONS = ("save", "open", "close")
CHAT_ROLES = ("student", "assistant")

_FENCE_RE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)


class SessionLogError(ValueError):
    """Base class for session-log parse and validation failures."""


class MalformedJson(SessionLogError):
    pass


class SchemaViolation(SessionLogError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class SeqOrderViolation(SessionLogError):
    def __init__(self, prev_seq: int, seq: int, path: str = "events"):
        super().__init__(f"{path}: edit seq must strictly increase, got {prev_seq} -> {seq}")
        self.prev_seq = prev_seq
        self.seq = seq


class TimestampRegression(SessionLogError):
    def __init__(self, prev_ts: int, ts: int, path: str = "events"):
        super().__init__(f"{path}: timestamp_ms regressed, {prev_ts} -> {ts}")
        self.prev_ts = prev_ts
        self.ts = ts


@dataclass(frozen=True, slots=True)
class EditEvent:
    session_id: str
    seq: int
    timestamp_ms: int
    file_path: str
    kind: str
    offset: int
    removed_text: str = ""
    inserted_text: str = ""
    input_hint: str = "unknown"
    file_action: str | None = None


@dataclass(frozen=True, slots=True)
class ChatEvent:
    session_id: str
    timestamp_ms: int
    role: str
    text: str
    code_blocks: tuple[str, ...] = ()
    word_count: int = 0


@dataclass(frozen=True, slots=True)
class TestRunEvent:
    __test__ = False  # not a pytest class

    session_id: str
    timestamp_ms: int
    passed: int
    failed: int
    raw_output: str = ""


SessionEvent = Union[EditEvent, ChatEvent, TestRunEvent]


@dataclass(slots=True)
class SessionMetadata:
    task_id: str = ""
    condition: str = ""
    duration_ms: int = 0


@dataclass(slots=True)
class SessionLog:
    session_id: str
    starter: dict[str, str] = field(default_factory=dict)
    events: list[SessionEvent] = field(default_factory=list)
    metadata: SessionMetadata = field(default_factory=SessionMetadata)

    @property
    def edit_events(self) -> list[EditEvent]:
        return [e for e in self.events if isinstance(e, EditEvent)]

    @property
    def edit_count(self) -> int:
        return sum(1 for e in self.events if isinstance(e, EditEvent))

    @property
    def chat_count(self) -> int:
        return sum(1 for e in self.events if isinstance(e, ChatEvent))

    @property
    def test_run_count(self) -> int:
        return sum(1 for e in self.events if isinstance(e, TestRunEvent))

    def file_paths(self) -> list[str]:
        paths = dict.fromkeys(self.starter)
        for e in self.events:
            if isinstance(e, EditEvent):
                paths.setdefault(e.file_path, None)
        return list(paths)


def word_count(text: str) -> int:
    """Number of maximal non-whitespace runs in ``text``."""
    return len(text.split())


def extract_code_blocks(text: str, treat_whole_message_as_code: bool = False) -> tuple[str, ...]:
    """Contents of triple-backtick fenced regions, fences and language tags stripped.

    Unclosed fences contribute nothing.  With ``treat_whole_message_as_code``,
    a message without any fence yields the whole message as a single block.
    """
    blocks = tuple(_FENCE_RE.findall(text))
    if not blocks and treat_whole_message_as_code and text.strip():
        return (text,)
    return blocks


def _expect(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise SchemaViolation(path, message)


def _get_str(record: dict, key: str, path: str) -> str:
    _expect(key in record, f"{path}.{key}", "missing required field")
    value = record[key]
    _expect(isinstance(value, str), f"{path}.{key}", f"expected string, got {type(value).__name__}")
    return value


def _get_int(record: dict, key: str, path: str, minimum: int | None = None) -> int:
    _expect(key in record, f"{path}.{key}", "missing required field")
    value = record[key]
    _expect(isinstance(value, int) and not isinstance(value, bool),
            f"{path}.{key}", f"expected integer, got {type(value).__name__}")
    if minimum is not None:
        _expect(value >= minimum, f"{path}.{key}", f"must be >= {minimum}, got {value}")
    return value


def record_to_event(record: Any, path: str = "event",
                    treat_whole_message_as_code: bool = False) -> SessionEvent:
    """Validate one event record dict and build the typed event.

    Raises ``SchemaViolation`` naming the offending ``path.field``.
    """
    _expect(isinstance(record, dict), path, "event record must be an object")
    rtype = _get_str(record, "type", path)
    session_id = _get_str(record, "session_id", path)
    timestamp_ms = _get_int(record, "timestamp_ms", path, minimum=0)

    if rtype == "edit":
        kind = _get_str(record, "kind", path)
        _expect(kind in EDIT_KINDS, f"{path}.kind", f"unknown edit kind {kind!r}")
        seq = _get_int(record, "seq", path, minimum=1)
        offset = _get_int(record, "offset", path, minimum=0)
        removed = record.get("removed_text", "")
        inserted = record.get("inserted_text", "")
        _expect(isinstance(removed, str), f"{path}.removed_text", "expected string")
        _expect(isinstance(inserted, str), f"{path}.inserted_text", "expected string")
        hint = record.get("input_hint", "unknown")
        _expect(hint in INPUT_HINTS, f"{path}.input_hint", f"unknown input hint {hint!r}")
        action = record.get("file_action")
        if kind == "insert":
            _expect(inserted != "", f"{path}.inserted_text", "insert requires nonempty inserted_text")
            _expect(removed == "", f"{path}.removed_text", "insert requires empty removed_text")
        elif kind == "delete":
            _expect(removed != "", f"{path}.removed_text", "delete requires nonempty removed_text")
            _expect(inserted == "", f"{path}.inserted_text", "delete requires empty inserted_text")
        elif kind == "replace":
            _expect(inserted != "" and removed != "", f"{path}.inserted_text",
                    "replace requires nonempty removed_text and inserted_text")
        if kind == "file_action":
            _expect(action in FILE_ACTIONS, f"{path}.file_action",
                    f"file_action kind requires file_action in {FILE_ACTIONS}")
            _expect(offset == 0, f"{path}.offset", "file_action requires offset 0")
            _expect(removed == "" and inserted == "", f"{path}.inserted_text",
                    "file_action requires empty text fields")
        else:
            _expect(action is None, f"{path}.file_action",
                    "file_action field only valid on file_action events")
        return EditEvent(
            session_id=session_id,
            seq=seq,
            timestamp_ms=timestamp_ms,
            file_path=_get_str(record, "file_path", path),
            kind=kind,
            offset=offset,
            removed_text=removed,
            inserted_text=inserted,
            input_hint=hint,
            file_action=action,
        )

    if rtype == "chat":
        role = _get_str(record, "role", path)
        _expect(role in CHAT_ROLES, f"{path}.role", f"unknown chat role {role!r}")
        text = _get_str(record, "text", path)
        wc = word_count(text)
        if "word_count" in record:
            stored = _get_int(record, "word_count", path, minimum=0)
            _expect(stored == wc, f"{path}.word_count",
                    f"stored word_count {stored} != recomputed {wc}")
        return ChatEvent(
            session_id=session_id,
            timestamp_ms=timestamp_ms,
            role=role,
            text=text,
            code_blocks=extract_code_blocks(text, treat_whole_message_as_code),
            word_count=wc,
        )

    if rtype == "test_run":
        return TestRunEvent(
            session_id=session_id,
            timestamp_ms=timestamp_ms,
            passed=_get_int(record, "passed", path, minimum=0),
            failed=_get_int(record, "failed", path, minimum=0),
            raw_output=record.get("raw_output", ""),
        )

    raise SchemaViolation(f"{path}.type", f"unknown event type {rtype!r}")


def event_to_record(event: SessionEvent) -> dict[str, Any]:
    if isinstance(event, EditEvent):
        record: dict[str, Any] = {
            "type": "edit",
            "session_id": event.session_id,
            "seq": event.seq,
            "timestamp_ms": event.timestamp_ms,
            "file_path": event.file_path,
            "kind": event.kind,
            "offset": event.offset,
            "removed_text": event.removed_text,
            "inserted_text": event.inserted_text,
            "input_hint": event.input_hint,
        }
        if event.file_action is not None:
            record["file_action"] = event.file_action
        return record
    if isinstance(event, ChatEvent):
        return {
            "type": "chat",
            "session_id": event.session_id,
            "timestamp_ms": event.timestamp_ms,
            "role": event.role,
            "text": event.text,
            "word_count": event.word_count,
        }
    return {
        "type": "test_run",
        "session_id": event.session_id,
        "timestamp_ms": event.timestamp_ms,
        "passed": event.passed,
        "failed": event.failed,
        "raw_output": event.raw_output,
    }


def _validate_ordering(events: list[SessionEvent]) -> None:
    prev_ts = 0
    prev_seq = 0
    for i, event in enumerate(events):
        path = f"events[{i}]"
        if event.timestamp_ms < prev_ts:
            raise TimestampRegression(prev_ts, event.timestamp_ms, path)
        prev_ts = event.timestamp_ms
        if isinstance(event, EditEvent):
            if event.seq <= prev_seq:
                raise SeqOrderViolation(prev_seq, event.seq, path)
            prev_seq = event.seq


def _build_log(doc: dict, treat_whole_message_as_code: bool = False) -> SessionLog:
    _expect(isinstance(doc, dict), "$", "top level must be an object")
    session_id = _get_str(doc, "session_id", "$")

    meta_raw = doc.get("metadata", {})
    _expect(isinstance(meta_raw, dict), "$.metadata", "expected object")
    metadata = SessionMetadata(
        task_id=str(meta_raw.get("task_id", "")),
        condition=str(meta_raw.get("condition", "")),
        duration_ms=int(meta_raw.get("duration_ms", 0)),
    )

    starter_raw = doc.get("starter", {})
    _expect(isinstance(starter_raw, dict), "$.starter", "expected object of path -> text")
    starter: dict[str, str] = {}
    for fp, text in starter_raw.items():
        _expect(isinstance(text, str), f"$.starter[{fp!r}]", "starter text must be a string")
        starter[fp] = text

    events_raw = doc.get("events", [])
    _expect(isinstance(events_raw, list), "$.events", "expected array")
    events: list[SessionEvent] = []
    for i, record in enumerate(events_raw):
        event = record_to_event(record, f"events[{i}]", treat_whole_message_as_code)
        _expect(event.session_id == session_id, f"events[{i}].session_id",
                f"{event.session_id!r} does not match log session_id {session_id!r}")
        events.append(event)
    _validate_ordering(events)
    return SessionLog(session_id=session_id, starter=starter, events=events, metadata=metadata)


def parse_session(data: bytes | str, treat_whole_message_as_code: bool = False) -> SessionLog:
    """Parse one session-log JSON document into a validated ``SessionLog``.

    Ordering invariants (timestamps nondecreasing, edit seq strictly
    increasing) are enforced here; offset validity is enforced at replay.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedJson(f"input is not UTF-8: {exc}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"invalid JSON: {exc}") from None
    return _build_log(doc, treat_whole_message_as_code)


def session_to_dict(log: SessionLog) -> dict[str, Any]:
    return {
        "session_id": log.session_id,
        "metadata": {
            "task_id": log.metadata.task_id,
            "condition": log.metadata.condition,
            "duration_ms": log.metadata.duration_ms,
        },
        "starter": dict(log.starter),
        "events": [event_to_record(e) for e in log.events],
    }


def serialize_session(log: SessionLog, indent: int | None = None) -> str:
    """Serialize so that ``parse_session(serialize_session(log))`` equals ``log``."""
    return json.dumps(session_to_dict(log), ensure_ascii=False, indent=indent)


def write_session_ndjson(log: SessionLog) -> Iterator[str]:
    """Stream a log as NDJSON lines: a session_start header, then one event per line."""
    header = {
        "type": "session_start",
        "session_id": log.session_id,
        "metadata": session_to_dict(log)["metadata"],
        "starter": dict(log.starter),
    }
    yield json.dumps(header, ensure_ascii=False)
    for event in log.events:
        yield json.dumps(event_to_record(event), ensure_ascii=False)


def read_session_ndjson(lines: Iterable[str],
                        treat_whole_message_as_code: bool = False) -> SessionLog:
    """Rebuild a ``SessionLog`` from NDJSON framing (inverse of ``write_session_ndjson``)."""
    log: SessionLog | None = None
    events: list[SessionEvent] = []
    for i, line in enumerate(lines):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedJson(f"line {i}: invalid JSON: {exc}") from None
        _expect(isinstance(record, dict), f"line[{i}]", "record must be an object")
        if record.get("type") == "session_start":
            _expect(log is None, f"line[{i}]", "duplicate session_start header")
            log = _build_log({**record, "events": []}, treat_whole_message_as_code)
            continue
        _expect(log is not None, f"line[{i}]", "first record must be session_start")
        event = record_to_event(record, f"line[{i}]", treat_whole_message_as_code)
        _expect(event.session_id == log.session_id, f"line[{i}].session_id",
                "session_id does not match header")
        events.append(event)
    if log is None:
        raise MalformedJson("empty NDJSON stream, session_start header missing")
    _validate_ordering(events)
    log.events = events
    return log
