"""Real-time monitor service: live session ingest, instructor queries, question routing.

The protocol is a bidirectional stream of JSON frames (one object per frame)
over a WebSocket at ``/stream``, plus read-only HTTP endpoints mirroring the
query frames.  The state machine (``SessionHub``) is synchronous and
transport-agnostic; the ASGI layer feeds it frames and dispatches whatever it
returns.  Accepted events are journaled per session as session-log NDJSON, so
a restarted server rebuilds byte-identical state by replaying its journals.

Gap policy: edit frames must arrive with consecutive ``seq``; out-of-order or
gapped frames are rejected with an error frame and do not mutate state.  The
capture side owns reliable ordered delivery.
"""

from __future__ import annotations

import asyncio
import copy
import json
import os
import uuid
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from fastapi import FastAPI, Header, HTTPException, WebSocket, WebSocketDisconnect

from .metrics import compute_metrics, metrics_to_dict
from .provenance import (
    LabeledSession,
    LabelDecision,
    ProvenanceConfig,
    RelabelNotice,
    SessionLabeler,
    labeled_snapshot_at,
)
from .questions import (
    Anchor,
    AnchorOutOfRange,
    IllegalTransition,
    MalformedGeneration,
    ProviderUnavailable,
    Question,
    StubProvider,
    create_question,
    edit_and_send,
    mark_answered,
    question_from_dict,
    question_to_dict,
)
from .replay import DocumentSnapshot, ReplayError
from .sessionlog import (
    EditEvent,
    SchemaViolation,
    SessionEvent,
    SessionLog,
    SessionMetadata,
    event_to_record,
    record_to_event,
    session_to_dict,
)
from .timeline import build_timeline, model_to_dict

FRAME_TYPES = (
    "hello", "edit", "chat", "test_run",
    "snapshot_request", "snapshot", "timeline_request", "timeline",
    "metrics_request", "metrics",
    "question_create", "question_deliver", "answer_submit", "answer_deliver",
    "relabel", "error", "bye",
)

ENV_PREFIX = "EDITTRACE_"


@dataclass(slots=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8787
    journal_dir: str | None = None
    student_token: str | None = None
    instructor_token: str | None = None
    provenance: ProvenanceConfig = field(default_factory=ProvenanceConfig)

    @classmethod
    def from_env(cls, base: "ServerConfig | None" = None) -> "ServerConfig":
        """Overlay EDITTRACE_* environment variables on a base config."""
        cfg = base or cls()
        env = os.environ
        cfg.host = env.get(f"{ENV_PREFIX}HOST", cfg.host)
        cfg.port = int(env.get(f"{ENV_PREFIX}PORT", cfg.port))
        cfg.journal_dir = env.get(f"{ENV_PREFIX}JOURNAL_DIR", cfg.journal_dir)
        cfg.student_token = env.get(f"{ENV_PREFIX}STUDENT_TOKEN", cfg.student_token)
        cfg.instructor_token = env.get(f"{ENV_PREFIX}INSTRUCTOR_TOKEN",
                                       cfg.instructor_token)
        prov_path = env.get(f"{ENV_PREFIX}PROVENANCE_CONFIG")
        if prov_path:
            cfg.provenance = ProvenanceConfig.from_file(prov_path)
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "ServerConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        prov = raw.pop("provenance", None)
        cfg = cls(**raw)
        if prov:
            cfg.provenance = ProvenanceConfig.from_mapping(prov)
        return cfg


class FrameError(Exception):
    """Rejected frame: becomes an error frame, never mutates state."""

    def __init__(self, code: str, message: str, context: dict | None = None):
        super().__init__(message)
        self.code = code
        self.context = context or {}


@dataclass(slots=True)
class ConnInfo:
    conn_id: str
    role: str | None = None
    session_id: str | None = None
    last_in_seq: int = 0
    out_seq: int = 0


class LiveSession:
    """Per-session live state: streaming labeler, accepted events, questions."""

    def __init__(self, session_id: str, starter: dict[str, str],
                 metadata: SessionMetadata, cfg: ProvenanceConfig,
                 journal_path: Path | None = None):
        self.session_id = session_id
        self.starter = dict(starter)
        self.metadata = metadata
        self._cfg = cfg
        self.labeler = SessionLabeler(session_id, starter, cfg)
        self.events: list[SessionEvent] = []
        self.last_seq = 0
        self.last_t = 0
        self.student_seen = False
        self.student_conn: str | None = None
        self.instructors: list[str] = []
        self.questions: dict[str, Question] = {}
        self.question_owner: dict[str, str] = {}
        self.queued_for_student: list[str] = []
        self._journal_path = journal_path
        self._journal = None

    def adopt_student_data(self, starter: dict | None, metadata: dict | None) -> None:
        """Take starter text and metadata from the first student hello.

        Sessions can be created by an instructor subscribing early; the real
        document state arrives with the student.  Only possible while the
        session has no events.
        """
        if self.student_seen or self.events:
            return
        if starter and not self.starter:
            self.starter = {str(k): str(v) for k, v in starter.items()}
            self.labeler = SessionLabeler(self.session_id, self.starter, self._cfg)
        if metadata:
            self.metadata = SessionMetadata(
                task_id=str(metadata.get("task_id", self.metadata.task_id)),
                condition=str(metadata.get("condition", self.metadata.condition)),
                duration_ms=int(metadata.get("duration_ms", self.metadata.duration_ms)))

    def start_journal(self, resume: bool = False) -> None:
        if self._journal_path is None or self._journal is not None:
            return
        if not resume and self._journal_path.exists():
            raise FrameError("RoleViolation",
                             f"journal for {self.session_id!r} already exists")
        self._journal_path.parent.mkdir(parents=True, exist_ok=True)
        self._journal = self._journal_path.open("a", encoding="utf-8")
        if not resume:
            header = {"type": "session_start", "session_id": self.session_id,
                      "metadata": {"task_id": self.metadata.task_id,
                                   "condition": self.metadata.condition,
                                   "duration_ms": self.metadata.duration_ms},
                      "starter": dict(self.starter)}
            self._journal.write(json.dumps(header, ensure_ascii=False) + "\n")
            self._journal.flush()

    def journal_event(self, event: SessionEvent) -> None:
        if self._journal is not None:
            self._journal.write(json.dumps(event_to_record(event), ensure_ascii=False) + "\n")
            self._journal.flush()

    def close_journal(self) -> None:
        if self._journal is not None:
            self._journal.close()
            self._journal = None

    def accept(self, event: SessionEvent) -> list:
        """Validate, label, journal.  Raises FrameError without side effects."""
        if isinstance(event, EditEvent):
            if event.seq != self.last_seq + 1:
                raise FrameError("SeqOrderViolation",
                                 f"expected seq {self.last_seq + 1}, got {event.seq}",
                                 {"expected": self.last_seq + 1, "got": event.seq})
            if event.timestamp_ms < self.last_t:
                raise FrameError("TimestampRegression",
                                 f"timestamp {event.timestamp_ms} < {self.last_t}")
            try:
                self.labeler.doc(event.file_path).precheck(event)
            except ReplayError as exc:
                raise FrameError(type(exc).__name__, str(exc)) from exc
        notices = self.labeler.feed(event)
        self.events.append(event)
        self.last_t = max(self.last_t, event.timestamp_ms)
        if isinstance(event, EditEvent):
            self.last_seq = event.seq
        self.journal_event(event)
        return notices

    def to_log(self) -> SessionLog:
        return SessionLog(session_id=self.session_id, starter=dict(self.starter),
                          events=list(self.events),
                          metadata=SessionMetadata(self.metadata.task_id,
                                                   self.metadata.condition,
                                                   self.metadata.duration_ms))

    def settled(self) -> LabeledSession:
        """The accepted-frame prefix as the offline pipeline would label it:
        open typed runs resolved as if the prefix were the whole session."""
        labeler = copy.deepcopy(self.labeler)
        labeler.close()
        return LabeledSession(log=self.to_log(), cfg=labeler.cfg,
                              labels=labeler.labels, documents=labeler.documents)

    def default_file(self) -> str:
        if self.starter:
            return next(iter(self.starter))
        for event in self.events:
            if isinstance(event, EditEvent):
                return event.file_path
        return "main.py"


def snapshot_to_dict(snapshot: DocumentSnapshot) -> dict:
    return {
        "file_path": snapshot.file_path,
        "timestamp_ms": snapshot.timestamp_ms,
        "text": snapshot.text,
        "line_count": snapshot.line_count,
        "spans": [{"start": s.start, "end": s.end, "source": s.source,
                   "origin_seq": s.origin_seq,
                   "chat_ref": list(s.chat_ref) if s.chat_ref else None}
                  for s in snapshot.spans],
    }


class SessionHub:
    """Synchronous protocol state machine shared by the WS and HTTP layers.

    ``handle_frame`` returns an ordered list of (conn_id, frame) pairs to
    deliver; the transport owns actual sending.
    """

    def __init__(self, config: ServerConfig | None = None,
                 provider: Any = None):
        self.config = config or ServerConfig()
        self.provider = provider if provider is not None else StubProvider()
        self.sessions: dict[str, LiveSession] = {}
        self.connections: dict[str, ConnInfo] = {}
        if self.config.journal_dir:
            self.restore_journals()

    # -- connection lifecycle --

    def register(self, conn_id: str | None = None) -> str:
        conn_id = conn_id or uuid.uuid4().hex
        self.connections[conn_id] = ConnInfo(conn_id)
        return conn_id

    def disconnect(self, conn_id: str) -> None:
        info = self.connections.pop(conn_id, None)
        if info is None or info.session_id is None:
            return
        session = self.sessions.get(info.session_id)
        if session is None:
            return
        if session.student_conn == conn_id:
            session.student_conn = None
        if conn_id in session.instructors:
            session.instructors.remove(conn_id)

    # -- journal restore --

    def restore_journals(self) -> None:
        journal_dir = Path(self.config.journal_dir)
        if not journal_dir.is_dir():
            return
        from .sessionlog import read_session_ndjson

        for path in sorted(journal_dir.glob("*.ndjson")):
            log = read_session_ndjson(path.read_text(encoding="utf-8").splitlines())
            session = LiveSession(log.session_id, log.starter, log.metadata,
                                  self.config.provenance, journal_path=path)
            session.student_seen = True
            session.start_journal(resume=True)
            for event in log.events:
                session.labeler.feed(event)
                session.events.append(event)
                session.last_t = max(session.last_t, event.timestamp_ms)
                if isinstance(event, EditEvent):
                    session.last_seq = event.seq
            self.sessions[log.session_id] = session

    # -- frame plumbing --

    def _frame(self, conn: ConnInfo, frame_type: str, session_id: str,
               payload: dict) -> dict:
        conn.out_seq += 1
        return {"frame_type": frame_type, "session_id": session_id,
                "frame_seq": conn.out_seq, "payload": payload}

    def _error(self, conn: ConnInfo, session_id: str, code: str, message: str,
               context: dict | None = None) -> tuple[str, dict]:
        payload = {"code": code, "message": message}
        if context:
            payload["context"] = context
        return (conn.conn_id, self._frame(conn, "error", session_id, payload))

    def _session(self, session_id: str) -> LiveSession:
        session = self.sessions.get(session_id)
        if session is None:
            raise FrameError("UnknownSession", f"no session {session_id!r}")
        return session

    def handle_frame(self, conn_id: str, frame: Any) -> list[tuple[str, dict]]:
        conn = self.connections.get(conn_id)
        if conn is None:
            raise KeyError(f"unregistered connection {conn_id}")
        session_id = frame.get("session_id", "") if isinstance(frame, dict) else ""
        try:
            return self._dispatch(conn, frame)
        except FrameError as exc:
            return [self._error(conn, session_id, exc.code, str(exc), exc.context)]

    def _dispatch(self, conn: ConnInfo, frame: Any) -> list[tuple[str, dict]]:
        if not isinstance(frame, dict):
            raise FrameError("BadFrame", "frame must be a JSON object")
        frame_type = frame.get("frame_type")
        if frame_type not in FRAME_TYPES:
            raise FrameError("BadFrame", f"unknown frame_type {frame_type!r}")
        session_id = frame.get("session_id")
        if not isinstance(session_id, str) or not session_id:
            raise FrameError("BadFrame", "missing session_id")
        frame_seq = frame.get("frame_seq")
        if not isinstance(frame_seq, int) or frame_seq <= conn.last_in_seq:
            raise FrameError("FrameSeqViolation",
                             f"frame_seq must exceed {conn.last_in_seq}")
        conn.last_in_seq = frame_seq
        payload = frame.get("payload") or {}
        if not isinstance(payload, dict):
            raise FrameError("BadFrame", "payload must be an object")

        handler = {
            "hello": self._on_hello,
            "edit": self._on_event,
            "chat": self._on_event,
            "test_run": self._on_event,
            "snapshot_request": self._on_snapshot_request,
            "timeline_request": self._on_timeline_request,
            "metrics_request": self._on_metrics_request,
            "question_create": self._on_question_create,
            "answer_submit": self._on_answer_submit,
            "bye": self._on_bye,
        }.get(frame_type)
        if handler is None:
            raise FrameError("BadFrame", f"frame_type {frame_type!r} is server-to-client")
        return handler(conn, session_id, frame_type, payload)

    # -- handlers --

    def _on_hello(self, conn: ConnInfo, session_id: str, frame_type: str,
                  payload: dict) -> list[tuple[str, dict]]:
        role = payload.get("role")
        if role not in ("student", "instructor"):
            raise FrameError("RoleViolation", f"unknown role {role!r}")
        expected = (self.config.student_token if role == "student"
                    else self.config.instructor_token)
        if expected and payload.get("token") != expected:
            raise FrameError("AuthFailed", f"bad or missing token for role {role}")

        session = self.sessions.get(session_id)
        if session is None:
            journal_path = None
            if self.config.journal_dir:
                journal_path = Path(self.config.journal_dir) / f"{session_id}.ndjson"
            session = LiveSession(session_id, {}, SessionMetadata(),
                                  self.config.provenance, journal_path)
            self.sessions[session_id] = session

        out: list[tuple[str, dict]] = []
        if role == "student":
            if session.student_conn is not None and session.student_conn != conn.conn_id:
                raise FrameError("RoleViolation",
                                 f"session {session_id!r} already has a student stream")
            session.adopt_student_data(payload.get("starter"), payload.get("metadata"))
            session.start_journal()
            session.student_seen = True
            session.student_conn = conn.conn_id
        else:
            if conn.conn_id not in session.instructors:
                session.instructors.append(conn.conn_id)
        conn.role = role
        conn.session_id = session_id
        out.append((conn.conn_id, self._frame(conn, "hello", session_id,
                                              {"ok": True, "role": role,
                                               "last_seq": session.last_seq})))
        if role == "student" and session.queued_for_student:
            queued, session.queued_for_student = session.queued_for_student, []
            for qid in queued:
                question = session.questions[qid]
                out.append((conn.conn_id, self._frame(
                    conn, "question_deliver", session_id,
                    {"question": question_to_dict(question)})))
        return out

    def _require_role(self, conn: ConnInfo, session: LiveSession, role: str) -> None:
        if conn.role != role:
            raise FrameError("RoleViolation", f"frame requires role {role}, "
                                              f"connection is {conn.role!r}")
        if conn.session_id != session.session_id:
            raise FrameError("RoleViolation", "connection is bound to another session")

    def _on_event(self, conn: ConnInfo, session_id: str, frame_type: str,
                  payload: dict) -> list[tuple[str, dict]]:
        session = self._session(session_id)
        self._require_role(conn, session, "student")
        try:
            event = record_to_event({**payload, "type": frame_type,
                                     "session_id": session_id})
        except SchemaViolation as exc:
            raise FrameError("SchemaViolation", str(exc)) from exc
        line = None
        if isinstance(event, EditEvent):
            pre_text = session.labeler.doc(event.file_path).text
            line = 1 + pre_text.count("\n", 0, event.offset)
        notices = session.accept(event)

        out: list[tuple[str, dict]] = []
        fanout_payload = dict(payload)
        if line is not None:
            # Pre-event line of the edit, so subscribers render without replaying.
            fanout_payload["line"] = line
        for notice in notices:
            if isinstance(notice, LabelDecision):
                fanout_payload["label"] = {
                    "source": notice.source,
                    "chat_ref": list(notice.chat_ref) if notice.chat_ref else None,
                    "provisional": notice.provisional,
                }
        for instructor in session.instructors:
            target = self.connections[instructor]
            out.append((instructor, self._frame(target, frame_type, session_id,
                                                fanout_payload)))
        for notice in notices:
            if isinstance(notice, RelabelNotice):
                relabel_payload = {
                    "file_path": notice.file_path,
                    "origin_seqs": notice.origin_seqs,
                    "source": notice.source,
                    "chat_ref": list(notice.chat_ref) if notice.chat_ref else None,
                }
                for instructor in session.instructors:
                    target = self.connections[instructor]
                    out.append((instructor, self._frame(target, "relabel", session_id,
                                                        relabel_payload)))
        return out

    # -- queries --

    def _labeled_snapshot(self, session: LiveSession, file_path: str,
                          t: int | None) -> DocumentSnapshot:
        settled = session.settled()
        if t is None or t >= session.last_t:
            return settled.final_snapshot(file_path)
        return labeled_snapshot_at(settled, file_path, t)

    def snapshot_payload(self, session_id: str, file_path: str | None = None,
                         t: int | None = None) -> dict:
        session = self._session(session_id)
        file_path = file_path or session.default_file()
        try:
            return snapshot_to_dict(self._labeled_snapshot(session, file_path, t))
        except ReplayError as exc:
            raise FrameError(type(exc).__name__, str(exc)) from exc

    def timeline_payload(self, session_id: str, file_path: str | None = None) -> dict:
        session = self._session(session_id)
        settled = session.settled()
        return model_to_dict(build_timeline(settled, file_path or session.default_file()))

    def metrics_payload(self, session_id: str) -> dict:
        session = self._session(session_id)
        return metrics_to_dict(compute_metrics(session.settled()))

    def sessions_payload(self) -> dict:
        return {"sessions": [
            {"session_id": s.session_id,
             "task_id": s.metadata.task_id,
             "edit_count": s.last_seq,
             "event_count": len(s.events),
             "student_connected": s.student_conn is not None,
             "instructor_count": len(s.instructors)}
            for s in self.sessions.values()
        ]}

    def _on_snapshot_request(self, conn: ConnInfo, session_id: str, frame_type: str,
                             payload: dict) -> list[tuple[str, dict]]:
        body = self.snapshot_payload(session_id, payload.get("file_path"),
                                     payload.get("t"))
        return [(conn.conn_id, self._frame(conn, "snapshot", session_id, body))]

    def _on_timeline_request(self, conn: ConnInfo, session_id: str, frame_type: str,
                             payload: dict) -> list[tuple[str, dict]]:
        body = self.timeline_payload(session_id, payload.get("file_path"))
        return [(conn.conn_id, self._frame(conn, "timeline", session_id, body))]

    def _on_metrics_request(self, conn: ConnInfo, session_id: str, frame_type: str,
                            payload: dict) -> list[tuple[str, dict]]:
        body = self.metrics_payload(session_id)
        return [(conn.conn_id, self._frame(conn, "metrics", session_id, body))]

    # -- questions --

    def _on_question_create(self, conn: ConnInfo, session_id: str, frame_type: str,
                            payload: dict) -> list[tuple[str, dict]]:
        session = self._session(session_id)
        self._require_role(conn, session, "instructor")
        action = payload.get("action", "send")
        if action == "generate":
            return self._generate_question(conn, session, payload)
        if action == "send":
            return self._send_question(conn, session, payload)
        raise FrameError("BadFrame", f"unknown question_create action {action!r}")

    def _generate_question(self, conn: ConnInfo, session: LiveSession,
                           payload: dict) -> list[tuple[str, dict]]:
        anchor_raw = payload.get("anchor") or {}
        try:
            anchor = Anchor(int(anchor_raw["timestamp_ms"]),
                            int(anchor_raw["line_start"]), int(anchor_raw["line_end"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise FrameError("BadFrame", f"bad anchor: {exc}") from exc
        mode = payload.get("mode", "open_ended")
        file_path = payload.get("file_path") or session.default_file()
        snapshot = self._labeled_snapshot(session, file_path, anchor.timestamp_ms)
        try:
            question = create_question(
                snapshot, anchor, mode, payload.get("constraints", ""),
                self.provider, seed=int(payload.get("seed", 0)),
                session_id=session.session_id, question_id=payload.get("id"))
        except AnchorOutOfRange as exc:
            raise FrameError("AnchorOutOfRange", str(exc)) from exc
        except (ProviderUnavailable, MalformedGeneration) as exc:
            raise FrameError(type(exc).__name__, str(exc)) from exc
        session.questions[question.id] = question
        session.question_owner[question.id] = conn.conn_id
        return [(conn.conn_id, self._frame(conn, "question_create", session.session_id,
                                           {"question": question_to_dict(question)}))]

    def _send_question(self, conn: ConnInfo, session: LiveSession,
                       payload: dict) -> list[tuple[str, dict]]:
        raw = payload.get("question")
        if not isinstance(raw, dict):
            raise FrameError("BadFrame", "question_create send requires a question body")
        incoming = question_from_dict({**raw, "session_id": session.session_id,
                                       "status": "draft"})
        stored = session.questions.get(incoming.id)
        if stored is not None and stored.status != "draft":
            raise FrameError("IllegalTransition",
                             f"question {incoming.id} is {stored.status}, not draft")
        try:
            sent = edit_and_send(stored or incoming, {
                "generated_text": incoming.generated_text or (stored.generated_text if stored else ""),
                "expected_answer": incoming.expected_answer or (stored.expected_answer if stored else ""),
                "constraints": incoming.constraints or (stored.constraints if stored else ""),
            })
        except IllegalTransition as exc:
            raise FrameError("IllegalTransition", str(exc)) from exc
        session.questions[sent.id] = sent
        session.question_owner.setdefault(sent.id, conn.conn_id)
        out = [(conn.conn_id, self._frame(conn, "question_create", session.session_id,
                                          {"question": question_to_dict(sent)}))]
        deliver = {"question": question_to_dict(sent)}
        if session.student_conn is not None:
            target = self.connections[session.student_conn]
            out.append((session.student_conn,
                        self._frame(target, "question_deliver", session.session_id,
                                    deliver)))
        else:
            session.queued_for_student.append(sent.id)
        return out

    def _on_answer_submit(self, conn: ConnInfo, session_id: str, frame_type: str,
                          payload: dict) -> list[tuple[str, dict]]:
        session = self._session(session_id)
        self._require_role(conn, session, "student")
        qid = payload.get("question_id", "")
        question = session.questions.get(qid)
        if question is None:
            raise FrameError("UnknownQuestion", f"no question {qid!r}")
        try:
            answered = mark_answered(question, str(payload.get("answer", "")))
        except IllegalTransition as exc:
            raise FrameError("IllegalTransition", str(exc)) from exc
        session.questions[qid] = answered
        body = {"question": question_to_dict(answered)}
        out: list[tuple[str, dict]] = []
        owner = session.question_owner.get(qid)
        targets = [owner] if owner in session.instructors else list(session.instructors)
        for instructor in targets:
            target = self.connections[instructor]
            out.append((instructor, self._frame(target, "answer_deliver", session_id,
                                                body)))
        return out

    def _on_bye(self, conn: ConnInfo, session_id: str, frame_type: str,
                payload: dict) -> list[tuple[str, dict]]:
        if conn.session_id is not None:
            session = self.sessions.get(conn.session_id)
            if session is not None:
                if session.student_conn == conn.conn_id:
                    session.student_conn = None
                if conn.conn_id in session.instructors:
                    session.instructors.remove(conn.conn_id)
        conn.role = None
        conn.session_id = None
        return []


def offline_pipeline(log: SessionLog, cfg: ProvenanceConfig | None = None) -> dict:
    """The offline equivalent of the server's query surface, for equivalence checks."""
    from .provenance import label_session

    labeled = label_session(log, cfg)
    fp = labeled.file_paths()[0]
    return {
        "snapshot": snapshot_to_dict(labeled.final_snapshot(fp)),
        "timeline": model_to_dict(build_timeline(labeled, fp)),
        "metrics": metrics_to_dict(compute_metrics(labeled)),
    }


def create_app(config: ServerConfig | None = None, hub: SessionHub | None = None) -> FastAPI:
    """FastAPI app exposing the WS stream and the read-only HTTP mirror."""
    config = config or ServerConfig()
    hub = hub or SessionHub(config)
    app = FastAPI(title="edittrace monitor", version="0.1.0")
    app.state.hub = hub
    session_locks: dict[str, asyncio.Lock] = defaultdict(asyncio.Lock)
    send_locks: dict[str, asyncio.Lock] = defaultdict(asyncio.Lock)
    sockets: dict[str, WebSocket] = {}

    async def deliver(target: str, frame: dict) -> None:
        ws = sockets.get(target)
        if ws is None:
            return
        try:
            async with send_locks[target]:
                await ws.send_text(json.dumps(frame, ensure_ascii=False))
        except Exception:
            sockets.pop(target, None)

    @app.websocket("/stream")
    async def stream(ws: WebSocket) -> None:
        await ws.accept()
        conn_id = hub.register()
        sockets[conn_id] = ws
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    frame = json.loads(raw)
                except json.JSONDecodeError:
                    frame = raw
                sid = frame.get("session_id", "") if isinstance(frame, dict) else ""
                async with session_locks[sid]:
                    outgoing = hub.handle_frame(conn_id, frame)
                for target, out_frame in outgoing:
                    await deliver(target, out_frame)
        except WebSocketDisconnect:
            pass
        finally:
            sockets.pop(conn_id, None)
            hub.disconnect(conn_id)

    def check_auth(authorization: str | None) -> None:
        token = config.instructor_token
        if not token:
            return
        if authorization != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or bad bearer token")

    def run_query(fn: Callable[[], dict]) -> dict:
        try:
            return fn()
        except FrameError as exc:
            status = 404 if exc.code in ("UnknownSession", "UnknownFile") else 400
            raise HTTPException(status_code=status,
                                detail={"code": exc.code, "message": str(exc)})

    @app.get("/healthz")
    async def healthz() -> dict:
        return {"status": "ok", "sessions": len(hub.sessions)}

    @app.get("/sessions")
    async def sessions(authorization: str | None = Header(default=None)) -> dict:
        check_auth(authorization)
        async with session_locks[""]:
            return hub.sessions_payload()

    @app.get("/sessions/{session_id}/timeline")
    async def timeline(session_id: str, file_path: str | None = None,
                       authorization: str | None = Header(default=None)) -> dict:
        check_auth(authorization)
        async with session_locks[session_id]:
            return run_query(lambda: hub.timeline_payload(session_id, file_path))

    @app.get("/sessions/{session_id}/metrics")
    async def metrics(session_id: str,
                      authorization: str | None = Header(default=None)) -> dict:
        check_auth(authorization)
        async with session_locks[session_id]:
            return run_query(lambda: hub.metrics_payload(session_id))

    @app.get("/sessions/{session_id}/snapshot")
    async def snapshot(session_id: str, file_path: str | None = None,
                       t: int | None = None,
                       authorization: str | None = Header(default=None)) -> dict:
        check_auth(authorization)
        async with session_locks[session_id]:
            return run_query(lambda: hub.snapshot_payload(session_id, file_path, t))

    return app


def stream_log_frames(log: SessionLog, token: str | None = None):
    """The frame sequence a capture client sends when replaying a recorded log."""
    frames = []
    frame_seq = 1
    hello_payload: dict[str, Any] = {"role": "student",
                                     "starter": dict(log.starter),
                                     "metadata": session_to_dict(log)["metadata"]}
    if token:
        hello_payload["token"] = token
    frames.append({"frame_type": "hello", "session_id": log.session_id,
                   "frame_seq": frame_seq, "payload": hello_payload})
    for event in log.events:
        frame_seq += 1
        record = event_to_record(event)
        frame_type = record.pop("type")
        record.pop("session_id", None)
        frames.append({"frame_type": frame_type, "session_id": log.session_id,
                       "frame_seq": frame_seq, "payload": record})
    return frames
