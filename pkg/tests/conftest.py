from __future__ import annotations

import socket
import sys
import threading
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from edittrace.sessionlog import (
    ChatEvent,
    EditEvent,
    SessionLog,
    SessionMetadata,
    TestRunEvent,
)


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class LiveServer:
    """A real uvicorn server on localhost, run in a daemon thread."""

    def __init__(self, config=None):
        import uvicorn

        from edittrace.server import ServerConfig, SessionHub, create_app

        self.config = config or ServerConfig()
        self.config.port = free_port()
        self.hub = SessionHub(self.config)
        app = create_app(self.config, self.hub)
        self._server = uvicorn.Server(uvicorn.Config(
            app, host=self.config.host, port=self.config.port, log_level="error"))
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    @property
    def ws_url(self) -> str:
        return f"ws://{self.config.host}:{self.config.port}/stream"

    @property
    def http_url(self) -> str:
        return f"http://{self.config.host}:{self.config.port}"

    def __enter__(self):
        self._thread.start()
        deadline = time.time() + 10
        while not self._server.started:
            if time.time() > deadline:
                raise RuntimeError("server did not start in time")
            time.sleep(0.01)
        return self

    def __exit__(self, *exc):
        self._server.should_exit = True
        self._thread.join(timeout=10)


def make_edit(seq: int, t: int, kind: str, offset: int, removed: str = "",
              inserted: str = "", hint: str = "unknown", session_id: str = "s1",
              file_path: str = "main.py", file_action: str | None = None) -> EditEvent:
    return EditEvent(session_id=session_id, seq=seq, timestamp_ms=t, file_path=file_path,
                     kind=kind, offset=offset, removed_text=removed, inserted_text=inserted,
                     input_hint=hint, file_action=file_action)


def make_chat(t: int, role: str, text: str, session_id: str = "s1") -> ChatEvent:
    from edittrace.sessionlog import extract_code_blocks, word_count

    return ChatEvent(session_id=session_id, timestamp_ms=t, role=role, text=text,
                     code_blocks=extract_code_blocks(text), word_count=word_count(text))


def make_log(events, starter: str = "", session_id: str = "s1",
             file_path: str = "main.py", duration_ms: int = 0) -> SessionLog:
    starter_map = {file_path: starter} if starter or events else {file_path: starter}
    return SessionLog(session_id=session_id, starter=starter_map, events=list(events),
                      metadata=SessionMetadata(duration_ms=duration_ms))
