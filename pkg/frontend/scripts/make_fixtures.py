#!/usr/bin/env python3
"""Regenerate the dashboard test fixtures from the monitor backend.

Produces, under tests/fixtures/:
  transcript.ndjson  frames an instructor connection receives while a
                     recorded session streams in (hello ack, edit/chat/
                     test_run fan-outs, relabels)
  timeline.json      the server's timeline payload for the session
  metrics.json       the server's metrics payload
  snapshot.json      the server's final snapshot payload
  session.json       the session log itself (reference)

Deterministic: fixed seed, stub provider.
"""

import json
from pathlib import Path

from edittrace.forge import generate_gold_session
from edittrace.server import SessionHub, stream_log_frames
from edittrace.sessionlog import serialize_session

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
SEED = 42


def main() -> None:
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    gold = generate_gold_session(SEED, n_behaviors=20)
    log = gold.log

    hub = SessionHub()
    student = hub.register("student")
    instructor = hub.register("instructor")
    frames = stream_log_frames(log)

    transcript: list[dict] = []

    def collect(outgoing):
        for conn_id, frame in outgoing:
            if conn_id == "instructor":
                transcript.append(frame)

    collect(hub.handle_frame(student, frames[0]))  # student hello
    collect(hub.handle_frame(instructor, {
        "frame_type": "hello", "session_id": log.session_id,
        "frame_seq": 1, "payload": {"role": "instructor"}}))
    for frame in frames[1:]:
        collect(hub.handle_frame(student, frame))

    (FIXTURE_DIR / "transcript.ndjson").write_text(
        "\n".join(json.dumps(f, ensure_ascii=False) for f in transcript) + "\n",
        encoding="utf-8")
    (FIXTURE_DIR / "timeline.json").write_text(
        json.dumps(hub.timeline_payload(log.session_id), indent=1,
                   ensure_ascii=False), encoding="utf-8")
    (FIXTURE_DIR / "metrics.json").write_text(
        json.dumps(hub.metrics_payload(log.session_id), indent=1,
                   ensure_ascii=False), encoding="utf-8")
    (FIXTURE_DIR / "snapshot.json").write_text(
        json.dumps(hub.snapshot_payload(log.session_id), indent=1,
                   ensure_ascii=False), encoding="utf-8")
    (FIXTURE_DIR / "session.json").write_text(
        serialize_session(log, indent=1), encoding="utf-8")
    print(f"wrote fixtures for {log.session_id}: {len(transcript)} transcript frames, "
          f"{log.edit_count} edits")


if __name__ == "__main__":
    main()
