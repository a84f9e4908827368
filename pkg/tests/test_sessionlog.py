from __future__ import annotations

import json
import random

import pytest

from edittrace.sessionlog import (
    ChatEvent,
    EditEvent,
    MalformedJson,
    SchemaViolation,
    SeqOrderViolation,
    SessionLog,
    SessionMetadata,
    TestRunEvent,
    TimestampRegression,
    extract_code_blocks,
    parse_session,
    read_session_ndjson,
    serialize_session,
    word_count,
    write_session_ndjson,
)

MINIMAL = {
    "session_id": "s1",
    "metadata": {"task_id": "t1", "condition": "open", "duration_ms": 1000},
    "starter": {"main.py": ""},
    "events": [
        {"type": "edit", "session_id": "s1", "seq": 1, "timestamp_ms": 10,
         "file_path": "main.py", "kind": "insert", "offset": 0,
         "removed_text": "", "inserted_text": "a", "input_hint": "keystroke"},
    ],
}


def test_minimal_log_parses():
    log = parse_session(json.dumps(MINIMAL))
    assert log.session_id == "s1"
    assert log.edit_count == 1
    event = log.events[0]
    assert isinstance(event, EditEvent)
    assert event.inserted_text == "a"
    assert event.offset == 0


def test_seq_order_violation():
    doc = json.loads(json.dumps(MINIMAL))
    doc["events"] = [
        dict(doc["events"][0], seq=2),
        dict(doc["events"][0], seq=1, timestamp_ms=20),
    ]
    with pytest.raises(SeqOrderViolation) as exc:
        parse_session(json.dumps(doc))
    assert exc.value.prev_seq == 2
    assert exc.value.seq == 1


def test_timestamp_regression():
    doc = json.loads(json.dumps(MINIMAL))
    doc["events"] = [
        dict(doc["events"][0], seq=1, timestamp_ms=50),
        dict(doc["events"][0], seq=2, timestamp_ms=40),
    ]
    with pytest.raises(TimestampRegression):
        parse_session(json.dumps(doc))


def test_malformed_json():
    with pytest.raises(MalformedJson):
        parse_session(b"{not json")


def test_non_utf8_rejected():
    with pytest.raises(MalformedJson):
        parse_session(b"\xff\xfe{}")


@pytest.mark.parametrize("mutate,field", [
    (lambda e: e.update(kind="insert", inserted_text=""), "inserted_text"),
    (lambda e: e.update(kind="delete", inserted_text="x", removed_text="y"), "inserted_text"),
    (lambda e: e.update(kind="file_action", inserted_text="", offset=3), "file_action"),
    (lambda e: e.update(kind="teleport"), "kind"),
    (lambda e: e.update(input_hint="psychic"), "input_hint"),
    (lambda e: e.update(offset=-1), "offset"),
    (lambda e: e.update(seq=0), "seq"),
])
def test_schema_violations_name_field(mutate, field):
    doc = json.loads(json.dumps(MINIMAL))
    mutate(doc["events"][0])
    with pytest.raises(SchemaViolation) as exc:
        parse_session(json.dumps(doc))
    assert field in exc.value.path


def test_unknown_event_type_rejected():
    doc = json.loads(json.dumps(MINIMAL))
    doc["events"].append({"type": "mystery", "session_id": "s1", "timestamp_ms": 99})
    with pytest.raises(SchemaViolation) as exc:
        parse_session(json.dumps(doc))
    assert "events[1].type" in str(exc.value)


def test_word_count_mismatch_is_schema_violation():
    doc = json.loads(json.dumps(MINIMAL))
    doc["events"].append({"type": "chat", "session_id": "s1", "timestamp_ms": 20,
                          "role": "student", "text": "hello world", "word_count": 3})
    with pytest.raises(SchemaViolation) as exc:
        parse_session(json.dumps(doc))
    assert "word_count" in exc.value.path


def test_word_count_recomputed_when_absent():
    doc = json.loads(json.dumps(MINIMAL))
    doc["events"].append({"type": "chat", "session_id": "s1", "timestamp_ms": 20,
                          "role": "assistant", "text": "  one\ttwo \n three "})
    log = parse_session(json.dumps(doc))
    chat = log.events[-1]
    assert isinstance(chat, ChatEvent)
    assert chat.word_count == 3


def test_file_action_event_parses():
    doc = json.loads(json.dumps(MINIMAL))
    doc["events"].append({"type": "edit", "session_id": "s1", "seq": 2, "timestamp_ms": 30,
                          "file_path": "main.py", "kind": "file_action", "offset": 0,
                          "removed_text": "", "inserted_text": "",
                          "input_hint": "unknown", "file_action": "save"})
    log = parse_session(json.dumps(doc))
    assert log.events[-1].file_action == "save"


class TestCodeBlockExtraction:
    def test_single_fence_with_language_tag(self):
        text = "Try this:\n```python\nx = 1\n```\ndone"
        assert extract_code_blocks(text) == ("x = 1\n",)

    def test_blocks_are_contiguous_substrings(self):
        text = "a\n```\nfoo()\n```\nmid\n```js\nbar()\n```\n"
        blocks = extract_code_blocks(text)
        assert blocks == ("foo()\n", "bar()\n")
        for block in blocks:
            assert block in text

    def test_unclosed_fence_yields_nothing(self):
        assert extract_code_blocks("```python\nx = 1") == ()

    def test_unfenced_message_no_blocks_by_default(self):
        assert extract_code_blocks("just prose") == ()

    def test_treat_whole_message_as_code(self):
        assert extract_code_blocks("x = 1", treat_whole_message_as_code=True) == ("x = 1",)


class TestRoundTrip:
    def test_minimal_round_trip(self):
        log = parse_session(json.dumps(MINIMAL))
        again = parse_session(serialize_session(log))
        assert again == log

    def test_unicode_round_trip(self):
        doc = json.loads(json.dumps(MINIMAL))
        doc["events"][0]["inserted_text"] = "naïve λ"
        doc["starter"]["main.py"] = "# héllo\n"
        log = parse_session(json.dumps(doc))
        again = parse_session(serialize_session(log))
        assert again == log
        assert again.events[0].inserted_text == "naïve λ"

    def test_fuzzed_round_trip_1000_events(self):
        rng = random.Random(7)
        events = []
        t = 0
        for seq in range(1, 1001):
            t += rng.randint(0, 50)
            roll = rng.random()
            if roll < 0.8:
                events.append({"type": "edit", "session_id": "sf", "seq": seq,
                               "timestamp_ms": t, "file_path": "main.py", "kind": "insert",
                               "offset": rng.randint(0, 5), "removed_text": "",
                               "inserted_text": rng.choice(["a", "bb", "α\n", " "]),
                               "input_hint": rng.choice(["keystroke", "paste", "unknown"])})
            elif roll < 0.9:
                events.append({"type": "chat", "session_id": "sf", "timestamp_ms": t,
                               "role": rng.choice(["student", "assistant"]),
                               "text": " ".join(["tok"] * rng.randint(1, 9))})
                events.append({"type": "edit", "session_id": "sf", "seq": seq,
                               "timestamp_ms": t, "file_path": "main.py", "kind": "insert",
                               "offset": 0, "removed_text": "", "inserted_text": "z",
                               "input_hint": "keystroke"})
            else:
                events.append({"type": "test_run", "session_id": "sf", "timestamp_ms": t,
                               "passed": rng.randint(0, 5), "failed": rng.randint(0, 5),
                               "raw_output": "ok"})
                events.append({"type": "edit", "session_id": "sf", "seq": seq,
                               "timestamp_ms": t, "file_path": "main.py", "kind": "insert",
                               "offset": 0, "removed_text": "", "inserted_text": "q",
                               "input_hint": "keystroke"})
        doc = {"session_id": "sf", "metadata": {"task_id": "t", "condition": "c",
                                                "duration_ms": t},
               "starter": {"main.py": "seed\n"}, "events": events}
        log = parse_session(json.dumps(doc))
        assert parse_session(serialize_session(log)) == log

    def test_ndjson_round_trip(self):
        log = parse_session(json.dumps(MINIMAL))
        lines = list(write_session_ndjson(log))
        assert len(lines) == 1 + len(log.events)
        again = read_session_ndjson(lines)
        assert again == log


def test_session_id_mismatch_rejected():
    doc = json.loads(json.dumps(MINIMAL))
    doc["events"][0]["session_id"] = "other"
    with pytest.raises(SchemaViolation) as exc:
        parse_session(json.dumps(doc))
    assert "session_id" in exc.value.path


def test_serialized_logs_validate_against_published_schema():
    from importlib import resources

    import jsonschema

    from edittrace.forge import generate_gold_session, random_session
    from edittrace.sessionlog import session_to_dict

    schema = json.loads(resources.files("edittrace.schemas")
                        .joinpath("session_log.schema.json").read_text())
    jsonschema.validate(json.loads(json.dumps(MINIMAL)), schema)
    jsonschema.validate(session_to_dict(random_session(1, n_edits=80)), schema)
    jsonschema.validate(session_to_dict(generate_gold_session(1, 15).log), schema)
