from __future__ import annotations

import json
import random
from importlib import resources

import jsonschema
import pytest

from conftest import make_chat, make_edit, make_log
from oracles import brute_force_pick, overlay_covering

from edittrace.forge import generate_gold_session, random_session
from edittrace.provenance import label_session
from edittrace.replay import AI_SOURCES, count_lines, snapshot_at
from edittrace.timeline import (
    OutOfExtent,
    ViewportHints,
    build_context,
    build_timeline,
    hit_test,
    model_to_dict,
    zoom,
)

BLOCK = "def fn(aggregate_total, response_map):\n    return aggregate_total\n"


def build_for(events, starter="", **kwargs):
    labeled = label_session(make_log(events, starter=starter))
    return build_context(labeled, **kwargs)


class TestMarkers:
    def test_three_inserts_three_markers(self):
        events = [make_edit(1, 100, "insert", 0, inserted="a\n"),
                  make_edit(2, 5000, "insert", 2, inserted="b\n"),
                  make_edit(3, 9000, "insert", 4, inserted="c\n")]
        model = build_for(events).model
        assert [(m.t, m.line, m.kind) for m in model.markers] == [
            (100, 1, "insert"), (5000, 2, "insert"), (9000, 3, "insert")]

    def test_marker_count_law(self):
        log = random_session(seed=17, n_edits=300)
        model = build_timeline(label_session(log))
        edits = log.edit_events
        inserts = sum(1 for e in edits if e.kind == "insert")
        deletes = sum(1 for e in edits if e.kind == "delete")
        replaces = sum(1 for e in edits if e.kind == "replace")
        assert len(model.markers) == inserts + deletes + 2 * replaces

    def test_replace_yields_paired_markers_same_t(self):
        events = [make_edit(1, 100, "insert", 0, inserted="abcd"),
                  make_edit(2, 900, "replace", 1, removed="bc", inserted="XY")]
        model = build_for(events).model
        paired = [m for m in model.markers if m.seq == 2]
        assert {m.kind for m in paired} == {"insert", "delete"}
        assert {m.t for m in paired} == {900}

    def test_marker_line_within_snapshot_extent(self):
        log = random_session(seed=23, n_edits=250)
        labeled = label_session(log)
        model = build_timeline(labeled)
        pre = {}
        for m in model.markers:
            post_lines = count_lines(snapshot_at(log, "main.py", m.t).text)
            if m.seq not in pre:
                pre[m.seq] = count_lines(
                    snapshot_at(log, "main.py", m.t - 1).text) if m.t > 0 else 0
            assert model.t_min <= m.t <= model.t_max
            assert 1 <= m.line <= max(post_lines, pre[m.seq], 1)


class TestEnvelope:
    def test_envelope_matches_snapshot_line_counts(self):
        log = random_session(seed=29, n_edits=200)
        labeled = label_session(log)
        model = build_timeline(labeled)
        rng = random.Random(4)
        for _ in range(200):
            t = rng.randint(0, model.t_max)
            value = None
            for bt, lines in model.envelope:
                if bt <= t:
                    value = lines
                else:
                    break
            assert value == count_lines(snapshot_at(log, "main.py", t).text)

    def test_envelope_changes_only_at_event_timestamps(self):
        log = random_session(seed=31, n_edits=150)
        model = build_timeline(label_session(log))
        event_times = {e.timestamp_ms for e in log.edit_events} | {0}
        for t, _ in model.envelope:
            assert t in event_times


class TestChatBars:
    def test_bar_heights_are_word_counts(self):
        events = [make_chat(500, "student", "hello world"),
                  make_edit(1, 1000, "insert", 0, inserted="x")]
        model = build_for(events).model
        assert len(model.chat_bars) == 1
        bar = model.chat_bars[0]
        assert (bar.t, bar.role, bar.height) == (500, "student", 2)

    def test_assistant_and_student_bars(self):
        events = [make_chat(100, "student", "one two three"),
                  make_chat(900, "assistant", f"try\n```python\n{BLOCK}```"),
                  make_edit(1, 1500, "insert", 0, inserted="x")]
        model = build_for(events).model
        assert [b.role for b in model.chat_bars] == ["student", "assistant"]


class TestOverlays:
    def test_overlays_only_ai_sources(self):
        for seed in range(5):
            gold = generate_gold_session(seed, n_behaviors=25)
            model = build_timeline(label_session(gold.log))
            for overlay in model.overlays:
                assert overlay.source in AI_SOURCES
                assert overlay.t_end >= overlay.t_start
                assert overlay.line_end >= overlay.line_start

    def test_paste_produces_overlay_until_t_max(self):
        chat = make_chat(100, "assistant", f"```python\n{BLOCK}```")
        events = [chat, make_edit(1, 1000, "insert", 0, inserted=BLOCK, hint="paste")]
        model = build_for(events).model
        assert len(model.overlays) == 1
        overlay = model.overlays[0]
        assert overlay.source == "ai_paste"
        assert overlay.t_start == 1000
        assert overlay.t_end == model.t_max
        assert (overlay.line_start, overlay.line_end) == (1, 2)

    def test_deleted_span_ends_overlay(self):
        chat = make_chat(100, "assistant", f"```python\n{BLOCK}```")
        events = [chat,
                  make_edit(1, 1000, "insert", 0, inserted=BLOCK, hint="paste"),
                  make_edit(2, 5000, "delete", 0, removed=BLOCK)]
        model = build_for(events).model
        assert len(model.overlays) == 1
        assert model.overlays[0].t_end == 5000

    def test_insert_above_shifts_overlay_into_new_segment(self):
        chat = make_chat(100, "assistant", f"```python\n{BLOCK}```")
        events = [chat,
                  make_edit(1, 1000, "insert", 0, inserted=BLOCK, hint="paste"),
                  make_edit(2, 5000, "insert", 0, inserted="# header\n")]
        model = build_for(events).model
        segments = sorted(model.overlays, key=lambda o: o.t_start)
        assert len(segments) == 2
        assert segments[0].line_start == 1 and segments[0].t_end == 5000
        assert segments[1].line_start == 2 and segments[1].t_start == 5000


class TestZoom:
    def test_empty_window(self):
        events = [make_edit(1, 1000, "insert", 0, inserted="x")]
        ctx = build_for(events)
        assert zoom(ctx, 2000, 3000).entries == []

    def test_full_window_has_all_edit_events(self):
        log = random_session(seed=37, n_edits=120)
        ctx = build_context(label_session(log))
        detail = zoom(ctx, ctx.model.t_min, ctx.model.t_max)
        assert len(detail.entries) == log.edit_count

    def test_random_windows_match_linear_scan(self):
        log = random_session(seed=41, n_edits=150)
        ctx = build_context(label_session(log))
        rng = random.Random(6)
        for _ in range(50):
            a, b = sorted(rng.sample(range(0, ctx.model.t_max + 1), 2))
            if a == b:
                continue
            expected = [e.seq for e in log.edit_events if a <= e.timestamp_ms <= b]
            assert [e.seq for e in zoom(ctx, a, b).entries] == expected

    def test_excerpt_truncation(self):
        long_text = "x" * 500
        events = [make_edit(1, 100, "insert", 0, inserted=long_text)]
        ctx = build_for(events, hints=ViewportHints(excerpt_len=10))
        entry = ctx.entries[0]
        assert entry.text == "x" * 10
        assert entry.truncated is True

    def test_invalid_window_rejected(self):
        ctx = build_for([make_edit(1, 100, "insert", 0, inserted="x")])
        with pytest.raises(ValueError):
            zoom(ctx, 50, 50)


class TestHitTest:
    def test_exact_marker_coordinates(self):
        events = [make_edit(1, 1000, "insert", 0, inserted="a\n"),
                  make_edit(2, 9000, "insert", 2, inserted="b\n")]
        ctx = build_for(events)
        hit = hit_test(ctx, 9000, 2)
        assert hit.kind == "marker"
        assert hit.seq == 2
        assert hit.offset == 2

    def test_point_in_overlay_without_marker(self):
        chat = make_chat(100, "assistant", f"```python\n{BLOCK}```")
        events = [chat, make_edit(1, 1000, "insert", 0, inserted=BLOCK, hint="paste")]
        labeled = label_session(make_log(events, starter="", duration_ms=60_000))
        ctx = build_context(labeled)
        hit = hit_test(ctx, 30_000, 1, radius_t_ms=10, radius_lines=1)
        assert hit.kind == "overlay"
        assert hit.overlay.source == "ai_paste"
        assert hit.offset == 0

    def test_plain_position_fallback(self):
        events = [make_edit(1, 1000, "insert", 0, inserted="a\nb\nc\n")]
        labeled = label_session(make_log(events, starter="", duration_ms=60_000))
        ctx = build_context(labeled)
        hit = hit_test(ctx, 30_000, 2, radius_t_ms=100, radius_lines=1)
        assert hit.kind == "position"
        assert hit.offset == 2  # start of line 2 in "a\nb\nc\n"

    def test_out_of_extent(self):
        ctx = build_for([make_edit(1, 100, "insert", 0, inserted="x")])
        with pytest.raises(OutOfExtent):
            hit_test(ctx, ctx.model.t_max + 1, 1)
        with pytest.raises(OutOfExtent):
            hit_test(ctx, 0, 99)

    def test_500_random_picks_match_brute_force(self):
        gold = generate_gold_session(11, n_behaviors=30)
        ctx = build_context(label_session(gold.log))
        model = ctx.model
        rng = random.Random(8)
        for _ in range(500):
            t = rng.randint(model.t_min, model.t_max)
            line = rng.randint(1, max(1, model.max_line))
            hit = hit_test(ctx, t, line, radius_t_ms=800, radius_lines=2)
            expected_marker = brute_force_pick(model.markers, t, line, 800, 2)
            if expected_marker is not None:
                assert hit.kind == "marker"
                assert hit.seq == expected_marker.seq
                continue
            expected_overlay = overlay_covering(model.overlays, t, line)
            if expected_overlay is not None:
                assert hit.kind == "overlay"
                assert hit.overlay == expected_overlay
            else:
                assert hit.kind == "position"


class TestModelExport:
    def test_schema_validation(self):
        gold = generate_gold_session(13, n_behaviors=25)
        payload = model_to_dict(build_timeline(label_session(gold.log)))
        schema = json.loads(resources.files("edittrace.schemas")
                            .joinpath("timeline.schema.json").read_text())
        jsonschema.validate(payload, schema)

    def test_deterministic_and_hint_independent_geometry(self):
        gold = generate_gold_session(19, n_behaviors=20)
        labeled = label_session(gold.log)
        a = model_to_dict(build_timeline(labeled))
        b = model_to_dict(build_timeline(labeled, hints=ViewportHints(5, 20)))
        assert a["markers"] == b["markers"]
        assert a["overlays"] == b["overlays"]
        assert a["envelope"] == b["envelope"]
        assert a["projection"] != b["projection"] or a["max_line"] < 5

    def test_empty_session_model(self):
        model = build_timeline(label_session(make_log([], starter="")))
        assert model.markers == []
        assert model.overlays == []
        assert model.envelope == [(0, 0)]
