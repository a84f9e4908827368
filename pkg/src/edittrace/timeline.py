"""Render-ready timeline geometry built from a labelled session.

The model is pure JSON-serializable data: the UI renders it without
recomputation and tests assert on it directly.  Overlay bands realize
provenance trails: each AI-origin span contributes piecewise-constant
rectangles from creation until destruction, re-segmented whenever subsequent
edits shift its line range.  Schema: ``schemas/timeline.schema.json``.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field

from .provenance import LabeledSession
from .replay import AI_SOURCES, ReplayDocument, count_lines, snapshot_at

SCHEMA_VERSION = 1


class OutOfExtent(ValueError):
    pass


@dataclass(slots=True)
class Marker:
    t: int
    line: int
    kind: str  # insert | delete
    seq: int


@dataclass(slots=True)
class Overlay:
    t_start: int
    t_end: int
    line_start: int
    line_end: int
    source: str
    origin_seq: int


@dataclass(slots=True)
class ChatBar:
    t: int
    role: str
    height: int  # word count of the message


@dataclass(slots=True)
class ZoomEntry:
    t: int
    seq: int
    line: int
    kind: str
    text: str
    truncated: bool


@dataclass(slots=True)
class ZoomDetail:
    t0: int
    t1: int
    entries: list[ZoomEntry]


@dataclass(slots=True)
class ViewportHints:
    first_visible_line: int | None = None
    last_visible_line: int | None = None
    excerpt_len: int = 80


@dataclass(slots=True)
class TimelineModel:
    schema_version: int
    session_id: str
    file_path: str
    t_min: int
    t_max: int
    max_line: int
    envelope: list[tuple[int, int]]
    markers: list[Marker]
    overlays: list[Overlay]
    chat_bars: list[ChatBar]
    projection: tuple[int, int]


@dataclass(slots=True)
class HitResult:
    kind: str  # marker | overlay | position
    t: int
    line: int
    offset: int
    seq: int | None = None
    overlay: Overlay | None = None


@dataclass(slots=True)
class TimelineContext:
    """A built model plus the per-event entries zoom and hit-testing need."""
    model: TimelineModel
    labeled: LabeledSession
    entries: list[ZoomEntry] = field(default_factory=list)
    _offsets: dict[int, int] = field(default_factory=dict)  # seq -> event offset


def _newline_positions(text: str) -> list[int]:
    out = []
    start = 0
    while True:
        i = text.find("\n", start)
        if i < 0:
            return out
        out.append(i)
        start = i + 1


def _line_at(newlines: list[int], offset: int) -> int:
    return bisect_left(newlines, offset) + 1


def _ai_rects(doc: ReplayDocument, newlines: list[int]) -> set[tuple[int, str, int, int]]:
    rects = set()
    for span in doc.spans:
        if span.source in AI_SOURCES:
            lo = _line_at(newlines, span.start)
            hi = _line_at(newlines, span.end - 1)
            rects.add((span.origin_seq, span.source, lo, hi))
    return rects


def build_context(labeled: LabeledSession, file_path: str | None = None,
                  hints: ViewportHints | None = None) -> TimelineContext:
    hints = hints or ViewportHints()
    log = labeled.log
    file_path = file_path or (labeled.file_paths()[0] if labeled.file_paths() else "")
    events = [e for e in log.edit_events if e.file_path == file_path]
    last_event_t = max((e.timestamp_ms for e in log.events), default=0)
    t_min = 0
    t_max = max(last_event_t, log.metadata.duration_ms)

    doc = ReplayDocument(file_path, log.starter.get(file_path, ""))
    envelope: list[tuple[int, int]] = [(t_min, count_lines(doc.text))]
    max_line = envelope[0][1]
    markers: list[Marker] = []
    entries: list[ZoomEntry] = []
    offsets: dict[int, int] = {}
    overlays: list[Overlay] = []
    open_rects: dict[tuple[int, str, int, int], int] = {}
    excerpt_len = hints.excerpt_len

    for event in events:
        t = event.timestamp_ms
        newlines = _newline_positions(doc.text)
        line = _line_at(newlines, event.offset)
        if event.kind in ("delete", "replace"):
            markers.append(Marker(t, line, "delete", event.seq))
        if event.kind in ("insert", "replace"):
            markers.append(Marker(t, line, "insert", event.seq))
        changed = event.inserted_text or event.removed_text or (event.file_action or "")
        entries.append(ZoomEntry(t, event.seq, line, event.kind,
                                 changed[:excerpt_len], len(changed) > excerpt_len))
        offsets[event.seq] = event.offset

        decision = labeled.labels.get(event.seq)
        if decision is None:
            doc.apply(event)
        else:
            doc.apply(event, decision.source, decision.chat_ref)

        line_count = count_lines(doc.text)
        if envelope[-1][0] == t:
            if envelope[-1][1] != line_count:
                envelope[-1] = (t, line_count)
        elif envelope[-1][1] != line_count:
            envelope.append((t, line_count))
        max_line = max(max_line, line_count)

        newlines = _newline_positions(doc.text)
        rects = _ai_rects(doc, newlines)
        for key in list(open_rects):
            if key not in rects:
                started = open_rects.pop(key)
                overlays.append(Overlay(started, t, key[2], key[3], key[1], key[0]))
        for key in rects:
            if key not in open_rects:
                open_rects[key] = t

    for key, started in open_rects.items():
        overlays.append(Overlay(started, t_max, key[2], key[3], key[1], key[0]))
    overlays.sort(key=lambda o: (o.t_start, o.line_start, o.t_end, o.origin_seq))

    chat_bars = [ChatBar(e.timestamp_ms, e.role, e.word_count)
                 for e in log.events if hasattr(e, "role")]

    low = hints.first_visible_line if hints.first_visible_line is not None else 1
    high = hints.last_visible_line if hints.last_visible_line is not None else max(1, max_line)
    low = max(1, min(low, max(1, max_line)))
    high = max(low, min(high, max(1, max_line)))

    model = TimelineModel(
        schema_version=SCHEMA_VERSION,
        session_id=log.session_id,
        file_path=file_path,
        t_min=t_min,
        t_max=t_max,
        max_line=max_line,
        envelope=envelope,
        markers=markers,
        overlays=overlays,
        chat_bars=chat_bars,
        projection=(low, high),
    )
    return TimelineContext(model=model, labeled=labeled, entries=entries, _offsets=offsets)


def build_timeline(labeled: LabeledSession, file_path: str | None = None,
                   hints: ViewportHints | None = None) -> TimelineModel:
    return build_context(labeled, file_path, hints).model


def zoom(context: TimelineContext, t0: int, t1: int) -> ZoomDetail:
    """Exactly the edit events with t0 <= t <= t1; an empty window is empty, not an error."""
    if t0 >= t1:
        raise ValueError(f"zoom window requires t0 < t1, got [{t0}, {t1}]")
    return ZoomDetail(t0, t1, [e for e in context.entries if t0 <= e.t <= t1])


def _line_start_offset(text: str, line: int) -> int:
    newlines = _newline_positions(text)
    line = max(1, min(line, len(newlines) + 1))
    return 0 if line == 1 else newlines[line - 2] + 1


def hit_test(context: TimelineContext, t: int, line: int,
             radius_t_ms: int = 1000, radius_lines: int = 2) -> HitResult:
    """Nearest marker within the pick ellipse, else covering overlay, else plain position."""
    model = context.model
    if not (model.t_min <= t <= model.t_max):
        raise OutOfExtent(f"t={t} outside [{model.t_min}, {model.t_max}]")
    if not (1 <= line <= max(1, model.max_line)):
        raise OutOfExtent(f"line={line} outside [1, {max(1, model.max_line)}]")

    best: Marker | None = None
    best_d = None
    for marker in model.markers:
        dt = (marker.t - t) / radius_t_ms
        dl = (marker.line - line) / radius_lines
        d = dt * dt + dl * dl
        if d <= 1.0 and (best_d is None or d < best_d
                         or (d == best_d and marker.seq < best.seq)):
            best = marker
            best_d = d
    if best is not None:
        return HitResult("marker", best.t, best.line, context._offsets[best.seq],
                         seq=best.seq)

    snapshot = snapshot_at(context.labeled.log, model.file_path, t)
    for overlay in model.overlays:
        if (overlay.t_start <= t <= overlay.t_end
                and overlay.line_start <= line <= overlay.line_end):
            offset = _line_start_offset(snapshot.text, overlay.line_start)
            return HitResult("overlay", t, overlay.line_start, offset, overlay=overlay)

    offset = _line_start_offset(snapshot.text, line)
    return HitResult("position", t, line, offset)


def model_to_dict(model: TimelineModel) -> dict:
    return {
        "schema_version": model.schema_version,
        "session_id": model.session_id,
        "file_path": model.file_path,
        "t_min": model.t_min,
        "t_max": model.t_max,
        "max_line": model.max_line,
        "envelope": [[t, n] for t, n in model.envelope],
        "markers": [{"t": m.t, "line": m.line, "kind": m.kind, "seq": m.seq}
                    for m in model.markers],
        "overlays": [{"t_start": o.t_start, "t_end": o.t_end,
                      "line_start": o.line_start, "line_end": o.line_end,
                      "source": o.source, "origin_seq": o.origin_seq}
                     for o in model.overlays],
        "chat_bars": [{"t": b.t, "role": b.role, "height": b.height}
                      for b in model.chat_bars],
        "projection": list(model.projection),
    }
