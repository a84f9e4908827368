"""Deterministic reconstruction of document text and provenance spans from edit events.

The engine applies insert/delete/replace splices in event order while keeping a
sorted, non-overlapping span partition of the document annotated with origin
sources.  Replace events decompose into delete-then-insert at the same offset,
so span bookkeeping only has two primitive cases.
"""

from __future__ import annotations

from dataclasses import dataclass

from .sessionlog import EditEvent, SessionLog

HUMAN = "human"
AI_PASTE = "ai_paste"
AI_COMPLETE = "ai_complete"
AI_SIMILAR = "ai_similar"
HUMAN_EDIT_OF_AI = "human_edit_of_ai"

SOURCES = (HUMAN, AI_PASTE, AI_COMPLETE, AI_SIMILAR, HUMAN_EDIT_OF_AI)
AI_SOURCES = frozenset((AI_PASTE, AI_COMPLETE, AI_SIMILAR))


class ReplayError(ValueError):
    pass


class OffsetOutOfRange(ReplayError):
    def __init__(self, seq: int, offset: int, end: int, length: int):
        super().__init__(
            f"event seq {seq}: range [{offset}, {end}) exceeds document length {length}")
        self.seq = seq
        self.offset = offset


class RemovedTextMismatch(ReplayError):
    def __init__(self, seq: int, expected: str, actual: str):
        super().__init__(
            f"event seq {seq}: removed_text {expected!r} does not match document {actual!r}")
        self.seq = seq


class UnknownFile(ReplayError):
    def __init__(self, file_path: str):
        super().__init__(f"no starter text or edit events for file {file_path!r}")
        self.file_path = file_path


@dataclass(slots=True)
class ProvenanceSpan:
    """Half-open character range [start, end) with its origin attribution.

    ``pending`` marks spans belonging to a typed run that is still open; such
    spans only merge with each other until the run resolves.
    """
    start: int
    end: int
    source: str
    origin_seq: int
    chat_ref: tuple[int, int] | None = None
    pending: bool = False

    def copy(self) -> "ProvenanceSpan":
        return ProvenanceSpan(self.start, self.end, self.source,
                              self.origin_seq, self.chat_ref, self.pending)


@dataclass(slots=True)
class DocumentSnapshot:
    file_path: str
    timestamp_ms: int
    text: str
    line_count: int
    spans: list[ProvenanceSpan]


def count_lines(text: str) -> int:
    """Line count used throughout: 1 + newlines, 0 for empty text."""
    if not text:
        return 0
    return 1 + text.count("\n")


def line_of_offset(text: str, offset: int) -> int:
    """1-based line containing character ``offset`` (an empty prefix is line 1)."""
    return 1 + text.count("\n", 0, offset)


class ReplayDocument:
    """Mutable per-file replay state: document text plus its span partition."""

    __slots__ = ("file_path", "text", "spans", "applied_count")

    def __init__(self, file_path: str, starter_text: str = ""):
        self.file_path = file_path
        self.text = starter_text
        self.spans: list[ProvenanceSpan] = []
        if starter_text:
            self.spans.append(ProvenanceSpan(0, len(starter_text), HUMAN, 0))
        self.applied_count = 0

    def snapshot(self, timestamp_ms: int) -> DocumentSnapshot:
        return DocumentSnapshot(
            file_path=self.file_path,
            timestamp_ms=timestamp_ms,
            text=self.text,
            line_count=count_lines(self.text),
            spans=[s.copy() for s in self.spans],
        )

    def apply(self, event: EditEvent, label: str = HUMAN,
              chat_ref: tuple[int, int] | None = None, pending: bool = False) -> None:
        """Apply one edit event, labelling any inserted range with ``label``."""
        if event.kind == "file_action":
            self.applied_count += 1
            return
        offset = event.offset
        if event.kind in ("delete", "replace"):
            removed_end = offset + len(event.removed_text)
            if offset > len(self.text) or removed_end > len(self.text):
                raise OffsetOutOfRange(event.seq, offset, removed_end, len(self.text))
            actual = self.text[offset:removed_end]
            if actual != event.removed_text:
                raise RemovedTextMismatch(event.seq, event.removed_text, actual)
            self._delete(offset, len(event.removed_text))
        elif offset > len(self.text):
            raise OffsetOutOfRange(event.seq, offset, offset, len(self.text))
        if event.kind in ("insert", "replace"):
            self._insert(offset, event.inserted_text, label, event.seq, chat_ref, pending)
        self.applied_count += 1

    def precheck(self, event: EditEvent) -> None:
        """Raise the same errors ``apply`` would, without mutating anything."""
        if event.kind == "file_action":
            return
        offset = event.offset
        end = offset + len(event.removed_text)
        if offset > len(self.text) or end > len(self.text):
            raise OffsetOutOfRange(event.seq, offset, end, len(self.text))
        if event.kind in ("delete", "replace"):
            actual = self.text[offset:end]
            if actual != event.removed_text:
                raise RemovedTextMismatch(event.seq, event.removed_text, actual)

    def _insert(self, offset: int, inserted: str, source: str, origin_seq: int,
                chat_ref: tuple[int, int] | None, pending: bool) -> None:
        length = len(inserted)
        self.text = self.text[:offset] + inserted + self.text[offset:]
        spans = self.spans
        new_span = ProvenanceSpan(offset, offset + length, source, origin_seq,
                                  chat_ref, pending)
        # Index of the first span that must shift or split.
        idx = 0
        n = len(spans)
        while idx < n and spans[idx].end <= offset:
            idx += 1
        insert_at = idx
        if idx < n and spans[idx].start < offset:
            # Insertion strictly inside spans[idx]: split into three.
            hit = spans[idx]
            right = ProvenanceSpan(offset + length, hit.end + length, hit.source,
                                   hit.origin_seq, hit.chat_ref, hit.pending)
            hit.end = offset
            spans.insert(idx + 1, right)
            insert_at = idx + 1
            idx += 2
            n += 1
        for j in range(idx, n):
            spans[j].start += length
            spans[j].end += length
        spans.insert(insert_at, new_span)
        self._merge_around(insert_at)

    def _delete(self, offset: int, length: int) -> None:
        if length == 0:
            return
        cut_end = offset + length
        self.text = self.text[:offset] + self.text[cut_end:]
        spans = self.spans
        out: list[ProvenanceSpan] = []
        first_touched = -1
        for span in spans:
            if span.end <= offset:
                out.append(span)
                continue
            if span.start >= cut_end:
                span.start -= length
                span.end -= length
                out.append(span)
                continue
            keep_left = max(0, min(span.end, offset) - span.start)
            keep_right = max(0, span.end - max(span.start, cut_end))
            kept = keep_left + keep_right
            if kept == 0:
                if first_touched < 0:
                    first_touched = len(out)
                continue
            span.start = span.start if span.start <= offset else max(offset, span.start - length)
            span.end = span.start + kept
            if first_touched < 0:
                first_touched = len(out)
            out.append(span)
        self.spans = out
        if first_touched >= 0:
            self._merge_around(first_touched)

    def _merge_around(self, idx: int) -> None:
        """Merge span ``idx`` with identical adjacent neighbors (source, chat_ref, pending)."""
        spans = self.spans
        if not spans:
            return
        idx = min(idx, len(spans) - 1)
        j = idx + 1
        while j < len(spans) and self._mergeable(spans[j - 1], spans[j]):
            spans[j - 1].end = spans[j].end
            spans[j - 1].origin_seq = min(spans[j - 1].origin_seq, spans[j].origin_seq)
            del spans[j]
        while idx > 0 and self._mergeable(spans[idx - 1], spans[idx]):
            spans[idx - 1].end = spans[idx].end
            spans[idx - 1].origin_seq = min(spans[idx - 1].origin_seq, spans[idx].origin_seq)
            del spans[idx]
            idx -= 1

    @staticmethod
    def _mergeable(left: ProvenanceSpan, right: ProvenanceSpan) -> bool:
        return (left.end == right.start
                and left.source == right.source
                and left.chat_ref == right.chat_ref
                and left.pending == right.pending)

    def relabel_spans(self, origin_seqs: set[int], source: str,
                      chat_ref: tuple[int, int] | None) -> None:
        """Retroactively change the source of spans created by the given events."""
        touched = -1
        for i, span in enumerate(self.spans):
            if span.origin_seq in origin_seqs:
                span.source = source
                span.chat_ref = chat_ref
                span.pending = False
                if touched < 0:
                    touched = i
        if touched >= 0:
            self._merge_around(touched)
            # Relabelling may have made several disjoint regions mergeable.
            i = 1
            while i < len(self.spans):
                if self._mergeable(self.spans[i - 1], self.spans[i]):
                    self.spans[i - 1].end = self.spans[i].end
                    self.spans[i - 1].origin_seq = min(self.spans[i - 1].origin_seq,
                                                       self.spans[i].origin_seq)
                    del self.spans[i]
                else:
                    i += 1

    def settle_pending(self, origin_seqs: set[int]) -> None:
        """Clear the pending flag on run-member spans and merge with neighbors."""
        touched = -1
        for i, span in enumerate(self.spans):
            if span.pending and span.origin_seq in origin_seqs:
                span.pending = False
                if touched < 0:
                    touched = i
        if touched >= 0:
            i = max(1, touched)
            while i < len(self.spans):
                if self._mergeable(self.spans[i - 1], self.spans[i]):
                    self.spans[i - 1].end = self.spans[i].end
                    self.spans[i - 1].origin_seq = min(self.spans[i - 1].origin_seq,
                                                       self.spans[i].origin_seq)
                    del self.spans[i]
                else:
                    i += 1

    def ai_span_at(self, offset: int, strictly_inside: bool = True) -> ProvenanceSpan | None:
        """The AI-origin span containing ``offset`` (strict interior by default)."""
        for span in self.spans:
            if span.source in AI_SOURCES:
                if strictly_inside and span.start < offset < span.end:
                    return span
                if not strictly_inside and span.start <= offset < span.end:
                    return span
            if span.start >= offset and strictly_inside:
                break
        return None

    def ai_overlap(self, start: int, end: int) -> ProvenanceSpan | None:
        """The first AI-origin span overlapping the half-open range [start, end)."""
        for span in self.spans:
            if span.start >= end:
                break
            if span.end > start and span.source in AI_SOURCES:
                return span
        return None


def apply_event(snapshot: DocumentSnapshot, event: EditEvent, label: str = HUMAN,
                chat_ref: tuple[int, int] | None = None) -> DocumentSnapshot:
    """Pure splice: returns a new snapshot with the event applied and labelled."""
    doc = ReplayDocument(snapshot.file_path)
    doc.text = snapshot.text
    doc.spans = [s.copy() for s in snapshot.spans]
    doc.apply(event, label, chat_ref)
    return doc.snapshot(event.timestamp_ms)


def _require_file(log: SessionLog, file_path: str) -> None:
    if file_path in log.starter:
        return
    for e in log.edit_events:
        if e.file_path == file_path:
            return
    raise UnknownFile(file_path)


class ReplayCursor:
    """Streaming replay over one file: advances monotonically, each event applied once."""

    def __init__(self, log: SessionLog, file_path: str):
        _require_file(log, file_path)
        self.log = log
        self.file_path = file_path
        self.doc = ReplayDocument(file_path, log.starter.get(file_path, ""))
        self._events = [e for e in log.edit_events if e.file_path == file_path]
        self._pos = 0
        self._t = -1

    @property
    def applied_count(self) -> int:
        return self.doc.applied_count

    def advance_to(self, t: int) -> DocumentSnapshot:
        if t < self._t:
            raise ValueError(f"cursor may only advance, {self._t} -> {t}")
        self._t = t
        while self._pos < len(self._events) and self._events[self._pos].timestamp_ms <= t:
            self.doc.apply(self._events[self._pos])
            self._pos += 1
        return self.doc.snapshot(t)

    def line_count_at(self, t: int) -> int:
        if t < self._t:
            raise ValueError(f"cursor may only advance, {self._t} -> {t}")
        self._t = t
        while self._pos < len(self._events) and self._events[self._pos].timestamp_ms <= t:
            self.doc.apply(self._events[self._pos])
            self._pos += 1
        return count_lines(self.doc.text)


def snapshot_at(log: SessionLog, file_path: str, t: int) -> DocumentSnapshot:
    """Document state after all edit events with timestamp_ms <= t (unlabelled replay)."""
    return ReplayCursor(log, file_path).advance_to(t)


def replay_session(log: SessionLog, file_path: str) -> DocumentSnapshot:
    """Full unlabelled replay of one file."""
    cursor = ReplayCursor(log, file_path)
    last_t = max((e.timestamp_ms for e in log.events), default=0)
    return cursor.advance_to(max(last_t, log.metadata.duration_ms))


def length_envelope(log: SessionLog, file_path: str,
                    sample_points: list[int]) -> list[tuple[int, int]]:
    """Line count at each sample time, computed in one forward pass."""
    for a, b in zip(sample_points, sample_points[1:]):
        if b < a:
            raise ValueError("sample_points must be sorted ascending")
    cursor = ReplayCursor(log, file_path)
    return [(t, cursor.line_count_at(t)) for t in sample_points]
