"""Origin attribution for insertions: input hints, chat matching, typed-run similarity.

Each insertion is classified by a first-match-wins ladder:

1. completion-accept hint            -> AI_COMPLETE
2. paste matching a chat code block  -> AI_PASTE
3. any other paste                   -> HUMAN (configurable)
4. typed run scoring >= threshold    -> AI_SIMILAR (retroactive, at run close)
5. insertion editing an AI span      -> HUMAN_EDIT_OF_AI
6. otherwise                         -> HUMAN

The similarity metric is a token-level LCS ratio, 2*LCS / (|a| + |b|):
whitespace-insensitive, order-aware, and cheap at typed-run scale.  It sits
behind ``similarity()`` so alternates can be swapped without touching the
ladder.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

from . import _lcs
from .replay import (
    AI_COMPLETE,
    AI_PASTE,
    AI_SIMILAR,
    AI_SOURCES,
    HUMAN,
    HUMAN_EDIT_OF_AI,
    DocumentSnapshot,
    ProvenanceSpan,
    ReplayDocument,
)
from .sessionlog import ChatEvent, EditEvent, SessionEvent, SessionLog, TestRunEvent

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


@dataclass(slots=True)
class ProvenanceConfig:
    similarity_threshold: float = 0.8
    min_run_tokens: int = 10
    run_gap_ms: int = 2000
    lookback_ms: int | None = None  # None = unlimited
    paste_requires_match: bool = True

    def __post_init__(self) -> None:
        if not (0.0 < self.similarity_threshold <= 1.0):
            raise ValueError(f"similarity_threshold must be in (0, 1], got {self.similarity_threshold}")
        if self.min_run_tokens < 1:
            raise ValueError(f"min_run_tokens must be >= 1, got {self.min_run_tokens}")
        if self.run_gap_ms < 0:
            raise ValueError(f"run_gap_ms must be >= 0, got {self.run_gap_ms}")

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ProvenanceConfig":
        known = {"similarity_threshold", "min_run_tokens", "run_gap_ms",
                 "lookback_ms", "paste_requires_match"}
        unknown = set(mapping) - known
        if unknown:
            raise ValueError(f"unknown provenance config keys: {sorted(unknown)}")
        return cls(**mapping)

    @classmethod
    def from_file(cls, path: str | Path) -> "ProvenanceConfig":
        path = Path(path)
        raw = path.read_bytes()
        if path.suffix.lower() == ".toml":
            try:
                import tomllib  # type: ignore[import-not-found]
            except ImportError:
                import tomli as tomllib
            mapping = tomllib.loads(raw.decode("utf-8"))
        else:
            mapping = json.loads(raw)
        return cls.from_mapping(mapping)


def tokenize(text: str) -> list[str]:
    """Identifier runs become one token each; other non-space characters stand alone."""
    return _TOKEN_RE.findall(text)


def similarity(a: Sequence[str], b: Sequence[str]) -> float:
    """Token-sequence similarity 2*LCS(a, b) / (|a| + |b|); 1.0 when both empty."""
    la, lb = len(a), len(b)
    if la == 0 and lb == 0:
        return 1.0
    if la == 0 or lb == 0:
        return 0.0
    ea, eb = _lcs.encode_pair(list(a), list(b))
    return 2.0 * _lcs.lcs_length(ea, eb) / (la + lb)


@dataclass(slots=True)
class TypedRun:
    """A maximal burst of contiguous keystroke insertions, the unit for similarity checks."""
    session_id: str
    file_path: str
    start_seq: int
    end_seq: int
    t_start: int
    t_end: int
    text: str
    anchor_offset: int


@dataclass(slots=True)
class LabelDecision:
    seq: int
    source: str
    chat_ref: tuple[int, int] | None = None
    provisional: bool = False


@dataclass(slots=True)
class RelabelNotice:
    """Emitted when a closed typed run retroactively becomes AI_SIMILAR."""
    file_path: str
    origin_seqs: list[int]
    source: str
    chat_ref: tuple[int, int] | None


Notice = Union[LabelDecision, RelabelNotice]


@dataclass(slots=True)
class _Block:
    index: int
    tokens: list[str]
    counts: Counter
    length: int


@dataclass(slots=True)
class _Match:
    sim: float
    chat_ref: tuple[int, int]


class _ChatIndex:
    """Assistant code blocks, pre-tokenized, in chronological order."""

    __slots__ = ("entries",)

    def __init__(self) -> None:
        self.entries: list[tuple[int, list[_Block]]] = []

    def add(self, chat: ChatEvent) -> None:
        if chat.role != "assistant" or not chat.code_blocks:
            return
        blocks = []
        for i, block in enumerate(chat.code_blocks):
            tokens = tokenize(block)
            blocks.append(_Block(i, tokens, Counter(tokens), len(tokens)))
        if blocks:
            self.entries.append((chat.timestamp_ms, blocks))

    def best_match(self, tokens: list[str], cutoff_ms: int, threshold: float,
                   lookback_ms: int | None) -> _Match | None:
        """Best-scoring block among chats at or before ``cutoff_ms``.

        Candidates whose multiset-overlap upper bound cannot reach
        ``threshold`` are skipped; they can never be the qualifying best.
        Ties break toward the most recent chat, then the earliest block.
        """
        la = len(tokens)
        counts = Counter(tokens)
        best: _Match | None = None
        best_ts = -1
        for ts, blocks in self.entries:
            if ts > cutoff_ms:
                break
            if lookback_ms is not None and ts < cutoff_ms - lookback_ms:
                continue
            for block in blocks:
                total = la + block.length
                if total == 0:
                    continue
                overlap = sum(min(n, block.counts[tok]) for tok, n in counts.items())
                if 2.0 * overlap / total < threshold:
                    continue
                sim = similarity_encoded(tokens, la, block)
                if sim < threshold:
                    continue
                if best is None or sim > best.sim or (sim == best.sim and ts > best_ts):
                    best = _Match(sim, (ts, block.index))
                    best_ts = ts
        return best


def similarity_encoded(tokens: list[str], la: int, block: _Block) -> float:
    if la == 0 or block.length == 0:
        return 0.0
    ea, eb = _lcs.encode_pair(tokens, block.tokens)
    return 2.0 * _lcs.lcs_length(ea, eb) / (la + block.length)


def classify_insertion(event_or_run: EditEvent | TypedRun, chats: Sequence[ChatEvent],
                       current_spans: Sequence[ProvenanceSpan],
                       cfg: ProvenanceConfig) -> tuple[str, tuple[int, int] | None]:
    """One-shot ladder classification against an explicit chat list and span state.

    The streaming ``SessionLabeler`` is the production path; this function is
    the same ladder exposed over plain values.
    """
    index = _ChatIndex()
    for chat in chats:
        index.add(chat)
    theta = cfg.similarity_threshold

    if isinstance(event_or_run, TypedRun):
        run = event_or_run
        tokens = tokenize(run.text)
        if len(tokens) >= cfg.min_run_tokens:
            match = index.best_match(tokens, run.t_start, theta, cfg.lookback_ms)
            if match is not None:
                return AI_SIMILAR, match.chat_ref
        if _point_inside_ai(current_spans, run.anchor_offset):
            return HUMAN_EDIT_OF_AI, None
        return HUMAN, None

    event = event_or_run
    if event.input_hint == "completion_accept":
        return AI_COMPLETE, None
    if event.input_hint == "paste":
        tokens = tokenize(event.inserted_text)
        match = index.best_match(tokens, event.timestamp_ms, theta, cfg.lookback_ms)
        if match is not None:
            return AI_PASTE, match.chat_ref
        if cfg.paste_requires_match:
            return HUMAN, None
        return AI_PASTE, None
    if event.kind == "replace":
        if _range_overlaps_ai(current_spans, event.offset, event.offset + len(event.removed_text)):
            return HUMAN_EDIT_OF_AI, None
    elif _point_inside_ai(current_spans, event.offset):
        return HUMAN_EDIT_OF_AI, None
    return HUMAN, None


def _point_inside_ai(spans: Sequence[ProvenanceSpan], offset: int) -> bool:
    return any(s.source in AI_SOURCES and s.start < offset < s.end for s in spans)


def _range_overlaps_ai(spans: Sequence[ProvenanceSpan], start: int, end: int) -> bool:
    return any(s.source in AI_SOURCES and s.start < end and s.end > start for s in spans)


@dataclass(slots=True)
class _OpenRun:
    file_path: str
    base_label: str
    member_seqs: list[int]
    parts: list[str]
    t_start: int
    t_last: int
    start_seq: int
    anchor_offset: int
    next_offset: int

    def add(self, event: EditEvent) -> None:
        self.member_seqs.append(event.seq)
        self.parts.append(event.inserted_text)
        self.t_last = event.timestamp_ms
        self.next_offset = event.offset + len(event.inserted_text)

    def text(self) -> str:
        return "".join(self.parts)


class SessionLabeler:
    """Single forward pass over a session's events, labelling every insertion.

    Feed events in log order; typed runs are aggregated live and their spans
    relabelled retroactively when a closing run scores above the threshold.
    The same object backs both offline labelling and the live monitor server.
    """

    def __init__(self, session_id: str, starter: dict[str, str],
                 cfg: ProvenanceConfig | None = None):
        self.session_id = session_id
        self.cfg = cfg or ProvenanceConfig()
        self.documents: dict[str, ReplayDocument] = {
            fp: ReplayDocument(fp, text) for fp, text in starter.items()
        }
        self.labels: dict[int, LabelDecision] = {}
        self._chats = _ChatIndex()
        self._runs: dict[str, _OpenRun] = {}
        self._last_t = 0

    def doc(self, file_path: str) -> ReplayDocument:
        doc = self.documents.get(file_path)
        if doc is None:
            doc = ReplayDocument(file_path, "")
            self.documents[file_path] = doc
        return doc

    def feed(self, event: SessionEvent) -> list[Notice]:
        self._last_t = max(self._last_t, event.timestamp_ms)
        if isinstance(event, ChatEvent):
            self._chats.add(event)
            return []
        if isinstance(event, TestRunEvent):
            return []
        return self._feed_edit(event)

    def _feed_edit(self, event: EditEvent) -> list[Notice]:
        doc = self.doc(event.file_path)
        doc.precheck(event)
        notices: list[Notice] = []
        if event.kind == "file_action":
            doc.apply(event)
            return notices
        cfg = self.cfg
        run = self._runs.get(event.file_path)

        if event.kind == "insert" and event.input_hint == "keystroke":
            if (run is not None
                    and event.timestamp_ms - run.t_last <= cfg.run_gap_ms
                    and event.offset == run.next_offset):
                doc.apply(event, run.base_label, None, pending=True)
                run.add(event)
                decision = LabelDecision(event.seq, run.base_label, None, provisional=True)
                self.labels[event.seq] = decision
                notices.append(decision)
                return notices
            if run is not None:
                notices.extend(self._close_run(event.file_path))
            base = HUMAN_EDIT_OF_AI if doc.ai_span_at(event.offset) else HUMAN
            self._runs[event.file_path] = _OpenRun(
                file_path=event.file_path,
                base_label=base,
                member_seqs=[event.seq],
                parts=[event.inserted_text],
                t_start=event.timestamp_ms,
                t_last=event.timestamp_ms,
                start_seq=event.seq,
                anchor_offset=event.offset,
                next_offset=event.offset + len(event.inserted_text),
            )
            doc.apply(event, base, None, pending=True)
            decision = LabelDecision(event.seq, base, None, provisional=True)
            self.labels[event.seq] = decision
            notices.append(decision)
            return notices

        # Any other edit to this file breaks run contiguity.
        if run is not None:
            notices.extend(self._close_run(event.file_path))

        if event.kind == "delete":
            doc.apply(event)
            return notices

        source, chat_ref = self._classify_event(event, doc)
        doc.apply(event, source, chat_ref)
        decision = LabelDecision(event.seq, source, chat_ref)
        self.labels[event.seq] = decision
        notices.append(decision)
        return notices

    def _classify_event(self, event: EditEvent,
                        doc: ReplayDocument) -> tuple[str, tuple[int, int] | None]:
        cfg = self.cfg
        if event.input_hint == "completion_accept":
            return AI_COMPLETE, None
        if event.input_hint == "paste":
            tokens = tokenize(event.inserted_text)
            match = self._chats.best_match(tokens, event.timestamp_ms,
                                           cfg.similarity_threshold, cfg.lookback_ms)
            if match is not None:
                return AI_PASTE, match.chat_ref
            if cfg.paste_requires_match:
                return HUMAN, None
            return AI_PASTE, None
        if event.kind == "replace":
            hit = doc.ai_overlap(event.offset, event.offset + len(event.removed_text))
        else:
            hit = doc.ai_span_at(event.offset)
        if hit is not None:
            return HUMAN_EDIT_OF_AI, None
        return HUMAN, None

    def _close_run(self, file_path: str) -> list[Notice]:
        run = self._runs.pop(file_path)
        doc = self.documents[file_path]
        members = set(run.member_seqs)
        cfg = self.cfg
        tokens = tokenize(run.text())
        if len(tokens) >= cfg.min_run_tokens:
            match = self._chats.best_match(tokens, run.t_start,
                                           cfg.similarity_threshold, cfg.lookback_ms)
            if match is not None:
                doc.relabel_spans(members, AI_SIMILAR, match.chat_ref)
                for seq in run.member_seqs:
                    self.labels[seq] = LabelDecision(seq, AI_SIMILAR, match.chat_ref)
                return [RelabelNotice(file_path, list(run.member_seqs),
                                      AI_SIMILAR, match.chat_ref)]
        doc.settle_pending(members)
        for seq in run.member_seqs:
            old = self.labels[seq]
            self.labels[seq] = LabelDecision(seq, old.source, old.chat_ref)
        return []

    def close(self) -> list[Notice]:
        """Close all open typed runs (session end)."""
        notices: list[Notice] = []
        for file_path in sorted(self._runs):
            notices.extend(self._close_run(file_path))
        return notices

    def snapshot(self, file_path: str, timestamp_ms: int | None = None) -> DocumentSnapshot:
        t = self._last_t if timestamp_ms is None else timestamp_ms
        return self.doc(file_path).snapshot(t)


@dataclass(slots=True)
class LabeledSession:
    """A fully labelled session: per-event sources plus final per-file documents."""
    log: SessionLog
    cfg: ProvenanceConfig
    labels: dict[int, LabelDecision]
    documents: dict[str, ReplayDocument]

    def final_snapshot(self, file_path: str) -> DocumentSnapshot:
        if file_path not in self.documents:
            from .replay import UnknownFile

            raise UnknownFile(file_path)
        end_t = max((e.timestamp_ms for e in self.log.events), default=0)
        return self.documents[file_path].snapshot(max(end_t, self.log.metadata.duration_ms))

    def label_of(self, seq: int) -> LabelDecision:
        return self.labels[seq]

    def classified_events(self) -> list[EditEvent]:
        return [e for e in self.log.edit_events if e.kind in ("insert", "replace")]

    def sources(self) -> list[str]:
        """Per-insertion source labels, in event order."""
        return [self.labels[e.seq].source for e in self.classified_events()]

    def file_paths(self) -> list[str]:
        paths = dict.fromkeys(self.log.starter)
        for fp in self.documents:
            paths.setdefault(fp, None)
        return list(paths)


def label_session(log: SessionLog, cfg: ProvenanceConfig | None = None) -> LabeledSession:
    """Label every insertion in a session with its provenance source."""
    cfg = cfg or ProvenanceConfig()
    labeler = SessionLabeler(log.session_id, log.starter, cfg)
    for event in log.events:
        labeler.feed(event)
    labeler.close()
    return LabeledSession(log=log, cfg=cfg, labels=labeler.labels,
                          documents=labeler.documents)


def labeled_snapshot_at(labeled: LabeledSession, file_path: str,
                        t: int) -> DocumentSnapshot:
    """Historical document state at time ``t`` carrying the final attributions."""
    from .replay import UnknownFile

    log = labeled.log
    if file_path not in log.starter and all(
            e.file_path != file_path for e in log.edit_events):
        raise UnknownFile(file_path)
    doc = ReplayDocument(file_path, log.starter.get(file_path, ""))
    for event in log.edit_events:
        if event.file_path != file_path or event.timestamp_ms > t:
            continue
        decision = labeled.labels.get(event.seq)
        if decision is None:
            doc.apply(event)
        else:
            doc.apply(event, decision.source, decision.chat_ref)
    return doc.snapshot(t)
