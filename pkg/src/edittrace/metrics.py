"""Aggregation of labelled sessions into per-source statistics and classifier scores.

"% of edits" is event-weighted by default: each classified insertion counts
once.  Character weighting is offered as well, because one paste can dwarf
hundreds of keystrokes.  HUMAN_EDIT_OF_AI is reported as its own line; it
counts toward neither AI reliance nor pure human authorship.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from typing import Sequence

from .provenance import LabeledSession
from .replay import AI_SOURCES, SOURCES, DocumentSnapshot


class EmptySession(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


@dataclass(slots=True)
class SegmentationRules:
    """A function starts at a line matching ``pattern`` indented at most
    ``max_indent`` columns, and runs to the line before the next such line."""
    pattern: str = r"def\s+([A-Za-z_]\w*)\s*\("
    max_indent: int = 0


@dataclass(slots=True)
class FunctionRegion:
    name: str
    line_start: int  # 1-based, inclusive
    line_end: int


@dataclass(slots=True)
class FunctionAttribution:
    file_path: str
    name: str
    line_start: int
    line_end: int
    ai_fraction: float


@dataclass(slots=True)
class SessionMetrics:
    session_id: str
    task_id: str
    condition: str
    counts: dict[str, int]
    event_proportions: dict[str, float]
    char_proportions: dict[str, float]
    edit_count: int  # classified insertion events (insert + replace)
    delete_count: int
    file_action_count: int
    total_edit_events: int
    chat_count: int
    test_run_count: int
    final_loc: int
    per_function: list[FunctionAttribution] = field(default_factory=list)


@dataclass(slots=True)
class FScoreReport:
    tp: dict[str, int]
    fp: dict[str, int]
    fn: dict[str, int]
    f: dict[str, float | None]  # None when TP+FP+FN == 0 (undefined)
    macro_f: float | None


def segment_functions(snapshot: DocumentSnapshot,
                      rules: SegmentationRules | None = None) -> list[FunctionRegion]:
    """Pattern-based function regions over a snapshot; disjoint and ordered."""
    rules = rules or SegmentationRules()
    pattern = re.compile(rules.pattern)
    lines = snapshot.text.split("\n") if snapshot.text else []
    starts: list[tuple[int, str]] = []
    for i, line in enumerate(lines):
        stripped = line.lstrip(" \t")
        indent = len(line) - len(stripped)
        if indent > rules.max_indent:
            continue
        m = pattern.match(stripped)
        if m:
            starts.append((i + 1, m.group(1)))
    regions = []
    for k, (line_no, name) in enumerate(starts):
        end = starts[k + 1][0] - 1 if k + 1 < len(starts) else len(lines)
        regions.append(FunctionRegion(name=name, line_start=line_no, line_end=end))
    return regions


def _line_offsets(text: str) -> list[int]:
    offsets = [0]
    for i, ch in enumerate(text):
        if ch == "\n":
            offsets.append(i + 1)
    return offsets


def function_attributions(snapshot: DocumentSnapshot,
                          rules: SegmentationRules | None = None) -> list[FunctionAttribution]:
    """AI-origin character fraction of each function region in the final text."""
    regions = segment_functions(snapshot, rules)
    if not regions:
        return []
    offsets = _line_offsets(snapshot.text)
    n = len(snapshot.text)
    out = []
    for region in regions:
        start = offsets[region.line_start - 1]
        end = offsets[region.line_end] if region.line_end < len(offsets) else n
        size = end - start
        ai_chars = 0
        for span in snapshot.spans:
            if span.source in AI_SOURCES:
                ai_chars += max(0, min(span.end, end) - max(span.start, start))
        fraction = ai_chars / size if size > 0 else 0.0
        out.append(FunctionAttribution(snapshot.file_path, region.name,
                                       region.line_start, region.line_end, fraction))
    return out


def compute_metrics(labeled: LabeledSession,
                    rules: SegmentationRules | None = None) -> SessionMetrics:
    log = labeled.log
    classified = labeled.classified_events()
    counts = {src: 0 for src in SOURCES}
    char_weights = {src: 0 for src in SOURCES}
    for event in classified:
        source = labeled.labels[event.seq].source
        counts[source] += 1
        char_weights[source] += len(event.inserted_text)
    total = len(classified)
    total_chars = sum(char_weights.values())
    event_proportions = {src: counts[src] / total for src in SOURCES} if total else {}
    char_proportions = ({src: char_weights[src] / total_chars for src in SOURCES}
                        if total_chars else {})

    per_function: list[FunctionAttribution] = []
    final_loc = 0
    for fp in labeled.file_paths():
        snap = labeled.final_snapshot(fp)
        final_loc += snap.line_count
        per_function.extend(function_attributions(snap, rules))

    edits = log.edit_events
    return SessionMetrics(
        session_id=log.session_id,
        task_id=log.metadata.task_id,
        condition=log.metadata.condition,
        counts=counts,
        event_proportions=event_proportions,
        char_proportions=char_proportions,
        edit_count=total,
        delete_count=sum(1 for e in edits if e.kind == "delete"),
        file_action_count=sum(1 for e in edits if e.kind == "file_action"),
        total_edit_events=len(edits),
        chat_count=log.chat_count,
        test_run_count=log.test_run_count,
        final_loc=final_loc,
        per_function=per_function,
    )


def ai_reliance(metrics: SessionMetrics) -> float:
    """Event-weighted fraction of insertions attributed to any AI source."""
    if metrics.edit_count == 0:
        raise EmptySession(f"session {metrics.session_id} has no classified insertions")
    return sum(metrics.event_proportions[src] for src in AI_SOURCES)


def f_score(predicted: Sequence[str], gold: Sequence[str],
            sources: Sequence[str] = SOURCES) -> FScoreReport:
    """Per-source one-vs-rest F = 2*TP / (2*TP + FP + FN), aligned by position."""
    if len(predicted) != len(gold):
        raise LengthMismatch(f"{len(predicted)} predicted labels vs {len(gold)} gold")
    tp = {src: 0 for src in sources}
    fp = {src: 0 for src in sources}
    fn = {src: 0 for src in sources}
    for p, g in zip(predicted, gold):
        if p == g:
            if p in tp:
                tp[p] += 1
        else:
            if p in fp:
                fp[p] += 1
            if g in fn:
                fn[g] += 1
    f: dict[str, float | None] = {}
    defined = []
    for src in sources:
        denom = 2 * tp[src] + fp[src] + fn[src]
        if denom == 0:
            f[src] = None
        else:
            value = 2.0 * tp[src] / denom
            f[src] = value
            defined.append(value)
    macro = sum(defined) / len(defined) if defined else None
    return FScoreReport(tp=tp, fp=fp, fn=fn, f=f, macro_f=macro)


def metrics_to_dict(metrics: SessionMetrics) -> dict:
    return {
        "session_id": metrics.session_id,
        "task_id": metrics.task_id,
        "condition": metrics.condition,
        "counts": dict(metrics.counts),
        "event_proportions": dict(metrics.event_proportions),
        "char_proportions": dict(metrics.char_proportions),
        "edit_count": metrics.edit_count,
        "delete_count": metrics.delete_count,
        "file_action_count": metrics.file_action_count,
        "total_edit_events": metrics.total_edit_events,
        "chat_count": metrics.chat_count,
        "test_run_count": metrics.test_run_count,
        "final_loc": metrics.final_loc,
        "ai_reliance": ai_reliance(metrics) if metrics.edit_count else None,
        "per_function": [
            {"file_path": a.file_path, "name": a.name, "line_start": a.line_start,
             "line_end": a.line_end, "ai_fraction": a.ai_fraction}
            for a in metrics.per_function
        ],
    }


# Frozen CSV schema: downstream grading scripts depend on these names.
CSV_COLUMNS = (
    "session_id", "task_id", "condition",
    "edit_count", "delete_count", "file_action_count", "total_edit_events",
    "chat_count", "test_run_count", "final_loc",
    "n_human", "n_ai_paste", "n_ai_complete", "n_ai_similar", "n_human_edit_of_ai",
    "p_human", "p_ai_paste", "p_ai_complete", "p_ai_similar", "p_human_edit_of_ai",
    "cp_human", "cp_ai_paste", "cp_ai_complete", "cp_ai_similar", "cp_human_edit_of_ai",
    "ai_reliance",
)


def _csv_row(metrics: SessionMetrics) -> list:
    ep = metrics.event_proportions
    cp = metrics.char_proportions
    reliance = ai_reliance(metrics) if metrics.edit_count else ""
    row = [metrics.session_id, metrics.task_id, metrics.condition,
           metrics.edit_count, metrics.delete_count, metrics.file_action_count,
           metrics.total_edit_events, metrics.chat_count, metrics.test_run_count,
           metrics.final_loc]
    row += [metrics.counts[src] for src in SOURCES]
    row += [ep.get(src, "") for src in SOURCES]
    row += [cp.get(src, "") for src in SOURCES]
    row.append(reliance)
    return row


def aggregate_metrics(per_session: Sequence[SessionMetrics]) -> dict:
    """One aggregate row: counts summed, proportions averaged over sessions,
    plus pooled (count-weighted) proportions in the JSON form."""
    nonempty = [m for m in per_session if m.edit_count]
    pooled_counts = {src: sum(m.counts[src] for m in per_session) for src in SOURCES}
    pooled_total = sum(pooled_counts.values())
    mean = {src: (sum(m.event_proportions[src] for m in nonempty) / len(nonempty)
                  if nonempty else None) for src in SOURCES}
    mean_char = {src: (sum(m.char_proportions.get(src, 0.0) for m in nonempty) / len(nonempty)
                       if nonempty else None) for src in SOURCES}
    reliances = [ai_reliance(m) for m in nonempty]
    return {
        "session_count": len(per_session),
        "counts": pooled_counts,
        "mean_event_proportions": mean,
        "mean_char_proportions": mean_char,
        "pooled_event_proportions": ({src: pooled_counts[src] / pooled_total
                                      for src in SOURCES} if pooled_total else {}),
        "mean_ai_reliance": sum(reliances) / len(reliances) if reliances else None,
        "min_ai_reliance": min(reliances) if reliances else None,
        "max_ai_reliance": max(reliances) if reliances else None,
        "edit_count": sum(m.edit_count for m in per_session),
        "delete_count": sum(m.delete_count for m in per_session),
        "file_action_count": sum(m.file_action_count for m in per_session),
        "total_edit_events": sum(m.total_edit_events for m in per_session),
        "chat_count": sum(m.chat_count for m in per_session),
        "test_run_count": sum(m.test_run_count for m in per_session),
    }


def write_csv(per_session: Sequence[SessionMetrics], aggregate: bool = False) -> str:
    """CSV export, one row per session; with ``aggregate``, one final mean row."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for metrics in per_session:
        writer.writerow(_csv_row(metrics))
    if aggregate and per_session:
        agg = aggregate_metrics(per_session)
        row = ["__aggregate__", "", "",
               agg["edit_count"], agg["delete_count"], agg["file_action_count"],
               agg["total_edit_events"], agg["chat_count"], agg["test_run_count"], ""]
        row += [agg["counts"][src] for src in SOURCES]
        row += [agg["mean_event_proportions"][src] if agg["mean_event_proportions"][src] is not None else ""
                for src in SOURCES]
        row += [agg["mean_char_proportions"][src] if agg["mean_char_proportions"][src] is not None else ""
                for src in SOURCES]
        row.append(agg["mean_ai_reliance"] if agg["mean_ai_reliance"] is not None else "")
        writer.writerow(row)
    return buf.getvalue()
