"""Synthetic session generation: random edit fuzzing and gold-labelled behavior scripts.

``random_session`` emits structurally valid but content-random logs for replay
and protocol fuzzing.  ``generate_gold_session`` plants known provenance
behaviors (pastes of chat blocks, completion accepts, verbatim retypes,
paraphrased retypes below the similarity threshold, organic typing, edits
inside AI regions) and returns the intended gold label for every insertion,
for classifier-recovery evaluation.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .provenance import ProvenanceConfig, similarity, tokenize
from .replay import AI_COMPLETE, AI_PASTE, AI_SIMILAR, HUMAN, HUMAN_EDIT_OF_AI
from .sessionlog import (
    ChatEvent,
    EditEvent,
    SessionEvent,
    SessionLog,
    SessionMetadata,
    TestRunEvent,
    extract_code_blocks,
    word_count,
)

_HUMAN_WORDS = (
    "total", "count", "items", "index", "value", "entry", "acc", "left", "right",
    "grade", "name", "score", "rows", "line", "parts", "key", "bucket", "queue",
)
_AI_WORDS = (
    "result_buffer", "payload", "normalized", "aggregate", "response_map",
    "validated_input", "schedule_slot", "patient_record", "doctor_rate",
    "appointment", "overlap_check", "sorted_entries", "report_lines",
)


def _snippet(rng: random.Random, words: tuple[str, ...], lines: int) -> str:
    out = []
    for _ in range(lines):
        a, b, c = rng.choice(words), rng.choice(words), rng.choice(words)
        template = rng.choice((
            f"{a} = {b}({c})",
            f"{a} = {b} + {c} * {rng.randint(2, 99)}",
            f"if {a} > {rng.randint(0, 9)}:",
            f"    {a}.append({b}[{c}])",
            f"for {a} in {b}:",
            f"    return {a}[{rng.randint(0, 5)}] - {b}",
        ))
        out.append(template)
    return "\n".join(out) + "\n"


def random_session(seed: int, n_edits: int = 300, session_id: str | None = None,
                   file_path: str = "main.py", chat_every: int = 40) -> SessionLog:
    """A structurally valid random session with exactly ``n_edits`` edit events."""
    rng = random.Random(seed)
    session_id = session_id or f"fuzz-{seed}"
    text = _snippet(rng, _HUMAN_WORDS, rng.randint(0, 4)) if rng.random() < 0.8 else ""
    starter = {file_path: text}
    events: list[SessionEvent] = []
    t = 0
    alphabet = "abcdefgh xyz():=\n"
    for seq in range(1, n_edits + 1):
        t += rng.randint(1, 400)
        roll = rng.random()
        if roll < 0.55 or not text:
            offset = rng.randint(0, len(text))
            inserted = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 6)))
            hint = rng.choice(("keystroke", "keystroke", "keystroke", "paste",
                               "completion_accept", "unknown"))
            events.append(EditEvent(session_id, seq, t, file_path, "insert", offset,
                                    "", inserted, hint))
            text = text[:offset] + inserted + text[offset:]
        elif roll < 0.8:
            offset = rng.randint(0, len(text) - 1)
            length = min(rng.randint(1, 8), len(text) - offset)
            removed = text[offset:offset + length]
            events.append(EditEvent(session_id, seq, t, file_path, "delete", offset,
                                    removed, "", "keystroke"))
            text = text[:offset] + text[offset + length:]
        elif roll < 0.95:
            offset = rng.randint(0, len(text) - 1)
            length = min(rng.randint(1, 5), len(text) - offset)
            removed = text[offset:offset + length]
            inserted = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 5)))
            events.append(EditEvent(session_id, seq, t, file_path, "replace", offset,
                                    removed, inserted, rng.choice(("keystroke", "paste"))))
            text = text[:offset] + inserted + text[offset + length:]
        else:
            events.append(EditEvent(session_id, seq, t, file_path, "file_action", 0,
                                    "", "", "unknown", rng.choice(("save", "open", "close"))))
        if chat_every and seq % chat_every == 0:
            t += rng.randint(1, 100)
            if rng.random() < 0.5:
                body = "how do I " + " ".join(rng.sample(_HUMAN_WORDS, 3))
                events.append(_chat(session_id, t, "student", body))
            else:
                code = _snippet(rng, _AI_WORDS, rng.randint(2, 5))
                events.append(_chat(session_id, t, "assistant",
                                    f"Try this:\n```python\n{code}```"))
            if rng.random() < 0.3:
                t += rng.randint(1, 50)
                events.append(TestRunEvent(session_id, t, rng.randint(0, 9),
                                           rng.randint(0, 9), "run"))
    return SessionLog(session_id=session_id, starter=starter, events=events,
                      metadata=SessionMetadata(task_id="fuzz", condition="random",
                                               duration_ms=t + 100))


def _chat(session_id: str, t: int, role: str, text: str) -> ChatEvent:
    return ChatEvent(session_id=session_id, timestamp_ms=t, role=role, text=text,
                     code_blocks=extract_code_blocks(text), word_count=word_count(text))


@dataclass(slots=True)
class GoldSession:
    log: SessionLog
    gold: dict[int, str]  # seq of each classified insertion -> intended source

    def gold_sources(self) -> list[str]:
        ordered = [e for e in self.log.edit_events if e.kind in ("insert", "replace")]
        return [self.gold[e.seq] for e in ordered]


@dataclass
class _Forge:
    rng: random.Random
    session_id: str
    file_path: str
    cfg: ProvenanceConfig
    text: str = ""
    seq: int = 0
    t: int = 0
    events: list[SessionEvent] = field(default_factory=list)
    gold: dict[int, str] = field(default_factory=dict)
    ai_regions: list[list[int]] = field(default_factory=list)
    blocks: list[str] = field(default_factory=list)

    # --- independent interval bookkeeping for planted AI regions ---

    def _shift_for_insert(self, offset: int, length: int) -> None:
        out = []
        for s, e in self.ai_regions:
            if e <= offset:
                out.append([s, e])
            elif s >= offset:
                out.append([s + length, e + length])
            else:
                out.append([s, offset])
                out.append([offset + length, e + length])
        self.ai_regions = out

    def _shift_for_delete(self, offset: int, length: int) -> None:
        cut_end = offset + length
        out = []
        for s, e in self.ai_regions:
            if e <= offset:
                out.append([s, e])
            elif s >= cut_end:
                out.append([s - length, e - length])
            else:
                keep_left = max(0, min(e, offset) - s)
                keep_right = max(0, e - max(s, cut_end))
                if keep_left + keep_right == 0:
                    continue
                new_s = s if s <= offset else max(offset, s - length)
                out.append([new_s, new_s + keep_left + keep_right])
        self.ai_regions = out

    def _inside_ai(self, offset: int) -> bool:
        # Adjacent planted regions may merge into one engine span, so test
        # against the merged union.
        merged: list[list[int]] = []
        for s, e in sorted(self.ai_regions):
            if merged and s <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], e)
            else:
                merged.append([s, e])
        return any(s < offset < e for s, e in merged)

    def _free_offset(self) -> int:
        """A line-boundary offset not strictly inside any planted AI region."""
        boundaries = [0] + [i + 1 for i, ch in enumerate(self.text) if ch == "\n"]
        boundaries.append(len(self.text))
        candidates = [b for b in boundaries if not self._inside_ai(b)]
        return self.rng.choice(candidates) if candidates else len(self.text)

    # --- event emission ---

    def _advance(self, lo: int, hi: int) -> int:
        self.t += self.rng.randint(lo, hi)
        return self.t

    def _gap(self) -> None:
        """Separate behaviors: always more than the run-gap threshold."""
        self._advance(self.cfg.run_gap_ms + 1, self.cfg.run_gap_ms * 3)

    def _emit_edit(self, kind: str, offset: int, removed: str, inserted: str,
                   hint: str, gold: str | None, file_action: str | None = None) -> None:
        self.seq += 1
        event = EditEvent(self.session_id, self.seq, self.t, self.file_path, kind,
                          offset, removed, inserted, hint, file_action)
        self.events.append(event)
        if kind in ("insert", "replace"):
            assert gold is not None
            self.gold[self.seq] = gold
        if kind in ("delete", "replace"):
            self._shift_for_delete(offset, len(removed))
            self.text = self.text[:offset] + self.text[offset + len(removed):]
        if kind in ("insert", "replace"):
            self._shift_for_insert(offset, len(inserted))
            self.text = self.text[:offset] + inserted + self.text[offset:]

    def _type_text(self, text: str, offset: int, gold: str) -> None:
        """Emit a contiguous keystroke burst inserting ``text`` at ``offset``."""
        pos = offset
        i = 0
        lo = min(20, self.cfg.run_gap_ms)
        hi = max(lo, min(150, self.cfg.run_gap_ms))
        while i < len(text):
            chunk = text[i:i + self.rng.randint(1, 3)]
            self._advance(lo, hi)
            self._emit_edit("insert", pos, "", chunk, "keystroke", gold)
            pos += len(chunk)
            i += len(chunk)

    def _distinct_from_blocks(self, text: str) -> bool:
        tokens = tokenize(text)
        margin = self.cfg.similarity_threshold - 0.05
        return all(similarity(tokens, tokenize(b)) < margin for b in self.blocks)

    def _fresh_human_text(self, lines: int) -> str:
        for _ in range(40):
            text = _snippet(self.rng, _HUMAN_WORDS, lines)
            if self._distinct_from_blocks(text):
                return text
        raise AssertionError("could not generate human text distinct from chat blocks")

    # --- behaviors ---

    def chat_exchange(self) -> None:
        self._advance(200, 3000)
        question = "please help with " + " ".join(self.rng.sample(_HUMAN_WORDS, 3))
        self.events.append(_chat(self.session_id, self.t, "student", question))
        self._advance(500, 2500)
        n_blocks = self.rng.randint(1, 2)
        parts = ["Here is an approach:"]
        for _ in range(n_blocks):
            lines = self.rng.randint(3, 6)
            code = _snippet(self.rng, _AI_WORDS, lines)
            while len(tokenize(code)) < self.cfg.min_run_tokens:
                code += _snippet(self.rng, _AI_WORDS, 1)
            parts.append(f"```python\n{code}```")
            self.blocks.append(code)
        self.events.append(_chat(self.session_id, self.t, "assistant", "\n".join(parts)))

    def organic_typing(self) -> None:
        self._gap()
        self._type_text(self._fresh_human_text(self.rng.randint(1, 3)),
                        self._free_offset(), HUMAN)

    def paste_block(self) -> None:
        if not self.blocks:
            return
        self._gap()
        block = self.rng.choice(self.blocks)
        offset = self._free_offset()
        self._emit_edit("insert", offset, "", block, "paste", AI_PASTE)
        self.ai_regions.append([offset, offset + len(block)])

    def human_paste(self) -> None:
        self._gap()
        text = self._fresh_human_text(self.rng.randint(2, 4))
        self._emit_edit("insert", self._free_offset(), "", text, "paste", HUMAN)

    def completion_accept(self) -> None:
        self._gap()
        text = _snippet(self.rng, _AI_WORDS, self.rng.randint(1, 3))
        offset = self._free_offset()
        self._emit_edit("insert", offset, "", text, "completion_accept", AI_COMPLETE)
        self.ai_regions.append([offset, offset + len(text)])

    def verbatim_retype(self) -> None:
        if not self.blocks:
            return
        self._gap()
        block = self.rng.choice(self.blocks)
        offset = self._free_offset()
        self._type_text(block, offset, AI_SIMILAR)
        self.ai_regions.append([offset, offset + len(block)])

    def paraphrased_retype(self) -> None:
        if not self.blocks:
            return
        self._gap()
        block = self.rng.choice(self.blocks)
        for _ in range(40):
            words = block.split()
            for i in range(len(words)):
                if self.rng.random() < 0.6:
                    words[i] = self.rng.choice(_HUMAN_WORDS)
            candidate = " ".join(words) + "\n"
            if self._distinct_from_blocks(candidate):
                self._type_text(candidate, self._free_offset(), HUMAN)
                return
        raise AssertionError("could not paraphrase below the similarity threshold")

    def edit_inside_ai(self) -> None:
        regions = [r for r in self.ai_regions if r[1] - r[0] > 4]
        if not regions:
            return
        self._gap()
        s, e = self.rng.choice(regions)
        offset = self.rng.randint(s + 1, e - 1)
        patch = " ".join(self.rng.sample(_HUMAN_WORDS, self.rng.randint(1, 3)))
        self._type_text(patch, offset, HUMAN_EDIT_OF_AI)

    def delete_chunk(self) -> None:
        if len(self.text) < 8:
            return
        self._gap()
        offset = self.rng.randint(0, len(self.text) - 4)
        length = min(self.rng.randint(1, 12), len(self.text) - offset)
        removed = self.text[offset:offset + length]
        self._emit_edit("delete", offset, removed, "", "keystroke", None)

    def test_run(self) -> None:
        self._advance(100, 2000)
        self.events.append(TestRunEvent(self.session_id, self.t,
                                        self.rng.randint(0, 10), self.rng.randint(0, 10),
                                        "pytest output"))

    def file_save(self) -> None:
        self._advance(50, 500)
        self._emit_edit("file_action", 0, "", "", "unknown", None, "save")


def generate_gold_session(seed: int, n_behaviors: int = 30,
                          cfg: ProvenanceConfig | None = None,
                          session_id: str | None = None) -> GoldSession:
    """A scripted session with a known gold source for every insertion event."""
    cfg = cfg or ProvenanceConfig()
    rng = random.Random(seed)
    forge = _Forge(rng=rng, session_id=session_id or f"gold-{seed}",
                   file_path="main.py", cfg=cfg)
    forge.chat_exchange()  # at least one assistant message so AI behaviors are possible
    actions = (
        (forge.organic_typing, 5),
        (forge.chat_exchange, 2),
        (forge.paste_block, 3),
        (forge.human_paste, 2),
        (forge.completion_accept, 3),
        (forge.verbatim_retype, 3),
        (forge.paraphrased_retype, 2),
        (forge.edit_inside_ai, 2),
        (forge.delete_chunk, 2),
        (forge.test_run, 1),
        (forge.file_save, 1),
    )
    population = [a for a, w in actions for _ in range(w)]
    for _ in range(n_behaviors):
        rng.choice(population)()
    log = SessionLog(session_id=forge.session_id, starter={forge.file_path: ""},
                     events=forge.events,
                     metadata=SessionMetadata(task_id="gold", condition="scripted",
                                              duration_ms=forge.t + 1000))
    return GoldSession(log=log, gold=forge.gold)
