"""Context-aware question assembly and generation through a pluggable provider.

Prompts are pure data assembled from a document snapshot: the anchored code
excerpt with AI-origin regions fenced by ASCII sentinel tags, a mode
directive, and the instructor's verbatim constraints.  The default provider
is a deterministic stub (a pure function of prompt and seed), so the full
test profile runs without any network access; a chat-completion client is a
thin adapter behind the same interface.
"""

from __future__ import annotations

import hashlib
import os
import re
import uuid
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from typing import Callable, Protocol

from .replay import AI_SOURCES, DocumentSnapshot

MULTIPLE_CHOICE = "multiple_choice"
OPEN_ENDED = "open_ended"
QUESTION_MODES = (MULTIPLE_CHOICE, OPEN_ENDED)

_MC_DIRECTIVE = (
    "Write one multiple-choice question about this code with exactly four "
    "options labeled A), B), C), and D), each on its own line. The expected "
    "answer must name exactly one of those labels."
)
_OPEN_DIRECTIVE = (
    "Write one open-ended question about this code that probes whether the "
    "student understands what it does and why."
)
_FORMAT_REMINDER = (
    "\n\nFormat reminder: output exactly four options labeled A) B) C) D), one "
    "per line, and an expected answer naming one label."
)
_OPTION_RE = re.compile(r"^([A-D])\)\s", re.MULTILINE)


class QuestionError(ValueError):
    pass


class AnchorOutOfRange(QuestionError):
    pass


class IllegalTransition(QuestionError):
    pass


class ProviderUnavailable(RuntimeError):
    pass


class MalformedGeneration(RuntimeError):
    pass


@dataclass(frozen=True, slots=True)
class Anchor:
    timestamp_ms: int
    line_start: int  # 1-based, inclusive
    line_end: int


@dataclass(slots=True)
class Question:
    id: str
    session_id: str
    anchor: Anchor
    mode: str
    constraints: str
    code_context: str
    generated_text: str = ""
    expected_answer: str = ""
    status: str = "draft"  # draft -> sent -> answered
    student_answer: str | None = None


class GenerationProvider(Protocol):
    def generate(self, prompt: str, seed: int) -> dict[str, str]:
        """Return {"question": ..., "expected_answer": ...}."""


@lru_cache(maxsize=1)
def _template() -> str:
    return (resources.files("edittrace.templates")
            .joinpath("question_prompt_v1.txt").read_text(encoding="utf-8"))


def _line_offsets(text: str) -> list[int]:
    offsets = [0]
    for i, ch in enumerate(text):
        if ch == "\n":
            offsets.append(i + 1)
    return offsets


def mark_ai_regions(snapshot: DocumentSnapshot, start: int, end: int) -> str:
    """The text slice [start, end) with AI-origin spans fenced by sentinel tags."""
    pieces = []
    cursor = start
    for span in snapshot.spans:
        if span.end <= start or span.start >= end:
            continue
        lo, hi = max(span.start, start), min(span.end, end)
        if span.source not in AI_SOURCES:
            continue
        if lo > cursor:
            pieces.append(snapshot.text[cursor:lo])
        pieces.append(f"<<AI-BEGIN source={span.source}>>")
        pieces.append(snapshot.text[lo:hi])
        pieces.append("<<AI-END>>")
        cursor = hi
    if cursor < end:
        pieces.append(snapshot.text[cursor:end])
    return "".join(pieces)


def assemble_prompt(snapshot: DocumentSnapshot, anchor: Anchor, mode: str,
                    constraints: str = "") -> str:
    """Deterministic prompt bytes from (snapshot, anchor, mode, constraints)."""
    if mode not in QUESTION_MODES:
        raise QuestionError(f"unknown question mode {mode!r}")
    if snapshot.line_count == 0:
        raise AnchorOutOfRange("document is empty")
    if not (1 <= anchor.line_start <= anchor.line_end <= snapshot.line_count):
        raise AnchorOutOfRange(
            f"lines [{anchor.line_start}, {anchor.line_end}] outside "
            f"[1, {snapshot.line_count}]")
    offsets = _line_offsets(snapshot.text)
    start = offsets[anchor.line_start - 1]
    end = (offsets[anchor.line_end] if anchor.line_end < len(offsets)
           else len(snapshot.text))
    excerpt = mark_ai_regions(snapshot, start, end)
    directive = _MC_DIRECTIVE if mode == MULTIPLE_CHOICE else _OPEN_DIRECTIVE
    constraints_section = ""
    if constraints.strip():
        constraints_section = f"\nInstructor constraints (verbatim):\n{constraints}\n"
    return _template().format(
        line_start=anchor.line_start,
        line_end=anchor.line_end,
        file_path=snapshot.file_path,
        code_excerpt=excerpt,
        mode_directive=directive,
        constraints_section=constraints_section,
    )


class StubProvider:
    """Deterministic generation: a pure function of (prompt, seed).

    Output content is derived from a hash of the prompt, so prompts differing
    in any byte produce different questions.
    """

    name = "stub"

    def generate(self, prompt: str, seed: int) -> dict[str, str]:
        digest = hashlib.sha256(f"{seed}:{prompt}".encode("utf-8")).hexdigest()
        tag = digest[:8]
        if _MC_DIRECTIVE[:40] in prompt:
            labels = ("A", "B", "C", "D")
            correct = labels[int(digest[8:10], 16) % 4]
            options = "\n".join(
                f"{label}) It {verb} the value derived from fragment {digest[10 + 4 * i:14 + 4 * i]}."
                for i, (label, verb) in enumerate(
                    zip(labels, ("computes", "accumulates", "discards", "rewrites"))))
            question = (f"[{tag}] Considering the highlighted region, what does "
                        f"this code do with its input?\n{options}")
            return {"question": question, "expected_answer": correct}
        question = (f"[{tag}] Explain, in your own words, what the highlighted "
                    f"code contributes to the program and why it is needed.")
        return {"question": question,
                "expected_answer": f"A correct explanation mentions fragment {digest[8:16]}."}


class ChatCompletionProvider:
    """Thin adapter over an OpenAI-compatible chat-completions endpoint.

    The API key comes from an environment variable; this provider is never
    exercised by the default test profile.
    """

    name = "chat_completion"

    def __init__(self, model: str, base_url: str = "https://api.openai.com/v1",
                 api_key_env: str = "EDITTRACE_API_KEY", timeout_s: float = 30.0):
        self.model = model
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s

    def generate(self, prompt: str, seed: int) -> dict[str, str]:
        import httpx

        api_key = os.environ.get(self.api_key_env, "")
        if not api_key:
            raise ProviderUnavailable(f"{self.api_key_env} is not set")
        try:
            response = httpx.post(
                f"{self.base_url}/chat/completions",
                headers={"Authorization": f"Bearer {api_key}"},
                json={"model": self.model, "seed": seed,
                      "messages": [{"role": "user", "content": prompt}]},
                timeout=self.timeout_s,
            )
            response.raise_for_status()
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(str(exc)) from exc
        content = response.json()["choices"][0]["message"]["content"]
        question, _, expected = content.partition("EXPECTED ANSWER:")
        return {"question": question.strip(), "expected_answer": expected.strip()}


def parse_option_labels(text: str) -> list[str]:
    return _OPTION_RE.findall(text)


def validate_multiple_choice(generated_text: str, expected_answer: str) -> bool:
    """Exactly 4 options labeled A-D, each once, and the expected answer names one."""
    labels = parse_option_labels(generated_text)
    if sorted(labels) != ["A", "B", "C", "D"]:
        return False
    answer = expected_answer.strip()
    return bool(answer) and answer[0] in labels


def generate_question(prompt: str, provider: GenerationProvider, seed: int,
                      mode: str = OPEN_ENDED) -> dict[str, str]:
    """Provider call with one repair retry for malformed multiple-choice output."""
    result = provider.generate(prompt, seed)
    if mode == MULTIPLE_CHOICE and not validate_multiple_choice(
            result.get("question", ""), result.get("expected_answer", "")):
        result = provider.generate(prompt + _FORMAT_REMINDER, seed)
        if not validate_multiple_choice(result.get("question", ""),
                                        result.get("expected_answer", "")):
            raise MalformedGeneration(
                "provider did not produce 4 labeled options after one retry")
    return result


def create_question(snapshot: DocumentSnapshot, anchor: Anchor, mode: str,
                    constraints: str, provider: GenerationProvider, seed: int = 0,
                    session_id: str = "", question_id: str | None = None) -> Question:
    """Assemble the prompt, run generation, and return a draft question."""
    prompt = assemble_prompt(snapshot, anchor, mode, constraints)
    generated = generate_question(prompt, provider, seed, mode)
    offsets = _line_offsets(snapshot.text)
    start = offsets[anchor.line_start - 1]
    end = (offsets[anchor.line_end] if anchor.line_end < len(offsets)
           else len(snapshot.text))
    return Question(
        id=question_id or uuid.uuid4().hex,
        session_id=session_id,
        anchor=anchor,
        mode=mode,
        constraints=constraints,
        code_context=mark_ai_regions(snapshot, start, end),
        generated_text=generated["question"],
        expected_answer=generated["expected_answer"],
    )


def edit_and_send(question: Question, edits: dict[str, str] | None = None,
                  router: Callable[[Question], None] | None = None) -> Question:
    """Apply instructor edits, flip status draft -> sent, hand to routing."""
    if question.status != "draft":
        raise IllegalTransition(f"cannot send a question in status {question.status!r}")
    edits = edits or {}
    unknown = set(edits) - {"generated_text", "expected_answer", "constraints"}
    if unknown:
        raise QuestionError(f"cannot edit fields {sorted(unknown)}")
    sent = replace(question, status="sent", **edits)
    if router is not None:
        router(sent)
    return sent


def mark_answered(question: Question, answer: str) -> Question:
    if question.status != "sent":
        raise IllegalTransition(f"cannot answer a question in status {question.status!r}")
    return replace(question, status="answered", student_answer=answer)


def question_to_dict(question: Question) -> dict:
    return {
        "id": question.id,
        "session_id": question.session_id,
        "anchor": {"timestamp_ms": question.anchor.timestamp_ms,
                   "line_start": question.anchor.line_start,
                   "line_end": question.anchor.line_end},
        "mode": question.mode,
        "constraints": question.constraints,
        "code_context": question.code_context,
        "generated_text": question.generated_text,
        "expected_answer": question.expected_answer,
        "status": question.status,
        "student_answer": question.student_answer,
    }


def question_from_dict(payload: dict) -> Question:
    anchor = payload["anchor"]
    return Question(
        id=payload["id"],
        session_id=payload.get("session_id", ""),
        anchor=Anchor(anchor["timestamp_ms"], anchor["line_start"], anchor["line_end"]),
        mode=payload["mode"],
        constraints=payload.get("constraints", ""),
        code_context=payload.get("code_context", ""),
        generated_text=payload.get("generated_text", ""),
        expected_answer=payload.get("expected_answer", ""),
        status=payload.get("status", "draft"),
        student_answer=payload.get("student_answer"),
    )
