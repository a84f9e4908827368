"""Coding-session provenance engine and live monitoring service.

Reconstructs keystroke-level edit histories, attributes every span of code to
a human or AI origin, propagates attributions through subsequent edits, and
serves instructors a timeline model plus a question/intervention channel.
"""

__version__ = "0.1.0"

from .provenance import (
    LabeledSession,
    ProvenanceConfig,
    SessionLabeler,
    classify_insertion,
    label_session,
    similarity,
    tokenize,
)
from .replay import (
    AI_COMPLETE,
    AI_PASTE,
    AI_SIMILAR,
    AI_SOURCES,
    HUMAN,
    HUMAN_EDIT_OF_AI,
    SOURCES,
    DocumentSnapshot,
    ProvenanceSpan,
    ReplayCursor,
    apply_event,
    length_envelope,
    snapshot_at,
)
from .sessionlog import (
    ChatEvent,
    EditEvent,
    SessionLog,
    SessionMetadata,
    TestRunEvent,
    parse_session,
    serialize_session,
)

__all__ = [
    "AI_COMPLETE",
    "AI_PASTE",
    "AI_SIMILAR",
    "AI_SOURCES",
    "HUMAN",
    "HUMAN_EDIT_OF_AI",
    "SOURCES",
    "ChatEvent",
    "DocumentSnapshot",
    "EditEvent",
    "LabeledSession",
    "ProvenanceConfig",
    "ProvenanceSpan",
    "ReplayCursor",
    "SessionLabeler",
    "SessionLog",
    "SessionMetadata",
    "TestRunEvent",
    "apply_event",
    "classify_insertion",
    "label_session",
    "length_envelope",
    "parse_session",
    "serialize_session",
    "similarity",
    "snapshot_at",
    "tokenize",
]
