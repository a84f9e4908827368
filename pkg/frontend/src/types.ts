/**
 * Wire and model types mirrored from the monitor server's JSON schemas.
 * The dashboard is a pure view over these shapes: it computes no provenance
 * and no metrics, it only renders what frames carry.
 */

export const SUPPORTED_SCHEMA_VERSION = 1;

export type Source =
  | "human"
  | "ai_paste"
  | "ai_complete"
  | "ai_similar"
  | "human_edit_of_ai";

export type AiSource = "ai_paste" | "ai_complete" | "ai_similar";

export interface TimelineMarker {
  t: number;
  line: number;
  kind: "insert" | "delete";
  seq: number;
}

export interface TimelineOverlay {
  t_start: number;
  t_end: number;
  line_start: number;
  line_end: number;
  source: AiSource;
  origin_seq: number;
}

export interface ChatBarDatum {
  t: number;
  role: "student" | "assistant";
  height: number;
}

export interface TimelineModel {
  schema_version: number;
  session_id: string;
  file_path: string;
  t_min: number;
  t_max: number;
  max_line: number;
  envelope: [number, number][];
  markers: TimelineMarker[];
  overlays: TimelineOverlay[];
  chat_bars: ChatBarDatum[];
  projection: [number, number];
}

export interface SpanDto {
  start: number;
  end: number;
  source: Source;
  origin_seq: number;
  chat_ref: [number, number] | null;
}

export interface SnapshotPayload {
  file_path: string;
  timestamp_ms: number;
  text: string;
  line_count: number;
  spans: SpanDto[];
}

export interface EditFanoutPayload {
  seq: number;
  timestamp_ms: number;
  file_path: string;
  kind: "insert" | "delete" | "replace" | "file_action";
  offset: number;
  removed_text: string;
  inserted_text: string;
  input_hint: string;
  line?: number;
  label?: { source: Source; chat_ref: [number, number] | null; provisional: boolean };
}

export interface ChatFanoutPayload {
  timestamp_ms: number;
  role: "student" | "assistant";
  text: string;
  word_count: number;
}

export interface RelabelPayload {
  file_path: string;
  origin_seqs: number[];
  source: Source;
  chat_ref: [number, number] | null;
}

export interface AnchorDto {
  timestamp_ms: number;
  line_start: number;
  line_end: number;
}

export interface QuestionDto {
  id: string;
  session_id: string;
  anchor: AnchorDto;
  mode: "multiple_choice" | "open_ended";
  constraints: string;
  code_context: string;
  generated_text: string;
  expected_answer: string;
  status: "draft" | "sent" | "answered";
  student_answer: string | null;
}

export interface Frame {
  frame_type: string;
  session_id: string;
  frame_seq: number;
  payload: Record<string, unknown>;
}

export type ModelValidation =
  | { ok: true; model: TimelineModel }
  | { ok: false; error: string };

export function validateTimelineModel(raw: unknown): ModelValidation {
  if (typeof raw !== "object" || raw === null) {
    return { ok: false, error: "timeline model must be an object" };
  }
  const model = raw as Partial<TimelineModel>;
  if (model.schema_version !== SUPPORTED_SCHEMA_VERSION) {
    return {
      ok: false,
      error: `unsupported timeline schema_version ${String(model.schema_version)}; ` +
        `this dashboard supports ${SUPPORTED_SCHEMA_VERSION}`,
    };
  }
  for (const field of ["markers", "overlays", "chat_bars", "envelope"] as const) {
    if (!Array.isArray(model[field])) {
      return { ok: false, error: `timeline model is missing ${field}` };
    }
  }
  if (typeof model.t_min !== "number" || typeof model.t_max !== "number") {
    return { ok: false, error: "timeline model is missing time extents" };
  }
  return { ok: true, model: model as TimelineModel };
}
