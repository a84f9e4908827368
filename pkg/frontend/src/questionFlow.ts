/**
 * Question popup state machine: generate a draft from an anchored region,
 * let the instructor edit it, send it, and attach the student's answer when
 * it returns.  The draft lives locally, so a dropped connection keeps it.
 */

import { AnchorDto, Frame, QuestionDto } from "./types.js";

export type FlowState = "closed" | "generating" | "draft" | "sending" | "sent" | "answered";

export type FrameSender = (frameType: string, payload: Record<string, unknown>) => void;

export class QuestionFlow {
  state: FlowState = "closed";
  draft: QuestionDto | null = null;
  answer: string | null = null;
  error: string | null = null;

  constructor(private sender: FrameSender) {}

  /** Swap the underlying connection after a reconnect; local state survives. */
  rebind(sender: FrameSender): void {
    this.sender = sender;
  }

  open(anchor: AnchorDto, mode: QuestionDto["mode"], constraints: string,
       seed = 0, filePath?: string): void {
    this.state = "generating";
    this.answer = null;
    this.error = null;
    const payload: Record<string, unknown> = {
      action: "generate", anchor, mode, constraints, seed,
    };
    if (filePath) payload.file_path = filePath;
    this.sender("question_create", payload);
  }

  /** Instructor edits apply to the local draft only until send. */
  edit(fields: Partial<Pick<QuestionDto, "generated_text" | "expected_answer" | "constraints">>): void {
    if (!this.draft) {
      throw new Error("no draft to edit");
    }
    this.draft = { ...this.draft, ...fields };
  }

  get canSend(): boolean {
    return this.state === "draft" && this.draft !== null;
  }

  send(): void {
    if (!this.canSend || !this.draft) {
      throw new Error(`cannot send in state ${this.state}`);
    }
    this.state = "sending";
    this.sender("question_create", { action: "send", question: this.draft });
  }

  /** Route server frames into the flow; unrelated frames are ignored. */
  onFrame(frame: Frame): void {
    if (frame.frame_type === "question_create") {
      const question = frame.payload.question as QuestionDto | undefined;
      if (!question) return;
      if (this.state === "generating" && question.status === "draft") {
        this.draft = question;
        this.state = "draft";
      } else if (this.state === "sending" && question.status === "sent"
                 && this.draft && question.id === this.draft.id) {
        this.draft = question;
        this.state = "sent";
      }
      return;
    }
    if (frame.frame_type === "answer_deliver") {
      const question = frame.payload.question as QuestionDto | undefined;
      if (question && this.draft && question.id === this.draft.id) {
        this.draft = question;
        this.answer = question.student_answer;
        this.state = "answered";
      }
      return;
    }
    if (frame.frame_type === "error"
        && (this.state === "generating" || this.state === "sending")) {
      // Provider or routing failure: surface it and keep whatever draft exists.
      this.error = `${String(frame.payload.code)}: ${String(frame.payload.message)}`;
      this.state = this.draft ? "draft" : "closed";
    }
  }
}
