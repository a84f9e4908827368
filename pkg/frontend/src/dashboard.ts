/**
 * Instructor dashboard controller: routes server frames to the timeline
 * view, code pane, metrics panel, and question flow, and turns timeline
 * clicks into code-pane navigation.  Every number displayed comes verbatim
 * from server frames.
 */

import { CodeView } from "./codeView.js";
import { Pick, resolvePick } from "./pick.js";
import { FrameClient } from "./transport.js";
import { TimelineView } from "./timelineView.js";
import { QuestionFlow } from "./questionFlow.js";
import {
  ChatFanoutPayload,
  EditFanoutPayload,
  Frame,
  RelabelPayload,
  SnapshotPayload,
} from "./types.js";

export interface ViewState {
  sessionId: string;
  connected: boolean;
  cursorFeedback: string | null;
  stalePickToast: boolean;
  hoverText: string | null;
  /** Metrics payload exactly as the server sent it; never recomputed. */
  metrics: Record<string, unknown> | null;
  lastError: { code: string; message: string } | null;
}

export class Dashboard {
  readonly timeline = new TimelineView();
  readonly code: CodeView;
  readonly flow: QuestionFlow;
  readonly state: ViewState;
  private client: FrameClient;

  constructor(client: FrameClient, pageSize = 40) {
    this.client = client;
    this.code = new CodeView(pageSize);
    this.flow = new QuestionFlow((type, payload) => this.client.send(type, payload));
    this.state = {
      sessionId: client.sessionId,
      connected: true,
      cursorFeedback: null,
      stalePickToast: false,
      hoverText: null,
      metrics: null,
      lastError: null,
    };
    this.attach(client);
  }

  /** Re-attach after a reconnect; drafts and rendered state survive. */
  attach(client: FrameClient): void {
    this.client = client;
    this.state.connected = true;
    client.onFrame((frame) => this.apply(frame));
    client.transport.onClose(() => {
      this.state.connected = false;
    });
  }

  connectAsInstructor(token?: string): void {
    this.client.hello("instructor", token ? { token } : {});
  }

  requestTimeline(): void {
    this.client.send("timeline_request", {});
  }

  requestMetrics(): void {
    this.client.send("metrics_request", {});
  }

  requestSnapshot(t?: number): void {
    this.client.send("snapshot_request", t === undefined ? {} : { t });
  }

  apply(frame: Frame): void {
    switch (frame.frame_type) {
      case "edit":
        this.timeline.applyEditFrame(frame.payload as unknown as EditFanoutPayload);
        break;
      case "chat":
        this.timeline.applyChatFrame(frame.payload as unknown as ChatFanoutPayload);
        break;
      case "relabel":
        this.timeline.applyRelabel(frame.payload as unknown as RelabelPayload);
        break;
      case "timeline":
        this.timeline.setModel(frame.payload);
        break;
      case "snapshot":
        this.code.setSnapshot(frame.payload as unknown as SnapshotPayload);
        break;
      case "metrics":
        this.state.metrics = frame.payload;
        break;
      case "question_create":
      case "question_deliver":
      case "answer_deliver":
        this.flow.onFrame(frame);
        break;
      case "error":
        this.state.lastError = {
          code: String(frame.payload.code),
          message: String(frame.payload.message),
        };
        this.flow.onFrame(frame);
        break;
      default:
        break;
    }
  }

  /** Timeline click: resolve the pick and navigate the code pane. */
  click(t: number, line: number, radiusT = 1000, radiusLines = 2): Pick | null {
    const model = this.timeline.model;
    if (!model) {
      return null;
    }
    const pick = resolvePick(model, t, line, radiusT, radiusLines);
    this.clickToCode(pick);
    return pick;
  }

  /** Scroll and highlight from an already-resolved pick. */
  clickToCode(pick: Pick): void {
    this.state.cursorFeedback = null;
    this.state.stalePickToast = false;
    switch (pick.kind) {
      case "marker": {
        const model = this.timeline.model;
        if (model && !model.markers.some((m) => m.seq === pick.marker.seq)) {
          this.state.stalePickToast = true;
          return;
        }
        this.code.scrollToLine(pick.marker.line);
        this.code.highlightLines(pick.marker.line, pick.marker.line, "marker");
        break;
      }
      case "overlay":
        this.code.scrollToLine(pick.overlay.line_start);
        this.code.highlightLines(pick.overlay.line_start, pick.overlay.line_end,
                                 "overlay");
        break;
      case "position":
        this.code.scrollToLine(pick.line);
        this.code.clearHighlight();
        break;
      case "out-of-extent":
        this.state.cursorFeedback = "out-of-extent";
        break;
    }
  }

  hoverChatBar(t: number): void {
    this.state.hoverText = this.timeline.chatTooltip(t);
  }

  /** Projection window for the timeline indicator, synced with the code pane. */
  projectionWindow(): [number, number] {
    const [first, last] = this.code.visibleWindow();
    const maxLine = Math.max(1, this.timeline.model?.max_line ?? 1);
    return [Math.min(first, maxLine), Math.min(last, maxLine)];
  }
}
