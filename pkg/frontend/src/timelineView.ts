/**
 * Timeline rendering: builds the scene from an exported timeline model and
 * applies live edit/chat frames as incremental node additions, never
 * re-rendering historic markers.
 */

import { DEFAULT_THEME, Theme } from "./colors.js";
import { Scene, SceneNode } from "./scene.js";
import {
  ChatFanoutPayload,
  EditFanoutPayload,
  RelabelPayload,
  TimelineModel,
  validateTimelineModel,
} from "./types.js";

export class TimelineView {
  readonly scene = new Scene();
  model: TimelineModel | null = null;
  banner: string | null = null;
  fullBuilds = 0;
  incrementalUpdates = 0;
  /** Relabels seen since the last full model refresh; overlays re-derive server-side. */
  pendingRelabels: RelabelPayload[] = [];

  private liveMarkerCounter = 0;
  private liveBarCounter = 0;
  private chatTexts = new Map<number, string>();

  constructor(readonly theme: Theme = DEFAULT_THEME) {}

  /** Full (re)build from an exported model; shows a banner on schema mismatch. */
  setModel(raw: unknown): boolean {
    const result = validateTimelineModel(raw);
    if (!result.ok) {
      this.banner = result.error;
      return false;
    }
    this.banner = null;
    this.model = result.model;
    this.scene.clear();
    this.pendingRelabels = [];
    this.fullBuilds += 1;

    const model = result.model;
    if (model.markers.length === 0 && model.overlays.length === 0
        && model.chat_bars.length === 0) {
      this.scene.add({
        id: "placeholder", kind: "placeholder", classes: ["empty-state"],
        t: model.t_min, line: 1,
        data: "No activity recorded yet",
      });
    }
    model.envelope.forEach(([t, lines], i) => {
      this.scene.add({
        id: `env-${i}`, kind: "envelope", classes: ["envelope"],
        t, line: 1, lineEnd: Math.max(1, lines), color: this.theme.envelope,
      });
    });
    model.markers.forEach((m, i) => {
      this.scene.add({
        id: `marker-${m.seq}-${m.kind}-${i}`, kind: "marker",
        classes: ["marker", `marker-${m.kind}`],
        t: m.t, line: m.line,
        color: m.kind === "insert" ? this.theme.markerInsert : this.theme.markerDelete,
        data: m,
      });
    });
    model.overlays.forEach((o, i) => {
      this.scene.add({
        id: `overlay-${i}`, kind: "overlay",
        classes: ["overlay", `overlay-${o.source}`],
        t: o.t_start, tEnd: o.t_end, line: o.line_start, lineEnd: o.line_end,
        color: this.theme.overlay[o.source],
        data: o,
      });
    });
    model.chat_bars.forEach((b, i) => {
      this.scene.add({
        id: `bar-${i}`, kind: "chat-bar",
        classes: ["chat-bar", `chat-bar-${b.role}`],
        t: b.t, line: 0, height: b.height,
        color: b.role === "student" ? this.theme.chatStudent : this.theme.chatAssistant,
        data: b,
      });
    });
    this.scene.add({
      id: "projection", kind: "projection", classes: ["projection-indicator"],
      t: model.t_min, line: model.projection[0], lineEnd: model.projection[1],
      color: this.theme.projection,
    });
    return true;
  }

  /** One incremental scene update per live edit frame (replace adds two markers). */
  applyEditFrame(payload: EditFanoutPayload): void {
    this.incrementalUpdates += 1;
    const line = payload.line ?? 1;
    const add = (kind: "insert" | "delete") => {
      this.liveMarkerCounter += 1;
      this.scene.add({
        id: `live-marker-${this.liveMarkerCounter}`, kind: "marker",
        classes: ["marker", `marker-${kind}`, "live"],
        t: payload.timestamp_ms, line,
        color: kind === "insert" ? this.theme.markerInsert : this.theme.markerDelete,
        data: payload,
      });
    };
    if (payload.kind === "insert" || payload.kind === "replace") add("insert");
    if (payload.kind === "delete" || payload.kind === "replace") add("delete");
  }

  applyChatFrame(payload: ChatFanoutPayload): void {
    this.incrementalUpdates += 1;
    this.liveBarCounter += 1;
    this.chatTexts.set(payload.timestamp_ms, payload.text);
    this.scene.add({
      id: `live-bar-${this.liveBarCounter}`, kind: "chat-bar",
      classes: ["chat-bar", `chat-bar-${payload.role}`, "live"],
      t: payload.timestamp_ms, line: 0, height: payload.word_count,
      color: payload.role === "student" ? this.theme.chatStudent : this.theme.chatAssistant,
      data: payload,
    });
  }

  applyRelabel(payload: RelabelPayload): void {
    this.incrementalUpdates += 1;
    this.pendingRelabels.push(payload);
  }

  /** Hovering a chat bar reveals the message text (live frames carry it). */
  chatTooltip(t: number): string | null {
    return this.chatTexts.get(t) ?? null;
  }

  markerNodes(): SceneNode[] {
    return this.scene.byKind("marker");
  }
}
