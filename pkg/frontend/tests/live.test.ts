import { describe, expect, it } from "vitest";

import { Dashboard } from "../src/dashboard.js";
import { FakeTransport, FrameClient } from "../src/transport.js";
import { loadMetrics, loadSnapshot, loadTimeline, loadTranscript } from "./helpers.js";

function freshDashboard() {
  const transport = new FakeTransport();
  const client = new FrameClient(transport, "gold-42");
  return { transport, dashboard: new Dashboard(client) };
}

describe("live updates from a recorded frame transcript", () => {
  it("accumulates exactly one incremental update per streamed frame", () => {
    const { transport, dashboard } = freshDashboard();
    const transcript = loadTranscript();
    for (const frame of transcript) {
      transport.emit(frame);
    }
    const streamed = transcript.filter((f) =>
      ["edit", "chat", "relabel"].includes(f.frame_type));
    expect(dashboard.timeline.incrementalUpdates).toBe(streamed.length);
    // Live streaming never triggers a full rebuild of historic markers.
    expect(dashboard.timeline.fullBuilds).toBe(0);
  });

  it("live marker and bar counts match the exported model's counts", () => {
    const { transport, dashboard } = freshDashboard();
    for (const frame of loadTranscript()) {
      transport.emit(frame);
    }
    const model = loadTimeline();
    expect(dashboard.timeline.scene.count("marker")).toBe(model.markers.length);
    expect(dashboard.timeline.scene.count("chat-bar")).toBe(model.chat_bars.length);
  });

  it("a timeline frame then rebuilds the scene to the model exactly once", () => {
    const { transport, dashboard } = freshDashboard();
    for (const frame of loadTranscript()) {
      transport.emit(frame);
    }
    const model = loadTimeline();
    transport.emit({ frame_type: "timeline", session_id: "gold-42",
                     frame_seq: 9999, payload: model as never });
    expect(dashboard.timeline.fullBuilds).toBe(1);
    expect(dashboard.timeline.scene.count("marker")).toBe(model.markers.length);
    expect(dashboard.timeline.scene.count("overlay")).toBe(model.overlays.length);
    expect(dashboard.timeline.scene.count("chat-bar")).toBe(model.chat_bars.length);
  });

  it("hovering a live chat bar reveals the message text", () => {
    const { transport, dashboard } = freshDashboard();
    const transcript = loadTranscript();
    for (const frame of transcript) {
      transport.emit(frame);
    }
    const chat = transcript.find((f) => f.frame_type === "chat")!;
    dashboard.hoverChatBar(chat.payload.timestamp_ms as number);
    expect(dashboard.state.hoverText).toBe(chat.payload.text);
  });

  it("relabel frames are retained for the next model refresh", () => {
    const { transport, dashboard } = freshDashboard();
    const transcript = loadTranscript();
    for (const frame of transcript) {
      transport.emit(frame);
    }
    const relabels = transcript.filter((f) => f.frame_type === "relabel");
    expect(dashboard.timeline.pendingRelabels).toHaveLength(relabels.length);
    transport.emit({ frame_type: "timeline", session_id: "gold-42",
                     frame_seq: 9999, payload: loadTimeline() as never });
    expect(dashboard.timeline.pendingRelabels).toHaveLength(0);
  });

  it("metrics and snapshot frames are displayed verbatim, never recomputed", () => {
    const { transport, dashboard } = freshDashboard();
    const metrics = loadMetrics();
    const snapshot = loadSnapshot();
    transport.emit({ frame_type: "metrics", session_id: "gold-42",
                     frame_seq: 1, payload: metrics as never });
    transport.emit({ frame_type: "snapshot", session_id: "gold-42",
                     frame_seq: 2, payload: snapshot as never });
    expect(dashboard.state.metrics).toEqual(metrics);
    expect(dashboard.code.text).toBe(snapshot.text);
    expect(dashboard.code.lineCount).toBe(snapshot.line_count);
  });
});
