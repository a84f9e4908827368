/**
 * Pick resolution over the timeline model: the same geometry the server's
 * hit-testing uses (nearest marker inside the pick ellipse, else the covering
 * overlay, else a plain position).  Pure view math over model data.
 */

import { TimelineMarker, TimelineModel, TimelineOverlay } from "./types.js";

export type Pick =
  | { kind: "marker"; marker: TimelineMarker }
  | { kind: "overlay"; overlay: TimelineOverlay }
  | { kind: "position"; t: number; line: number }
  | { kind: "out-of-extent"; t: number; line: number };

export function resolvePick(model: TimelineModel, t: number, line: number,
                            radiusT = 1000, radiusLines = 2): Pick {
  if (t < model.t_min || t > model.t_max
      || line < 1 || line > Math.max(1, model.max_line)) {
    return { kind: "out-of-extent", t, line };
  }
  let best: TimelineMarker | null = null;
  let bestD = Infinity;
  for (const marker of model.markers) {
    const dt = (marker.t - t) / radiusT;
    const dl = (marker.line - line) / radiusLines;
    const d = dt * dt + dl * dl;
    if (d <= 1 && (d < bestD || (d === bestD && best !== null && marker.seq < best.seq))) {
      best = marker;
      bestD = d;
    }
  }
  if (best) {
    return { kind: "marker", marker: best };
  }
  for (const overlay of model.overlays) {
    if (overlay.t_start <= t && t <= overlay.t_end
        && overlay.line_start <= line && line <= overlay.line_end) {
      return { kind: "overlay", overlay };
    }
  }
  return { kind: "position", t, line };
}
