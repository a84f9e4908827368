/** Code pane state: snapshot text, scroll position, and the highlighted range.
 * Scroll and the timeline's projection indicator stay synchronized through
 * the dashboard. */

import { SnapshotPayload, SpanDto } from "./types.js";

export interface Highlight {
  lineStart: number;
  lineEnd: number;
  reason: "marker" | "overlay" | "question";
}

export class CodeView {
  text = "";
  lines: string[] = [];
  spans: SpanDto[] = [];
  scrollLine = 1;
  pageSize: number;
  highlight: Highlight | null = null;

  constructor(pageSize = 40) {
    this.pageSize = pageSize;
  }

  setSnapshot(payload: SnapshotPayload): void {
    this.text = payload.text;
    this.lines = payload.text === "" ? [] : payload.text.split("\n");
    this.spans = payload.spans;
    this.scrollLine = Math.min(this.scrollLine, Math.max(1, this.lines.length));
  }

  get lineCount(): number {
    return this.lines.length;
  }

  scrollToLine(line: number): void {
    this.scrollLine = Math.max(1, Math.min(line, Math.max(1, this.lines.length)));
  }

  highlightLines(lineStart: number, lineEnd: number,
                 reason: Highlight["reason"]): void {
    this.highlight = { lineStart, lineEnd, reason };
  }

  clearHighlight(): void {
    this.highlight = null;
  }

  /** [first, last] visible line given the current scroll position. */
  visibleWindow(): [number, number] {
    const first = this.scrollLine;
    const last = Math.min(Math.max(1, this.lines.length),
                          first + this.pageSize - 1);
    return [first, Math.max(first, last)];
  }
}
