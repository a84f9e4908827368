import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { Frame, TimelineModel } from "../src/types.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

export function loadTimeline(): TimelineModel {
  return JSON.parse(readFileSync(join(FIXTURES, "timeline.json"), "utf-8"));
}

export function loadMetrics(): Record<string, unknown> {
  return JSON.parse(readFileSync(join(FIXTURES, "metrics.json"), "utf-8"));
}

export function loadSnapshot(): Record<string, unknown> {
  return JSON.parse(readFileSync(join(FIXTURES, "snapshot.json"), "utf-8"));
}

export function loadTranscript(): Frame[] {
  return readFileSync(join(FIXTURES, "transcript.ndjson"), "utf-8")
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line) as Frame);
}

export async function waitFor(predicate: () => boolean, timeoutMs = 10_000,
                              what = "condition"): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!predicate()) {
    if (Date.now() > deadline) {
      throw new Error(`timed out waiting for ${what}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
}
