/**
 * Read-only replay: turn a recorded JSONL event log back into the frame
 * stream it once produced. Every number in a replayed frame is copied
 * from a metric-snapshot or alert event in the log; nothing is derived.
 */

import {
  AlertEntry,
  DashboardFrame,
  LoggedEvent,
  MetricName,
  PROTOCOL_VERSION,
  RawName,
} from "./protocol.js";

interface RawEvent {
  seq: number;
  t: number;
  kind: string;
  actor: string;
  payload: Record<string, unknown>;
}

function parseEvents(jsonlText: string): RawEvent[] {
  const events: RawEvent[] = [];
  for (const line of jsonlText.split("\n")) {
    if (line.trim() === "") {
      continue;
    }
    const record = JSON.parse(line) as Record<string, unknown>;
    if (
      typeof record["seq"] !== "number" ||
      typeof record["t"] !== "number" ||
      typeof record["kind"] !== "string" ||
      typeof record["actor"] !== "string"
    ) {
      throw new Error(`log line is not an event record: ${line}`);
    }
    events.push({
      seq: record["seq"],
      t: record["t"],
      kind: record["kind"],
      actor: record["actor"],
      payload: (record["payload"] as Record<string, unknown>) ?? {},
    });
  }
  return events;
}

/**
 * Rebuild per-tick frames from a recorded log. Agent rosters and the
 * threshold table are not part of the log, so replayed frames carry an
 * empty roster and only the thresholds that alert events reveal.
 */
export function parseLogToFrames(jsonlText: string, scenarioId = "replay"): DashboardFrame[] {
  const events = parseEvents(jsonlText);
  const byTick = new Map<number, RawEvent[]>();
  for (const event of events) {
    const bucket = byTick.get(event.t);
    if (bucket === undefined) {
      byTick.set(event.t, [event]);
    } else {
      bucket.push(event);
    }
  }

  const ticks = [...byTick.keys()].sort((a, b) => a - b);
  const frames: DashboardFrame[] = [];
  const seenThresholds: Record<string, number> = {};

  for (const tick of ticks) {
    const bucket = byTick.get(tick)!;
    const snapshot = bucket.find((event) => event.kind === "metric-snapshot");
    if (snapshot === undefined) {
      continue;
    }
    const alerts: AlertEntry[] = bucket
      .filter((event) => event.kind === "alert")
      .map((event) => {
        const entry = event.payload as unknown as AlertEntry;
        seenThresholds[entry.metric] = entry.threshold;
        return entry;
      });
    const window: LoggedEvent[] = bucket.map((event) => ({
      seq: event.seq,
      t: event.t,
      kind: event.kind,
      actor: event.actor,
      payload: event.payload,
    }));
    frames.push({
      type: "frame",
      v: PROTOCOL_VERSION,
      scenario_id: scenarioId,
      final: false,
      tick,
      n: snapshot.payload["n"] as Record<MetricName, number>,
      raw: snapshot.payload["raw"] as Record<RawName, number>,
      cqs: snapshot.payload["cqs"] as number,
      level: snapshot.payload["level"] as string,
      alerts,
      notices: [],
      agents: [],
      events: window,
      thresholds: { ...seenThresholds },
    });
  }
  if (frames.length > 0) {
    frames[frames.length - 1]!.final = true;
  }
  return frames;
}
