/**
 * End-to-end check against a live runtime: the console connects over a
 * real websocket, issues a correction, a checkpoint confirmation, and a
 * partial-reset order, and each command's logged event must appear in a
 * subsequent frame's event window within 2 ticks of issuance. Displayed
 * composite and level values must equal the frame fields exactly.
 */

import { spawn, type ChildProcess } from "node:child_process";

import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ConsoleClient, WireSocket } from "../src/client.js";
import { ScenarioInfo } from "../src/protocol.js";
import { renderComposite, renderGauges } from "../src/render.js";
import { TrackedCommand } from "../src/viewmodel.js";

const PORT = 8700 + (process.pid % 400);
const BASE = `http://127.0.0.1:${PORT}`;
const TICK_SECONDS = 0.35;

let server: ChildProcess;
let client: ConsoleClient;

async function waitFor(
  condition: () => boolean,
  timeoutMs: number,
  label: string,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (condition()) {
      return;
    }
    await new Promise((resolve) => setTimeout(resolve, 20));
  }
  throw new Error(`timed out waiting for ${label}`);
}

async function waitForServer(): Promise<void> {
  const deadline = Date.now() + 20000;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/scenario`);
      if (response.ok) {
        return;
      }
    } catch {
      // not listening yet
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
  throw new Error("runtime server never came up");
}

beforeAll(async () => {
  server = spawn(
    "python3",
    [
      "-m",
      "swarmgov.cli",
      "run",
      "golden_scenario",
      "--serve",
      "--port",
      String(PORT),
      "--tick-seconds",
      String(TICK_SECONDS),
    ],
    { stdio: "ignore" },
  );
  await waitForServer();
  client = new ConsoleClient({
    socketUrl: `ws://127.0.0.1:${PORT}/ws`,
    scenarioUrl: `${BASE}/scenario`,
    socketFactory: (url) => new WebSocket(url) as unknown as WireSocket,
    fetchScenario: async (url) => (await (await fetch(url)).json()) as ScenarioInfo,
    ackTimeoutMs: 8000,
  });
  client.connect();
  await waitFor(() => client.vm.connection === "live", 15000, "first live frame");
}, 40000);

afterAll(() => {
  client?.close();
  server?.kill();
});

function tracked(commandId: string): TrackedCommand {
  const found = client.vm.commands.find((entry) => entry.command.command_id === commandId);
  if (!found) {
    throw new Error(`command ${commandId} is not tracked`);
  }
  return found;
}

async function issueAndAwaitLanding(
  kind: string,
  payload: Record<string, unknown>,
): Promise<TrackedCommand> {
  const message = client.issue(kind, payload);
  expect(message).not.toBeNull();
  const entry = tracked(message!.command_id);
  await waitFor(() => entry.state !== "pending", 10000, `${kind} ack`);
  expect(entry.state).toBe("accepted");
  await waitFor(() => entry.resolvedAtTick !== null, 10000, `${kind} event landing`);
  return entry;
}

describe("console round-trip against a live runtime", () => {
  it(
    "lands a correction, a checkpoint confirmation, and a partial reset within 2 ticks",
    async () => {
      const correction = await issueAndAwaitLanding("correction", {
        targets: ["drone-3"],
        intended: { "zone-crossing": 0.85, "zone-hvt": 0.1 },
      });
      const checkpoint = await issueAndAwaitLanding("confirm-checkpoint", {
        agent_id: "drone-1",
      });
      const reset = await issueAndAwaitLanding("partial-reset", {
        agent_id: "drone-3",
        assessments: ["hvt-sighting"],
        verified: [
          { source: "opint-verified", assessment_id: "hvt-sighting", confidence: 0.1 },
        ],
      });

      for (const entry of [correction, checkpoint, reset]) {
        expect(entry.sentAtTick).not.toBeNull();
        expect(entry.resolvedAtTick).not.toBeNull();
        const delay = entry.resolvedAtTick! - entry.sentAtTick!;
        expect(delay).toBeGreaterThanOrEqual(0);
        expect(delay).toBeLessThanOrEqual(2);
      }

      const kinds = new Set(
        [correction, checkpoint, reset].map((entry) => entry.command.kind),
      );
      expect(kinds).toEqual(new Set(["correction", "confirm-checkpoint", "partial-reset"]));
    },
    60000,
  );

  it("suppresses a double-click into a single tracked command", async () => {
    const payload = { agent_id: "drone-2" };
    const first = client.issue("confirm-checkpoint", payload);
    const second = client.issue("confirm-checkpoint", payload);
    expect(first).not.toBeNull();
    expect(second).toBeNull();
    const matching = client.vm.commands.filter(
      (entry) =>
        entry.command.kind === "confirm-checkpoint" &&
        JSON.stringify(entry.command.payload) === JSON.stringify(payload),
    );
    expect(matching).toHaveLength(1);
    await waitFor(() => matching[0]!.state !== "pending", 10000, "double-click ack");
    expect(matching[0]!.state).toBe("accepted");
  }, 30000);

  it("displays composite, level, and metrics exactly as the live frame carries them", () => {
    const frame = client.vm.current!;
    const composite = renderComposite(frame);
    expect(composite).toContain(`data-cqs="${String(frame.cqs)}"`);
    expect(composite).toContain(`data-level="${frame.level}"`);
    expect(composite).toContain(`<span class="cqs-value">${String(frame.cqs)}</span>`);
    const gauges = renderGauges(frame);
    for (const [metric, value] of Object.entries(frame.n)) {
      expect(gauges).toContain(`data-metric="${metric}" data-value="${String(value)}"`);
    }
  });

  it("received the radar configuration from the scenario endpoint", async () => {
    await waitFor(() => client.vm.radarSnapshots.length > 0, 15000, "radar config");
    expect(client.vm.radarSnapshots[0]!.tick).toBe(0);
  }, 20000);
});
