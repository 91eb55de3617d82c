import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { DashboardFrame, METRIC_NAMES, RAW_FOR_METRIC, ScenarioInfo } from "../src/protocol.js";
import {
  renderAgents,
  renderBanner,
  renderCommandHistory,
  renderComposite,
  renderDashboard,
  renderGauges,
  renderTrajectory,
} from "../src/render.js";
import { ConsoleViewModel } from "../src/viewmodel.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

function loadFrames(): DashboardFrame[] {
  const text = readFileSync(join(FIXTURES, "golden_frames.jsonl"), "utf8");
  return text
    .split("\n")
    .filter((line) => line.trim() !== "")
    .map((line) => JSON.parse(line) as DashboardFrame);
}

function loadScenarioInfo(): ScenarioInfo {
  return JSON.parse(readFileSync(join(FIXTURES, "golden_scenario_info.json"), "utf8"));
}

const frames = loadFrames();
const info = loadScenarioInfo();
const frameAt = new Map(frames.map((frame) => [frame.tick, frame]));

function foldAll(): ConsoleViewModel {
  const vm = new ConsoleViewModel({ idPrefix: "op", radarTicks: info.radar_ticks });
  for (const frame of frames) {
    vm.applyFrame(frame);
  }
  return vm;
}

describe("recorded frame stream", () => {
  it("renders the full golden stream to a stable snapshot", () => {
    expect(renderDashboard(foldAll())).toMatchSnapshot();
  });

  it("shows every metric value exactly as the frame carries it", () => {
    for (const frame of frames) {
      const html = renderGauges(frame);
      for (const metric of METRIC_NAMES) {
        const rawName = RAW_FOR_METRIC[metric];
        expect(html).toContain(
          `data-metric="${metric}" data-value="${String(frame.n[metric])}"` +
            ` data-raw-name="${rawName}" data-raw-value="${String(frame.raw[rawName])}"`,
        );
      }
    }
  });

  it("shows the composite and level exactly as the frame carries them", () => {
    for (const frame of frames) {
      const html = renderComposite(frame);
      expect(html).toContain(`data-cqs="${String(frame.cqs)}" data-level="${frame.level}"`);
      expect(html).toContain(`<span class="cqs-value">${String(frame.cqs)}</span>`);
      expect(html).toContain(`<span class="level-chip">${frame.level}</span>`);
    }
  });

  it("takes threshold markers from the frame, not from constants", () => {
    const frame = frameAt.get(0)!;
    const html = renderGauges(frame);
    for (const metric of METRIC_NAMES) {
      expect(html).toContain(`data-threshold="${String(frame.thresholds[metric])}"`);
    }
    const doctored = {
      ...frame,
      thresholds: { ...frame.thresholds, n1: 0.123 },
    };
    expect(renderGauges(doctored)).toContain(`data-metric="n1" data-value="${String(frame.n.n1)}" data-raw-name="ias" data-raw-value="${String(frame.raw.ias)}" data-threshold="0.123"`);
  });

  it("marks exactly the alerted gauges on the restricted-window frame", () => {
    const frame = frameAt.get(28)!;
    expect(frame.level).toBe("Restricted");
    const html = renderGauges(frame);
    expect(html).toContain(`data-metric="n3" data-value="${String(frame.n.n3)}" data-raw-name="edi" data-raw-value="${String(frame.raw.edi)}" data-threshold="${String(frame.thresholds["n3"])}" data-alert="true"`);
    for (const metric of METRIC_NAMES.filter((name) => name !== "n3")) {
      expect(html).toContain(`data-metric="${metric}"`);
      expect(html).not.toContain(`data-metric="${metric}" data-value="${String(frame.n[metric])}" data-raw-name="${RAW_FOR_METRIC[metric]}" data-raw-value="${String(frame.raw[RAW_FOR_METRIC[metric]])}" data-threshold="${String(frame.thresholds[metric])}" data-alert="true"`);
    }
    expect(renderComposite(frame)).toContain(`data-level="Restricted"`);
  });

  it("shows no alert styling on a healthy frame", () => {
    const frame = frameAt.get(0)!;
    expect(frame.alerts).toEqual([]);
    const html = renderGauges(frame);
    expect(html).not.toContain(`data-alert="true"`);
    expect(html).not.toContain("gauge-alert");
  });

  it("renders agent rows with consumed budget straight from the frame", () => {
    const frame = frameAt.get(30)!;
    const html = renderAgents(frame.agents, "drone-3");
    for (const agent of frame.agents) {
      expect(html).toContain(
        `data-agent="${agent.agent_id}" data-consumed="${String(agent.consumed_iota)}" data-budget="${String(agent.budget)}"`,
      );
    }
    expect(html).toContain(`class="agent-row selected" data-agent="drone-3"`);
  });

  it("plots one trajectory point per frame at its exact cqs", () => {
    const vm = foldAll();
    const html = renderTrajectory(vm.trajectory);
    expect(html.match(/<circle/g)).toHaveLength(frames.length);
    const restricted = frameAt.get(28)!;
    expect(html).toContain(`data-tick="28" data-cqs="${String(restricted.cqs)}" data-level="Restricted"`);
  });

  it("draws a radar polygon for each configured tick", () => {
    const vm = foldAll();
    expect(info.radar_ticks).toEqual([0, 28, 45]);
    const html = renderDashboard(vm);
    for (const tick of info.radar_ticks) {
      expect(html).toContain(`class="radar-snapshot" data-tick="${tick}"`);
    }
  });
});

describe("status chrome", () => {
  it("announces a stale connection and disables commands", () => {
    const vm = foldAll();
    vm.markStale();
    const html = renderDashboard(vm);
    expect(html).toContain(`data-state="stale"`);
    expect(html).toContain("commands disabled");
    expect(vm.commandsEnabled).toBe(false);
  });

  it("labels replay mode read-only", () => {
    const vm = new ConsoleViewModel();
    vm.enterReplay();
    expect(renderBanner(vm)).toContain(`data-state="replay"`);
  });

  it("renders command history rows with ack states and landing ticks", () => {
    const vm = foldAll();
    vm.markStale();
    vm.applyFrame({ ...frames[frames.length - 1]!, tick: 99 });
    const message = vm.prepareCommand("confirm-checkpoint", { agent_id: "drone-1" });
    vm.applyAck({ type: "ack", v: 1, command_id: message!.command_id, status: "accepted", problems: [] });
    vm.applyFrame({
      ...frames[frames.length - 1]!,
      tick: 100,
      events: [
        {
          seq: 999,
          t: 100,
          kind: "command",
          actor: "operator",
          payload: { kind: "confirm-checkpoint", command_id: message!.command_id },
        },
      ],
    });
    const html = renderCommandHistory(vm.commands);
    expect(html).toContain(`data-command-id="${message!.command_id}"`);
    expect(html).toContain(`data-state="accepted"`);
    expect(html).toContain(`data-landed-tick="100"`);
  });
});
