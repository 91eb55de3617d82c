/**
 * Browser entry point. Live mode connects to the runtime's websocket
 * and renders each frame; replay mode (?replay=<log-url>) fetches a
 * recorded event log, rebuilds its frame stream, and scrubs through it
 * read-only. All rendering goes through the pure renderers so the page
 * shows exactly what the frames carry.
 */

import { ConsoleClient, WireSocket } from "./client.js";
import { renderDashboard } from "./render.js";
import { parseLogToFrames } from "./replay.js";
import { ScenarioInfo } from "./protocol.js";
import { ConsoleViewModel } from "./viewmodel.js";

const params = new URLSearchParams(window.location.search);
const app = document.getElementById("app");

function commandPanel(client: ConsoleClient): string {
  const disabled = client.vm.commandsEnabled ? "" : " disabled";
  return [
    `<section class="command-panel">`,
    `<fieldset${disabled}><legend>correction</legend>`,
    `<input id="corr-targets" placeholder="targets (comma separated)" value="drone-3">`,
    `<input id="corr-channel" placeholder="attention channel" value="zone-crossing">`,
    `<input id="corr-weight" placeholder="intended weight" value="0.85">`,
    `<button data-action="correction">issue correction</button>`,
    `</fieldset>`,
    `<fieldset${disabled}><legend>checkpoint</legend>`,
    `<input id="ckpt-agent" placeholder="agent id" value="drone-1">`,
    `<button data-action="confirm-checkpoint">confirm checkpoint</button>`,
    `</fieldset>`,
    `<fieldset${disabled}><legend>partial reset</legend>`,
    `<input id="reset-agent" placeholder="agent id" value="drone-3">`,
    `<input id="reset-assessments" placeholder="assessments (comma separated)">`,
    `<button data-action="partial-reset">order partial reset</button>`,
    `</fieldset>`,
    `</section>`,
  ].join("");
}

function readValue(id: string): string {
  const element = document.getElementById(id) as HTMLInputElement | null;
  return element ? element.value.trim() : "";
}

function startLive(): void {
  const wsUrl = params.get("ws") ?? "ws://127.0.0.1:8000/ws";
  const httpBase = wsUrl.replace(/^ws/, "http").replace(/\/ws$/, "");
  const client = new ConsoleClient({
    socketUrl: wsUrl,
    scenarioUrl: `${httpBase}/scenario`,
    socketFactory: (url) => new WebSocket(url) as unknown as WireSocket,
    fetchScenario: async (url) => {
      const response = await fetch(url);
      if (!response.ok) {
        throw new Error(`scenario fetch failed: ${response.status}`);
      }
      return (await response.json()) as ScenarioInfo;
    },
    ackTimeoutMs: 5000,
    onChange: (vm) => {
      if (app) {
        app.innerHTML = renderDashboard(vm) + commandPanel(client);
      }
    },
  });

  document.addEventListener("click", (event) => {
    const target = event.target as HTMLElement | null;
    const action = target?.dataset?.["action"];
    const retryId = target?.dataset?.["retry"];
    const agentRow = target?.closest?.("[data-agent]") as HTMLElement | null;
    if (retryId) {
      client.retry(retryId);
      return;
    }
    if (action === "correction") {
      const channel = readValue("corr-channel");
      client.issue("correction", {
        targets: readValue("corr-targets").split(",").map((item) => item.trim()),
        intended: { [channel]: Number(readValue("corr-weight")) },
      });
    } else if (action === "confirm-checkpoint") {
      client.issue("confirm-checkpoint", { agent_id: readValue("ckpt-agent") });
    } else if (action === "partial-reset") {
      const raw = readValue("reset-assessments");
      client.issue("partial-reset", {
        agent_id: readValue("reset-agent"),
        assessments: raw === "" ? [] : raw.split(",").map((item) => item.trim()),
      });
    } else if (agentRow && agentRow.dataset["agent"]) {
      client.vm.selectAgent(agentRow.dataset["agent"]);
      if (app) {
        app.innerHTML = renderDashboard(client.vm) + commandPanel(client);
      }
    }
  });

  client.connect();
  if (app) {
    app.innerHTML = renderDashboard(client.vm) + commandPanel(client);
  }
}

async function startReplay(logUrl: string): Promise<void> {
  const response = await fetch(logUrl);
  if (!response.ok) {
    throw new Error(`replay fetch failed: ${response.status}`);
  }
  const frames = parseLogToFrames(await response.text());

  const renderUpTo = (index: number): void => {
    const vm = new ConsoleViewModel();
    vm.enterReplay();
    for (const frame of frames.slice(0, index + 1)) {
      vm.applyFrame(frame);
    }
    if (app) {
      const scrubber =
        `<input type="range" id="scrub" min="0" max="${frames.length - 1}" value="${index}">` +
        `<span id="scrub-label">frame ${index + 1} / ${frames.length}</span>`;
      app.innerHTML = `<div class="replay-controls">${scrubber}</div>` + renderDashboard(vm);
      const input = document.getElementById("scrub") as HTMLInputElement | null;
      input?.addEventListener("input", () => renderUpTo(Number(input.value)));
    }
  };

  renderUpTo(frames.length - 1);
}

const replayUrl = params.get("replay");
if (replayUrl) {
  void startReplay(replayUrl);
} else {
  startLive();
}
