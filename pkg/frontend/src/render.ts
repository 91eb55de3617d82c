/**
 * Pure string renderers: view model in, HTML out.
 *
 * Every displayed number is the frame value passed through String();
 * nothing is rounded, scaled, or recomputed. Alert states come from the
 * frame's own alert list, the level chip from the frame's level field,
 * and threshold markers from the thresholds the frame delivered:
 * the client bundle carries no threshold constants of its own.
 */

import {
  AgentSummary,
  DashboardFrame,
  METRIC_NAMES,
  MetricName,
  RAW_FOR_METRIC,
} from "./protocol.js";
import {
  ConsoleViewModel,
  RadarSnapshot,
  TrackedCommand,
  TrajectoryPoint,
} from "./viewmodel.js";

const LEVEL_CLASSES: Readonly<Record<string, string>> = {
  Normal: "level-normal",
  Elevated: "level-elevated",
  Restricted: "level-restricted",
  Minimal: "level-minimal",
  SafeState: "level-safestate",
};

export function levelClass(level: string): string {
  return LEVEL_CLASSES[level] ?? "level-unknown";
}

function escapeHtml(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderGauges(frame: DashboardFrame): string {
  const alerted = new Set(frame.alerts.map((a) => a.metric));
  const cells = METRIC_NAMES.map((metric: MetricName) => {
    const value = frame.n[metric];
    const rawName = RAW_FOR_METRIC[metric];
    const rawValue = frame.raw[rawName];
    const threshold = frame.thresholds[metric];
    const inAlert = alerted.has(metric);
    return [
      `<div class="gauge${inAlert ? " gauge-alert" : ""}"`,
      ` data-metric="${metric}"`,
      ` data-value="${String(value)}"`,
      ` data-raw-name="${rawName}"`,
      ` data-raw-value="${String(rawValue)}"`,
      ` data-threshold="${String(threshold)}"`,
      ` data-alert="${inAlert}">`,
      `<span class="gauge-name">${metric}</span>`,
      `<span class="gauge-value">${String(value)}</span>`,
      `<span class="gauge-raw">${rawName}=${String(rawValue)}</span>`,
      `<span class="gauge-threshold-marker" style="left:${percent(threshold)}"></span>`,
      `<span class="gauge-fill" style="width:${percent(value)}"></span>`,
      `</div>`,
    ].join("");
  });
  return `<section class="gauges">${cells.join("")}</section>`;
}

export function renderComposite(frame: DashboardFrame): string {
  return [
    `<section class="composite ${levelClass(frame.level)}"`,
    ` data-cqs="${String(frame.cqs)}" data-level="${escapeHtml(frame.level)}">`,
    `<span class="cqs-value">${String(frame.cqs)}</span>`,
    `<span class="level-chip">${escapeHtml(frame.level)}</span>`,
    `<span class="review-trigger" data-trigger="${String(frame.thresholds["pigr_trigger"])}"></span>`,
    `</section>`,
  ].join("");
}

function percent(fraction: number | undefined): string {
  if (fraction === undefined) {
    return "0%";
  }
  const clamped = Math.max(0, Math.min(1, fraction));
  return `${clamped * 100}%`;
}

export function renderTrajectory(points: TrajectoryPoint[], width = 460, height = 80): string {
  if (points.length === 0) {
    return `<svg class="trajectory" viewBox="0 0 ${width} ${height}"></svg>`;
  }
  const first = points[0]!.tick;
  const last = points[points.length - 1]!.tick;
  const span = Math.max(1, last - first);
  const coords = points
    .map((p) => {
      const x = ((p.tick - first) / span) * width;
      const y = height - p.cqs * height;
      return `${x},${y}`;
    })
    .join(" ");
  const markers = points
    .map((p) => {
      const x = ((p.tick - first) / span) * width;
      const y = height - p.cqs * height;
      return [
        `<circle class="trajectory-point ${levelClass(p.level)}"`,
        ` data-tick="${p.tick}" data-cqs="${String(p.cqs)}" data-level="${escapeHtml(p.level)}"`,
        ` cx="${x}" cy="${y}" r="2"></circle>`,
      ].join("");
    })
    .join("");
  return [
    `<svg class="trajectory" viewBox="0 0 ${width} ${height}">`,
    `<polyline fill="none" points="${coords}"></polyline>`,
    markers,
    `</svg>`,
  ].join("");
}

export function renderRadar(snapshots: RadarSnapshot[], size = 200): string {
  const center = size / 2;
  const radius = center - 10;
  const polygons = snapshots
    .map((snapshot) => {
      const points = METRIC_NAMES.map((metric, index) => {
        const angle = (Math.PI * 2 * index) / METRIC_NAMES.length - Math.PI / 2;
        const magnitude = snapshot.n[metric] * radius;
        const x = center + Math.cos(angle) * magnitude;
        const y = center + Math.sin(angle) * magnitude;
        return `${x},${y}`;
      }).join(" ");
      const values = METRIC_NAMES.map(
        (metric) => `data-${metric}="${String(snapshot.n[metric])}"`,
      ).join(" ");
      return `<polygon class="radar-snapshot" data-tick="${snapshot.tick}" ${values} points="${points}"></polygon>`;
    })
    .join("");
  return `<svg class="radar" viewBox="0 0 ${size} ${size}">${polygons}</svg>`;
}

export function renderAgents(agents: AgentSummary[], selected: string | null): string {
  const rows = agents
    .map((agent) => {
      const flags = [
        agent.active ? "" : "inactive",
        agent.compromised ? "compromised" : "",
        agent.responsive ? "" : "unresponsive",
        agent.coherent ? "" : "incoherent",
        agent.reduced_autonomy ? "reduced-autonomy" : "",
        agent.halted ? "halted" : "",
      ]
        .filter(Boolean)
        .join(" ");
      const chosen = agent.agent_id === selected ? " selected" : "";
      return [
        `<tr class="agent-row${chosen}" data-agent="${escapeHtml(agent.agent_id)}"`,
        ` data-consumed="${String(agent.consumed_iota)}" data-budget="${String(agent.budget)}">`,
        `<td>${escapeHtml(agent.agent_id)}</td>`,
        `<td class="agent-flags">${flags || "nominal"}</td>`,
        `<td>${String(agent.consumed_iota)} / ${String(agent.budget)}</td>`,
        `</tr>`,
      ].join("");
    })
    .join("");
  return `<table class="agents"><tbody>${rows}</tbody></table>`;
}

export function renderAgentDetail(agents: AgentSummary[], selected: string | null): string {
  const agent = agents.find((a) => a.agent_id === selected);
  if (!agent) {
    return `<aside class="agent-detail" data-agent="">select an agent</aside>`;
  }
  const allocations = Object.entries(agent.allocations)
    .map(
      ([channel, weight]) =>
        `<li data-channel="${escapeHtml(channel)}" data-weight="${String(weight)}">${escapeHtml(channel)}: ${String(weight)}</li>`,
    )
    .join("");
  return [
    `<aside class="agent-detail" data-agent="${escapeHtml(agent.agent_id)}">`,
    `<h3>${escapeHtml(agent.agent_id)}</h3>`,
    `<ul class="allocations">${allocations}</ul>`,
    `<p class="defensive" data-value="${String(agent.defensive_threshold)}">defensive threshold ${String(agent.defensive_threshold)}</p>`,
    `</aside>`,
  ].join("");
}

export function renderNotices(frame: DashboardFrame): string {
  const items = frame.notices
    .map((notice) => {
      const detail = Object.entries(notice)
        .filter(([key]) => key !== "kind")
        .map(([key, value]) => `${key}=${escapeHtml(String(value))}`)
        .join(" ");
      return `<li class="notice" data-kind="${escapeHtml(notice.kind)}">${escapeHtml(notice.kind)} ${detail}</li>`;
    })
    .join("");
  return `<ul class="notices">${items}</ul>`;
}

export function renderAlerts(vm: ConsoleViewModel): string {
  const items = vm.alerts
    .map(
      (alert) =>
        `<li class="alert" data-tick="${alert.tick}" data-metric="${alert.metric}"` +
        ` data-value="${String(alert.value)}" data-threshold="${String(alert.threshold)}">` +
        `t=${alert.tick} ${alert.metric}=${String(alert.value)} &lt; ${String(alert.threshold)}</li>`,
    )
    .join("");
  return `<ul class="alert-list">${items}</ul>`;
}

export function renderCommandHistory(commands: TrackedCommand[]): string {
  const rows = commands
    .map((tracked: TrackedCommand) => {
      const problems = tracked.problems.length
        ? `<span class="problems">${escapeHtml(tracked.problems.join("; "))}</span>`
        : "";
      const landed =
        tracked.resolvedAtTick === null ? "" : ` data-landed-tick="${tracked.resolvedAtTick}"`;
      return [
        `<li class="command command-${tracked.state}"`,
        ` data-command-id="${escapeHtml(tracked.command.command_id)}"`,
        ` data-kind="${escapeHtml(tracked.command.kind)}"`,
        ` data-state="${tracked.state}"${landed}>`,
        `${escapeHtml(tracked.command.kind)} [${tracked.state}] ${problems}`,
        `</li>`,
      ].join("");
    })
    .join("");
  return `<ol class="command-history">${rows}</ol>`;
}

export function renderBanner(vm: ConsoleViewModel): string {
  if (vm.connection === "stale") {
    return `<div class="banner banner-stale" data-state="stale">connection lost - frames are stale, commands disabled</div>`;
  }
  if (vm.connection === "replay") {
    return `<div class="banner banner-replay" data-state="replay">replay mode - read only</div>`;
  }
  if (vm.connection === "connecting") {
    return `<div class="banner banner-connecting" data-state="connecting">connecting...</div>`;
  }
  return "";
}

export function renderDashboard(vm: ConsoleViewModel): string {
  const frame = vm.current;
  if (!frame) {
    return `<main class="dashboard empty">${renderBanner(vm)}<p>waiting for first frame</p></main>`;
  }
  return [
    `<main class="dashboard" data-tick="${frame.tick}" data-scenario="${escapeHtml(frame.scenario_id)}">`,
    renderBanner(vm),
    renderComposite(frame),
    renderGauges(frame),
    renderTrajectory(vm.trajectory),
    renderRadar(vm.radarSnapshots),
    renderAlerts(vm),
    renderNotices(frame),
    renderAgents(frame.agents, vm.selectedAgent),
    renderAgentDetail(frame.agents, vm.selectedAgent),
    renderCommandHistory(vm.commands),
    `</main>`,
  ].join("\n");
}
