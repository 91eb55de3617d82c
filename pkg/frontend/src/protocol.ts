/**
 * Wire contract with the control plane.
 *
 * Every message is a JSON object with a `type` discriminator and an
 * integer schema version `v`. The console treats frames as the single
 * source of truth: every number it displays comes from a frame field,
 * never from local arithmetic.
 */

export const PROTOCOL_VERSION = 1;

export type MetricName = "n1" | "n2" | "n3" | "n4" | "n5" | "n6";

export const METRIC_NAMES: readonly MetricName[] = [
  "n1",
  "n2",
  "n3",
  "n4",
  "n5",
  "n6",
];

export type RawName = "ias" | "cir" | "edi" | "i_c" | "sf" | "scs";

/** Raw channel behind each normalized metric, for gauge subtitles. */
export const RAW_FOR_METRIC: Readonly<Record<MetricName, RawName>> = {
  n1: "ias",
  n2: "cir",
  n3: "edi",
  n4: "i_c",
  n5: "sf",
  n6: "scs",
};

export interface AlertEntry {
  metric: MetricName;
  value: number;
  threshold: number;
}

export interface NoticeEntry {
  kind: string;
  [key: string]: unknown;
}

export interface AgentSummary {
  agent_id: string;
  active: boolean;
  compromised: boolean;
  responsive: boolean;
  coherent: boolean;
  reduced_autonomy: boolean;
  halted: boolean;
  consumed_iota: number;
  budget: number;
  defensive_threshold: number;
  allocations: Record<string, number>;
}

export interface LoggedEvent {
  seq: number;
  t: number;
  kind: string;
  actor: string;
  payload: Record<string, unknown>;
}

export interface DashboardFrame {
  type: "frame";
  v: number;
  scenario_id: string;
  final: boolean;
  tick: number;
  n: Record<MetricName, number>;
  raw: Record<RawName, number>;
  cqs: number;
  level: string;
  alerts: AlertEntry[];
  notices: NoticeEntry[];
  agents: AgentSummary[];
  events: LoggedEvent[];
  thresholds: Record<string, number>;
}

export interface CommandMessage {
  type: "command";
  v: number;
  command_id: string;
  kind: string;
  payload: Record<string, unknown>;
}

export type AckStatus = "accepted" | "duplicate" | "rejected";

export interface CommandAck {
  type: "ack";
  v: number;
  command_id: string;
  status: AckStatus;
  problems: string[];
}

export interface ServerError {
  type: "error";
  v: number;
  problems: string[];
}

export type ServerMessage = DashboardFrame | CommandAck | ServerError;

export interface ScenarioInfo {
  scenario_id: string;
  seed: number;
  ticks: number;
  agents: string[];
  thresholds: Record<string, number>;
  radar_ticks: number[];
}

export function isFrame(message: unknown): message is DashboardFrame {
  return isRecord(message) && message.type === "frame" && message.v === PROTOCOL_VERSION;
}

export function isAck(message: unknown): message is CommandAck {
  return isRecord(message) && message.type === "ack" && message.v === PROTOCOL_VERSION;
}

export function isServerError(message: unknown): message is ServerError {
  return isRecord(message) && message.type === "error";
}

export function parseServerMessage(text: string): ServerMessage {
  const parsed: unknown = JSON.parse(text);
  if (isFrame(parsed) || isAck(parsed) || isServerError(parsed)) {
    return parsed;
  }
  throw new Error(`unrecognized server message: ${text.slice(0, 120)}`);
}

function isRecord(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null;
}
