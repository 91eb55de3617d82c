/**
 * Console state, derived purely from received frames plus the local
 * command history. The view model stores frame values verbatim; it never
 * recomputes a metric, a composite score, or a response level.
 */

import {
  AckStatus,
  AlertEntry,
  CommandAck,
  CommandMessage,
  DashboardFrame,
  PROTOCOL_VERSION,
} from "./protocol.js";

export type ConnectionState = "connecting" | "live" | "stale" | "replay";

export type CommandState = "pending" | AckStatus | "timeout";

export interface TrackedCommand {
  command: CommandMessage;
  state: CommandState;
  problems: string[];
  sentAtTick: number | null;
  resolvedAtTick: number | null;
  attempts: number;
}

export interface TrajectoryPoint {
  tick: number;
  cqs: number;
  level: string;
}

export interface RadarSnapshot {
  tick: number;
  n: DashboardFrame["n"];
}

export class ConsoleViewModel {
  connection: ConnectionState = "connecting";
  current: DashboardFrame | null = null;
  trajectory: TrajectoryPoint[] = [];
  alerts: Array<AlertEntry & { tick: number }> = [];
  commands: TrackedCommand[] = [];
  selectedAgent: string | null = null;

  private radarTicks: ReadonlySet<number>;
  private vectorHistory: RadarSnapshot[] = [];
  private byId = new Map<string, TrackedCommand>();
  private idCounter = 0;
  private readonly idPrefix: string;

  constructor(options: { radarTicks?: Iterable<number>; idPrefix?: string } = {}) {
    this.radarTicks = new Set(options.radarTicks ?? []);
    this.idPrefix = options.idPrefix ?? `console-${Math.random().toString(36).slice(2, 8)}`;
  }

  setRadarTicks(ticks: Iterable<number>): void {
    this.radarTicks = new Set(ticks);
  }

  get radarSnapshots(): RadarSnapshot[] {
    return this.vectorHistory.filter((s) => this.radarTicks.has(s.tick));
  }

  /** Fold one frame in. Frames must arrive in tick order. */
  applyFrame(frame: DashboardFrame): void {
    if (this.current !== null && frame.tick <= this.current.tick) {
      return; // duplicate or stale delivery; frames are monotone in tick
    }
    this.current = frame;
    if (this.connection !== "replay") {
      this.connection = "live";
    }
    this.trajectory.push({ tick: frame.tick, cqs: frame.cqs, level: frame.level });
    this.vectorHistory.push({ tick: frame.tick, n: frame.n });
    for (const alert of frame.alerts) {
      this.alerts.push({ ...alert, tick: frame.tick });
    }
    this.resolveArrivals(frame);
  }

  markStale(): void {
    if (this.connection !== "replay") {
      this.connection = "stale";
    }
  }

  enterReplay(): void {
    this.connection = "replay";
  }

  get commandsEnabled(): boolean {
    return this.connection === "live";
  }

  nextCommandId(): string {
    this.idCounter += 1;
    return `${this.idPrefix}-${this.idCounter}`;
  }

  /**
   * Register a command about to be sent. Returns null when an identical
   * submission is already pending (double-click protection) or when the
   * console is not live.
   */
  prepareCommand(kind: string, payload: Record<string, unknown>): CommandMessage | null {
    if (!this.commandsEnabled) {
      return null;
    }
    const signature = JSON.stringify({ kind, payload });
    for (const tracked of this.commands) {
      if (
        tracked.state === "pending" &&
        JSON.stringify({ kind: tracked.command.kind, payload: tracked.command.payload }) ===
          signature
      ) {
        return null;
      }
    }
    const command: CommandMessage = {
      type: "command",
      v: PROTOCOL_VERSION,
      command_id: this.nextCommandId(),
      kind,
      payload,
    };
    const tracked: TrackedCommand = {
      command,
      state: "pending",
      problems: [],
      sentAtTick: this.current ? this.current.tick : null,
      resolvedAtTick: null,
      attempts: 1,
    };
    this.commands.push(tracked);
    this.byId.set(command.command_id, tracked);
    return command;
  }

  /** A retry after a timeout reuses the same command_id (idempotent). */
  retryCommand(commandId: string): CommandMessage | null {
    const tracked = this.byId.get(commandId);
    if (!tracked || (tracked.state !== "timeout" && tracked.state !== "pending")) {
      return null;
    }
    tracked.state = "pending";
    tracked.attempts += 1;
    return tracked.command;
  }

  applyAck(ack: CommandAck): void {
    const tracked = this.byId.get(ack.command_id);
    if (!tracked) {
      return;
    }
    if (ack.status === "duplicate" && tracked.state !== "pending") {
      return; // retry of an already resolved command; keep the original verdict
    }
    tracked.state = ack.status;
    tracked.problems = ack.problems;
  }

  markTimeout(commandId: string): void {
    const tracked = this.byId.get(commandId);
    if (tracked && tracked.state === "pending") {
      tracked.state = "timeout";
    }
  }

  selectAgent(agentId: string | null): void {
    this.selectedAgent = agentId;
  }

  /** The tick at which an accepted command's event landed, if it has. */
  private resolveArrivals(frame: DashboardFrame): void {
    for (const event of frame.events) {
      if (event.kind !== "command") {
        continue;
      }
      const commandId = event.payload["command_id"];
      if (typeof commandId !== "string") {
        continue;
      }
      const tracked = this.byId.get(commandId);
      if (tracked && tracked.resolvedAtTick === null) {
        tracked.resolvedAtTick = frame.tick;
      }
    }
  }
}
