/**
 * Connection layer: owns one live socket to the runtime, feeds every
 * server message through the shared parser into the view model, and
 * pushes operator commands back out. The socket constructor and the
 * scenario fetch are injected so tests can run the full loop against
 * a fake wire or a plain Node websocket.
 */

import { CommandMessage, ScenarioInfo, parseServerMessage } from "./protocol.js";
import { ConsoleViewModel } from "./viewmodel.js";

/** Structural subset of the DOM WebSocket that the client relies on. */
export interface WireSocket {
  send(data: string): void;
  close(): void;
  onopen: ((event: unknown) => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: ((event: unknown) => void) | null;
  onerror: ((event: unknown) => void) | null;
}

export type SocketFactory = (url: string) => WireSocket;
export type ScenarioFetch = (url: string) => Promise<ScenarioInfo>;

export interface ConsoleClientOptions {
  /** ws:// endpoint for the frame stream. */
  socketUrl: string;
  /** http:// endpoint for GET /scenario; omit to skip the fetch. */
  scenarioUrl?: string;
  socketFactory: SocketFactory;
  fetchScenario?: ScenarioFetch;
  /** Called after every state change so the host can re-render. */
  onChange?: (vm: ConsoleViewModel) => void;
  /** How long to wait for an ack before marking a command timed out. */
  ackTimeoutMs?: number;
  viewModel?: ConsoleViewModel;
}

export class ConsoleClient {
  readonly vm: ConsoleViewModel;
  /** Wire-level problems that never reached a command (protocol errors). */
  readonly protocolErrors: string[][] = [];

  private socket: WireSocket | null = null;
  private readonly options: ConsoleClientOptions;
  private readonly ackTimers = new Map<string, ReturnType<typeof setTimeout>>();
  private closedByUs = false;

  constructor(options: ConsoleClientOptions) {
    this.options = options;
    this.vm = options.viewModel ?? new ConsoleViewModel();
  }

  connect(): void {
    this.closedByUs = false;
    const socket = this.options.socketFactory(this.options.socketUrl);
    this.socket = socket;
    socket.onopen = () => {
      void this.loadScenarioInfo();
    };
    socket.onmessage = (event) => {
      this.handleWireData(event.data);
    };
    socket.onclose = () => {
      this.handleDisconnect();
    };
    socket.onerror = () => {
      this.handleDisconnect();
    };
  }

  close(): void {
    this.closedByUs = true;
    for (const timer of this.ackTimers.values()) {
      clearTimeout(timer);
    }
    this.ackTimers.clear();
    this.socket?.close();
    this.socket = null;
  }

  /**
   * Issue an operator command. Returns the message actually sent, or
   * null when the view model suppressed it (not live, or an identical
   * submission is still pending - the double-click guard).
   */
  issue(kind: CommandMessage["kind"], payload: Record<string, unknown>): CommandMessage | null {
    const message = this.vm.prepareCommand(kind, payload);
    if (message === null || this.socket === null) {
      return null;
    }
    this.socket.send(JSON.stringify(message));
    this.armAckTimer(message.command_id);
    this.notify();
    return message;
  }

  /** Re-send a timed-out command under its original id. */
  retry(commandId: string): boolean {
    const message = this.vm.retryCommand(commandId);
    if (message === null || this.socket === null) {
      return false;
    }
    this.socket.send(JSON.stringify(message));
    this.armAckTimer(message.command_id);
    this.notify();
    return true;
  }

  handleWireData(data: unknown): void {
    const text = typeof data === "string" ? data : String(data);
    let message;
    try {
      message = parseServerMessage(text);
    } catch {
      return;
    }
    if (message.type === "frame") {
      this.vm.applyFrame(message);
    } else if (message.type === "ack") {
      const timer = this.ackTimers.get(message.command_id);
      if (timer !== undefined) {
        clearTimeout(timer);
        this.ackTimers.delete(message.command_id);
      }
      this.vm.applyAck(message);
    } else {
      this.protocolErrors.push([...message.problems]);
    }
    this.notify();
  }

  private handleDisconnect(): void {
    if (this.closedByUs) {
      return;
    }
    this.vm.markStale();
    this.notify();
  }

  private armAckTimer(commandId: string): void {
    const timeoutMs = this.options.ackTimeoutMs ?? 5000;
    if (timeoutMs <= 0) {
      return;
    }
    const timer = setTimeout(() => {
      this.ackTimers.delete(commandId);
      this.vm.markTimeout(commandId);
      this.notify();
    }, timeoutMs);
    this.ackTimers.set(commandId, timer);
  }

  private async loadScenarioInfo(): Promise<void> {
    const { scenarioUrl, fetchScenario } = this.options;
    if (!scenarioUrl || !fetchScenario) {
      return;
    }
    try {
      const info = await fetchScenario(scenarioUrl);
      this.vm.setRadarTicks(info.radar_ticks);
      this.notify();
    } catch {
      // The dashboard works without radar configuration.
    }
  }

  private notify(): void {
    this.options.onChange?.(this.vm);
  }
}
