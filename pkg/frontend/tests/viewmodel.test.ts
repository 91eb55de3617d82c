import { describe, expect, it } from "vitest";

import { CommandAck, DashboardFrame, PROTOCOL_VERSION } from "../src/protocol.js";
import { ConsoleViewModel } from "../src/viewmodel.js";

function makeFrame(tick: number, overrides: Partial<DashboardFrame> = {}): DashboardFrame {
  return {
    type: "frame",
    v: PROTOCOL_VERSION,
    scenario_id: "unit",
    final: false,
    tick,
    n: { n1: 1.0, n2: 1.0, n3: 1.0, n4: 1.0, n5: 1.0, n6: 1.0 },
    raw: { ias: 1.0, cir: 0.6, edi: 0.0, i_c: 0.0, sf: 0.0, scs: 1.0 },
    cqs: 1.0,
    level: "Normal",
    alerts: [],
    notices: [],
    agents: [],
    events: [],
    thresholds: { n1: 0.7, n2: 0.6, n3: 0.6, n4: 0.3, n5: 0.5, n6: 0.7, pigr_trigger: 0.6 },
    ...overrides,
  };
}

function ack(commandId: string, status: CommandAck["status"], problems: string[] = []): CommandAck {
  return { type: "ack", v: PROTOCOL_VERSION, command_id: commandId, status, problems };
}

describe("frame folding", () => {
  it("accumulates trajectory and stamps alerts with their tick", () => {
    const vm = new ConsoleViewModel();
    vm.applyFrame(makeFrame(0, { cqs: 0.92 }));
    vm.applyFrame(
      makeFrame(1, {
        cqs: 0.58,
        level: "Restricted",
        alerts: [{ metric: "n3", value: 0.58, threshold: 0.6 }],
      }),
    );
    expect(vm.current?.tick).toBe(1);
    expect(vm.trajectory).toEqual([
      { tick: 0, cqs: 0.92, level: "Normal" },
      { tick: 1, cqs: 0.58, level: "Restricted" },
    ]);
    expect(vm.alerts).toEqual([{ metric: "n3", value: 0.58, threshold: 0.6, tick: 1 }]);
  });

  it("ignores duplicate or out-of-order ticks", () => {
    const vm = new ConsoleViewModel();
    vm.applyFrame(makeFrame(3, { cqs: 0.9 }));
    vm.applyFrame(makeFrame(3, { cqs: 0.1 }));
    vm.applyFrame(makeFrame(2, { cqs: 0.2 }));
    expect(vm.current?.cqs).toBe(0.9);
    expect(vm.trajectory).toHaveLength(1);
  });

  it("starts connecting, goes live on the first frame, stale on disconnect", () => {
    const vm = new ConsoleViewModel();
    expect(vm.connection).toBe("connecting");
    expect(vm.commandsEnabled).toBe(false);
    vm.applyFrame(makeFrame(0));
    expect(vm.connection).toBe("live");
    expect(vm.commandsEnabled).toBe(true);
    vm.markStale();
    expect(vm.connection).toBe("stale");
    expect(vm.commandsEnabled).toBe(false);
    vm.applyFrame(makeFrame(1));
    expect(vm.connection).toBe("live");
  });

  it("stays read-only in replay mode", () => {
    const vm = new ConsoleViewModel();
    vm.enterReplay();
    vm.applyFrame(makeFrame(0));
    expect(vm.connection).toBe("replay");
    expect(vm.commandsEnabled).toBe(false);
    expect(vm.prepareCommand("correction", { targets: ["a"] })).toBeNull();
    vm.markStale();
    expect(vm.connection).toBe("replay");
  });
});

describe("command lifecycle", () => {
  it("refuses to prepare a command before any frame arrives", () => {
    const vm = new ConsoleViewModel();
    expect(vm.prepareCommand("confirm-checkpoint", {})).toBeNull();
  });

  it("a double-click produces exactly one message", () => {
    const vm = new ConsoleViewModel({ idPrefix: "op" });
    vm.applyFrame(makeFrame(0));
    const first = vm.prepareCommand("confirm-checkpoint", { agent_id: "drone-1" });
    const second = vm.prepareCommand("confirm-checkpoint", { agent_id: "drone-1" });
    expect(first).not.toBeNull();
    expect(second).toBeNull();
    expect(vm.commands).toHaveLength(1);
  });

  it("allows the same payload again once the first submission resolved", () => {
    const vm = new ConsoleViewModel({ idPrefix: "op" });
    vm.applyFrame(makeFrame(0));
    const first = vm.prepareCommand("confirm-checkpoint", { agent_id: "drone-1" });
    vm.applyAck(ack(first!.command_id, "accepted"));
    const second = vm.prepareCommand("confirm-checkpoint", { agent_id: "drone-1" });
    expect(second).not.toBeNull();
    expect(second!.command_id).not.toBe(first!.command_id);
    expect(vm.commands).toHaveLength(2);
  });

  it("a retry after timeout reuses the same command id", () => {
    const vm = new ConsoleViewModel({ idPrefix: "op" });
    vm.applyFrame(makeFrame(0));
    const message = vm.prepareCommand("correction", {
      targets: ["drone-3"],
      intended: { "zone-crossing": 0.85 },
    });
    vm.markTimeout(message!.command_id);
    expect(vm.commands[0]!.state).toBe("timeout");
    const retried = vm.retryCommand(message!.command_id);
    expect(retried!.command_id).toBe(message!.command_id);
    expect(vm.commands[0]!.state).toBe("pending");
    expect(vm.commands[0]!.attempts).toBe(2);
    expect(vm.commands).toHaveLength(1);
  });

  it("a duplicate ack for a retry keeps the original verdict", () => {
    const vm = new ConsoleViewModel({ idPrefix: "op" });
    vm.applyFrame(makeFrame(0));
    const message = vm.prepareCommand("confirm-checkpoint", {});
    vm.applyAck(ack(message!.command_id, "accepted"));
    vm.applyAck(ack(message!.command_id, "duplicate"));
    expect(vm.commands[0]!.state).toBe("accepted");
  });

  it("records rejection problems", () => {
    const vm = new ConsoleViewModel({ idPrefix: "op" });
    vm.applyFrame(makeFrame(0));
    const message = vm.prepareCommand("correction", { targets: ["ghost"], intended: {} });
    vm.applyAck(ack(message!.command_id, "rejected", ["unknown agent 'ghost'"]));
    expect(vm.commands[0]!.state).toBe("rejected");
    expect(vm.commands[0]!.problems).toEqual(["unknown agent 'ghost'"]);
  });

  it("marks the tick where the command's logged event lands", () => {
    const vm = new ConsoleViewModel({ idPrefix: "op" });
    vm.applyFrame(makeFrame(4));
    const message = vm.prepareCommand("confirm-checkpoint", { agent_id: "drone-1" });
    expect(vm.commands[0]!.sentAtTick).toBe(4);
    vm.applyAck(ack(message!.command_id, "accepted"));
    vm.applyFrame(
      makeFrame(5, {
        events: [
          {
            seq: 40,
            t: 5,
            kind: "command",
            actor: "operator",
            payload: { kind: "confirm-checkpoint", command_id: message!.command_id },
          },
        ],
      }),
    );
    expect(vm.commands[0]!.resolvedAtTick).toBe(5);
  });

  it("timeout only downgrades commands still pending", () => {
    const vm = new ConsoleViewModel({ idPrefix: "op" });
    vm.applyFrame(makeFrame(0));
    const message = vm.prepareCommand("confirm-checkpoint", {});
    vm.applyAck(ack(message!.command_id, "accepted"));
    vm.markTimeout(message!.command_id);
    expect(vm.commands[0]!.state).toBe("accepted");
  });
});

describe("radar configuration", () => {
  it("captures configured ticks even when the config arrives late", () => {
    const vm = new ConsoleViewModel();
    const vector = { n1: 0.95, n2: 0.92, n3: 0.95, n4: 0.98, n5: 1.0, n6: 1.0 };
    vm.applyFrame(makeFrame(0, { n: vector }));
    vm.applyFrame(makeFrame(1));
    vm.applyFrame(makeFrame(2));
    expect(vm.radarSnapshots).toEqual([]);
    vm.setRadarTicks([0, 2]);
    expect(vm.radarSnapshots.map((s) => s.tick)).toEqual([0, 2]);
    expect(vm.radarSnapshots[0]!.n).toEqual(vector);
  });
});
