"""Live control plane: a WebSocket frame stream plus operator command intake.

The server owns a single runtime and advances it on a fixed cadence (or on
demand in tests). Every tick produces one frame that is pushed to all
connected consoles; operator commands arrive over the same socket, are
validated, queued for the next tick, and acknowledged immediately.

Consoles never compute metrics: frames carry the exact normalized vector,
raw vector, composite score, response level, and threshold table the engine
logged, so a display can only ever show what the engine decided.
"""

from __future__ import annotations

import asyncio
import logging
import threading
from contextlib import asynccontextmanager
from typing import Any, Literal, Mapping

from fastapi import FastAPI, HTTPException, Query, WebSocket, WebSocketDisconnect
from pydantic import BaseModel, Field, ValidationError

from swarmgov.protocols import ReviewNotRequiredError, generate_review
from swarmgov.runtime import GovernanceRuntime, TickResult
from swarmgov.scenario import Scenario

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = 1


class CommandMessage(BaseModel):
    """An operator command submitted over the socket."""

    type: Literal["command"]
    v: Literal[1]
    command_id: str = Field(min_length=1, max_length=128)
    kind: str = Field(min_length=1)
    payload: dict[str, Any] = Field(default_factory=dict)


class CommandAck(BaseModel):
    """The engine's answer to a submitted command."""

    type: Literal["ack"] = "ack"
    v: Literal[1] = 1
    command_id: str
    status: Literal["accepted", "duplicate", "rejected"]
    problems: list[str] = Field(default_factory=list)


def threshold_table(runtime: GovernanceRuntime) -> dict[str, float]:
    config = runtime.scenario.config.thresholds
    return {**config.thresholds, "pigr_trigger": config.pigr_trigger}


def frame_payload(runtime: GovernanceRuntime, result: TickResult) -> dict[str, Any]:
    """Assemble the wire frame for one completed tick."""

    return {
        "type": "frame",
        "v": PROTOCOL_VERSION,
        "scenario_id": runtime.scenario.scenario_id,
        "final": result.tick + 1 >= runtime.scenario.ticks,
        "tick": result.tick,
        "n": dict(result.n),
        "raw": dict(result.raw),
        "cqs": result.cqs,
        "level": result.level,
        "alerts": list(result.alerts),
        "notices": list(result.notices),
        "agents": list(result.agents),
        "events": list(result.events),
        "thresholds": threshold_table(runtime),
    }


class ServerState:
    """Owns the runtime, its tick cadence, and the set of subscribers.

    All runtime mutation happens under one lock so the pacer thread and
    socket handlers never interleave mid-tick.
    """

    def __init__(self, scenario: Scenario):
        self.runtime = GovernanceRuntime(scenario)
        self.lock = threading.Lock()
        self.frames: list[dict[str, Any]] = []
        self.subscribers: set[asyncio.Queue] = set()
        self.loop: asyncio.AbstractEventLoop | None = None

    def advance_one_tick(self) -> dict[str, Any] | None:
        """Advance the runtime by one tick and fan the frame out."""

        with self.lock:
            if self.runtime.finished:
                return None
            result = self.runtime.tick()
            frame = frame_payload(self.runtime, result)
            self.frames.append(frame)
            subscribers = list(self.subscribers)
        for queue in subscribers:
            if self.loop is not None:
                self.loop.call_soon_threadsafe(queue.put_nowait, frame)
            else:
                queue.put_nowait(frame)
        return frame

    def submit_command(
        self, command_id: str, kind: str, payload: Mapping[str, Any]
    ) -> tuple[str, list[str]]:
        with self.lock:
            return self.runtime.queue_command(command_id, kind, dict(payload))

    def subscribe(self) -> tuple[asyncio.Queue, list[dict[str, Any]]]:
        """Register a consumer; returns its queue and the backlog to replay."""

        queue: asyncio.Queue = asyncio.Queue()
        with self.lock:
            backlog = list(self.frames)
            self.subscribers.add(queue)
        return queue, backlog

    def unsubscribe(self, queue: asyncio.Queue) -> None:
        with self.lock:
            self.subscribers.discard(queue)


def create_app(scenario: Scenario, tick_seconds: float = 0.0) -> FastAPI:
    """Build the control plane app; a positive cadence starts the pacer."""

    state = ServerState(scenario)

    def pace() -> None:
        import time

        while not state.runtime.finished:
            try:
                state.advance_one_tick()
            except Exception:
                # A dead pacer with a live socket looks healthy from the
                # console while frames silently stop; make the fault loud.
                logger.exception("tick pacer stopped on an engine fault")
                return
            time.sleep(tick_seconds)

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        state.loop = asyncio.get_running_loop()
        if tick_seconds > 0:
            threading.Thread(target=pace, name="tick-pacer", daemon=True).start()
        yield

    app = FastAPI(title="swarmgov control plane", lifespan=lifespan)
    app.state.engine = state

    @app.websocket("/ws")
    async def socket(ws: WebSocket) -> None:
        await ws.accept()
        if state.loop is None:
            state.loop = asyncio.get_running_loop()
        queue, backlog = state.subscribe()
        try:
            for frame in backlog:
                await ws.send_json(frame)

            async def pump() -> None:
                while True:
                    frame = await queue.get()
                    await ws.send_json(frame)

            pump_task = asyncio.create_task(pump())
            try:
                while True:
                    raw = await ws.receive_json()
                    try:
                        message = CommandMessage.model_validate(raw)
                    except ValidationError as exc:
                        await ws.send_json(
                            {
                                "type": "error",
                                "v": PROTOCOL_VERSION,
                                "problems": [
                                    f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}"
                                    for err in exc.errors()
                                ],
                            }
                        )
                        continue
                    status, problems = state.submit_command(
                        message.command_id, message.kind, message.payload
                    )
                    ack = CommandAck(
                        command_id=message.command_id,
                        status=status,
                        problems=problems,
                    )
                    await ws.send_json(ack.model_dump())
            finally:
                pump_task.cancel()
        except WebSocketDisconnect:
            pass
        finally:
            state.unsubscribe(queue)

    @app.get("/log")
    def get_log(
        start: int = Query(default=0, alias="from", ge=0),
        to: int | None = Query(default=None, ge=0),
    ) -> list[dict[str, Any]]:
        with state.lock:
            events = state.runtime.log.window(start, to if to is not None else state.runtime.t)
        return [e.to_dict() for e in events]

    @app.get("/pigr")
    def get_pigr(window: str = Query(pattern=r"^\d+\.\.\d+$")) -> dict[str, Any]:
        start_text, _, end_text = window.partition("..")
        start, end = int(start_text), int(end_text)
        if end < start:
            raise HTTPException(status_code=422, detail=f"window end {end} precedes start {start}")
        with state.lock:
            try:
                review = generate_review(state.runtime.log, window=(start, end))
            except ReviewNotRequiredError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
        return review.to_dict()

    @app.get("/scenario")
    def get_scenario() -> dict[str, Any]:
        return {
            "scenario_id": scenario.scenario_id,
            "seed": scenario.seed,
            "ticks": scenario.ticks,
            "agents": list(state.runtime.roster),
            "thresholds": threshold_table(state.runtime),
            "radar_ticks": list(scenario.config.radar_ticks),
        }

    return app


def serve(
    scenario: Scenario,
    host: str = "127.0.0.1",
    port: int = 8741,
    tick_seconds: float = 1.0,
) -> None:
    """Run the control plane under uvicorn until the process is stopped."""

    import uvicorn

    app = create_app(scenario, tick_seconds=tick_seconds)
    logger.info(
        "serving %s on %s:%d (%.2fs per tick)",
        scenario.scenario_id,
        host,
        port,
        tick_seconds,
    )
    uvicorn.run(app, host=host, port=port, log_level="warning")
