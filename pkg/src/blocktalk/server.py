"""Websocket front end: lobby, pairing and live game traffic.

Wire protocol (normative, version-checked at join): every frame is a
newline-free JSON envelope ``{"v":1,"type":<string>,"payload":<object>}``.
Client-to-server types: join, chat, gesture, move, flip.  Server-to-client
types: paired, state, chat, gesture, score, game_over, error.  The paired
payload sent to the executing player deliberately omits the target.

The server is authoritative for world state, turn order and the clock;
clients render what they are told.  A dropped client aborts its session.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
import logging
import time
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from . import PROTOCOL_VERSION
from .session import (
    GameSession,
    Lobby,
    SessionError,
    enqueue_client,
    finalize_session,
    pair_clients,
    paired_payload,
)
from .tasks import TaskSpec, generate_task
from .transcript import ABORT, DEADLINE, MalformedEvent, Role, canonical_json
from .world import WorldError

logger = logging.getLogger(__name__)

CLIENT_EVENT_TYPES = ("chat", "gesture", "move", "flip")


def _subseed(seed: int, salt: int) -> int:
    return seed * 1_000_003 + salt


class LiveGame:
    """One paired session plus its sockets, lock and deadline timer."""

    def __init__(self, session: GameSession, sockets: dict[Role, WebSocket], started: float):
        self.session = session
        self.sockets = sockets
        self.started = started  # monotonic clock at session start
        self.lock = asyncio.Lock()
        self.timer: asyncio.Task | None = None
        self.over = False

    async def send(self, role: Role, type_: str, payload: dict) -> None:
        ws = self.sockets.get(role)
        if ws is None:
            return
        try:
            await ws.send_text(canonical_json({"v": PROTOCOL_VERSION, "type": type_, "payload": payload}))
        except Exception:
            pass  # peer gone; disconnect handling will abort the session

    async def deliver(self, to: str, type_: str, payload: dict) -> None:
        if to in ("human", "both"):
            await self.send(Role.HUMAN, type_, payload)
        if to in ("robot", "both"):
            await self.send(Role.ROBOT, type_, payload)


class ServerState:
    def __init__(self, tasks: list[TaskSpec], logs_dir: str | Path | None, seed: int, clock):
        if not tasks:
            raise ValueError("server needs at least one task")
        self.tasks = tasks
        self.logs_dir = logs_dir
        self.seed = seed
        self.clock = clock
        self.lobby = Lobby()
        self.lobby_lock = asyncio.Lock()
        self.games: dict[int, LiveGame] = {}  # keyed by id(websocket)
        self.roles: dict[int, Role] = {}
        self.pairings = 0

    def next_task(self) -> TaskSpec:
        return self.tasks[self.pairings % len(self.tasks)]


def default_tasks(seed: int = 0) -> list[TaskSpec]:
    return [generate_task(_subseed(seed, i)) for i in range(1, 4)]


def create_app(
    tasks: list[TaskSpec] | None = None,
    logs_dir: str | Path | None = None,
    seed: int = 0,
    clock=time.monotonic,
    static_dir: str | Path | None = None,
) -> FastAPI:
    state = ServerState(tasks or default_tasks(seed), logs_dir, seed, clock)

    @contextlib.asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        for game in list(state.games.values()):
            if game.timer is not None:
                game.timer.cancel()

    app = FastAPI(title="blocktalk", lifespan=lifespan)
    app.state.blocktalk = state

    @app.get("/health")
    async def health() -> dict:
        return {"status": "ok", "waiting": len(state.lobby.queue), "protocol_version": PROTOCOL_VERSION}

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket) -> None:
        await websocket.accept()
        key = id(websocket)
        try:
            if not await _handshake(state, websocket):
                return
            await _event_loop(state, websocket, key)
        except WebSocketDisconnect:
            pass
        finally:
            await _cleanup(state, websocket, key)

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


async def _send_error(websocket: WebSocket, code: str, message: str) -> None:
    try:
        await websocket.send_text(
            canonical_json(
                {"v": PROTOCOL_VERSION, "type": "error", "payload": {"code": code, "message": message}}
            )
        )
    except Exception:
        pass


def _parse_envelope(raw: str) -> tuple[str, dict]:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedEvent(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict) or not isinstance(obj.get("type"), str):
        raise MalformedEvent("envelope must be an object with a string type")
    if obj.get("v") != PROTOCOL_VERSION:
        raise MalformedEvent(f"unsupported protocol version {obj.get('v')!r}")
    payload = obj.get("payload", {})
    if not isinstance(payload, dict):
        raise MalformedEvent("payload must be an object")
    return obj["type"], payload


async def _handshake(state: ServerState, websocket: WebSocket) -> bool:
    """Expect a join, then queue the client and pair when possible."""
    raw = await websocket.receive_text()
    try:
        type_, _payload = _parse_envelope(raw)
    except MalformedEvent as exc:
        await _send_error(websocket, "BadEnvelope", str(exc))
        await websocket.close()
        return False
    if type_ != "join":
        await _send_error(websocket, "ExpectedJoin", "first message must be a join")
        await websocket.close()
        return False

    async with state.lobby_lock:
        try:
            enqueue_client(state.lobby, websocket)
        except SessionError as exc:
            await _send_error(websocket, exc.code, str(exc))
            await websocket.close()
            return False
        if state.lobby.ready():
            first, second = state.lobby.queue[0], state.lobby.queue[1]
            pairing_index = state.pairings
            state.pairings += 1
            pairing = pair_clients(
                state.lobby,
                role_seed=_subseed(state.seed, pairing_index),
                task=state.next_task(),
            )
            sockets = {pairing.roles[first]: first, pairing.roles[second]: second}
            game = LiveGame(pairing.session, sockets, started=state.clock())
            for ws in (first, second):
                state.games[id(ws)] = game
                state.roles[id(ws)] = pairing.roles[ws]
            game.timer = asyncio.create_task(_deadline_timer(state, game))
            for role in (Role.HUMAN, Role.ROBOT):
                await game.send(role, "paired", paired_payload(game.session, role))
            logger.info(
                "session %s started (task %s)",
                game.session.session_id,
                game.session.task.task_id,
            )
    return True


async def _event_loop(state: ServerState, websocket: WebSocket, key: int) -> None:
    while True:
        raw = await websocket.receive_text()
        try:
            type_, payload = _parse_envelope(raw)
        except MalformedEvent as exc:
            await _send_error(websocket, "BadEnvelope", str(exc))
            continue
        game = state.games.get(key)
        if game is None:
            await _send_error(websocket, "NotPaired", "still waiting for a partner")
            continue
        if type_ == "join":
            await _send_error(websocket, "AlreadyJoined", "already in a session")
            continue
        if type_ not in CLIENT_EVENT_TYPES:
            await _send_error(websocket, "UnknownType", f"unknown message type {type_!r}")
            continue
        role = state.roles[key]
        await _route(state, game, websocket, role, type_, payload)


async def _route(
    state: ServerState,
    game: LiveGame,
    websocket: WebSocket,
    role: Role,
    type_: str,
    payload: dict,
) -> None:
    async with game.lock:
        if game.over:
            await _send_error(websocket, "SessionOver", "game already finished")
            return
        t = int((state.clock() - game.started) * 1000)
        if t >= game.session.deadline_ms:
            await _finish(state, game, DEADLINE)
            return
        try:
            outbound = game.session.handle_event(role, type_, payload, t)
        except (SessionError, WorldError, MalformedEvent) as exc:
            code = getattr(exc, "code", type(exc).__name__)
            await _send_error(websocket, code, str(exc))
            return
        for message in outbound:
            await game.deliver(message.to, message.type, message.payload)


async def _deadline_timer(state: ServerState, game: LiveGame) -> None:
    remaining = game.session.task.time_limit_s - (state.clock() - game.started)
    if remaining > 0:
        await asyncio.sleep(remaining)
    async with game.lock:
        if not game.over:
            await _finish(state, game, DEADLINE)


async def _finish(state: ServerState, game: LiveGame, reason: str) -> None:
    """Finalize under the game lock and notify both clients."""
    game.over = True
    t = int((state.clock() - game.started) * 1000)
    transcript, row = finalize_session(
        game.session, reason, t=t, logs_dir=state.logs_dir
    )
    payload = {
        "session_id": game.session.session_id,
        "reason": reason,
        "metrics": row.to_obj(),
        "final_world": transcript.final_world.to_obj(),
    }
    await game.deliver("both", "game_over", payload)
    for ws in game.sockets.values():
        with contextlib.suppress(Exception):
            await ws.close()
    logger.info("session %s finished (%s)", game.session.session_id, reason)


async def _cleanup(state: ServerState, websocket: WebSocket, key: int) -> None:
    async with state.lobby_lock:
        if websocket in state.lobby.queue:
            state.lobby.queue.remove(websocket)
    game = state.games.pop(key, None)
    state.roles.pop(key, None)
    if game is None:
        return
    async with game.lock:
        if not game.over:
            # A dropped client aborts the session for both players.
            game.sockets = {
                role: ws for role, ws in game.sockets.items() if id(ws) != key
            }
            await _finish(state, game, ABORT)
    if game.timer is not None:
        game.timer.cancel()
