"""Live game sessions: pairing, role enforcement, turn policy, event log.

The session core is transport-free.  A :class:`GameSession` owns the
authoritative world and event log; callers feed it (actor, kind, payload,
timestamp) tuples and get back the broadcasts to deliver.  Rejections are
typed exceptions and leave the session untouched.  The websocket layer in
:mod:`blocktalk.server` is a thin adapter over this module, which is what
makes the protocol rules testable without sockets.
"""

from __future__ import annotations

import datetime as _dt
import random
import uuid
from dataclasses import dataclass, field

from . import metrics
from .metrics import MetricsRow, Undefined, score_transcript
from .tasks import PolicyKind, TaskSpec, platform_count
from .transcript import (
    ABORT,
    BLOCK_OP_KINDS,
    CHAT,
    DEADLINE,
    FLIP,
    GESTURE,
    MOVE,
    START,
    EventRecord,
    GameTranscript,
    MalformedEvent,
    Role,
    verify_replay,
    write_transcript,
)
from .world import GridPos, OutOfBounds, WorldState, apply_flip, apply_move


class SessionError(Exception):
    code = "SessionError"


class DuplicateClient(SessionError):
    code = "DuplicateClient"


class InsufficientClients(SessionError):
    code = "InsufficientClients"


class RolePermissionDenied(SessionError):
    code = "RolePermissionDenied"


class NotYourTurn(SessionError):
    code = "NotYourTurn"


class SessionOver(SessionError):
    code = "SessionOver"


class PersistenceFailure(SessionError):
    code = "PersistenceFailure"


@dataclass(frozen=True)
class Outbound:
    """A message the caller should deliver: to \"human\", \"robot\" or \"both\"."""

    to: str
    type: str
    payload: dict


@dataclass
class GameSession:
    session_id: str
    task: TaskSpec
    role_seed: int
    first_joiner_role: str
    started_at: str
    world: WorldState = field(init=False)
    events: list[EventRecord] = field(default_factory=list)
    terminated: str | None = None  # "deadline" | "abort" once finalized

    def __post_init__(self) -> None:
        self.world = self.task.initial
        self.deadline_ms = self.task.time_limit_s * 1000
        self._block_ops = 0
        self._actor_seq: list[Role] = []
        self._seq_rng = random.Random(self.task.policy.seed)
        if self.task.target is not None:
            self.error_init = metrics.aligned_error(self.task.initial, self.task.target)
        else:
            self.error_init = None
        self.events.append(EventRecord(t=0, actor="system", kind=START, data={}))

    # -- scoring ---------------------------------------------------------

    def completion_now(self) -> metrics.Score:
        if self.task.target is None:
            return Undefined(metrics.NO_TARGET)
        error_now = metrics.aligned_error(self.world, self.task.target)
        return metrics.completion_score(self.error_init, error_now)

    def score_payload(self, t: int) -> dict:
        value = self.completion_now()
        payload: dict = {"t": t}
        if isinstance(value, Undefined):
            payload["completion"] = None
            payload["reason"] = value.reason
        else:
            payload["completion"] = value
        if self.task.platform is not None:
            payload["platform_count"] = platform_count(self.world, self.task.platform)
        return payload

    # -- turn policy -----------------------------------------------------

    def _expected_block_actor(self) -> Role:
        policy = self.task.policy
        i = self._block_ops
        if policy.kind is PolicyKind.ALTERNATING:
            first = Role.ROBOT if policy.robot_first else Role.HUMAN
            second = Role.HUMAN if policy.robot_first else Role.ROBOT
            return first if i % 2 == 0 else second
        while len(self._actor_seq) <= i:
            self._actor_seq.append(
                Role.ROBOT if self._seq_rng.random() < 0.5 else Role.HUMAN
            )
        return self._actor_seq[i]

    def _check_permission(self, actor: Role, kind: str) -> None:
        if kind in (CHAT, GESTURE):
            # Communication belongs to the directing player, always.
            if actor is not Role.HUMAN:
                raise RolePermissionDenied(f"{actor.value} may not {kind}")
            return
        if kind in BLOCK_OP_KINDS:
            if self.task.policy.kind is PolicyKind.ROBOT_ONLY:
                if actor is not Role.ROBOT:
                    raise RolePermissionDenied(f"{actor.value} may not touch blocks")
                return
            expected = self._expected_block_actor()
            if actor is not expected:
                raise NotYourTurn(f"block operation {self._block_ops} belongs to {expected.value}")
            return
        raise MalformedEvent(f"unknown event kind {kind!r}")

    # -- event intake ----------------------------------------------------

    def handle_event(self, actor: Role, kind: str, data: dict, t: int) -> list[Outbound]:
        """Validate, apply and log one client event; return the broadcasts.

        Raises a SessionError / world error / MalformedEvent on rejection,
        in which case the session state is unchanged.
        """
        if self.terminated is not None:
            raise SessionOver("session already finalized")
        if t >= self.deadline_ms:
            raise SessionOver("deadline passed")
        self._check_permission(actor, kind)
        t = max(t, self.events[-1].t if self.events else 0, 0)

        if kind == CHAT:
            text = data.get("text")
            if not isinstance(text, str):
                raise MalformedEvent("chat needs a text string")
            event = EventRecord(t=t, actor=actor.value, kind=CHAT, data={"text": text})
            self.events.append(event)
            return [Outbound("both", "chat", {"text": text, "t": t})]

        if kind == GESTURE:
            cell = self._parse_cell(data)
            event = EventRecord(
                t=t, actor=actor.value, kind=GESTURE, data={"x": cell.x, "y": cell.y}
            )
            self.events.append(event)
            return [Outbound("both", "gesture", {"x": cell.x, "y": cell.y, "t": t})]

        if kind == MOVE:
            block_id = self._parse_block_id(data)
            dest = self._parse_cell(data.get("to", data))
            new_world, record = apply_move(self.world, block_id, dest)
            self.world = new_world
            self._block_ops += 1
            self.events.append(
                EventRecord(
                    t=t,
                    actor=actor.value,
                    kind=MOVE,
                    data={
                        "block": block_id,
                        "from": record.source.to_obj(),
                        "to": record.dest.to_obj(),
                    },
                )
            )
            return self._world_changed(t)

        if kind == FLIP:
            block_id = self._parse_block_id(data)
            self.world = apply_flip(self.world, block_id)
            self._block_ops += 1
            self.events.append(
                EventRecord(t=t, actor=actor.value, kind=FLIP, data={"block": block_id})
            )
            return self._world_changed(t)

        raise MalformedEvent(f"unknown event kind {kind!r}")

    def _world_changed(self, t: int) -> list[Outbound]:
        return [
            Outbound("both", "state", {"world": self.world.to_obj(), "t": t}),
            Outbound("human", "score", self.score_payload(t)),
        ]

    def _parse_cell(self, data) -> GridPos:
        try:
            cell = GridPos(int(data["x"]), int(data["y"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedEvent(f"bad cell payload: {exc}") from exc
        if not self.world.in_bounds(cell):
            raise OutOfBounds(f"{cell} outside the board")
        return cell

    @staticmethod
    def _parse_block_id(data) -> int:
        try:
            return int(data["block"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedEvent(f"bad block id: {exc}") from exc


@dataclass
class Lobby:
    """Waiting clients, in join order.  Two clients make a game."""

    queue: list = field(default_factory=list)

    def ready(self) -> bool:
        return len(self.queue) >= 2


def enqueue_client(lobby: Lobby, client) -> Lobby:
    if client in lobby.queue:
        raise DuplicateClient(f"client {client!r} already queued")
    lobby.queue.append(client)
    return lobby


@dataclass
class Pairing:
    session: GameSession
    roles: dict  # client handle -> Role


def pair_clients(
    lobby: Lobby,
    role_seed: int,
    task: TaskSpec,
    session_id: str | None = None,
    started_at: str | None = None,
) -> Pairing:
    """Dequeue the two oldest clients and open a session for them.

    Roles are a seeded coin flip over join order, so pairing order cannot
    systematically bias who directs and who executes.
    """
    if len(lobby.queue) < 2:
        raise InsufficientClients("pairing needs two queued clients")
    first, second = lobby.queue[0], lobby.queue[1]
    del lobby.queue[:2]
    first_is_human = random.Random(role_seed).random() < 0.5
    roles = {
        first: Role.HUMAN if first_is_human else Role.ROBOT,
        second: Role.ROBOT if first_is_human else Role.HUMAN,
    }
    session = GameSession(
        session_id=session_id or uuid.uuid4().hex,
        task=task,
        role_seed=role_seed,
        first_joiner_role=roles[first].value,
        started_at=started_at
        or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    )
    return Pairing(session=session, roles=roles)


def paired_payload(session: GameSession, role: Role) -> dict:
    """The per-role game-start payload.  The executing player never sees the goal."""
    payload = {
        "session_id": session.session_id,
        "role": role.value,
        "world": session.world.to_obj(),
        "time_limit_s": session.task.time_limit_s,
        "policy": session.task.policy.to_obj(),
        "objective": session.task.objective.value,
        "protocol_version": 1,
    }
    if session.task.platform is not None:
        payload["platform"] = session.task.platform.to_obj()
    if role is Role.HUMAN:
        if session.task.target is not None:
            payload["target"] = session.task.target.to_obj()
        payload["score"] = session.score_payload(0)
    return payload


def finalize_session(
    session: GameSession,
    reason: str,
    t: int | None = None,
    logs_dir=None,
    averages: metrics.CorpusStats | None = None,
) -> tuple[GameTranscript, MetricsRow]:
    """Seal the session: closing event, transcript, metrics, persistence.

    ``reason`` is "deadline" or "abort".  Finalization is idempotent-safe
    in that a second call raises SessionOver rather than double-logging.
    """
    if session.terminated is not None:
        raise SessionOver("session already finalized")
    if reason not in (DEADLINE, ABORT):
        raise ValueError(f"unknown termination reason {reason!r}")
    last_t = session.events[-1].t if session.events else 0
    if reason == DEADLINE:
        closing_t = max(session.deadline_ms, last_t)
    else:
        closing_t = max(t if t is not None else last_t, last_t)
    session.events.append(
        EventRecord(t=closing_t, actor="system", kind=reason, data={})
    )
    session.terminated = reason

    transcript = GameTranscript(
        session_id=session.session_id,
        task_obj=session.task.to_obj(),
        role_seed=session.role_seed,
        first_joiner_role=session.first_joiner_role,
        started_at=session.started_at,
        events=list(session.events),
        final_world=session.world,
        termination=reason,
    )
    verify_replay(transcript, file=session.session_id)
    row = score_transcript(transcript, averages=averages)
    if logs_dir is not None:
        try:
            write_transcript(transcript, logs_dir)
        except OSError as exc:
            raise PersistenceFailure(f"could not persist transcript: {exc}") from exc
    return transcript, row
