"""Event records and persisted game transcripts.

A transcript is the unit of persistence and analysis: a JSON Lines file
whose first line is a header (task, role assignment, start time, protocol
version), followed by one event object per line, closed by a footer (final
world and termination reason).  Replaying the events over the task's
initial world must reproduce the footer world exactly; that property is
checked on ingestion and by the ``replay`` CLI.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable

from . import PROTOCOL_VERSION, TRANSCRIPT_SCHEMA
from .world import GridPos, WorldState, apply_flip, apply_move


class Role(str, Enum):
    HUMAN = "human"
    ROBOT = "robot"


ACTOR_SYSTEM = "system"

# Event kinds.  chat/gesture are communication, move/flip mutate the world,
# the rest are emitted by the session itself.
CHAT = "chat"
GESTURE = "gesture"
MOVE = "move"
FLIP = "flip"
START = "start"
DEADLINE = "deadline"
ABORT = "abort"

COMMUNICATION_KINDS = (CHAT, GESTURE)
BLOCK_OP_KINDS = (MOVE, FLIP)
SYSTEM_KINDS = (START, DEADLINE, ABORT)


class MalformedEvent(Exception):
    pass


class TranscriptParseError(Exception):
    def __init__(self, file: str, line: int, message: str):
        super().__init__(f"{file}:{line}: {message}")
        self.file = file
        self.line = line


class ReplayMismatch(Exception):
    def __init__(self, file: str, message: str = "replay does not reproduce footer world"):
        super().__init__(f"{file}: {message}")
        self.file = file


def canonical_json(obj) -> str:
    """Single-line JSON with sorted keys; used for wire, files and equality."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class EventRecord:
    """One timestamped, role-attributed event.

    ``t`` is milliseconds since session start and is non-decreasing within
    a transcript.  ``data`` holds the kind-specific payload: chat carries
    ``text``; gesture carries ``x``/``y``; move carries ``block`` plus
    ``from``/``to`` cells; flip carries ``block``.
    """

    t: int
    actor: str
    kind: str
    data: dict = field(default_factory=dict)

    def to_obj(self) -> dict:
        return {"t": self.t, "actor": self.actor, "kind": self.kind, **self.data}

    @classmethod
    def from_obj(cls, obj: dict) -> "EventRecord":
        try:
            t = int(obj["t"])
            actor = str(obj["actor"])
            kind = str(obj["kind"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedEvent(f"bad event object: {exc}") from exc
        data = {k: v for k, v in obj.items() if k not in ("t", "actor", "kind")}
        return cls(t=t, actor=actor, kind=kind, data=data)


def chat_event(t: int, text: str) -> EventRecord:
    return EventRecord(t=t, actor=Role.HUMAN.value, kind=CHAT, data={"text": text})


def gesture_event(t: int, cell: GridPos) -> EventRecord:
    return EventRecord(
        t=t, actor=Role.HUMAN.value, kind=GESTURE, data={"x": cell.x, "y": cell.y}
    )


def move_event(t: int, actor: Role, block_id: int, source: GridPos, dest: GridPos) -> EventRecord:
    return EventRecord(
        t=t,
        actor=actor.value,
        kind=MOVE,
        data={"block": block_id, "from": source.to_obj(), "to": dest.to_obj()},
    )


def flip_event(t: int, actor: Role, block_id: int) -> EventRecord:
    return EventRecord(t=t, actor=actor.value, kind=FLIP, data={"block": block_id})


def move_fields(event: EventRecord) -> tuple[int, GridPos, GridPos]:
    """Extract (block, source, dest) from a move event or raise MalformedEvent."""
    try:
        return (
            int(event.data["block"]),
            GridPos.from_obj(event.data["from"]),
            GridPos.from_obj(event.data["to"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedEvent(f"move event at t={event.t} missing fields: {exc}") from exc


@dataclass
class GameTranscript:
    """Header + ordered events + footer for one finished game."""

    session_id: str
    task_obj: dict  # serialized TaskSpec; kept opaque to avoid an import cycle
    role_seed: int
    first_joiner_role: str
    started_at: str  # ISO-8601 UTC wall time, informational only
    events: list[EventRecord]
    final_world: WorldState
    termination: str  # "deadline" | "abort"
    protocol_version: int = PROTOCOL_VERSION
    schema: int = TRANSCRIPT_SCHEMA

    def header_obj(self) -> dict:
        return {
            "schema": self.schema,
            "protocol_version": self.protocol_version,
            "session_id": self.session_id,
            "task": self.task_obj,
            "role_seed": self.role_seed,
            "first_joiner_role": self.first_joiner_role,
            "started_at": self.started_at,
        }

    def footer_obj(self) -> dict:
        return {
            "final_world": self.final_world.to_obj(),
            "termination": self.termination,
        }

    def lines(self) -> Iterable[str]:
        yield canonical_json(self.header_obj())
        for event in self.events:
            yield canonical_json(event.to_obj())
        yield canonical_json(self.footer_obj())

    def initial_world(self) -> WorldState:
        return WorldState.from_obj(self.task_obj["initial"])


def write_transcript(transcript: GameTranscript, directory: str | Path) -> Path:
    """Persist as ``<session-id>.jsonl``; written via a temp file then renamed."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{transcript.session_id}.jsonl"
    tmp = path.with_suffix(".jsonl.tmp")
    tmp.write_text("".join(line + "\n" for line in transcript.lines()), encoding="utf-8")
    tmp.rename(path)
    return path


def read_transcript(path: str | Path) -> GameTranscript:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    name = str(path)
    if len(lines) < 2:
        raise TranscriptParseError(name, 1, "need at least header and footer lines")

    def parse(idx: int) -> dict:
        try:
            obj = json.loads(lines[idx])
        except json.JSONDecodeError as exc:
            raise TranscriptParseError(name, idx + 1, f"invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise TranscriptParseError(name, idx + 1, "expected a JSON object")
        return obj

    header = parse(0)
    footer = parse(len(lines) - 1)
    for key in ("session_id", "task", "role_seed", "first_joiner_role", "started_at"):
        if key not in header:
            raise TranscriptParseError(name, 1, f"header missing {key!r}")
    if "final_world" not in footer or "termination" not in footer:
        raise TranscriptParseError(name, len(lines), "footer missing fields")

    events = []
    last_t = None
    for idx in range(1, len(lines) - 1):
        obj = parse(idx)
        try:
            event = EventRecord.from_obj(obj)
        except MalformedEvent as exc:
            raise TranscriptParseError(name, idx + 1, str(exc)) from exc
        if last_t is not None and event.t < last_t:
            raise TranscriptParseError(name, idx + 1, "timestamps decrease")
        last_t = event.t
        events.append(event)

    try:
        final_world = WorldState.from_obj(footer["final_world"])
    except Exception as exc:
        raise TranscriptParseError(name, len(lines), f"bad footer world: {exc}") from exc

    return GameTranscript(
        session_id=str(header["session_id"]),
        task_obj=header["task"],
        role_seed=int(header["role_seed"]),
        first_joiner_role=str(header["first_joiner_role"]),
        started_at=str(header["started_at"]),
        events=events,
        final_world=final_world,
        termination=str(footer["termination"]),
        protocol_version=int(header.get("protocol_version", PROTOCOL_VERSION)),
        schema=int(header.get("schema", TRANSCRIPT_SCHEMA)),
    )


def replay(transcript: GameTranscript) -> WorldState:
    """Apply the block operations to the task's initial world."""
    world = transcript.initial_world()
    for event in transcript.events:
        if event.kind == MOVE:
            block_id, _source, dest = move_fields(event)
            world, _record = apply_move(world, block_id, dest)
        elif event.kind == FLIP:
            try:
                block_id = int(event.data["block"])
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedEvent(f"flip event at t={event.t}: {exc}") from exc
            world = apply_flip(world, block_id)
    return world


def verify_replay(transcript: GameTranscript, file: str = "<memory>") -> WorldState:
    """Replay and compare against the footer world, byte-for-byte."""
    final = replay(transcript)
    if canonical_json(final.to_obj()) != canonical_json(transcript.final_world.to_obj()):
        raise ReplayMismatch(file)
    return final
