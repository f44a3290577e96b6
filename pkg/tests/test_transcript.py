import json

import pytest

from blocktalk.transcript import (
    EventRecord,
    ReplayMismatch,
    TranscriptParseError,
    canonical_json,
    chat_event,
    flip_event,
    gesture_event,
    move_event,
    read_transcript,
    replay,
    verify_replay,
    write_transcript,
    Role,
)
from blocktalk.tasks import generate_task
from blocktalk.world import GridPos, apply_flip, apply_move

from helpers import build_transcript, solve_to_target


def scripted_transcript(seed=3):
    task = generate_task(seed)
    world = task.initial
    moves, final = solve_to_target(world, task.target)
    events = [chat_event(50, "put everything where I point"), gesture_event(80, GridPos(1, 1))]
    t = 100
    current = world
    for bid, dest in moves:
        source = current.positions[bid]
        current, _ = apply_move(current, bid, dest)
        events.append(move_event(t, Role.ROBOT, bid, source, dest))
        t += 100
    final = apply_flip(final, final.block_ids()[0])
    events.append(flip_event(t, Role.ROBOT, final.block_ids()[0]))
    return build_transcript(task.to_obj(), events, final, session_id=f"s{seed}")


class TestRoundTrip:
    def test_write_read_identical_lines(self, tmp_path):
        transcript = scripted_transcript()
        path = write_transcript(transcript, tmp_path)
        assert path.name == "s3.jsonl"
        again = read_transcript(path)
        assert list(again.lines()) == list(transcript.lines())

    def test_replay_reproduces_footer(self, tmp_path):
        transcript = scripted_transcript()
        final = verify_replay(transcript)
        assert canonical_json(final.to_obj()) == canonical_json(
            transcript.final_world.to_obj()
        )

    def test_replay_mismatch_detected(self):
        transcript = scripted_transcript()
        tampered, _ = apply_move(
            transcript.final_world,
            transcript.final_world.block_ids()[0],
            _free_cell(transcript.final_world),
        )
        transcript.final_world = tampered
        with pytest.raises(ReplayMismatch):
            verify_replay(transcript, file="tampered")


def _free_cell(world):
    for y in range(world.height):
        for x in range(world.width):
            if world.occupant(GridPos(x, y)) is None:
                return GridPos(x, y)
    raise AssertionError


class TestParsing:
    def test_corrupt_event_line_reports_line_number(self, tmp_path):
        transcript = scripted_transcript()
        path = write_transcript(transcript, tmp_path)
        lines = path.read_text().splitlines()
        lines[2] = '{"t": not json'
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(TranscriptParseError) as err:
            read_transcript(path)
        assert err.value.line == 3

    def test_missing_footer_fields(self, tmp_path):
        transcript = scripted_transcript()
        path = write_transcript(transcript, tmp_path)
        lines = path.read_text().splitlines()
        lines[-1] = "{}"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(TranscriptParseError):
            read_transcript(path)

    def test_decreasing_timestamps_rejected(self, tmp_path):
        transcript = scripted_transcript()
        path = write_transcript(transcript, tmp_path)
        lines = path.read_text().splitlines()
        event = json.loads(lines[2])
        event["t"] = 10_000_000
        lines[2] = canonical_json(event)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(TranscriptParseError):
            read_transcript(path)

    def test_too_short_file(self, tmp_path):
        path = tmp_path / "x.jsonl"
        path.write_text("{}\n")
        with pytest.raises(TranscriptParseError):
            read_transcript(path)


class TestEventRecord:
    def test_obj_roundtrip(self):
        event = move_event(42, Role.ROBOT, 7, GridPos(0, 1), GridPos(3, 3))
        back = EventRecord.from_obj(json.loads(canonical_json(event.to_obj())))
        assert back == event

    def test_replay_ignores_communication(self):
        transcript = scripted_transcript()
        only_comm = build_transcript(
            transcript.task_obj,
            [chat_event(5, "hello"), gesture_event(7, GridPos(0, 0))],
            transcript.initial_world(),
        )
        final = replay(only_comm)
        assert canonical_json(final.to_obj()) == canonical_json(
            only_comm.initial_world().to_obj()
        )
