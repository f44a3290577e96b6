import random

import pytest

from blocktalk.metrics import Undefined
from blocktalk.session import (
    DuplicateClient,
    GameSession,
    InsufficientClients,
    Lobby,
    NotYourTurn,
    RolePermissionDenied,
    SessionOver,
    enqueue_client,
    finalize_session,
    pair_clients,
    paired_payload,
)
from blocktalk.tasks import Objective, PolicyKind, generate_task
from blocktalk.transcript import Role, read_transcript
from blocktalk.world import CellOccupied, OutOfBounds

from helpers import solve_to_target


def make_session(seed=3, policy=PolicyKind.ROBOT_ONLY, **kwargs) -> GameSession:
    task = generate_task(seed, policy_kind=policy, **kwargs)
    lobby = Lobby()
    enqueue_client(lobby, "a")
    enqueue_client(lobby, "b")
    return pair_clients(lobby, role_seed=seed, task=task).session


class TestLobby:
    def test_single_client_waits(self):
        lobby = Lobby()
        enqueue_client(lobby, "a")
        assert not lobby.ready()
        assert lobby.queue == ["a"]

    def test_two_clients_pair_and_empty_queue(self):
        lobby = Lobby()
        enqueue_client(lobby, "a")
        enqueue_client(lobby, "b")
        assert lobby.ready()
        pairing = pair_clients(lobby, role_seed=1, task=generate_task(1))
        assert lobby.queue == []
        assert set(pairing.roles.values()) == {Role.HUMAN, Role.ROBOT}

    def test_duplicate_client(self):
        lobby = Lobby()
        enqueue_client(lobby, "a")
        with pytest.raises(DuplicateClient):
            enqueue_client(lobby, "a")

    def test_pairing_needs_two(self):
        lobby = Lobby()
        enqueue_client(lobby, "a")
        with pytest.raises(InsufficientClients):
            pair_clients(lobby, role_seed=1, task=generate_task(1))

    def test_role_split_deterministic_in_seed(self):
        def roles_for(seed):
            lobby = Lobby()
            enqueue_client(lobby, "a")
            enqueue_client(lobby, "b")
            return pair_clients(lobby, role_seed=seed, task=generate_task(1)).roles

        assert roles_for(42) == roles_for(42)
        # both outcomes occur across seeds
        outcomes = {roles_for(s)["a"] for s in range(20)}
        assert outcomes == {Role.HUMAN, Role.ROBOT}


class TestPairedPayload:
    def test_robot_payload_has_no_target_key(self):
        session = make_session()
        robot = paired_payload(session, Role.ROBOT)
        human = paired_payload(session, Role.HUMAN)
        assert "target" not in robot
        assert "target" in human
        assert robot["world"] == human["world"]
        assert human["score"]["completion"] == 0.0

    def test_start_event_logged(self):
        session = make_session()
        assert session.events[0].kind == "start"
        assert session.events[0].actor == "system"


class TestRoleEnforcement:
    def test_robot_chat_denied(self):
        session = make_session()
        with pytest.raises(RolePermissionDenied):
            session.handle_event(Role.ROBOT, "chat", {"text": "hi"}, 10)
        assert len(session.events) == 1  # nothing logged

    def test_robot_gesture_denied(self):
        session = make_session()
        with pytest.raises(RolePermissionDenied):
            session.handle_event(Role.ROBOT, "gesture", {"x": 1, "y": 1}, 10)

    def test_human_move_denied_under_robot_only(self):
        session = make_session()
        bid = session.world.block_ids()[0]
        with pytest.raises(RolePermissionDenied):
            session.handle_event(Role.HUMAN, "move", {"block": bid, "to": {"x": 0, "y": 0}}, 10)

    def test_human_gesture_logged_and_broadcast(self):
        session = make_session()
        out = session.handle_event(Role.HUMAN, "gesture", {"x": 3, "y": 2}, 10)
        assert [m.to for m in out] == ["both"]
        assert out[0].type == "gesture"
        assert session.events[-1].kind == "gesture"
        # gestures never touch the world
        assert session.world.to_obj() == session.task.initial.to_obj()

    def test_world_errors_pass_through(self):
        session = make_session()
        ids = session.world.block_ids()
        other_pos = session.world.positions[ids[1]]
        with pytest.raises(CellOccupied):
            session.handle_event(
                Role.ROBOT,
                "move",
                {"block": ids[0], "to": {"x": other_pos.x, "y": other_pos.y}},
                10,
            )
        with pytest.raises(OutOfBounds):
            session.handle_event(
                Role.ROBOT, "move", {"block": ids[0], "to": {"x": 99, "y": 0}}, 10
            )


class TestLiveScore:
    def test_move_broadcasts_state_and_score(self):
        session = make_session()
        moves, _ = solve_to_target(session.world, session.task.target)
        bid, dest = moves[0]
        out = session.handle_event(
            Role.ROBOT, "move", {"block": bid, "to": {"x": dest.x, "y": dest.y}}, 10
        )
        types = [(m.to, m.type) for m in out]
        assert ("both", "state") in types
        assert ("human", "score") in types

    def test_solving_reaches_completion_one(self):
        session = make_session()
        moves, _ = solve_to_target(session.world, session.task.target)
        t = 10
        for bid, dest in moves:
            session.handle_event(
                Role.ROBOT, "move", {"block": bid, "to": {"x": dest.x, "y": dest.y}}, t
            )
            t += 10
        assert session.completion_now() == 1.0


class TestTurnPolicies:
    def test_alternating_strict(self):
        session = make_session(policy=PolicyKind.ALTERNATING)
        free = _free_cells(session)
        ids = session.world.block_ids()
        # robot opens
        session.handle_event(Role.ROBOT, "move", {"block": ids[0], "to": free[0]}, 10)
        with pytest.raises(NotYourTurn):
            session.handle_event(Role.ROBOT, "flip", {"block": ids[0]}, 20)
        session.handle_event(Role.HUMAN, "flip", {"block": ids[0]}, 30)
        with pytest.raises(NotYourTurn):
            session.handle_event(Role.HUMAN, "flip", {"block": ids[0]}, 40)
        session.handle_event(Role.ROBOT, "move", {"block": ids[1], "to": free[1]}, 50)
        actors = [e.actor for e in session.events if e.kind in ("move", "flip")]
        assert actors == ["robot", "human", "robot"]

    def test_random_order_matches_seeded_reference(self):
        session = make_session(policy=PolicyKind.RANDOM_ORDER)
        reference_rng = random.Random(session.task.policy.seed)
        expected = [
            Role.ROBOT if reference_rng.random() < 0.5 else Role.HUMAN
            for _ in range(12)
        ]
        ids = session.world.block_ids()
        t = 10
        for actor in expected:
            wrong = Role.HUMAN if actor is Role.ROBOT else Role.ROBOT
            with pytest.raises(NotYourTurn):
                session.handle_event(wrong, "flip", {"block": ids[0]}, t)
            session.handle_event(actor, "flip", {"block": ids[0]}, t)
            t += 10
        actors = [e.actor for e in session.events if e.kind == "flip"]
        assert actors == [a.value for a in expected]

    def test_chat_free_under_any_policy(self):
        session = make_session(policy=PolicyKind.ALTERNATING)
        for t in (5, 6, 7):
            session.handle_event(Role.HUMAN, "chat", {"text": "go"}, t)
        with pytest.raises(RolePermissionDenied):
            session.handle_event(Role.ROBOT, "chat", {"text": "no"}, 8)


def _free_cells(session):
    cells = []
    for y in range(session.world.height):
        for x in range(session.world.width):
            from blocktalk.world import GridPos

            if session.world.occupant(GridPos(x, y)) is None:
                cells.append({"x": x, "y": y})
    return cells


class TestDeadline:
    def test_events_at_or_after_deadline_rejected(self):
        session = make_session(time_limit_s=2)
        with pytest.raises(SessionOver):
            session.handle_event(Role.HUMAN, "chat", {"text": "late"}, 2000)
        session.handle_event(Role.HUMAN, "chat", {"text": "just in time"}, 1999)

    def test_no_events_after_finalize(self):
        session = make_session()
        finalize_session(session, "deadline")
        with pytest.raises(SessionOver):
            session.handle_event(Role.HUMAN, "chat", {"text": "?"}, 10)

    def test_double_finalize_rejected(self):
        session = make_session()
        finalize_session(session, "deadline")
        with pytest.raises(SessionOver):
            finalize_session(session, "abort")


class TestFinalize:
    def test_idle_deadline_scores_zero(self, tmp_path):
        session = make_session()
        transcript, row = finalize_session(session, "deadline", logs_dir=tmp_path)
        assert row.dist_moved == 0.0
        assert row.task_efficiency == 0.0
        assert row.completion_score == 0.0
        assert transcript.events[-1].kind == "deadline"
        assert transcript.events[-1].t == session.deadline_ms

    def test_scripted_solve_scores_one(self, tmp_path):
        session = make_session()
        moves, _ = solve_to_target(session.world, session.task.target)
        t = 10
        for bid, dest in moves:
            session.handle_event(
                Role.ROBOT, "move", {"block": bid, "to": {"x": dest.x, "y": dest.y}}, t
            )
            t += 10
        transcript, row = finalize_session(session, "deadline", logs_dir=tmp_path)
        assert row.completion_score == 1.0
        path = tmp_path / f"{session.session_id}.jsonl"
        assert path.exists()
        again = read_transcript(path)
        assert list(again.lines()) == list(transcript.lines())

    def test_abort_still_scores(self):
        session = make_session()
        session.handle_event(Role.HUMAN, "chat", {"text": "never mind"}, 500)
        transcript, row = finalize_session(session, "abort", t=600)
        assert transcript.termination == "abort"
        assert transcript.events[-1].kind == "abort"
        assert row.word_count == 2

    def test_effort_without_averages_is_undefined(self):
        session = make_session()
        _transcript, row = finalize_session(session, "deadline")
        assert isinstance(row.communication_effort, Undefined)

    def test_monotone_timestamps_in_transcript(self):
        session = make_session()
        session.handle_event(Role.HUMAN, "chat", {"text": "one"}, 100)
        # a clock hiccup must not produce a decreasing timestamp
        session.handle_event(Role.HUMAN, "chat", {"text": "two"}, 40)
        transcript, _row = finalize_session(session, "deadline")
        stamps = [e.t for e in transcript.events]
        assert stamps == sorted(stamps)
