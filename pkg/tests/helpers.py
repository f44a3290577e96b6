"""Shared test utilities: independent oracles and scripted-game builders.

The oracles here are deliberately written against different machinery
(numpy arrays, dict walks over raw JSONL objects) than the library code
they check, and were written before the implementations they verify.
"""

from __future__ import annotations

import random

import numpy as np

from blocktalk.transcript import EventRecord, GameTranscript, Role
from blocktalk.world import Block, GridPos, TargetConfig, WorldState, apply_move, new_world


def oracle_aligned_error(config_xy, target_xy, align: bool = True) -> float:
    """Brute-force construction error: centroid subtraction + termwise L1.

    Takes (n, 2) arrays of matched coordinates (same block order in both).
    """
    c = np.asarray(config_xy, dtype=float)
    t = np.asarray(target_xy, dtype=float)
    if align:
        c = c - c.mean(axis=0)
        t = t - t.mean(axis=0)
    return float(np.abs(c - t).sum())


def matched_coords(world: WorldState, target: TargetConfig):
    """Id-sorted coordinate arrays for the target-referenced blocks."""
    ids = sorted(target.required)
    cfg = [(world.positions[b].x, world.positions[b].y) for b in ids]
    tgt = [(target.required[b][0].x, target.required[b][0].y) for b in ids]
    return np.array(cfg), np.array(tgt)


def oracle_pearson(xs, ys) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    xd = x - x.mean()
    yd = y - y.mean()
    return float((xd * yd).sum() / np.sqrt((xd**2).sum() * (yd**2).sum()))


def random_world_and_target(
    rng: random.Random,
    max_dim: int = 6,
    max_blocks: int = 5,
    distractors: bool = False,
) -> tuple[WorldState, TargetConfig]:
    """A random legal world plus a random in-bounds target over its blocks."""
    width = rng.randint(2, max_dim)
    height = rng.randint(2, max_dim)
    count = rng.randint(1, min(max_blocks, width * height))
    cells = rng.sample(range(width * height), count)
    blocks = [
        Block(id=i + 1, faces=(chr(ord("A") + i), chr(ord("a") + i)))
        for i in range(count)
    ]
    world = new_world(
        width,
        height,
        [(b, GridPos(c % width, c // width)) for b, c in zip(blocks, cells)],
    )
    scored = blocks if not distractors else blocks[: max(1, count - 1)]
    target_cells = rng.sample(range(width * height), len(scored))
    target = TargetConfig(
        required={
            b.id: (GridPos(c % width, c // width), None)
            for b, c in zip(scored, target_cells)
        }
    )
    return world, target


def random_legal_moves(
    rng: random.Random, world: WorldState, steps: int
) -> tuple[WorldState, list[tuple[int, GridPos, GridPos]]]:
    """Apply random legal moves; returns (final world, (block, from, to) list)."""
    moves = []
    current = world
    ids = current.block_ids()
    for _ in range(steps):
        bid = rng.choice(ids)
        dest = GridPos(rng.randrange(current.width), rng.randrange(current.height))
        holder = current.occupant(dest)
        if holder is not None and holder != bid:
            continue
        source = current.positions[bid]
        current, _record = apply_move(current, bid, dest)
        moves.append((bid, source, dest))
    return current, moves


def free_cell(world: WorldState) -> GridPos:
    for y in range(world.height):
        for x in range(world.width):
            pos = GridPos(x, y)
            if world.occupant(pos) is None:
                return pos
    raise AssertionError("no free cell in world")


def solve_to_target(
    world: WorldState, target: TargetConfig
) -> tuple[list[tuple[int, GridPos]], WorldState]:
    """Greedy mover: place blocks on their target cells, evicting blockers.

    Returns the move list (block id, destination) and the solved world.
    Needs at least one free cell whenever the placement graph has a cycle.
    """
    moves: list[tuple[int, GridPos]] = []
    current = world

    def misplaced() -> list[int]:
        return [
            bid
            for bid in sorted(target.required)
            if current.positions[bid] != target.required[bid][0]
        ]

    guard = 0
    while True:
        todo = misplaced()
        if not todo:
            return moves, current
        guard += 1
        assert guard < 10_000, "solver stuck"
        progressed = False
        for bid in todo:
            dest = target.required[bid][0]
            holder = current.occupant(dest)
            if holder is None or holder == bid:
                current, _ = apply_move(current, bid, dest)
                moves.append((bid, dest))
                progressed = True
        if not progressed:
            dest = target.required[todo[0]][0]
            blocker = current.occupant(dest)
            spare = free_cell(current)
            current, _ = apply_move(current, blocker, spare)
            moves.append((blocker, spare))


def build_transcript(
    task_obj: dict,
    events: list[EventRecord],
    final_world: WorldState,
    session_id: str = "test-session",
    termination: str = "deadline",
) -> GameTranscript:
    return GameTranscript(
        session_id=session_id,
        task_obj=task_obj,
        role_seed=0,
        first_joiner_role=Role.HUMAN.value,
        started_at="2026-01-01T00:00:00+00:00",
        events=events,
        final_world=final_world,
        termination=termination,
    )
