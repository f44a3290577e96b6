"""Deterministic 2D blocks-world state machine.

A world is a bounded grid holding at most one block per cell, in a single
layer.  Blocks carry an ordered tuple of face symbols and a current face
index; the only legal transitions are moving a block to a free cell and
flipping it to its next face.  States are immutable values: transitions
return new states, so a session can keep an authoritative sequence of
states and share any of them freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator


class WorldError(Exception):
    """Base class for illegal world constructions and transitions."""


class OutOfBounds(WorldError):
    pass


class CellOccupied(WorldError):
    pass


class DuplicateId(WorldError):
    pass


class UnknownBlock(WorldError):
    pass


@dataclass(frozen=True, order=True)
class GridPos:
    """Integer cell coordinates, origin at the top-left corner."""

    x: int
    y: int

    def to_obj(self) -> dict:
        return {"x": self.x, "y": self.y}

    @classmethod
    def from_obj(cls, obj: dict) -> "GridPos":
        return cls(int(obj["x"]), int(obj["y"]))


def l1_distance(a: GridPos, b: GridPos) -> int:
    """Cityblock distance between two cells."""
    return abs(a.x - b.x) + abs(a.y - b.y)


@dataclass(frozen=True)
class Block:
    """A lettered block.  ``faces`` cycles under flips, one face visible."""

    id: int
    faces: tuple[str, ...] = ("A", "a")
    face_index: int = 0

    def __post_init__(self) -> None:
        if len(self.faces) < 2:
            raise ValueError(f"block {self.id} needs at least 2 faces")
        if not 0 <= self.face_index < len(self.faces):
            raise ValueError(f"face_index {self.face_index} out of range")

    @property
    def symbol(self) -> str:
        return self.faces[self.face_index]

    def flipped(self) -> "Block":
        return replace(self, face_index=(self.face_index + 1) % len(self.faces))


@dataclass(frozen=True)
class MoveRecord:
    """One executed move; the distance feeds the movement total."""

    block_id: int
    source: GridPos
    dest: GridPos

    @property
    def l1_distance(self) -> int:
        return l1_distance(self.source, self.dest)


@dataclass(frozen=True)
class WorldState:
    """Immutable snapshot: grid dimensions plus block placements.

    ``blocks`` and ``positions`` are parallel maps keyed by block id.
    Treat both as read-only; use :func:`apply_move` / :func:`apply_flip`.
    """

    width: int
    height: int
    blocks: dict[int, Block] = field(default_factory=dict)
    positions: dict[int, GridPos] = field(default_factory=dict)

    def in_bounds(self, pos: GridPos) -> bool:
        return 0 <= pos.x < self.width and 0 <= pos.y < self.height

    def occupant(self, pos: GridPos) -> int | None:
        for bid, p in self.positions.items():
            if p == pos:
                return bid
        return None

    def block_ids(self) -> list[int]:
        return sorted(self.blocks)

    def __iter__(self) -> Iterator[tuple[Block, GridPos]]:
        for bid in self.block_ids():
            yield self.blocks[bid], self.positions[bid]

    def check(self) -> None:
        """Raise if any structural invariant is broken.

        Called after every transition in tests and on ingestion of
        untrusted snapshots; the transition functions keep these
        invariants by construction.
        """
        if self.width < 1 or self.height < 1:
            raise WorldError("degenerate grid")
        if set(self.blocks) != set(self.positions):
            raise WorldError("blocks/positions keyed differently")
        if len(self.blocks) > self.width * self.height:
            raise WorldError("more blocks than cells")
        seen: dict[GridPos, int] = {}
        for bid, pos in self.positions.items():
            if not self.in_bounds(pos):
                raise OutOfBounds(f"block {bid} at {pos} out of bounds")
            if pos in seen:
                raise CellOccupied(f"blocks {seen[pos]} and {bid} share {pos}")
            seen[pos] = bid
        for bid, block in self.blocks.items():
            if block.id != bid:
                raise WorldError(f"block keyed {bid} carries id {block.id}")

    def to_obj(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "blocks": [
                {
                    "id": bid,
                    "faces": list(self.blocks[bid].faces),
                    "face": self.blocks[bid].face_index,
                    "x": self.positions[bid].x,
                    "y": self.positions[bid].y,
                }
                for bid in self.block_ids()
            ],
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "WorldState":
        world = cls(width=int(obj["width"]), height=int(obj["height"]))
        for entry in obj["blocks"]:
            block = Block(
                id=int(entry["id"]),
                faces=tuple(entry["faces"]),
                face_index=int(entry["face"]),
            )
            pos = GridPos(int(entry["x"]), int(entry["y"]))
            world.blocks[block.id] = block
            world.positions[block.id] = pos
        world.check()
        return world


@dataclass(frozen=True)
class TargetConfig:
    """Desired placements: block id to (cell, optional required face symbol)."""

    required: dict[int, tuple[GridPos, str | None]]

    def block_ids(self) -> list[int]:
        return sorted(self.required)

    def positions(self) -> list[GridPos]:
        return [self.required[bid][0] for bid in self.block_ids()]

    def check_against(self, world: WorldState) -> None:
        seen: dict[GridPos, int] = {}
        for bid, (pos, _face) in self.required.items():
            if bid not in world.blocks:
                raise UnknownBlock(f"target references absent block {bid}")
            if not world.in_bounds(pos):
                raise OutOfBounds(f"target cell {pos} out of bounds")
            if pos in seen:
                raise CellOccupied(f"target cells collide at {pos}")
            seen[pos] = bid

    def to_obj(self) -> dict:
        return {
            "required": [
                {
                    "id": bid,
                    "x": self.required[bid][0].x,
                    "y": self.required[bid][0].y,
                    "face": self.required[bid][1],
                }
                for bid in self.block_ids()
            ]
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "TargetConfig":
        required: dict[int, tuple[GridPos, str | None]] = {}
        for entry in obj["required"]:
            required[int(entry["id"])] = (
                GridPos(int(entry["x"]), int(entry["y"])),
                entry.get("face"),
            )
        return cls(required=required)


def new_world(
    width: int, height: int, placements: Iterable[tuple[Block, GridPos]]
) -> WorldState:
    """Build a world from explicit placements.

    Rejects out-of-bounds cells, doubly occupied cells and duplicate ids.
    """
    world = WorldState(width=width, height=height)
    if width < 1 or height < 1:
        raise WorldError(f"degenerate grid {width}x{height}")
    occupied: dict[GridPos, int] = {}
    for block, pos in placements:
        if block.id in world.blocks:
            raise DuplicateId(f"block id {block.id} placed twice")
        if not world.in_bounds(pos):
            raise OutOfBounds(f"{pos} outside {width}x{height} grid")
        if pos in occupied:
            raise CellOccupied(f"cell {pos} already holds block {occupied[pos]}")
        occupied[pos] = block.id
        world.blocks[block.id] = block
        world.positions[block.id] = pos
    if len(world.blocks) > width * height:
        raise WorldError("more blocks than cells")
    return world


def apply_move(
    world: WorldState, block_id: int, dest: GridPos
) -> tuple[WorldState, MoveRecord]:
    """Relocate one block.  Moving onto its own cell is a legal 0-distance move."""
    if block_id not in world.blocks:
        raise UnknownBlock(f"no block {block_id}")
    if not world.in_bounds(dest):
        raise OutOfBounds(f"{dest} outside {world.width}x{world.height} grid")
    source = world.positions[block_id]
    holder = world.occupant(dest)
    if holder is not None and holder != block_id:
        raise CellOccupied(f"cell {dest} already holds block {holder}")
    positions = dict(world.positions)
    positions[block_id] = dest
    moved = WorldState(
        width=world.width,
        height=world.height,
        blocks=dict(world.blocks),
        positions=positions,
    )
    return moved, MoveRecord(block_id=block_id, source=source, dest=dest)


def apply_flip(world: WorldState, block_id: int) -> WorldState:
    """Advance the block's visible face by one, position unchanged."""
    if block_id not in world.blocks:
        raise UnknownBlock(f"no block {block_id}")
    blocks = dict(world.blocks)
    blocks[block_id] = blocks[block_id].flipped()
    return WorldState(
        width=world.width,
        height=world.height,
        blocks=blocks,
        positions=dict(world.positions),
    )
