"""Task-suite generation: objectives x initial layouts x interaction policies.

A task fixes the grid, the block set, what counts as success, how the
blocks start out, who may touch them when, and the clock.  Generation is
a pure function of (seed, parameters): the same inputs always produce the
same task, byte for byte, so suites are reproducible and transcripts can
name their task by content.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .metrics import aligned_error
from .transcript import canonical_json
from .world import Block, GridPos, TargetConfig, WorldState, new_world

TASK_SCHEMA = 1

# Defaults for knobs the source material leaves open; configuration, not
# ground truth.
DEFAULT_WIDTH = 8
DEFAULT_HEIGHT = 8
DEFAULT_BLOCK_COUNT = 6
DEFAULT_TIME_LIMIT_S = 240


class Unsatisfiable(Exception):
    pass


class UnsupportedConfig(Exception):
    pass


class Objective(str, Enum):
    SORT_STORE = "sortstore"  # gather the blocks into the sorted store area
    REPLICATE = "replicate"  # rebuild a prescribed structure
    OPTIMIZE = "optimize"  # maximize blocks inside the platform rectangle


class InitialLayout(str, Enum):
    GRID = "grid"  # packed, sorted warehouse grid
    SCATTERED = "scattered"  # uniform random junk-yard layout


class PolicyKind(str, Enum):
    ROBOT_ONLY = "robot-only"
    ALTERNATING = "alternating"
    RANDOM_ORDER = "random"


@dataclass(frozen=True)
class Rect:
    x: int
    y: int
    width: int
    height: int

    def contains(self, pos: GridPos) -> bool:
        return self.x <= pos.x < self.x + self.width and self.y <= pos.y < self.y + self.height

    def to_obj(self) -> dict:
        return {"x": self.x, "y": self.y, "width": self.width, "height": self.height}

    @classmethod
    def from_obj(cls, obj: dict) -> "Rect":
        return cls(int(obj["x"]), int(obj["y"]), int(obj["width"]), int(obj["height"]))


@dataclass(frozen=True)
class InteractionPolicy:
    """Who may perform block operations, and in what order."""

    kind: PolicyKind
    seed: int = 0  # drives the RANDOM_ORDER actor sequence
    robot_first: bool = True  # who opens under ALTERNATING

    def to_obj(self) -> dict:
        return {"kind": self.kind.value, "seed": self.seed, "robot_first": self.robot_first}

    @classmethod
    def from_obj(cls, obj: dict) -> "InteractionPolicy":
        return cls(
            kind=PolicyKind(obj["kind"]),
            seed=int(obj.get("seed", 0)),
            robot_first=bool(obj.get("robot_first", True)),
        )


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    width: int
    height: int
    objective: Objective
    initial_layout: InitialLayout
    layout_seed: int
    initial: WorldState
    target: TargetConfig | None
    platform: Rect | None
    policy: InteractionPolicy
    time_limit_s: int
    schema: int = TASK_SCHEMA

    def to_obj(self) -> dict:
        return {
            "schema": self.schema,
            "task_id": self.task_id,
            "width": self.width,
            "height": self.height,
            "objective": self.objective.value,
            "initial_layout": self.initial_layout.value,
            "layout_seed": self.layout_seed,
            "initial": self.initial.to_obj(),
            "target": self.target.to_obj() if self.target is not None else None,
            "platform": self.platform.to_obj() if self.platform is not None else None,
            "policy": self.policy.to_obj(),
            "time_limit_s": self.time_limit_s,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "TaskSpec":
        return cls(
            task_id=str(obj["task_id"]),
            width=int(obj["width"]),
            height=int(obj["height"]),
            objective=Objective(obj["objective"]),
            initial_layout=InitialLayout(obj["initial_layout"]),
            layout_seed=int(obj["layout_seed"]),
            initial=WorldState.from_obj(obj["initial"]),
            target=TargetConfig.from_obj(obj["target"]) if obj.get("target") else None,
            platform=Rect.from_obj(obj["platform"]) if obj.get("platform") else None,
            policy=InteractionPolicy.from_obj(obj["policy"]),
            time_limit_s=int(obj["time_limit_s"]),
            schema=int(obj.get("schema", TASK_SCHEMA)),
        )

    def dumps(self) -> str:
        return canonical_json(self.to_obj())


def block_symbol(index: int) -> str:
    letter = chr(ord("A") + index % 26)
    suffix = "" if index < 26 else str(index // 26)
    return letter + suffix


def make_blocks(count: int) -> list[Block]:
    """Blocks 1..count, each with an upper/lower-case face pair."""
    blocks = []
    for i in range(count):
        symbol = block_symbol(i)
        blocks.append(Block(id=i + 1, faces=(symbol, symbol.lower()), face_index=0))
    return blocks


def _subseed(seed: int, salt: int) -> int:
    return seed * 1_000_003 + salt


def _cell_at(index: int, width: int) -> GridPos:
    return GridPos(index % width, index // width)


def warehouse_positions(blocks: list[Block], width: int) -> dict[int, GridPos]:
    """Packed row-major from the origin, sorted by primary face symbol."""
    ordered = sorted(blocks, key=lambda b: (b.faces[0], b.id))
    return {b.id: _cell_at(i, width) for i, b in enumerate(ordered)}


def store_positions(blocks: list[Block], width: int, height: int) -> dict[int, GridPos]:
    """Sorted column pack anchored at the bottom-right corner: the store area.

    Deliberately column-major so that storing is never a pure translation
    of the row-major warehouse layout (translations score as done).
    """
    ordered = sorted(blocks, key=lambda b: (b.faces[0], b.id))
    return {
        b.id: GridPos(width - 1 - i // height, height - 1 - i % height)
        for i, b in enumerate(ordered)
    }


def scattered_positions(
    seed: int, width: int, height: int, blocks: list[Block]
) -> dict[int, GridPos]:
    """Uniform collision-free placement, a pure function of the seed."""
    rng = random.Random(seed)
    cells = rng.sample(range(width * height), len(blocks))
    return {b.id: _cell_at(c, width) for b, c in zip(sorted(blocks, key=lambda b: b.id), cells)}


def _build_world(width: int, height: int, blocks: list[Block], positions: dict[int, GridPos]) -> WorldState:
    return new_world(width, height, [(b, positions[b.id]) for b in blocks])


def generate_task(
    seed: int,
    *,
    width: int = DEFAULT_WIDTH,
    height: int = DEFAULT_HEIGHT,
    block_count: int = DEFAULT_BLOCK_COUNT,
    objective: Objective = Objective.REPLICATE,
    initial_layout: InitialLayout = InitialLayout.SCATTERED,
    policy_kind: PolicyKind = PolicyKind.ROBOT_ONLY,
    robot_first: bool = True,
    time_limit_s: int = DEFAULT_TIME_LIMIT_S,
) -> TaskSpec:
    """Deterministically build one task from a seed and parameters."""
    if time_limit_s <= 0:
        raise Unsatisfiable("time limit must be positive")
    if block_count < 1:
        raise Unsatisfiable("need at least one block")
    if block_count > width * height:
        raise Unsatisfiable(
            f"{block_count} blocks cannot fit a {width}x{height} grid"
        )
    if objective is not Objective.OPTIMIZE and block_count >= width * height:
        # rearranging needs a spare cell to break placement cycles
        raise Unsatisfiable("construction objectives need at least one free cell")

    blocks = make_blocks(block_count)
    layout_seed = _subseed(seed, 1)

    if initial_layout is InitialLayout.GRID:
        initial_positions = warehouse_positions(blocks, width)
    elif initial_layout is InitialLayout.SCATTERED:
        initial_positions = scattered_positions(layout_seed, width, height, blocks)
    else:
        raise UnsupportedConfig(f"initial layout {initial_layout} not supported")
    initial = _build_world(width, height, blocks, initial_positions)

    target: TargetConfig | None = None
    platform: Rect | None = None

    if objective is Objective.REPLICATE:
        # A prescribed scattered structure; re-roll until it actually
        # differs from the start (translation counts as no difference).
        for attempt in range(64):
            target_positions = scattered_positions(
                _subseed(seed, 2 + attempt), width, height, blocks
            )
            target = TargetConfig(
                required={bid: (pos, None) for bid, pos in target_positions.items()}
            )
            if aligned_error(initial, target) > 0:
                break
        else:
            raise Unsatisfiable("could not produce a target distinct from the start")
    elif objective is Objective.SORT_STORE:
        target_positions = store_positions(blocks, width, height)
        target = TargetConfig(
            required={bid: (pos, None) for bid, pos in target_positions.items()}
        )
        if aligned_error(initial, target) == 0:
            raise Unsatisfiable("blocks already fill the store area")
    elif objective is Objective.OPTIMIZE:
        side = 1
        while side * side < block_count:
            side += 1
        if side > width or side > height:
            raise Unsatisfiable("platform does not fit the grid")
        platform = Rect(
            x=(width - side) // 2, y=(height - side) // 2, width=side, height=side
        )
    else:
        raise UnsupportedConfig(f"objective {objective} not supported")

    policy = InteractionPolicy(
        kind=policy_kind, seed=_subseed(seed, 3), robot_first=robot_first
    )
    task_id = (
        f"t{seed}-{objective.value}-{initial_layout.value}-{policy_kind.value}"
        f"-{width}x{height}n{block_count}"
    )
    return TaskSpec(
        task_id=task_id,
        width=width,
        height=height,
        objective=objective,
        initial_layout=initial_layout,
        layout_seed=layout_seed,
        initial=initial,
        target=target,
        platform=platform,
        policy=policy,
        time_limit_s=time_limit_s,
    )


def validate_task(task: TaskSpec) -> list[str]:
    """Return violation codes; empty means every invariant holds."""
    violations: list[str] = []
    if task.time_limit_s <= 0:
        violations.append("NonPositiveTimeLimit")
    if task.width < 1 or task.height < 1:
        violations.append("DegenerateGrid")
        return violations
    if task.initial.width != task.width or task.initial.height != task.height:
        violations.append("InitialWorldDimsMismatch")
    try:
        task.initial.check()
    except Exception:
        violations.append("IllegalInitialWorld")
    if task.target is not None:
        block_ids = set(task.initial.blocks)
        cells: set[GridPos] = set()
        for bid, (pos, _face) in task.target.required.items():
            if bid not in block_ids:
                violations.append("DanglingTargetId")
            if not task.initial.in_bounds(pos):
                violations.append("TargetOutOfBounds")
            if pos in cells:
                violations.append("TargetCellConflict")
            cells.add(pos)
    if task.objective is Objective.OPTIMIZE:
        if task.platform is None:
            violations.append("PlatformMissing")
        else:
            p = task.platform
            if (
                p.width < 1
                or p.height < 1
                or p.x < 0
                or p.y < 0
                or p.x + p.width > task.width
                or p.y + p.height > task.height
            ):
                violations.append("PlatformOutOfBounds")
    elif task.target is None:
        violations.append("TargetMissing")
    return violations


def platform_count(world: WorldState, platform: Rect) -> int:
    """Blocks currently inside the platform rectangle."""
    return sum(1 for pos in world.positions.values() if platform.contains(pos))


def write_task(task: TaskSpec, directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{task.task_id}.json"
    path.write_text(task.dumps() + "\n", encoding="utf-8")
    return path


def read_task(path: str | Path) -> TaskSpec:
    return TaskSpec.from_obj(json.loads(Path(path).read_text(encoding="utf-8")))


def load_task_dir(directory: str | Path) -> list[TaskSpec]:
    """All ``*.json`` tasks in a directory, sorted by filename."""
    directory = Path(directory)
    return [read_task(p) for p in sorted(directory.glob("*.json"))]
