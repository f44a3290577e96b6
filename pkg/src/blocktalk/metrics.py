"""Communication-efficiency metric stack.

All scoring formulas live here as pure functions over worlds, targets and
transcripts.  The headline quantity is communication efficiency: how much
construction error a pair removed per unit of block movement, divided by
how much talking and pointing the directing player needed to get it done.

Quotients with zero denominators return an :class:`Undefined` value with a
reason code instead of raising or silently coercing to a number, so the
downstream pipeline stays total and auditable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .transcript import CHAT, GESTURE, MOVE, GameTranscript, Role, move_fields
from .world import GridPos, TargetConfig, WorldState, l1_distance


class EmptyConfiguration(Exception):
    pass


class MissingBlock(Exception):
    pass


# Reason codes carried by Undefined values.
ZERO_INITIAL_ERROR = "ZeroInitialError"
NO_MOVEMENT = "NoMovement"
ZERO_EFFORT = "ZeroEffort"
NO_TARGET = "NoTarget"
NO_CORPUS_AVERAGES = "NoCorpusAverages"
UNDEFINED_INPUT = "UndefinedInput"


@dataclass(frozen=True)
class Undefined:
    """A metric value with a zero denominator; ``reason`` says which one."""

    reason: str


Score = Union[float, Undefined]


def is_defined(value: Score) -> bool:
    return not isinstance(value, Undefined)


@dataclass(frozen=True)
class EffortCounts:
    word_count: int
    gesture_count: int

    def __post_init__(self) -> None:
        if self.word_count < 0 or self.gesture_count < 0:
            raise ValueError("counts must be non-negative")


@dataclass(frozen=True)
class EffortWeights:
    """Relative weight of words vs gestures in the effort sum."""

    w_word: float = 0.8
    w_gesture: float = 0.2

    def __post_init__(self) -> None:
        if self.w_word < 0 or self.w_gesture < 0:
            raise ValueError("weights must be non-negative")
        if abs(self.w_word + self.w_gesture - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")


DEFAULT_WEIGHTS = EffortWeights()


@dataclass(frozen=True)
class CorpusStats:
    """Normalization averages, computed over the raw pre-filter corpus."""

    game_count: int
    avg_words: float
    avg_gestures: float

    def __post_init__(self) -> None:
        if self.avg_words < 0 or self.avg_gestures < 0:
            raise ValueError("averages must be non-negative")

    def to_obj(self) -> dict:
        return {
            "game_count": self.game_count,
            "avg_words": self.avg_words,
            "avg_gestures": self.avg_gestures,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "CorpusStats":
        return cls(
            game_count=int(obj.get("game_count", 0)),
            avg_words=float(obj["avg_words"]),
            avg_gestures=float(obj["avg_gestures"]),
        )


def centroid(positions: Sequence[GridPos]) -> tuple[float, float]:
    """Arithmetic mean of the cells' coordinates."""
    if not positions:
        raise EmptyConfiguration("centroid of an empty configuration")
    n = len(positions)
    return (sum(p.x for p in positions) / n, sum(p.y for p in positions) / n)


def aligned_error(
    config: WorldState, target: TargetConfig, align: bool = True
) -> float:
    """Construction error: per-block L1 coordinate error against the target.

    Blocks are matched by id, and only the target-referenced subset of the
    configuration participates: distractor blocks neither score nor shift
    the alignment.  With ``align`` (the default) both point sets are first
    translated so their centroids coincide, making the error invariant
    under pure translation of the construction.  The alignment arithmetic
    is exact (rational), so translating a configuration by whole cells
    changes nothing, not even the last bit.

    ``align=False`` skips the centroid subtraction and scores absolute
    cells; useful for diagnostics and bounded-efficiency checks.

    Face symbols never enter the error; see :func:`face_mismatches`.
    """
    ids = target.block_ids()
    if not ids:
        raise EmptyConfiguration("target references no blocks")
    missing = [bid for bid in ids if bid not in config.positions]
    if missing:
        raise MissingBlock(f"target references absent blocks {missing}")

    cfg = [config.positions[bid] for bid in ids]
    tgt = [target.required[bid][0] for bid in ids]
    n = len(ids)
    if align:
        cfg_cx = Fraction(sum(p.x for p in cfg), n)
        cfg_cy = Fraction(sum(p.y for p in cfg), n)
        tgt_cx = Fraction(sum(p.x for p in tgt), n)
        tgt_cy = Fraction(sum(p.y for p in tgt), n)
    else:
        cfg_cx = cfg_cy = tgt_cx = tgt_cy = Fraction(0)

    total = Fraction(0)
    for c, g in zip(cfg, tgt):
        total += abs((c.x - cfg_cx) - (g.x - tgt_cx))
        total += abs((c.y - cfg_cy) - (g.y - tgt_cy))
    return float(total)


def face_mismatches(config: WorldState, target: TargetConfig) -> int:
    """How many target blocks show the wrong face.  Informational only."""
    count = 0
    for bid, (_pos, face) in target.required.items():
        if face is None:
            continue
        if bid not in config.blocks:
            raise MissingBlock(f"target references absent block {bid}")
        if config.blocks[bid].symbol != face:
            count += 1
    return count


def completion_score(error_init: float, error_final: float) -> Score:
    """Fraction of the initial error removed; negative if error grew."""
    if error_init < 0 or error_final < 0:
        raise ValueError("errors must be non-negative")
    if error_init == 0:
        return Undefined(ZERO_INITIAL_ERROR)
    return (error_init - error_final) / error_init


def task_efficiency(error_init: float, error_final: float, dist_moved: float) -> Score:
    """Error reduction per cell of block movement.

    A game with no movement and no error change scores 0; no movement with
    a changed error has no meaningful quotient and comes back undefined.
    """
    if error_init < 0 or error_final < 0 or dist_moved < 0:
        raise ValueError("inputs must be non-negative")
    if dist_moved == 0:
        if error_init == error_final:
            return 0.0
        return Undefined(NO_MOVEMENT)
    return (error_init - error_final) / dist_moved


def dist_moved(transcript: GameTranscript) -> float:
    """Total cityblock distance travelled by blocks over the whole game."""
    total = 0
    for event in transcript.events:
        if event.kind == MOVE:
            _bid, source, dest = move_fields(event)
            total += l1_distance(source, dest)
    return float(total)


def count_words(transcript: GameTranscript) -> int:
    """Whitespace-delimited tokens over all of the directing player's chat."""
    total = 0
    for event in transcript.events:
        if event.kind == CHAT and event.actor == Role.HUMAN.value:
            total += len(str(event.data.get("text", "")).split())
    return total


def count_gestures(transcript: GameTranscript) -> int:
    return sum(
        1
        for event in transcript.events
        if event.kind == GESTURE and event.actor == Role.HUMAN.value
    )


def effort_counts(transcript: GameTranscript) -> EffortCounts:
    return EffortCounts(
        word_count=count_words(transcript), gesture_count=count_gestures(transcript)
    )


def communication_effort(
    counts: EffortCounts,
    averages: CorpusStats,
    weights: EffortWeights = DEFAULT_WEIGHTS,
) -> float:
    """Weighted sum of corpus-normalized word and gesture counts.

    A zero corpus average zeroes its term: with nothing to normalize
    against, that channel contributes no effort.
    """
    eff_word = counts.word_count / averages.avg_words if averages.avg_words > 0 else 0.0
    eff_gesture = (
        counts.gesture_count / averages.avg_gestures if averages.avg_gestures > 0 else 0.0
    )
    return weights.w_word * eff_word + weights.w_gesture * eff_gesture


def communication_efficiency(task_eff: Score, effort: Score) -> Score:
    """Task efficiency bought per unit of communication effort."""
    if isinstance(task_eff, Undefined) or isinstance(effort, Undefined):
        return Undefined(UNDEFINED_INPUT)
    if effort < 0:
        raise ValueError("effort must be non-negative")
    if effort == 0:
        return Undefined(ZERO_EFFORT)
    return task_eff / effort


@dataclass
class MetricsRow:
    """Per-game scores, one row per transcript.

    Score-typed fields are floats or :class:`Undefined`; serialization
    writes null plus a reason entry so an undefined metric can never pass
    as a small number.
    """

    game_id: str
    error_init: Score
    error_final: Score
    dist_moved: float
    word_count: int
    gesture_count: int
    eff_word: Score
    eff_gesture: Score
    communication_effort: Score
    task_efficiency: Score
    completion_score: Score
    communication_efficiency: Score
    face_mismatches: int = 0
    aligned: bool = True

    _SCORE_FIELDS = (
        "error_init",
        "error_final",
        "eff_word",
        "eff_gesture",
        "communication_effort",
        "task_efficiency",
        "completion_score",
        "communication_efficiency",
    )

    def to_obj(self) -> dict:
        obj: dict = {
            "game_id": self.game_id,
            "dist_moved": self.dist_moved,
            "word_count": self.word_count,
            "gesture_count": self.gesture_count,
            "face_mismatches": self.face_mismatches,
            "aligned": self.aligned,
        }
        undefined: dict[str, str] = {}
        for name in self._SCORE_FIELDS:
            value = getattr(self, name)
            if isinstance(value, Undefined):
                obj[name] = None
                undefined[name] = value.reason
            else:
                obj[name] = value
        obj["undefined"] = undefined
        return obj

    @classmethod
    def from_obj(cls, obj: dict) -> "MetricsRow":
        undefined = obj.get("undefined", {})

        def score(name: str) -> Score:
            if obj.get(name) is None:
                return Undefined(undefined.get(name, "Unknown"))
            return float(obj[name])

        return cls(
            game_id=str(obj["game_id"]),
            error_init=score("error_init"),
            error_final=score("error_final"),
            dist_moved=float(obj["dist_moved"]),
            word_count=int(obj["word_count"]),
            gesture_count=int(obj["gesture_count"]),
            eff_word=score("eff_word"),
            eff_gesture=score("eff_gesture"),
            communication_effort=score("communication_effort"),
            task_efficiency=score("task_efficiency"),
            completion_score=score("completion_score"),
            communication_efficiency=score("communication_efficiency"),
            face_mismatches=int(obj.get("face_mismatches", 0)),
            aligned=bool(obj.get("aligned", True)),
        )


def score_transcript(
    transcript: GameTranscript,
    averages: CorpusStats | None = None,
    weights: EffortWeights = DEFAULT_WEIGHTS,
    align: bool = True,
) -> MetricsRow:
    """Compute the full metric row for one game.

    Without corpus ``averages`` the normalized effort terms (and therefore
    communication efficiency) are undefined; error, movement and raw
    counts are always available.  Tasks without a target (the pure
    optimization objective) get undefined error metrics.
    """
    target_obj = transcript.task_obj.get("target")
    initial = transcript.initial_world()
    counts = effort_counts(transcript)
    dist = dist_moved(transcript)
    mismatches = 0

    if target_obj is not None:
        target = TargetConfig.from_obj(target_obj)
        e_init: Score = aligned_error(initial, target, align=align)
        e_final: Score = aligned_error(transcript.final_world, target, align=align)
        completion = completion_score(e_init, e_final)
        task_eff = task_efficiency(e_init, e_final, dist)
        mismatches = face_mismatches(transcript.final_world, target)
    else:
        e_init = Undefined(NO_TARGET)
        e_final = Undefined(NO_TARGET)
        completion = Undefined(NO_TARGET)
        task_eff = Undefined(NO_TARGET)

    if averages is not None:
        eff_word: Score = (
            counts.word_count / averages.avg_words if averages.avg_words > 0 else 0.0
        )
        eff_gesture: Score = (
            counts.gesture_count / averages.avg_gestures
            if averages.avg_gestures > 0
            else 0.0
        )
        effort: Score = communication_effort(counts, averages, weights)
    else:
        eff_word = Undefined(NO_CORPUS_AVERAGES)
        eff_gesture = Undefined(NO_CORPUS_AVERAGES)
        effort = Undefined(NO_CORPUS_AVERAGES)

    comm_eff = communication_efficiency(task_eff, effort)

    return MetricsRow(
        game_id=transcript.session_id,
        error_init=e_init,
        error_final=e_final,
        dist_moved=dist,
        word_count=counts.word_count,
        gesture_count=counts.gesture_count,
        eff_word=eff_word,
        eff_gesture=eff_gesture,
        communication_effort=effort,
        task_efficiency=task_eff,
        completion_score=completion,
        communication_efficiency=comm_eff,
        face_mismatches=mismatches,
        aligned=align,
    )


def summed_move_distances(moves: Iterable[tuple[GridPos, GridPos]]) -> int:
    """Additivity helper: total L1 length of a move list."""
    return sum(l1_distance(a, b) for a, b in moves)
