"""Corpus analysis: ingestion, normalization, filtering and statistics.

Feeds on a directory of game transcripts.  Normalization averages are
taken over the raw corpus, every game is scored with the shared metric
functions, implausible games are filtered by effort and completion
thresholds, and the survivors are summarised as correlation figures and
CSV tables.  Output is deterministic: same input directory, same bytes.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from .metrics import (
    CorpusStats,
    EffortWeights,
    DEFAULT_WEIGHTS,
    MetricsRow,
    Undefined,
    count_gestures,
    count_words,
    is_defined,
    score_transcript,
)
from .transcript import (
    GameTranscript,
    ReplayMismatch,
    TranscriptParseError,
    canonical_json,
    read_transcript,
    verify_replay,
)

# Filter thresholds: games below either bound are dropped as implausible
# (too little communication to be a real paired game, or too little
# progress to show engagement).
DEFAULT_MIN_EFFORT = 0.5
DEFAULT_MIN_COMPLETION = 0.8

LOW_EFFORT = "LowEffort"
LOW_COMPLETION = "LowCompletion"
UNDEFINED_METRIC = "UndefinedMetric"


class EmptyCorpus(Exception):
    pass


class InsufficientData(Exception):
    pass


class ZeroVariance(Exception):
    pass


@dataclass(frozen=True)
class FilterConfig:
    min_effort: float = DEFAULT_MIN_EFFORT
    min_completion: float = DEFAULT_MIN_COMPLETION


@dataclass
class Corpus:
    games: list[tuple[str, GameTranscript]]  # (filename, transcript), sorted
    problems: list[Exception] = field(default_factory=list)

    def transcripts(self) -> list[GameTranscript]:
        return [t for _name, t in self.games]


def ingest_corpus(directory: str | Path) -> Corpus:
    """Load and replay-verify every ``*.jsonl`` transcript in a directory.

    Files that fail to parse or to replay are collected as problems, never
    silently dropped and never allowed into the corpus.
    """
    directory = Path(directory)
    games: list[tuple[str, GameTranscript]] = []
    problems: list[Exception] = []
    for path in sorted(directory.glob("*.jsonl")):
        try:
            transcript = read_transcript(path)
            verify_replay(transcript, file=str(path))
        except (TranscriptParseError, ReplayMismatch) as exc:
            problems.append(exc)
            continue
        games.append((path.name, transcript))
    return Corpus(games=games, problems=problems)


def corpus_averages(corpus: Corpus) -> CorpusStats:
    """Mean word and gesture counts over all ingested games, pre-filter."""
    transcripts = corpus.transcripts()
    if not transcripts:
        raise EmptyCorpus("no games to average over")
    words = [count_words(t) for t in transcripts]
    gestures = [count_gestures(t) for t in transcripts]
    return CorpusStats(
        game_count=len(transcripts),
        avg_words=sum(words) / len(words),
        avg_gestures=sum(gestures) / len(gestures),
    )


def score_corpus(
    corpus: Corpus,
    averages: CorpusStats | None = None,
    weights: EffortWeights = DEFAULT_WEIGHTS,
    align: bool = True,
) -> list[MetricsRow]:
    if averages is None:
        averages = corpus_averages(corpus)
    return [
        score_transcript(t, averages=averages, weights=weights, align=align)
        for t in corpus.transcripts()
    ]


def filter_games(
    rows: list[MetricsRow], cfg: FilterConfig = FilterConfig()
) -> tuple[list[MetricsRow], list[tuple[MetricsRow, str]]]:
    """Partition rows into (retained, removed-with-reason), keeping order.

    A row is removed when its effort or completion is undefined, or either
    falls below its threshold.  Undefined metrics get their own reason so
    they cannot masquerade as low scores.
    """
    retained: list[MetricsRow] = []
    removed: list[tuple[MetricsRow, str]] = []
    for row in rows:
        effort = row.communication_effort
        completion = row.completion_score
        if isinstance(effort, Undefined) or isinstance(completion, Undefined):
            removed.append((row, UNDEFINED_METRIC))
        elif effort < cfg.min_effort:
            removed.append((row, LOW_EFFORT))
        elif completion < cfg.min_completion:
            removed.append((row, LOW_COMPLETION))
        else:
            retained.append(row)
    return retained, removed


def pearson(xs: list[float], ys: list[float]) -> float:
    if len(xs) != len(ys):
        raise ValueError("series lengths differ")
    if len(xs) < 2:
        raise InsufficientData("correlation needs at least 2 points")
    try:
        return statistics.correlation(xs, ys)
    except statistics.StatisticsError as exc:
        raise ZeroVariance(str(exc)) from exc


def _ranks(values: list[float]) -> list[float]:
    """Average ranks (1-based), ties share the mean of their rank span."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(xs: list[float], ys: list[float]) -> float:
    """Rank correlation; reported alongside Pearson for monotone claims."""
    return pearson(_ranks(xs), _ranks(ys))


def _correlation_entry(xs: list[float], ys: list[float]) -> dict:
    entry: dict = {"n": len(xs)}
    try:
        entry["pearson"] = pearson(xs, ys)
        entry["spearman"] = spearman(xs, ys)
    except (InsufficientData, ZeroVariance) as exc:
        entry["pearson"] = None
        entry["spearman"] = None
        entry["error"] = type(exc).__name__
    return entry


@dataclass
class CorpusReport:
    stats: CorpusStats
    config: FilterConfig
    weights: EffortWeights
    rows: list[MetricsRow]
    retained: list[MetricsRow]
    removed: list[tuple[MetricsRow, str]]
    correlations: dict
    problems: list[str]

    def to_obj(self) -> dict:
        return {
            "stats": self.stats.to_obj(),
            "filter": {
                "min_effort": self.config.min_effort,
                "min_completion": self.config.min_completion,
            },
            "weights": {
                "w_word": self.weights.w_word,
                "w_gesture": self.weights.w_gesture,
            },
            "game_count": len(self.rows),
            "retained_count": len(self.retained),
            "retained": [r.game_id for r in self.retained],
            "removed": [
                {"game_id": r.game_id, "reason": reason} for r, reason in self.removed
            ],
            "correlations": self.correlations,
            "rows": [r.to_obj() for r in self.rows],
            "problems": self.problems,
        }


def build_report(
    corpus: Corpus,
    cfg: FilterConfig = FilterConfig(),
    weights: EffortWeights = DEFAULT_WEIGHTS,
) -> CorpusReport:
    stats = corpus_averages(corpus)
    rows = score_corpus(corpus, averages=stats, weights=weights)
    retained, removed = filter_games(rows, cfg)

    correlations: dict = {}
    if len(retained) >= 2:
        words = [float(r.word_count) for r in retained]
        gestures = [float(r.gesture_count) for r in retained]
        completion = [r.completion_score for r in retained]
        effort = [r.communication_effort for r in retained]
        correlations["words_vs_gestures"] = _correlation_entry(words, gestures)
        correlations["completion_vs_effort"] = _correlation_entry(completion, effort)
    else:
        correlations["error"] = "InsufficientData"

    return CorpusReport(
        stats=stats,
        config=cfg,
        weights=weights,
        rows=rows,
        retained=retained,
        removed=removed,
        correlations=correlations,
        problems=[str(p) for p in corpus.problems],
    )


# Fixed CSV schema for the retained-games table.
GAMES_CSV_COLUMNS = [
    "game_id",
    "words",
    "gestures",
    "eff_word",
    "eff_gesture",
    "effort",
    "error_init",
    "error_final",
    "dist_moved",
    "task_efficiency",
    "completion",
    "comm_efficiency",
]


def _cell(value) -> str:
    if isinstance(value, Undefined):
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _games_csv(retained: list[MetricsRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(GAMES_CSV_COLUMNS)
    for r in retained:
        writer.writerow(
            [
                r.game_id,
                r.word_count,
                r.gesture_count,
                _cell(r.eff_word),
                _cell(r.eff_gesture),
                _cell(r.communication_effort),
                _cell(r.error_init),
                _cell(r.error_final),
                _cell(r.dist_moved),
                _cell(r.task_efficiency),
                _cell(r.completion_score),
                _cell(r.communication_efficiency),
            ]
        )
    return buf.getvalue()


def _scatter_csv(columns: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def export_report(report: CorpusReport, out_dir: str | Path) -> dict[str, Path]:
    """Write report.json plus the games table and the three scatter tables."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    retained = report.retained

    files = {
        "report": out_dir / "report.json",
        "games": out_dir / "games.csv",
        "effort_completion": out_dir / "effort_vs_completion.csv",
        "words_gestures": out_dir / "words_vs_gestures.csv",
        "gesture_word_efficiency": out_dir / "gestures_words_efficiency.csv",
    }
    files["report"].write_text(canonical_json(report.to_obj()) + "\n", encoding="utf-8")
    files["games"].write_text(_games_csv(retained), encoding="utf-8")
    files["effort_completion"].write_text(
        _scatter_csv(
            ["game_id", "effort", "completion"],
            [[r.game_id, r.communication_effort, r.completion_score] for r in retained],
        ),
        encoding="utf-8",
    )
    files["words_gestures"].write_text(
        _scatter_csv(
            ["game_id", "words", "gestures"],
            [[r.game_id, r.word_count, r.gesture_count] for r in retained],
        ),
        encoding="utf-8",
    )
    # Efficiency as the mark-size channel: favouring pointing over prose
    # shows up as large marks in the low-words corner.
    files["gesture_word_efficiency"].write_text(
        _scatter_csv(
            ["game_id", "gestures", "words", "comm_efficiency"],
            [
                [r.game_id, r.gesture_count, r.word_count, r.communication_efficiency]
                for r in retained
            ],
        ),
        encoding="utf-8",
    )
    return files


def analyze_directory(
    logs_dir: str | Path,
    out_dir: str | Path,
    cfg: FilterConfig = FilterConfig(),
    weights: EffortWeights = DEFAULT_WEIGHTS,
) -> CorpusReport:
    corpus = ingest_corpus(logs_dir)
    if not corpus.games:
        raise EmptyCorpus(f"no valid transcripts under {logs_dir}")
    report = build_report(corpus, cfg=cfg, weights=weights)
    export_report(report, out_dir)
    return report


def load_averages(path: str | Path) -> CorpusStats:
    """Read normalization averages from a stats JSON file or a report.json."""
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if "stats" in obj:
        obj = obj["stats"]
    return CorpusStats.from_obj(obj)
