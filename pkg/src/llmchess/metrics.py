"""Legality and quality metrics over game records.

Implements the move-legality ratios (IMR, RBLM), the repetition
concentration score (MRS), board-evaluation checkpoints (BE), game length
(GL), and their per-variation aggregation with per-move-index curves.
All functions are pure over persisted records, so every reported number
can be recomputed from the logs alone.
"""
from __future__ import annotations

import math
import re
import statistics
from dataclasses import dataclass, field

from .records import GameRecord, NATURAL_TERMINATIONS

BE_CHECKPOINT = 20


def normalize_attempt_text(attempt_extracted: str | None, raw: str) -> str:
    """Identity used for "same illegal move" judgments.

    Check suffixes and trailing punctuation are stripped so "b2", "b2."
    and "b2+" count as one move; attempts with no SAN-shaped token fall
    back to their whitespace-collapsed raw text.
    """
    text = attempt_extracted if attempt_extracted is not None else raw
    text = " ".join(text.split())
    return re.sub(r"[+#.,;:!?]+$", "", text)


def _flags(record: GameRecord) -> list[int]:
    return [log.flagged for log in record.attempt_logs]


def _retries(record: GameRecord) -> list[int]:
    return [log.retries for log in record.attempt_logs]


def moves_available(record: GameRecord) -> int:
    """Move indices with attempt data (includes a terminal failed move)."""
    return len(record.attempt_logs)


def imr(record: GameRecord, t: int) -> float:
    """Fraction of the first t model moves with any illegal attempt."""
    if not 1 <= t <= moves_available(record):
        raise ValueError(f"t={t} outside 1..{moves_available(record)}")
    return sum(_flags(record)[:t]) / t


def rblm(record: GameRecord, t: int) -> float | None:
    """Mean illegal attempts per offending move; None when no offenses."""
    if not 1 <= t <= moves_available(record):
        raise ValueError(f"t={t} outside 1..{moves_available(record)}")
    offending = sum(_flags(record)[:t])
    if offending == 0:
        return None
    return sum(_retries(record)[:t]) / offending


@dataclass(frozen=True)
class IllegalAttemptProfile:
    """One offending move: total illegal attempts and per-unique-text counts."""

    move_index: int
    total: int  # a_i
    counts: tuple[tuple[str, int], ...]  # (normalized text, occurrences)


def illegal_profile(record: GameRecord) -> list[IllegalAttemptProfile]:
    """Profiles of every move that drew at least one illegal attempt."""
    profiles = []
    for log in record.attempt_logs:
        bad = [a for a in log.attempts if a.verdict != "legal"]
        if not bad:
            continue
        counts: dict[str, int] = {}
        for attempt in bad:
            key = normalize_attempt_text(attempt.extracted, attempt.raw)
            counts[key] = counts.get(key, 0) + 1
        profiles.append(IllegalAttemptProfile(
            move_index=log.move_index,
            total=len(bad),
            counts=tuple(sorted(counts.items())),
        ))
    return profiles


def mrs(record: GameRecord) -> float | None:
    """Concentration of illegal attempts: 1 when every retry repeats one
    move, 1/a when all a attempts on a move differ; None with no offenses."""
    profiles = illegal_profile(record)
    if not profiles:
        return None
    contributions = [
        sum((c / p.total) ** 2 for _, c in p.counts) for p in profiles
    ]
    return sum(contributions) / len(contributions)


def be(record: GameRecord, t: int) -> int | None:
    """Evaluation snapshot after the model's t-th legal move."""
    if t < 1:
        raise ValueError("t must be >= 1")
    if t > len(record.evaluations):
        return None
    return record.evaluations[t - 1]


def be_full(record: GameRecord) -> float | None:
    """Mean evaluation over every snapshot of the game."""
    if not record.evaluations:
        return None
    return statistics.fmean(record.evaluations)


def be_after_white(record: GameRecord, t: int) -> int | None:
    """Alternative checkpoint: the snapshot after white's t-th ply."""
    if t < 1:
        raise ValueError("t must be >= 1")
    if t > len(record.engine_evaluations):
        return None
    return record.engine_evaluations[t - 1]


def gl(record: GameRecord) -> int:
    return record.n_legal


def pearson(xs: list[float], ys: list[float]) -> float:
    """Sample Pearson correlation coefficient."""
    if len(xs) != len(ys):
        raise ValueError("series lengths differ")
    n = len(xs)
    if n < 2:
        raise ValueError("need at least two points")
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    cov = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    var_x = sum((x - mean_x) ** 2 for x in xs)
    var_y = sum((y - mean_y) ** 2 for y in ys)
    if var_x == 0 or var_y == 0:
        raise ValueError("zero variance makes the coefficient undefined")
    return cov / math.sqrt(var_x * var_y)


# --- aggregation --------------------------------------------------------------


@dataclass
class GameMetrics:
    game_id: str
    variation_id: str
    termination: str
    imr: float
    rblm: float | None
    gl: int
    be20: int | None
    be_full: float | None
    mrs: float | None
    natural: bool


@dataclass
class VariationSummary:
    variation_id: str
    games: int
    move_cap_games: int
    natural_rate: float
    imr_mean: float
    imr_std: float | None
    rblm_mean: float | None
    rblm_std: float | None
    rblm_defined: int
    gl_mean: float
    gl_std: float | None
    be20_mean: float | None
    be20_std: float | None
    be20_coverage: float
    be20_after_white_mean: float | None
    be_full_mean: float | None
    be_full_std: float | None
    mrs_mean: float | None
    mrs_std: float | None
    mrs_defined: int
    # per-move-index curves, entry 0 is move 1
    imr_curve: list[float] = field(default_factory=list)
    rblm_curve: list[float | None] = field(default_factory=list)
    be_curve: list[float] = field(default_factory=list)
    survivors: list[int] = field(default_factory=list)


@dataclass
class MetricsSummary:
    game_metrics: list[GameMetrics]
    variations: dict[str, VariationSummary]
    transport_failures: int


def game_metrics(record: GameRecord) -> GameMetrics:
    t = moves_available(record)
    return GameMetrics(
        game_id=record.game_id,
        variation_id=record.variation_id,
        termination=record.termination,
        imr=imr(record, t) if t else 0.0,
        rblm=rblm(record, t) if t else None,
        gl=gl(record),
        be20=be(record, BE_CHECKPOINT),
        be_full=be_full(record),
        mrs=mrs(record),
        natural=record.termination in NATURAL_TERMINATIONS,
    )


def _mean_std(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else None
    return mean, std


def aggregate(records: list[GameRecord]) -> MetricsSummary:
    """Per-game metrics plus per-variation means, stds, and move curves.

    Transport-failure games are dropped entirely; move-cap games count for
    legality metrics but are left out of the BE and GL aggregates.
    """
    if not records:
        raise ValueError("no records to aggregate")
    included = [r for r in records if r.termination != "transport-failure"]
    failures = len(records) - len(included)

    per_game = [game_metrics(r) for r in included]

    by_variation: dict[str, list[GameRecord]] = {}
    for record in included:
        by_variation.setdefault(record.variation_id, []).append(record)

    variations: dict[str, VariationSummary] = {}
    for vid, group in sorted(by_variation.items()):
        metrics = [game_metrics(r) for r in group]
        quality = [(r, m) for r, m in zip(group, metrics)
                   if r.termination != "move-cap"]

        imr_mean, imr_std = _mean_std([m.imr for m in metrics])
        rblm_values = [m.rblm for m in metrics if m.rblm is not None]
        rblm_mean, rblm_std = _mean_std(rblm_values)
        mrs_values = [m.mrs for m in metrics if m.mrs is not None]
        mrs_mean, mrs_std = _mean_std(mrs_values)
        gl_mean, gl_std = _mean_std([float(m.gl) for _, m in quality])
        be20_values = [float(m.be20) for _, m in quality if m.be20 is not None]
        be20_mean, be20_std = _mean_std(be20_values)
        after_white = [float(v) for v in
                       (be_after_white(r, BE_CHECKPOINT) for r, _ in quality)
                       if v is not None]
        be20_white_mean, _ = _mean_std(after_white)
        befull_values = [m.be_full for _, m in quality if m.be_full is not None]
        befull_mean, befull_std = _mean_std(befull_values)

        max_moves = max(moves_available(r) for r in group)
        imr_curve: list[float] = []
        rblm_curve: list[float | None] = []
        survivors: list[int] = []
        for t in range(1, max_moves + 1):
            alive = [r for r in group if moves_available(r) >= t]
            survivors.append(len(alive))
            imr_curve.append(statistics.fmean(imr(r, t) for r in alive))
            defined = [rblm(r, t) for r in alive]
            defined = [v for v in defined if v is not None]
            rblm_curve.append(statistics.fmean(defined) if defined else None)

        quality_records = [r for r, _ in quality]
        max_gl = max((r.n_legal for r in quality_records), default=0)
        be_curve: list[float] = []
        for t in range(1, max_gl + 1):
            snaps = [float(r.evaluations[t - 1]) for r in quality_records
                     if len(r.evaluations) >= t]
            be_curve.append(statistics.fmean(snaps))

        variations[vid] = VariationSummary(
            variation_id=vid,
            games=len(group),
            move_cap_games=sum(1 for r in group if r.termination == "move-cap"),
            natural_rate=sum(1 for m in metrics if m.natural) / len(metrics),
            imr_mean=imr_mean if imr_mean is not None else 0.0,
            imr_std=imr_std,
            rblm_mean=rblm_mean,
            rblm_std=rblm_std,
            rblm_defined=len(rblm_values),
            gl_mean=gl_mean if gl_mean is not None else 0.0,
            gl_std=gl_std,
            be20_mean=be20_mean,
            be20_std=be20_std,
            be20_coverage=(len(be20_values) / len(quality) if quality else 0.0),
            be20_after_white_mean=be20_white_mean,
            be_full_mean=befull_mean,
            be_full_std=befull_std,
            mrs_mean=mrs_mean,
            mrs_std=mrs_std,
            mrs_defined=len(mrs_values),
            imr_curve=imr_curve,
            rblm_curve=rblm_curve,
            be_curve=be_curve,
            survivors=survivors,
        )

    return MetricsSummary(
        game_metrics=sorted(per_game, key=lambda m: m.game_id),
        variations=variations,
        transport_failures=failures,
    )
