"""Record types for games and probes, with schema-versioned (de)serialization."""
from __future__ import annotations

from dataclasses import dataclass, field

SCHEMA_VERSION = 1

MAX_ATTEMPTS = 10

VERDICTS = ("legal", "illegal", "ambiguous", "not-a-move")

NATURAL_TERMINATIONS = ("checkmate", "stalemate", "draw-fifty-move",
                        "draw-threefold", "draw-insufficient-material")
TERMINATIONS = NATURAL_TERMINATIONS + ("illegal-limit", "move-cap", "transport-failure")


class SchemaVersionError(ValueError):
    """A persisted record does not match the current schema version."""


@dataclass
class MoveAttempt:
    raw: str
    extracted: str | None
    verdict: str

    def __post_init__(self) -> None:
        if self.verdict not in VERDICTS:
            raise ValueError(f"bad verdict: {self.verdict!r}")


@dataclass
class MoveAttemptLog:
    """Every attempt the model made for one of its moves.

    `retries` is the count of non-legal attempts before the legal one
    (all of them when no legal attempt arrived); `flagged` is the
    per-move indicator: 1 when anything went wrong on this move.
    """

    move_index: int  # 1-based over the model's moves
    attempts: list[MoveAttempt] = field(default_factory=list)
    final_san: str | None = None

    @property
    def retries(self) -> int:
        return sum(1 for a in self.attempts if a.verdict != "legal")

    @property
    def flagged(self) -> int:
        return 1 if self.retries > 0 or self.final_san is None else 0

    def validate(self) -> None:
        if not 1 <= len(self.attempts) <= MAX_ATTEMPTS:
            raise ValueError(f"move {self.move_index}: {len(self.attempts)} attempts")
        legal = [i for i, a in enumerate(self.attempts) if a.verdict == "legal"]
        if len(legal) > 1 or (legal and legal[0] != len(self.attempts) - 1):
            raise ValueError(f"move {self.move_index}: legal attempt must be unique and last")
        if (self.final_san is None) == bool(legal):
            raise ValueError(f"move {self.move_index}: final_san inconsistent with attempts")


@dataclass
class GameRecord:
    game_id: str
    variation_id: str
    config_hash: str
    opening: str
    seed: str
    plies: list[tuple[str, str]]  # (san, mover), mover in {"engine", "model"}
    attempt_logs: list[MoveAttemptLog]
    evaluations: list[int]  # snapshot after each legal model move, white's cp
    termination: str
    transcript_ref: str
    move_cap: int
    # snapshots after each engine ply; BE metrics read `evaluations`, this
    # stream backs the alternative white-move checkpoint in reports
    engine_evaluations: list[int] = field(default_factory=list)
    sampling: str = "uniform-top3"
    schema_version: int = SCHEMA_VERSION

    @property
    def n_legal(self) -> int:
        """GL: count of model moves that reached a legal outcome."""
        return sum(1 for log in self.attempt_logs if log.final_san is not None)

    def validate(self) -> None:
        if self.termination not in TERMINATIONS:
            raise ValueError(f"bad termination: {self.termination!r}")
        for log in self.attempt_logs:
            log.validate()
        if self.termination != "transport-failure":
            if len(self.evaluations) != self.n_legal:
                raise ValueError("one evaluation snapshot per legal model move")
        if self.termination == "illegal-limit":
            last = self.attempt_logs[-1]
            if len(last.attempts) != MAX_ATTEMPTS or last.final_san is not None:
                raise ValueError("illegal-limit needs a terminal log of 10 failed attempts")

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "game_id": self.game_id,
            "variation_id": self.variation_id,
            "config_hash": self.config_hash,
            "opening": self.opening,
            "seed": self.seed,
            "plies": [[san, mover] for san, mover in self.plies],
            "attempt_logs": [
                {
                    "move_index": log.move_index,
                    "attempts": [
                        {"raw": a.raw, "extracted": a.extracted, "verdict": a.verdict}
                        for a in log.attempts
                    ],
                    "final_san": log.final_san,
                }
                for log in self.attempt_logs
            ],
            "evaluations": list(self.evaluations),
            "engine_evaluations": list(self.engine_evaluations),
            "termination": self.termination,
            "transcript_ref": self.transcript_ref,
            "move_cap": self.move_cap,
            "sampling": self.sampling,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GameRecord":
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaVersionError(
                f"record schema {version!r}, this build reads {SCHEMA_VERSION}")
        return cls(
            game_id=data["game_id"],
            variation_id=data["variation_id"],
            config_hash=data["config_hash"],
            opening=data["opening"],
            seed=data["seed"],
            plies=[(san, mover) for san, mover in data["plies"]],
            attempt_logs=[
                MoveAttemptLog(
                    move_index=log["move_index"],
                    attempts=[MoveAttempt(**a) for a in log["attempts"]],
                    final_san=log["final_san"],
                )
                for log in data["attempt_logs"]
            ],
            evaluations=list(data["evaluations"]),
            engine_evaluations=list(data.get("engine_evaluations", [])),
            termination=data["termination"],
            transcript_ref=data["transcript_ref"],
            move_cap=data["move_cap"],
            sampling=data.get("sampling", "uniform-top3"),
        )


@dataclass
class ProbeRecord:
    source_game_id: str
    fraction: float
    truncated_plies: int
    fen: str
    response: str
    suggested: list[str]
    alignment: bool
    suggestions_valid: bool
    insight: str
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "source_game_id": self.source_game_id,
            "fraction": self.fraction,
            "truncated_plies": self.truncated_plies,
            "fen": self.fen,
            "response": self.response,
            "suggested": list(self.suggested),
            "alignment": self.alignment,
            "suggestions_valid": self.suggestions_valid,
            "insight": self.insight,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProbeRecord":
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaVersionError(
                f"record schema {version!r}, this build reads {SCHEMA_VERSION}")
        fields = {k: v for k, v in data.items()}
        return cls(**fields)
