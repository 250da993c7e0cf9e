"""Variation catalog: prompt templates and conversation-history policies.

The nine experiment variations are data, not code: each is a catalog entry
of templates with named placeholders plus policy fields. The shipped
catalog can be replaced by a user-edited file; whatever is loaded gets
hashed into every game record for attribution.
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, replace
from importlib import resources

import yaml

from . import chesscore as cc
from .describe import describe_board

OPENING_MOVES = ("e4", "d4", "Nf3", "e3")

REASONING_MODES = ("none", "simple", "cot")
EXTRACTION_MODES = ("direct", "llm-assisted")
REGENERATION_MODES = ("resample", "reminder-append")

COT_PREFIX = "Let's think step by step."

_POLICY_RE = re.compile(r"^(keep-all|keep-reasoning|keep-description)(?:\((\d+)\))?$")


class CatalogError(ValueError):
    """Malformed or inconsistent variation catalog."""


@dataclass(frozen=True)
class HistoryPolicy:
    """What the transcript keeps: everything, or the newest n tagged turns."""

    kind: str
    n: int | None = None

    @classmethod
    def parse(cls, text: str) -> "HistoryPolicy":
        m = _POLICY_RE.match(text.strip())
        if not m:
            raise CatalogError(f"bad history policy: {text!r}")
        kind, n = m.group(1), m.group(2)
        if kind == "keep-all":
            if n is not None:
                raise CatalogError("keep-all takes no count")
            return cls("keep-all")
        if n is None or int(n) < 1:
            raise CatalogError(f"{kind} needs a count >= 1")
        return cls(kind, int(n))

    def __str__(self) -> str:
        return self.kind if self.n is None else f"{self.kind}({self.n})"


@dataclass(frozen=True)
class VariationConfig:
    """One experiment variation, fully describing its prompting behavior."""

    variation_id: str
    initial_template: str
    move_template: str
    history_policy: HistoryPolicy
    reasoning_mode: str
    extraction_mode: str
    regeneration_mode: str
    retry_template: str | None = None
    initial_role: str = "user"

    def __post_init__(self) -> None:
        if self.reasoning_mode not in REASONING_MODES:
            raise CatalogError(f"bad reasoning mode: {self.reasoning_mode!r}")
        if self.extraction_mode not in EXTRACTION_MODES:
            raise CatalogError(f"bad extraction mode: {self.extraction_mode!r}")
        if self.regeneration_mode not in REGENERATION_MODES:
            raise CatalogError(f"bad regeneration mode: {self.regeneration_mode!r}")
        if self.initial_role not in ("user", "system"):
            raise CatalogError(f"bad initial role: {self.initial_role!r}")
        if self.regeneration_mode == "reminder-append" and not self.retry_template:
            raise CatalogError(
                f"{self.variation_id}: reminder-append needs a retry template")


# Field constraints the named variations must satisfy.
_RESERVED_CONSTRAINTS = {
    "Move-IlgRem": lambda v: v.regeneration_mode == "reminder-append",
    "Rsn-Simple": lambda v: v.extraction_mode == "llm-assisted",
    "Rsn-CoT": lambda v: v.extraction_mode == "llm-assisted",
    "Rsn-DropCoT": lambda v: v.extraction_mode == "llm-assisted",
    "Dsc-Base": lambda v: v.history_policy == HistoryPolicy("keep-description", 1),
}


def _asset_text(name: str) -> str:
    return (resources.files("llmchess") / "assets" / name).read_text(encoding="utf-8")


def rules_summary() -> str:
    """The shipped rules-of-chess summary used by the Int-Rules variation."""
    return _asset_text("rules_summary.txt").strip()


def extraction_shots() -> tuple[str, list[tuple[str, str]]]:
    """Instruction plus the eight example pairs for move extraction."""
    data = json.loads(_asset_text("extraction_shots.json"))
    return data["instruction"], [(e["input"], e["output"]) for e in data["examples"]]


def load_catalog(path: str | None = None, *, correct_typo: bool = False) -> dict[str, VariationConfig]:
    """Load a variation catalog from `path` or the packaged default.

    With `correct_typo`, the verbatim "is a follows" wording in templates
    is normalized to "is as follows" before use (and before hashing).
    """
    if path is None:
        raw = yaml.safe_load(_asset_text("variations.yaml"))
    else:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    if not isinstance(raw, dict) or "variations" not in raw:
        raise CatalogError("catalog must be a mapping with a 'variations' key")

    catalog: dict[str, VariationConfig] = {}
    for vid, entry in raw["variations"].items():
        try:
            config = VariationConfig(
                variation_id=vid,
                initial_template=entry["initial_template"],
                move_template=entry["move_template"],
                retry_template=entry.get("retry_template"),
                history_policy=HistoryPolicy.parse(entry.get("history_policy", "keep-all")),
                reasoning_mode=entry.get("reasoning_mode", "none"),
                extraction_mode=entry.get("extraction_mode", "direct"),
                regeneration_mode=entry.get("regeneration_mode", "resample"),
                initial_role=entry.get("initial_role", "user"),
            )
        except KeyError as exc:
            raise CatalogError(f"{vid}: missing field {exc}") from None
        if correct_typo:
            config = replace(
                config,
                move_template=config.move_template.replace("is a follows", "is as follows"),
            )
        check = _RESERVED_CONSTRAINTS.get(vid)
        if check and not check(config):
            raise CatalogError(f"{vid} violates its required field constraints")
        catalog[vid] = config
    return catalog


def variation(variation_id: str, path: str | None = None) -> VariationConfig:
    catalog = load_catalog(path)
    try:
        return catalog[variation_id]
    except KeyError:
        raise CatalogError(f"unknown variation id: {variation_id!r}") from None


def movetext(sans: list[str] | tuple[str, ...]) -> str:
    """Numbered SAN movetext: "1. Nf3 d5 2. d4 e6"."""
    parts = []
    for i, san in enumerate(sans):
        if i % 2 == 0:
            parts.append(f"{i // 2 + 1}. {san}")
        else:
            parts.append(san)
    return " ".join(parts)


def initial_prompt(config: VariationConfig, opening: str) -> str:
    """The game-opening prompt with white's sampled first move filled in."""
    if opening not in OPENING_MOVES:
        raise ValueError(f"opening must be one of {OPENING_MOVES}, got {opening!r}")
    fields = {"opening": opening}
    if "{rules_summary}" in config.initial_template:
        fields["rules_summary"] = rules_summary()
    return config.initial_template.format(**fields)


def _move_fields(template: str, san: str,
                 previous_moves: tuple[str, ...] | list[str],
                 board: cc.BoardState | None) -> dict[str, str]:
    fields = {"san": san}
    if "{previous_moves}" in template:
        fields["previous_moves"] = movetext(previous_moves)
    if "{description}" in template:
        if board is None:
            raise ValueError("this template needs the board to describe")
        fields["description"] = describe_board(board)
    return fields


def move_prompt(config: VariationConfig, san: str,
                previous_moves: tuple[str, ...] | list[str] = (),
                board: cc.BoardState | None = None) -> str:
    """Per-move prompt announcing the engine's move.

    `previous_moves` holds the SAN plies played before this move; `board`
    is the position after it (used by description templates).
    """
    return config.move_template.format(
        **_move_fields(config.move_template, san, previous_moves, board))


def retry_prompt(config: VariationConfig, san: str, illegal_attempts: list[str],
                 previous_moves: tuple[str, ...] | list[str] = (),
                 board: cc.BoardState | None = None) -> str:
    """Reminder prompt listing this move's illegal attempts so far."""
    if not config.retry_template:
        raise ValueError(f"{config.variation_id} has no retry template")
    deduped: list[str] = []
    for attempt in illegal_attempts:
        if attempt not in deduped:
            deduped.append(attempt)
    fields = _move_fields(config.retry_template, san, previous_moves, board)
    fields["illegal_moves"] = ", ".join(deduped)
    return config.retry_template.format(**fields)


def config_hash(config: VariationConfig) -> str:
    """Stable digest of the variation plus every fixture it references."""
    payload = {
        "variation_id": config.variation_id,
        "initial_template": config.initial_template,
        "move_template": config.move_template,
        "retry_template": config.retry_template,
        "history_policy": str(config.history_policy),
        "reasoning_mode": config.reasoning_mode,
        "extraction_mode": config.extraction_mode,
        "regeneration_mode": config.regeneration_mode,
        "initial_role": config.initial_role,
        "rules_summary": rules_summary(),
        "extraction_shots": extraction_shots(),
    }
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
