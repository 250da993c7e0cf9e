"""Move extraction from free-text model responses.

Two paths share one result type: a deterministic scanner that takes the
last SAN-shaped token in the text, and a few-shot LLM pass used by the
reasoning variations, which falls back to the scanner when the helper
model returns something that is not SAN-shaped.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

from .chat import ChatMessage, ChatSession
from .prompts import extraction_shots

# SAN-shaped tokens; the boundaries keep square names inside words (or
# rating-like digit runs) from matching.
SAN_TOKEN = (
    r"(?:[O0]-[O0](?:-[O0])?"
    r"|[KQRBN][a-h]?[1-8]?x?[a-h][1-8]"
    r"|[a-h]x[a-h][1-8](?:=?[QRBN])?"
    r"|[a-h][1-8](?:=?[QRBN])?)"
)
_SCAN_RE = re.compile(
    rf"(?<![A-Za-z0-9=/])({SAN_TOKEN})[+#]?(?![A-Za-z0-9=])")
_FULL_RE = re.compile(rf"({SAN_TOKEN})[+#]?")


@dataclass(frozen=True)
class ExtractionResult:
    candidate: str | None
    method: str  # direct | llm-assisted
    raw: str
    tokens: tuple[str, ...]
    fallback_used: bool = False


def san_tokens(text: str) -> tuple[str, ...]:
    """All SAN-shaped tokens in reading order, check suffixes stripped."""
    return tuple(m.group(1) for m in _SCAN_RE.finditer(text))


def is_san_shaped(text: str) -> bool:
    return bool(_FULL_RE.fullmatch(text.strip().rstrip(".").strip()))


def extract_direct(response: str) -> ExtractionResult:
    """Deterministic scan; the candidate is the last SAN-shaped token.

    When a response lists options and then decides, the decision comes
    last, so the final token is taken as the intended move.
    """
    tokens = san_tokens(response)
    return ExtractionResult(
        candidate=tokens[-1] if tokens else None,
        method="direct",
        raw=response,
        tokens=tokens,
    )


def extract_llm(response: str,
                extractor_session_factory: Callable[[], ChatSession]) -> ExtractionResult:
    """Few-shot LLM extraction with a fresh helper session per call.

    The helper is seeded with the shipped eight example pairs. A reply
    that is not SAN-shaped triggers a fallback to the direct scanner.
    """
    instruction, examples = extraction_shots()
    session = extractor_session_factory()
    messages = [ChatMessage("system", instruction, annotation="extraction-shot")]
    for shot_input, shot_output in examples:
        messages.append(ChatMessage("user", shot_input, annotation="extraction-shot"))
        messages.append(ChatMessage("assistant", shot_output, annotation="extraction-shot"))
    # seed the dialogue, then ask about the real response
    for message in messages:
        session.append(message)
    reply = session.complete([ChatMessage("user", response)])

    candidate = reply.strip().rstrip(".").strip()
    if is_san_shaped(candidate):
        return ExtractionResult(
            candidate=_FULL_RE.fullmatch(candidate).group(1),
            method="llm-assisted",
            raw=response,
            tokens=san_tokens(response),
        )
    direct = extract_direct(response)
    return ExtractionResult(
        candidate=direct.candidate,
        method="llm-assisted",
        raw=response,
        tokens=direct.tokens,
        fallback_used=True,
    )
