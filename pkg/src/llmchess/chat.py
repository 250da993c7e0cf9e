"""Session-oriented chat-completion client.

One interface, two adapters: a live HTTPS adapter for chat-completion
backends and a deterministic scripted mock for offline runs. A session
owns an ordered transcript with role-alternation enforcement, a side log
of rejected regenerations, and an optional raw event log that records
every request/response before it is returned.
"""
from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from typing import Callable, Protocol

import requests

from .prompts import HistoryPolicy

ROLES = ("system", "user", "assistant")
ANNOTATIONS = ("initial-prompt", "move-prompt", "reasoning", "description",
               "reminder", "extraction-shot")

MOCK_EXHAUSTED_RESPONSE = "(mock script exhausted)"


class ChatError(Exception):
    """Base class for chat-client failures."""


class TransportError(ChatError):
    """Network or backend failure after exhausting retries."""


class ContentPolicyError(ChatError):
    """The backend refused the request on content-policy grounds."""


class TranscriptError(ChatError):
    """An operation would break transcript role alternation."""


@dataclass
class ChatMessage:
    role: str
    content: str
    annotation: str | None = None
    # Replacement content applied when a history policy condenses this
    # message (e.g. a reasoning turn reduced to its bare SAN move).
    condensed: str | None = None

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"bad role: {self.role!r}")
        if not self.content:
            raise ValueError("message content must be non-empty")


@dataclass(frozen=True)
class SamplingParams:
    model: str = "gpt-3.5-turbo-0301"
    temperature: float = 1.0
    top_p: float = 0.9
    max_retries: int = 3
    retry_backoff_s: float = 0.5


LogSink = Callable[[dict], None]


class Adapter(Protocol):
    supports_prefix: bool

    def generate(self, messages: list[ChatMessage], params: SamplingParams,
                 slot_index: int, attempt_index: int,
                 assistant_prefix: str | None = None,
                 log: LogSink | None = None) -> str:
        """Return the assistant continuation for the given context."""


class MockAdapter:
    """Scripted adapter: fully deterministic replay.

    The script is a list of slots, one per assistant turn; each slot is an
    ordered list of alternative responses consumed by regeneration. Attempts
    beyond the last alternative repeat it; slots beyond the script return a
    fixed exhausted marker (which contains no move, so games wind down
    through the illegal-attempt limit).
    """

    supports_prefix = True

    def __init__(self, script: list[list[str]]):
        self.script = [list(slot) for slot in script]

    @classmethod
    def from_file(cls, path: str) -> "MockAdapter":
        """Load a JSON Lines script: one slot per line, each an array of
        alternative responses (a bare string is a one-alternative slot)."""
        script: list[list[str]] = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                if isinstance(entry, str):
                    script.append([entry])
                elif isinstance(entry, list) and all(isinstance(x, str) for x in entry):
                    script.append(entry)
                else:
                    raise ValueError(f"bad mock script entry: {entry!r}")
        return cls(script)

    def generate(self, messages, params, slot_index, attempt_index,
                 assistant_prefix=None, log=None):
        if slot_index >= len(self.script):
            return MOCK_EXHAUSTED_RESPONSE
        slot = self.script[slot_index]
        return slot[min(attempt_index, len(slot) - 1)]


class LiveAdapter:
    """JSON chat-completions over HTTPS.

    Credentials come from the environment; a shared minimum interval
    between requests rate-limits all sessions using this adapter. One call
    is one request; retrying lives in the session.
    """

    supports_prefix = False

    def __init__(self, endpoint: str, model: str | None = None,
                 api_key_env: str = "LLMCHESS_API_KEY",
                 timeout_s: float = 120.0, min_interval_s: float = 0.0):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s
        self.min_interval_s = min_interval_s
        self._lock = threading.Lock()
        self._last_request = 0.0

    def _throttle(self) -> None:
        with self._lock:
            wait = self._last_request + self.min_interval_s - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last_request = time.monotonic()

    def generate(self, messages, params, slot_index, attempt_index,
                 assistant_prefix=None, log=None):
        payload = {
            "model": self.model or params.model,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": params.temperature,
            "top_p": params.top_p,
        }
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"

        if log:
            log({"event": "request", "endpoint": self.endpoint, "body": payload,
                 "slot": slot_index, "attempt": attempt_index})
        self._throttle()
        try:
            response = requests.post(self.endpoint, json=payload,
                                     headers=headers, timeout=self.timeout_s)
        except requests.RequestException as exc:
            raise TransportError(f"request failed: {exc}") from exc

        body_text = response.text
        if log:
            log({"event": "response", "status": response.status_code, "body": body_text})

        if response.status_code == 400 and "content_policy" in body_text:
            raise ContentPolicyError(body_text[:500])
        if response.status_code >= 400:
            raise TransportError(f"HTTP {response.status_code}: {body_text[:500]}")
        try:
            data = response.json()
            choice = data["choices"][0]
            if choice.get("finish_reason") == "content_filter":
                raise ContentPolicyError("response ended by content filter")
            return choice["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise TransportError(f"malformed response body: {body_text[:500]}") from exc


@dataclass
class SideLogEntry:
    slot: int
    attempt: int
    content: str


class ChatSession:
    """One conversation bound to an adapter and frozen sampling parameters."""

    def __init__(self, adapter: Adapter, params: SamplingParams = SamplingParams(),
                 raw_log: LogSink | None = None):
        self.adapter = adapter
        self.params = params
        self.transcript: list[ChatMessage] = []
        self.side_log: list[SideLogEntry] = []
        self.total_retries = 0
        self._raw_log = raw_log
        self._slot = -1
        self._attempt = 0
        self._slot_prefix: str | None = None

    # --- transcript maintenance ---

    def _log(self, event: dict) -> None:
        if self._raw_log:
            self._raw_log(event)

    def _check_append(self, message: ChatMessage) -> None:
        if message.role == "system":
            if self.transcript:
                raise TranscriptError("system message must come first")
            return
        last_role = self.transcript[-1].role if self.transcript else None
        if message.role == "assistant" and last_role in (None, "system"):
            raise TranscriptError("assistant message cannot start the conversation")
        if message.role == last_role:
            raise TranscriptError(f"two {message.role} messages in a row")

    def append(self, message: ChatMessage) -> None:
        self._check_append(message)
        self.transcript.append(message)

    def validate_roles(self) -> None:
        probe = ChatSession(self.adapter, self.params)
        for message in self.transcript:
            probe._check_append(message)
            probe.transcript.append(message)

    # --- completion ---

    def _request(self, assistant_prefix: str | None) -> str:
        context = self.transcript
        prefix_for_adapter = assistant_prefix
        if assistant_prefix and not self.adapter.supports_prefix:
            # Backend cannot continue a partial assistant turn: ship the
            # prefix as the tail of the last user message instead.
            context = list(self.transcript)
            last = context[-1]
            context[-1] = ChatMessage(last.role, f"{last.content}\n{assistant_prefix}",
                                      annotation=last.annotation)
            prefix_for_adapter = None
            self._log({"event": "prefix-fallback", "slot": self._slot,
                       "prefix": assistant_prefix})

        self._log({"event": "request", "slot": self._slot, "attempt": self._attempt,
                   "messages": [{"role": m.role, "content": m.content} for m in context],
                   "prefix": prefix_for_adapter})
        retries_left = self.params.max_retries
        while True:
            try:
                text = self.adapter.generate(
                    context, self.params, self._slot, self._attempt,
                    assistant_prefix=prefix_for_adapter, log=self._raw_log)
                break
            except TransportError:
                if retries_left <= 0:
                    raise
                retries_left -= 1
                self.total_retries += 1
                backoff = self.params.retry_backoff_s * \
                    2 ** (self.params.max_retries - retries_left - 1)
                self._log({"event": "retry", "slot": self._slot,
                           "remaining": retries_left})
                time.sleep(backoff)
        stored = (assistant_prefix + text) if assistant_prefix else text
        self._log({"event": "response", "slot": self._slot,
                   "attempt": self._attempt, "content": stored})
        return stored

    def complete(self, new_messages: list[ChatMessage],
                 assistant_prefix: str | None = None,
                 prune_policy: HistoryPolicy | None = None) -> str:
        """Append messages, optionally prune, sample a response, and store it."""
        for message in new_messages:
            self.append(message)
        if prune_policy is not None:
            self.prune(prune_policy)
        self._slot += 1
        self._attempt = 0
        self._slot_prefix = assistant_prefix
        text = self._request(assistant_prefix)
        self.append(ChatMessage("assistant", text))
        return text

    def regenerate(self) -> str:
        """Replace the last assistant message with a fresh sample.

        The rejected response moves to the side log; transcript length is
        unchanged.
        """
        if not self.transcript or self.transcript[-1].role != "assistant":
            raise TranscriptError("nothing to regenerate: last message not assistant")
        rejected = self.transcript.pop()
        self.side_log.append(SideLogEntry(self._slot, self._attempt, rejected.content))
        self._attempt += 1
        text = self._request(self._slot_prefix)
        self.append(ChatMessage("assistant", text, annotation=rejected.annotation))
        return text

    # --- history policies ---

    def prune(self, policy: HistoryPolicy) -> None:
        """Rewrite the transcript per the policy; alternation is preserved
        because condensing replaces content rather than dropping messages."""
        if policy.kind == "keep-all":
            return
        tag = "reasoning" if policy.kind == "keep-reasoning" else "description"
        tagged = [m for m in self.transcript if m.annotation == tag]
        for message in tagged[:-policy.n] if policy.n else tagged:
            if message.condensed:
                message.content = message.condensed
        self.validate_roles()


def create_session(adapter: Adapter, params: SamplingParams = SamplingParams(),
                   raw_log: LogSink | None = None) -> ChatSession:
    """Fresh session with an empty transcript and frozen parameters."""
    return ChatSession(adapter, params, raw_log)
