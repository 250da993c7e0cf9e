"""Chat session behavior: mock determinism, regeneration, pruning, retries."""
from __future__ import annotations

import json

import pytest

from llmchess.chat import (
    ChatMessage,
    ChatSession,
    MockAdapter,
    SamplingParams,
    TranscriptError,
    TransportError,
    create_session,
)
from llmchess.prompts import HistoryPolicy

FAST_PARAMS = SamplingParams(retry_backoff_s=0.0)


def _user(text, annotation=None, condensed=None):
    return ChatMessage("user", text, annotation=annotation, condensed=condensed)


def test_create_session_defaults():
    session = create_session(MockAdapter([]))
    assert session.params.temperature == 1.0
    assert session.params.top_p == 0.9
    assert session.transcript == []


def test_mock_script_replay():
    session = create_session(MockAdapter([["e5"], ["Nf6"]]))
    assert session.complete([_user("Move: e4")]) == "e5"
    assert session.complete([_user("Move: Nf3")]) == "Nf6"


def test_mock_exhausted_script_returns_marker():
    session = create_session(MockAdapter([["e5"]]))
    session.complete([_user("a")])
    text = session.complete([_user("b")])
    assert text == "(mock script exhausted)"


def test_regenerate_walks_alternatives_and_keeps_side_log():
    session = create_session(MockAdapter([["xx", "yy", "zz"]]))
    assert session.complete([_user("go")]) == "xx"
    before = len(session.transcript)
    assert session.regenerate() == "yy"
    assert session.regenerate() == "zz"
    assert session.regenerate() == "zz"  # past the end repeats the last
    assert len(session.transcript) == before
    assert [entry.content for entry in session.side_log] == ["xx", "yy", "zz"]
    assert [entry.attempt for entry in session.side_log] == [0, 1, 2]


def test_regenerate_requires_assistant_tail():
    session = create_session(MockAdapter([["a"]]))
    with pytest.raises(TranscriptError):
        session.regenerate()


def test_assistant_prefix_is_stored_verbatim():
    session = create_session(MockAdapter([[" I should play e5."]]))
    text = session.complete([_user("go")], assistant_prefix="Let's think step by step.")
    assert text.startswith("Let's think step by step.")
    assert session.transcript[-1].content == "Let's think step by step. I should play e5."


def test_prefix_fallback_when_adapter_cannot_continue():
    class NoPrefixMock(MockAdapter):
        supports_prefix = False

    events = []
    session = ChatSession(NoPrefixMock([["done"]]), raw_log=events.append)
    text = session.complete([_user("please move")], assistant_prefix="Think:")
    assert text == "Think:done"
    assert any(e["event"] == "prefix-fallback" for e in events)
    # the prefix rode along in the request context, not the transcript
    request = next(e for e in events if e["event"] == "request")
    assert request["messages"][-1]["content"].endswith("Think:")
    assert session.transcript[0].content == "please move"


def test_role_alternation_enforced():
    session = create_session(MockAdapter([["ok"]]))
    session.append(ChatMessage("system", "rules"))
    session.append(_user("hi"))
    with pytest.raises(TranscriptError):
        session.append(_user("again"))
    with pytest.raises(TranscriptError):
        session.append(ChatMessage("system", "late system"))
    fresh = create_session(MockAdapter([]))
    with pytest.raises(TranscriptError):
        fresh.append(ChatMessage("assistant", "first"))


def test_transport_retry_then_success():
    class Flaky(MockAdapter):
        def __init__(self, script, failures):
            super().__init__(script)
            self.failures = failures
            self.calls = 0

        def generate(self, *args, **kwargs):
            self.calls += 1
            if self.calls <= self.failures:
                raise TransportError("boom")
            return super().generate(*args, **kwargs)

    session = ChatSession(Flaky([["recovered"]], failures=2), params=FAST_PARAMS)
    assert session.complete([_user("go")]) == "recovered"
    assert session.total_retries == 2


def test_transport_failure_surfaces_after_cap():
    class Dead(MockAdapter):
        def generate(self, *args, **kwargs):
            raise TransportError("down")

    session = ChatSession(Dead([]), params=FAST_PARAMS)
    with pytest.raises(TransportError):
        session.complete([_user("go")])
    assert session.total_retries == FAST_PARAMS.max_retries


def test_prune_keep_reasoning_condenses_oldest():
    script = [[f"analysis {i}: play move {i}"] for i in range(10)]
    session = create_session(MockAdapter(script))
    for i in range(10):
        session.complete([_user(f"Move: m{i}", annotation="move-prompt")])
        reply = session.transcript[-1]
        reply.annotation = "reasoning"
        reply.condensed = f"san{i}"
    session.prune(HistoryPolicy("keep-reasoning", 8))
    reasoning = [m for m in session.transcript if m.annotation == "reasoning"]
    assert [m.content for m in reasoning[:2]] == ["san0", "san1"]
    assert all(m.content.startswith("analysis") for m in reasoning[2:])


def test_prune_keep_description_keeps_only_newest():
    session = create_session(MockAdapter([["a"]] * 5))
    for i in range(5):
        session.complete([_user(f"Move: x\ndescription {i}",
                                annotation="description",
                                condensed="Move: x")])
    session.prune(HistoryPolicy("keep-description", 1))
    described = [m for m in session.transcript if m.annotation == "description"]
    assert [m.content for m in described[:4]] == ["Move: x"] * 4
    assert described[4].content == "Move: x\ndescription 4"


def test_prune_keep_all_is_noop():
    session = create_session(MockAdapter([["a"]]))
    session.complete([_user("hello", annotation="description", condensed="h")])
    snapshot = [(m.role, m.content) for m in session.transcript]
    session.prune(HistoryPolicy("keep-all"))
    assert [(m.role, m.content) for m in session.transcript] == snapshot


def test_mock_determinism_byte_identical():
    def run():
        session = create_session(MockAdapter([["a", "b"], ["c"]]))
        session.complete([_user("one")])
        session.regenerate()
        session.complete([_user("two")])
        return json.dumps([[m.role, m.content] for m in session.transcript])

    assert run() == run()


def test_mock_script_from_file(tmp_path):
    path = tmp_path / "script.jsonl"
    path.write_text('["e5", "d5"]\n"Nf6"\n\n["c5"]\n')
    adapter = MockAdapter.from_file(str(path))
    assert adapter.script == [["e5", "d5"], ["Nf6"], ["c5"]]


def test_mock_script_rejects_bad_entries(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"not": "a slot"}\n')
    with pytest.raises(ValueError):
        MockAdapter.from_file(str(path))
