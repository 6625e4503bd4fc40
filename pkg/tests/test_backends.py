import json

import pytest

from shopclerk.backends import (
    ChatMessage,
    ChatRequest,
    ChatResponse,
    RecordingBackend,
    RemoteBackend,
    ReplayBackend,
    ScriptedBackend,
    ScriptEntry,
    load_script,
    request_digest,
)
from shopclerk.errors import BackendError, ConfigError, ReplayMissError, ScriptError, UsageError


def req(text: str, labels=None) -> ChatRequest:
    return ChatRequest(messages=(ChatMessage("user", text),),
                       label_alphabet=tuple(labels) if labels else None)


def test_step_entries_serve_in_order():
    backend = ScriptedBackend([
        ScriptEntry(response=ChatResponse(text="plans JSON"), step=0),
        ScriptEntry(response=ChatResponse(text="B"), step=1),
    ])
    assert backend.complete(req("one")).text == "plans JSON"
    assert backend.complete(req("two")).text == "B"


def test_script_exhaustion_names_request():
    backend = ScriptedBackend([
        ScriptEntry(response=ChatResponse(text="a"), step=0),
        ScriptEntry(response=ChatResponse(text="b"), step=1),
    ])
    backend.complete(req("one"))
    backend.complete(req("two"))
    with pytest.raises(ScriptError, match="third message"):
        backend.complete(req("the third message"))


def test_step_matcher_beats_substring():
    backend = ScriptedBackend([
        ScriptEntry(response=ChatResponse(text="by-substring"), contains="hello"),
        ScriptEntry(response=ChatResponse(text="by-step"), step=0),
    ])
    assert backend.complete(req("hello world")).text == "by-step"
    assert backend.complete(req("hello world")).text == "by-substring"


def test_first_substring_match_in_file_order():
    backend = ScriptedBackend([
        ScriptEntry(response=ChatResponse(text="first"), contains="kettle"),
        ScriptEntry(response=ChatResponse(text="second"), contains="red kettle"),
    ])
    assert backend.complete(req("a red kettle please")).text == "first"


def test_substring_matches_last_message_only():
    backend = ScriptedBackend([
        ScriptEntry(response=ChatResponse(text="hit"), contains="needle"),
    ])
    request = ChatRequest(messages=(
        ChatMessage("system", "the needle is here"),
        ChatMessage("user", "nothing relevant"),
    ))
    with pytest.raises(ScriptError):
        backend.complete(request)


def test_label_probs_pass_through():
    backend = ScriptedBackend([
        ScriptEntry(response=ChatResponse(text="B", label_probs={"A": 0.25, "B": 0.75}), step=0),
    ])
    response = backend.complete(req("score", labels=("A", "B")))
    assert response.label_probs == {"A": 0.25, "B": 0.75}


def test_usage_counts_prompt_and_completion_chars():
    backend = ScriptedBackend([ScriptEntry(response=ChatResponse(text="12345"), step=0)])
    response = backend.complete(req("abcdefgh"))
    assert response.usage.prompt_chars == 8
    assert response.usage.completion_chars == 5


def test_entry_needs_exactly_one_matcher():
    with pytest.raises(ConfigError):
        ScriptEntry(response=ChatResponse(text="x"))
    with pytest.raises(ConfigError):
        ScriptEntry(response=ChatResponse(text="x"), step=0, contains="y")


def test_label_probs_validation():
    with pytest.raises(UsageError):
        ChatResponse(text="A", label_probs={"A": -0.1})
    with pytest.raises(UsageError):
        ChatResponse(text="A", label_probs={"A": 0.8, "B": 0.5})


def test_request_needs_messages():
    with pytest.raises(UsageError):
        ChatRequest(messages=())


def test_load_script_missing_file():
    with pytest.raises(ConfigError):
        load_script("/nonexistent/script.json")


# --- digests and record/replay ---


def test_digest_stable_across_serializations():
    a = req("same content", labels=("A", "B"))
    b = req("same content", labels=("A", "B"))
    assert request_digest(a) == request_digest(b)


def test_digest_ignores_temperature():
    a = ChatRequest(messages=(ChatMessage("user", "x"),), temperature=0.0)
    b = ChatRequest(messages=(ChatMessage("user", "x"),), temperature=0.9)
    assert request_digest(a) == request_digest(b)


def test_digest_differs_on_content():
    assert request_digest(req("one")) != request_digest(req("two"))


def test_record_then_replay_round_trip(tmp_path):
    store = tmp_path / "store.json"
    scripted = ScriptedBackend([
        ScriptEntry(response=ChatResponse(text=f"reply {i}"), step=i) for i in range(5)
    ])
    recorder = RecordingBackend(scripted, store)
    requests = [req(f"prompt {i}") for i in range(5)]
    recorded = [recorder.complete(r).text for r in requests]

    replay = ReplayBackend(store)
    replayed = [replay.complete(r).text for r in requests]
    assert replayed == recorded
    assert scripted.calls == 5  # replay made no calls against the inner backend


def test_replay_miss_on_mutated_prompt(tmp_path):
    store = tmp_path / "store.json"
    recorder = RecordingBackend(
        ScriptedBackend([ScriptEntry(response=ChatResponse(text="hi"), step=0)]), store
    )
    recorder.complete(req("original"))
    replay = ReplayBackend(store)
    with pytest.raises(ReplayMissError, match="mutated"):
        replay.complete(req("mutated"))


def test_replay_same_digest_served_in_recorded_order(tmp_path):
    store = tmp_path / "store.json"
    scripted = ScriptedBackend([
        ScriptEntry(response=ChatResponse(text="first"), step=0),
        ScriptEntry(response=ChatResponse(text="second"), step=1),
    ])
    recorder = RecordingBackend(scripted, store)
    recorder.complete(req("same"))
    recorder.complete(req("same"))
    replay = ReplayBackend(store)
    assert replay.complete(req("same")).text == "first"
    assert replay.complete(req("same")).text == "second"
    with pytest.raises(ReplayMissError):
        replay.complete(req("same"))


def test_replay_requires_existing_store(tmp_path):
    with pytest.raises(ConfigError):
        ReplayBackend(tmp_path / "missing.json")


# --- remote client against a fake transport ---


class FakeSession:
    def __init__(self, payloads):
        self.payloads = list(payloads)
        self.requests = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.requests.append({"url": url, "json": json, "headers": headers})
        item = self.payloads.pop(0)
        if isinstance(item, Exception):
            raise item
        return item


class FakeReply:
    def __init__(self, data, status=200):
        self.data = data
        self.status = status

    def raise_for_status(self):
        if self.status >= 400:
            raise RuntimeError(f"http {self.status}")

    def json(self):
        return self.data


def test_remote_backend_maps_chat_response(monkeypatch):
    monkeypatch.setenv("SHOPCLERK_CHAT_URL", "https://llm.internal")
    monkeypatch.setenv("SHOPCLERK_CHAT_KEY", "sk-test")
    session = FakeSession([FakeReply({"choices": [{"message": {"content": "howdy"}}]})])
    backend = RemoteBackend(session=session)
    response = backend.complete(req("hello"))
    assert response.text == "howdy"
    assert response.usage.prompt_chars == 5
    sent = session.requests[0]
    assert sent["url"] == "https://llm.internal/chat/completions"
    assert sent["headers"]["Authorization"] == "Bearer sk-test"
    assert sent["json"]["messages"][0]["content"] == "hello"


def test_remote_backend_transport_failure(monkeypatch):
    monkeypatch.setenv("SHOPCLERK_CHAT_URL", "https://llm.internal")
    session = FakeSession([RuntimeError("connection reset")])
    backend = RemoteBackend(session=session)
    with pytest.raises(BackendError, match="connection reset"):
        backend.complete(req("hello"))


def test_remote_backend_requires_url(monkeypatch):
    monkeypatch.delenv("SHOPCLERK_CHAT_URL", raising=False)
    with pytest.raises(ConfigError):
        RemoteBackend(session=FakeSession([]))


def test_remote_backend_bad_shape(monkeypatch):
    monkeypatch.setenv("SHOPCLERK_CHAT_URL", "https://llm.internal")
    session = FakeSession([FakeReply({"unexpected": True})])
    backend = RemoteBackend(session=session)
    with pytest.raises(BackendError):
        backend.complete(req("hello"))


def test_script_file_round_trip(tmp_path):
    payload = {"entries": [
        {"step": 0, "response": {"text": "plans"}},
        {"contains": "pick", "response": {"text": "A", "label_probs": {"A": 1.0}}},
    ]}
    path = tmp_path / "s.json"
    path.write_text(json.dumps(payload))
    backend = ScriptedBackend.from_file(path)
    assert backend.complete(req("anything")).text == "plans"
    assert backend.complete(req("pick one")).label_probs == {"A": 1.0}
