"""Chat-completion contract and its three interchangeable backends."""

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BackendError, ConfigError, ReplayMissError, ScriptError, UsageError


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str
    image_refs: tuple[str, ...] = ()


@dataclass(frozen=True)
class Usage:
    prompt_chars: int = 0
    completion_chars: int = 0


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[ChatMessage, ...]
    max_tokens: int | None = None
    temperature: float = 0.0
    # requests single-token classification over these labels
    label_alphabet: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.messages:
            raise UsageError("chat request needs at least one message")

    def prompt_chars(self) -> int:
        return sum(len(m.content) + sum(len(r) for r in m.image_refs) for m in self.messages)

    def last_content(self) -> str:
        return self.messages[-1].content


@dataclass(frozen=True)
class ChatResponse:
    text: str
    label_probs: dict | None = None
    usage: Usage = field(default_factory=Usage)

    def __post_init__(self):
        if self.label_probs is not None:
            if any(p < 0 for p in self.label_probs.values()):
                raise UsageError("label probabilities must be nonnegative")
            if sum(self.label_probs.values()) > 1.0 + 1e-9:
                raise UsageError("label probabilities must sum to at most 1")


def request_digest(request: ChatRequest) -> str:
    """Stable content hash; temperature excluded so tweaks don't break stores."""
    payload = {
        "messages": [
            {"role": m.role, "content": m.content, "image_refs": list(m.image_refs)}
            for m in request.messages
        ],
        "max_tokens": request.max_tokens,
        "label_alphabet": list(request.label_alphabet) if request.label_alphabet else None,
    }
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def _response_with_usage(request: ChatRequest, response: ChatResponse) -> ChatResponse:
    return ChatResponse(
        text=response.text,
        label_probs=response.label_probs,
        usage=Usage(prompt_chars=request.prompt_chars(), completion_chars=len(response.text)),
    )


@dataclass
class ScriptEntry:
    """One canned response, fired by call index or by a substring of the last message."""

    response: ChatResponse
    step: int | None = None
    contains: str | None = None

    def __post_init__(self):
        if (self.step is None) == (self.contains is None):
            raise ConfigError("script entry needs exactly one of step / contains")


def _response_from_dict(row: dict) -> ChatResponse:
    return ChatResponse(text=row.get("text", ""), label_probs=row.get("label_probs"))


def load_script(path: str | Path) -> list[ScriptEntry]:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"script file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"script file {path} is not valid JSON: {exc}") from None
    entries = []
    for row in data.get("entries", []):
        entries.append(
            ScriptEntry(
                response=_response_from_dict(row.get("response", {})),
                step=row.get("step"),
                contains=row.get("contains"),
            )
        )
    return entries


class ScriptedBackend:
    """Deterministic backend serving canned responses.

    Step entries fire when their index equals the running call counter and
    take precedence; otherwise the first substring entry (file order) whose
    needle occurs in the last message fires. Substring entries are reusable.
    """

    def __init__(self, entries: list[ScriptEntry]):
        self.entries = list(entries)
        self.calls = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedBackend":
        return cls(load_script(path))

    def complete(self, request: ChatRequest) -> ChatResponse:
        index = self.calls
        self.calls += 1
        for entry in self.entries:
            if entry.step is not None and entry.step == index:
                return _response_with_usage(request, entry.response)
        last = request.last_content()
        for entry in self.entries:
            if entry.contains is not None and entry.contains in last:
                return _response_with_usage(request, entry.response)
        raise ScriptError(
            f"no script entry for call {index}; last message starts with: "
            f"{last[:200]!r}"
        )


class RecordingBackend:
    """Wraps a live backend and writes (digest, response) pairs to a store."""

    def __init__(self, inner, store_path: str | Path):
        self.inner = inner
        self.store_path = Path(store_path)
        self._store: dict[str, list[dict]] = {}
        if self.store_path.exists():
            self._store = json.loads(self.store_path.read_text(encoding="utf-8"))

    def complete(self, request: ChatRequest) -> ChatResponse:
        response = self.inner.complete(request)
        digest = request_digest(request)
        self._store.setdefault(digest, []).append(
            {"text": response.text, "label_probs": response.label_probs}
        )
        self.store_path.write_text(
            json.dumps(self._store, sort_keys=True, indent=1), encoding="utf-8"
        )
        return response


class ReplayBackend:
    """Serves recorded responses; unseen requests fail loudly."""

    def __init__(self, store_path: str | Path):
        path = Path(store_path)
        if not path.exists():
            raise ConfigError(f"replay store not found: {path}")
        self._store = json.loads(path.read_text(encoding="utf-8"))
        self._cursors: dict[str, int] = {}

    def complete(self, request: ChatRequest) -> ChatResponse:
        digest = request_digest(request)
        recorded = self._store.get(digest)
        position = self._cursors.get(digest, 0)
        if not recorded or position >= len(recorded):
            raise ReplayMissError(
                "no recorded response for request digest "
                f"{digest}; request was: {json.dumps([m.content for m in request.messages])[:500]}"
            )
        self._cursors[digest] = position + 1
        return _response_with_usage(request, _response_from_dict(recorded[position]))


REMOTE_URL_ENV = "SHOPCLERK_CHAT_URL"
REMOTE_KEY_ENV = "SHOPCLERK_CHAT_KEY"
REMOTE_MODEL_ENV = "SHOPCLERK_CHAT_MODEL"


class RemoteBackend:
    """JSON-over-HTTP chat client; endpoint and key come from the environment.

    The request body follows the common chat-completions shape; see README
    for the exact field mapping.
    """

    def __init__(self, base_url: str | None = None, api_key: str | None = None,
                 model: str | None = None, session=None):
        self.base_url = base_url or os.environ.get(REMOTE_URL_ENV)
        self.api_key = api_key or os.environ.get(REMOTE_KEY_ENV)
        self.model = model or os.environ.get(REMOTE_MODEL_ENV, "default")
        if not self.base_url:
            raise ConfigError(f"remote backend selected but {REMOTE_URL_ENV} is not set")
        if session is None:
            import requests

            session = requests.Session()
        self.session = session

    def complete(self, request: ChatRequest) -> ChatResponse:
        body = {
            "model": self.model,
            "messages": [
                {"role": m.role, "content": m.content, **({"images": list(m.image_refs)} if m.image_refs else {})}
                for m in request.messages
            ],
            "temperature": request.temperature,
        }
        if request.max_tokens is not None:
            body["max_tokens"] = request.max_tokens
        if request.label_alphabet:
            body["logprobs"] = True
            body["max_tokens"] = 1
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            reply = self.session.post(
                self.base_url.rstrip("/") + "/chat/completions",
                json=body, headers=headers, timeout=60,
            )
            reply.raise_for_status()
            data = reply.json()
        except Exception as exc:
            raise BackendError(f"remote chat call failed: {exc}") from exc
        try:
            choice = data["choices"][0]
            text = choice["message"]["content"] or ""
            label_probs = None
            if request.label_alphabet and choice.get("logprobs"):
                label_probs = _extract_label_probs(choice["logprobs"], request.label_alphabet)
            return ChatResponse(
                text=text,
                label_probs=label_probs,
                usage=Usage(prompt_chars=request.prompt_chars(), completion_chars=len(text)),
            )
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"unexpected remote response shape: {exc}") from exc


def _extract_label_probs(logprobs: dict, alphabet: tuple[str, ...]) -> dict | None:
    """Pull per-label probabilities from a provider logprobs block, if present."""
    import math

    entries = logprobs.get("content") or []
    if not entries:
        return None
    top = entries[0].get("top_logprobs") or []
    probs = {}
    for item in top:
        token = item.get("token", "").strip()
        if token in alphabet:
            probs[token] = probs.get(token, 0.0) + math.exp(item["logprob"])
    return probs or None
