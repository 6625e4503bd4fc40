"""Dialogue working memory and the namespaced long-term knowledge store."""

import json
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import SchemaError, SequencingError, UsageError

ELISION_MARKER = "[earlier turns omitted]"


class Role(str, Enum):
    BUYER = "buyer"
    AGENT = "agent"
    TOOL = "tool"
    SYSTEM = "system"


class PartKind(str, Enum):
    TEXT = "text"
    IMAGE_REF = "image_ref"
    PLACEHOLDER = "placeholder"


@dataclass(frozen=True)
class ContentPart:
    kind: PartKind
    value: str

    def __post_init__(self):
        if self.kind is PartKind.IMAGE_REF and not self.value.startswith(("http://", "https://")):
            raise SchemaError(f"image_ref value is not a URL: {self.value!r}")


@dataclass(frozen=True)
class Message:
    role: Role
    parts: tuple[ContentPart, ...]
    turn_index: int
    timestamp: int = 0

    def __post_init__(self):
        if not self.parts:
            raise SchemaError("message must carry at least one content part")
        if self.turn_index < 0:
            raise SchemaError("turn_index must be non-negative")
        object.__setattr__(self, "parts", tuple(self.parts))

    def text(self) -> str:
        """Concatenation of all part values, image refs and placeholders inline."""
        return "".join(p.value for p in self.parts)


def text_message(role: Role, text: str, turn_index: int, timestamp: int = 0) -> Message:
    return Message(role, (ContentPart(PartKind.TEXT, text),), turn_index, timestamp)


class WorkingMemory:
    """Append-only per-session transcript."""

    def __init__(self, session_id: str):
        self.session_id = session_id
        self._turns: list[Message] = []

    @property
    def turns(self) -> tuple[Message, ...]:
        return tuple(self._turns)

    def __len__(self) -> int:
        return len(self._turns)

    def append_turn(self, msg: Message) -> None:
        if msg.turn_index != len(self._turns):
            raise SequencingError(
                f"expected turn_index {len(self._turns)}, got {msg.turn_index}"
            )
        self._turns.append(msg)


def render_turn(msg: Message) -> str:
    return f"[{msg.role.value}] {msg.text()}"


def render_context(wm: WorkingMemory, budget: int) -> str:
    """Render the transcript as role-tagged lines within a character budget.

    The most recent turns are always kept; when the full transcript does not
    fit, whole oldest turns are dropped and ELISION_MARKER is prepended.
    """
    if budget <= 0:
        raise UsageError(f"render budget must be positive, got {budget}")
    lines = [render_turn(m) for m in wm.turns]
    if not lines:
        return ""
    full = "\n".join(lines)
    if len(full) <= budget:
        return full
    kept: list[str] = []
    total = len(ELISION_MARKER)
    for line in reversed(lines):
        cost = len(line) + 1  # newline joining it to the block above
        if total + cost > budget:
            break
        kept.append(line)
        total += cost
    if not kept:
        return ELISION_MARKER if len(ELISION_MARKER) <= budget else ""
    return "\n".join([ELISION_MARKER] + list(reversed(kept)))


# --- transcript persistence (one JSON object per line, append-only) ---


def message_to_dict(msg: Message, session_id: str) -> dict:
    return {
        "session_id": session_id,
        "turn_index": msg.turn_index,
        "role": msg.role.value,
        "timestamp": msg.timestamp,
        "parts": [{"kind": p.kind.value, "value": p.value} for p in msg.parts],
    }


def message_from_dict(row: dict) -> Message:
    parts = tuple(ContentPart(PartKind(p["kind"]), p["value"]) for p in row["parts"])
    return Message(Role(row["role"]), parts, row["turn_index"], row.get("timestamp", 0))


def write_transcript(wm: WorkingMemory, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for msg in wm.turns:
            fh.write(json.dumps(message_to_dict(msg, wm.session_id), sort_keys=True))
            fh.write("\n")


def read_transcript(path: str | Path) -> WorkingMemory:
    wm: WorkingMemory | None = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            if wm is None:
                wm = WorkingMemory(row["session_id"])
            wm.append_turn(message_from_dict(row))
    return wm if wm is not None else WorkingMemory("empty")


# --- long-term store ---


class Namespace(str, Enum):
    PLATFORM_POLICY = "platform_policy"
    STORE_PROMOTION = "store_promotion"
    PRODUCT = "product"
    ORDER = "order"
    LOGISTICS = "logistics"
    BUYER_PROFILE = "buyer_profile"


@dataclass
class Document:
    key: str
    body: object  # structured map or plain text
    updated_at: int = 0


def _flatten_tokens(body: object) -> set[str]:
    """Case-folded whitespace tokens of a document body, keys included."""
    chunks: list[str] = []

    def walk(node):
        if isinstance(node, dict):
            for k, v in node.items():
                chunks.append(str(k))
                walk(v)
        elif isinstance(node, (list, tuple)):
            for v in node:
                walk(v)
        else:
            chunks.append(str(node))

    walk(body)
    tokens: set[str] = set()
    for chunk in chunks:
        tokens.update(chunk.casefold().split())
    return tokens


class LongTermStore:
    """Domain knowledge keyed by (namespace, key); last write wins.

    Concurrent readers are fine; writes take an exclusive lock.
    """

    def __init__(self):
        self._docs: dict[Namespace, dict[str, Document]] = {ns: {} for ns in Namespace}
        self._lock = threading.Lock()

    @staticmethod
    def _namespace(namespace: str | Namespace) -> Namespace:
        if isinstance(namespace, Namespace):
            return namespace
        try:
            return Namespace(namespace)
        except ValueError:
            raise SchemaError(f"unknown namespace: {namespace!r}") from None

    def put(self, namespace: str | Namespace, key: str, body: object, tick: int = 0) -> None:
        ns = self._namespace(namespace)
        if not key:
            raise SchemaError("document key must be non-empty")
        with self._lock:
            prev = self._docs[ns].get(key)
            if prev is not None and tick < prev.updated_at:
                tick = prev.updated_at  # updated_at never goes backwards
            self._docs[ns][key] = Document(key=key, body=body, updated_at=tick)

    def get(self, namespace: str | Namespace, key: str) -> Document | None:
        ns = self._namespace(namespace)
        return self._docs[ns].get(key)

    def search(self, namespace: str | Namespace, query: str, limit: int) -> list[Document]:
        """Documents ranked by distinct query-token overlap, ties by key."""
        if limit < 1:
            raise UsageError("search limit must be >= 1")
        ns = self._namespace(namespace)
        query_tokens = set(query.casefold().split())
        scored: list[tuple[int, str, Document]] = []
        for key, doc in self._docs[ns].items():
            body_tokens = _flatten_tokens(doc.body)
            score = sum(1 for t in query_tokens if t in body_tokens)
            if score > 0:
                scored.append((score, key, doc))
        scored.sort(key=lambda item: (-item[0], item[1]))
        return [doc for _, _, doc in scored[:limit]]
