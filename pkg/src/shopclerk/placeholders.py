"""URL placeholder table: abstract token-heavy spans, resolve them on demand."""

import re
from dataclasses import dataclass, field
from enum import Enum
from urllib.parse import urlparse

from .errors import ResolutionError, UnknownPlaceholderError
from .memory import ContentPart, LongTermStore, Namespace, PartKind

DEFAULT_MIN_URL_LENGTH = 24
DEFAULT_DESCRIBE_INSTRUCTION = "Describe the image briefly."

URL_RE = re.compile(r"https?://[^\s<>\"']+")
_TRAILING_PUNCT = ".,;:!?)]\"'"

PLACEHOLDER_RE = re.compile(r"\[(Image|Product|Order|Video|Link) (\d+)\]")


class RefKind(str, Enum):
    IMAGE = "image"
    PRODUCT = "product"
    ORDER = "order"
    VIDEO = "video"
    OTHER = "other"


KIND_NAMES = {
    RefKind.IMAGE: "Image",
    RefKind.PRODUCT: "Product",
    RefKind.ORDER: "Order",
    RefKind.VIDEO: "Video",
    RefKind.OTHER: "Link",
}

IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png", ".webp", ".gif")
VIDEO_SUFFIXES = (".mp4", ".mov")


def classify_url(url: str) -> RefKind:
    """Map a URL onto a reference kind via an ordered pattern table."""
    parsed = urlparse(url)
    path = parsed.path.lower()
    host = parsed.netloc.lower()
    if path.endswith(IMAGE_SUFFIXES):
        return RefKind.IMAGE
    if "/order/" in path:
        return RefKind.ORDER
    if "/item/" in path or "/product/" in path:
        return RefKind.PRODUCT
    if path.endswith(VIDEO_SUFFIXES) or "video" in host:
        return RefKind.VIDEO
    return RefKind.OTHER


def find_urls(text: str) -> list[tuple[int, int, str]]:
    """Maximal URL spans as (start, end, url), trailing punctuation trimmed."""
    spans = []
    for m in URL_RE.finditer(text):
        url = m.group(0).rstrip(_TRAILING_PUNCT)
        if url:
            spans.append((m.start(), m.start() + len(url), url))
    return spans


@dataclass
class PlaceholderEntry:
    placeholder: str
    original: str
    kind: RefKind
    # resolved descriptions cached per instruction
    resolved: dict[str, str] = field(default_factory=dict)


class PlaceholderTable:
    """Session-local bidirectional map between long URLs and compact tokens.

    Numbering is dense and 1-based per kind, in order of first appearance;
    the same original never receives two placeholders.
    """

    def __init__(self, min_url_length: int = DEFAULT_MIN_URL_LENGTH):
        self.min_url_length = min_url_length
        self._entries: list[PlaceholderEntry] = []
        self._by_original: dict[str, PlaceholderEntry] = {}
        self._by_placeholder: dict[str, PlaceholderEntry] = {}
        self._counts: dict[RefKind, int] = {k: 0 for k in RefKind}

    @property
    def entries(self) -> tuple[PlaceholderEntry, ...]:
        return tuple(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def lookup(self, placeholder: str) -> PlaceholderEntry | None:
        return self._by_placeholder.get(placeholder)

    def intern(self, url: str) -> PlaceholderEntry:
        """Return the entry for a URL, creating one on first sight."""
        entry = self._by_original.get(url)
        if entry is not None:
            return entry
        kind = classify_url(url)
        self._counts[kind] += 1
        placeholder = f"[{KIND_NAMES[kind]} {self._counts[kind]}]"
        entry = PlaceholderEntry(placeholder=placeholder, original=url, kind=kind)
        self._entries.append(entry)
        self._by_original[url] = entry
        self._by_placeholder[placeholder] = entry
        return entry


def abstract_text(text: str, table: PlaceholderTable) -> str:
    """Replace every qualifying URL span with its placeholder token.

    Spans shorter than the table's minimum length and non-URL text are left
    byte-identical; repeated URLs reuse their existing placeholder.
    """
    out = []
    cursor = 0
    for start, end, url in find_urls(text):
        if len(url) < table.min_url_length:
            continue
        out.append(text[cursor:start])
        out.append(table.intern(url).placeholder)
        cursor = end
    out.append(text[cursor:])
    return "".join(out)


def deabstract_text(text: str, table: PlaceholderTable) -> tuple[str, list[str]]:
    """Substitute originals back in; unknown tokens stay verbatim and are reported."""
    warnings: list[str] = []

    def repl(m: re.Match) -> str:
        entry = table.lookup(m.group(0))
        if entry is None:
            warnings.append(m.group(0))
            return m.group(0)
        return entry.original

    return PLACEHOLDER_RE.sub(repl, text), warnings


def split_parts(
    text: str,
    table: PlaceholderTable | None = None,
    abstract_kinds: set[RefKind] | None = None,
) -> tuple[ContentPart, ...]:
    """Split message text into content parts, abstracting selected URL kinds.

    Every qualifying URL is interned into the table so later placeholder
    references resolve, but only kinds in abstract_kinds are rewritten to
    placeholder parts. Image and video URLs left raw become image_ref
    parts; everything else stays text. With table=None nothing is tracked.
    """
    parts: list[ContentPart] = []
    cursor = 0

    def push_text(chunk: str):
        if chunk:
            parts.append(ContentPart(PartKind.TEXT, chunk))

    for start, end, url in find_urls(text):
        kind = classify_url(url)
        qualifying = table is not None and len(url) >= table.min_url_length
        if qualifying:
            entry = table.intern(url)
            if abstract_kinds is None or kind in abstract_kinds:
                push_text(text[cursor:start])
                parts.append(ContentPart(PartKind.PLACEHOLDER, entry.placeholder))
                cursor = end
                continue
        if kind in (RefKind.IMAGE, RefKind.VIDEO):
            push_text(text[cursor:start])
            parts.append(ContentPart(PartKind.IMAGE_REF, url))
            cursor = end
    push_text(text[cursor:])
    if not parts:
        parts.append(ContentPart(PartKind.TEXT, ""))
    return tuple(parts)


def placeholder_parts(text: str) -> tuple[ContentPart, ...]:
    """Split already-abstracted text into text and placeholder parts."""
    parts: list[ContentPart] = []
    cursor = 0
    for m in PLACEHOLDER_RE.finditer(text):
        if m.start() > cursor:
            parts.append(ContentPart(PartKind.TEXT, text[cursor : m.start()]))
        parts.append(ContentPart(PartKind.PLACEHOLDER, m.group(0)))
        cursor = m.end()
    if cursor < len(text) or not parts:
        parts.append(ContentPart(PartKind.TEXT, text[cursor:]))
    return tuple(parts)


def _key_from_path(url: str, markers: tuple[str, ...]) -> str | None:
    segments = [s for s in urlparse(url).path.split("/") if s]
    for i, seg in enumerate(segments):
        if seg in markers and i + 1 < len(segments):
            return segments[i + 1]
    return None


def resolve(
    placeholder: str,
    table: PlaceholderTable,
    vision,
    store: LongTermStore | None = None,
    instruction: str | None = None,
) -> str:
    """Produce a textual stand-in for a placeholder's original content.

    Image and video references go to the vision tool with the given (or
    default) instruction; product and order references are looked up in the
    long-term store by the key extracted from the URL path. Results are
    cached per (placeholder, instruction) so repeat queries cost nothing.
    """
    entry = table.lookup(placeholder)
    if entry is None:
        raise UnknownPlaceholderError(f"unknown_placeholder: {placeholder}")
    cache_key = instruction if instruction is not None else ""
    if cache_key in entry.resolved:
        return entry.resolved[cache_key]

    if entry.kind in (RefKind.IMAGE, RefKind.VIDEO):
        from .vision import VisualQuery

        query = VisualQuery(
            instruction=instruction or DEFAULT_DESCRIBE_INSTRUCTION,
            asset_id=entry.original,
        )
        try:
            text = vision.describe(query).text
        except Exception as exc:
            raise ResolutionError(f"describe failed for {placeholder}: {exc}") from exc
    elif entry.kind in (RefKind.PRODUCT, RefKind.ORDER):
        if store is None:
            raise ResolutionError(f"no knowledge store available for {placeholder}")
        markers = ("product", "item") if entry.kind is RefKind.PRODUCT else ("order",)
        key = _key_from_path(entry.original, markers)
        if key is None:
            raise ResolutionError(f"no lookup key in {entry.original}")
        ns = Namespace.PRODUCT if entry.kind is RefKind.PRODUCT else Namespace.ORDER
        doc = store.get(ns, key)
        if doc is None:
            raise ResolutionError(f"no {ns.value} record for key {key!r}")
        text = doc.body if isinstance(doc.body, str) else _render_body(doc.body)
    else:
        text = entry.original  # plain links resolve to themselves

    entry.resolved[cache_key] = text
    return text


def _render_body(body) -> str:
    import json

    return json.dumps(body, sort_keys=True, ensure_ascii=False)
