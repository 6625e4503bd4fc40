"""Visual description unit: fixture-backed or remote, behind one contract."""

import json
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import AssetError, BackendError, ConfigError, UsageError


class IntegrationStrategy(str, Enum):
    """How the visual model participates in a session.

    TOOL: the planner is text-only; images reach it as placeholders whose
    content is fetched on demand through describe().
    PLANNER: the visual model is the planner itself; raw image references
    are passed straight through and describe() is never used.
    """

    TOOL = "tool"
    PLANNER = "planner"


def strategy_mode(config: dict | str) -> IntegrationStrategy:
    value = config.get("strategy", "tool") if isinstance(config, dict) else config
    try:
        return IntegrationStrategy(value)
    except ValueError:
        raise ConfigError(f"unknown strategy: {value!r}") from None


@dataclass(frozen=True)
class VisualQuery:
    instruction: str
    asset_id: str


@dataclass(frozen=True)
class VisualDescription:
    text: str
    backend_id: str
    latency_ms: float = 0.0


@dataclass
class CategoryRule:
    category: str
    keywords: tuple[str, ...]

    def matches(self, instruction: str) -> bool:
        folded = instruction.casefold()
        return any(k.casefold() in folded for k in self.keywords)


@dataclass
class ImageAsset:
    asset_id: str
    annotations: dict[str, str]
    rules: tuple[CategoryRule, ...] = ()

    def __post_init__(self):
        if "default" not in self.annotations:
            raise ConfigError(f"asset {self.asset_id} has no default annotation")


class FixtureVisionBackend:
    """Deterministic describe() over canned annotations.

    The instruction is mapped to an annotation category by ordered keyword
    rules (asset-specific rules first, then file-level ones); an unmatched
    instruction falls back to the default annotation.
    """

    backend_id = "fixture"

    def __init__(self, assets: dict[str, ImageAsset], rules: tuple[CategoryRule, ...] = ()):
        self.assets = assets
        self.rules = tuple(rules)

    @classmethod
    def from_file(cls, path: str | Path) -> "FixtureVisionBackend":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"vision fixture file not found: {path}") from None
        rules = tuple(
            CategoryRule(r["category"], tuple(r["keywords"])) for r in data.get("rules", [])
        )
        assets = {}
        for asset_id, row in data.get("assets", {}).items():
            asset_rules = tuple(
                CategoryRule(r["category"], tuple(r["keywords"])) for r in row.get("rules", [])
            )
            assets[asset_id] = ImageAsset(asset_id, dict(row["annotations"]), asset_rules)
        return cls(assets, rules)

    def has_asset(self, asset_id: str) -> bool:
        return asset_id in self.assets

    def describe(self, query: VisualQuery) -> VisualDescription:
        if not query.instruction:
            raise UsageError("describe needs a non-empty instruction")
        asset = self.assets.get(query.asset_id)
        if asset is None:
            raise AssetError(f"unknown asset: {query.asset_id}")
        category = "default"
        for rule in tuple(asset.rules) + self.rules:
            if rule.matches(query.instruction):
                category = rule.category
                break
        text = asset.annotations.get(category, asset.annotations["default"])
        return VisualDescription(text=text, backend_id=self.backend_id, latency_ms=0.0)


class RemoteVisionBackend:
    """describe() over the remote chat endpoint with an image attachment."""

    backend_id = "remote"

    def __init__(self, chat_backend, retries: int = 2, backoff_s: float = 0.5):
        self.chat = chat_backend
        self.retries = retries
        self.backoff_s = backoff_s

    def describe(self, query: VisualQuery) -> VisualDescription:
        from .backends import ChatMessage, ChatRequest

        if not query.instruction:
            raise UsageError("describe needs a non-empty instruction")
        request = ChatRequest(
            messages=(
                ChatMessage(role="user", content=query.instruction, image_refs=(query.asset_id,)),
            )
        )
        attempts = self.retries + 1
        last_error: Exception | None = None
        start = time.monotonic()
        for attempt in range(attempts):
            try:
                response = self.chat.complete(request)
                if not response.text:
                    raise BackendError("remote vision backend returned empty description")
                latency = (time.monotonic() - start) * 1000.0
                return VisualDescription(response.text, self.backend_id, latency)
            except Exception as exc:  # retried; re-raised with count below
                last_error = exc
                if attempt < attempts - 1:
                    time.sleep(self.backoff_s)
        raise BackendError(
            f"vision describe failed after {attempts} attempts: {last_error}"
        ) from last_error


class CountingVision:
    """Wrapper that counts and traces describe calls for audits."""

    def __init__(self, inner, trace=None):
        self.inner = inner
        self.trace = trace
        self.calls = 0

    @property
    def backend_id(self) -> str:
        return self.inner.backend_id

    def has_asset(self, asset_id: str) -> bool:
        has = getattr(self.inner, "has_asset", None)
        return bool(has(asset_id)) if has else True

    def describe(self, query: VisualQuery) -> VisualDescription:
        self.calls += 1
        description = self.inner.describe(query)
        if self.trace is not None:
            self.trace.add(
                "describe",
                instruction=query.instruction,
                asset=query.asset_id,
                output=description.text,
            )
        return description
