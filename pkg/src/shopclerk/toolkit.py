"""Tool registry with schema-checked invocation and a session action trace.

Wire shapes follow the MCP convention: descriptor {name, description,
input_schema}, call {call_id, tool, arguments}, result {call_id, content,
is_error}.
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import RegistrationError
from .memory import ContentPart, PartKind

logger = logging.getLogger(__name__)

SCALAR_TYPES = ("string", "integer", "number", "boolean")


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    description: str
    input_schema: dict

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "input_schema": self.input_schema,
        }

    @classmethod
    def from_dict(cls, row: dict) -> "ToolDescriptor":
        return cls(row["name"], row["description"], row["input_schema"])


@dataclass(frozen=True)
class ToolCall:
    call_id: str
    tool_name: str
    arguments: dict

    def to_dict(self) -> dict:
        return {"call_id": self.call_id, "tool": self.tool_name, "arguments": self.arguments}


@dataclass(frozen=True)
class ToolResult:
    call_id: str
    content: tuple[ContentPart, ...]
    is_error: bool = False

    def text(self) -> str:
        return "".join(p.value for p in self.content)

    def to_dict(self) -> dict:
        return {
            "call_id": self.call_id,
            "content": [
                {"type": p.kind.value, ("ref" if p.kind is PartKind.IMAGE_REF else "text"): p.value}
                for p in self.content
            ],
            "is_error": self.is_error,
        }


def text_result(call_id: str, text: str, is_error: bool = False) -> ToolResult:
    return ToolResult(call_id, (ContentPart(PartKind.TEXT, text),), is_error)


def validate_arguments(schema: dict, arguments: dict) -> list[str]:
    """Check arguments against the schema; returns offending field names."""
    properties = schema.get("properties", {})
    required = schema.get("required", [])
    bad: list[str] = []
    for name in required:
        if name not in arguments:
            bad.append(name)
    for name, value in arguments.items():
        spec = properties.get(name)
        if spec is None:
            bad.append(name)
            continue
        if not _type_ok(value, spec):
            bad.append(name)
    # deterministic order: schema order first, then unknowns alphabetically
    order = {n: i for i, n in enumerate(properties)}
    return sorted(set(bad), key=lambda n: (order.get(n, len(order)), n))


def _type_ok(value: Any, spec: dict) -> bool:
    expected = spec.get("type", "string")
    if "enum" in spec:
        return value in spec["enum"]
    if expected == "string":
        return isinstance(value, str)
    if expected == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if expected == "number":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if expected == "boolean":
        return isinstance(value, bool)
    return True


class ActionTrace:
    """Ordered audit log of everything a session did."""

    def __init__(self):
        self._events: list[dict] = []

    @property
    def events(self) -> tuple[dict, ...]:
        return tuple(self._events)

    def add(self, kind: str, **payload) -> None:
        self._events.append({"seq": len(self._events), "kind": kind, **payload})

    def count(self, kind: str) -> int:
        return sum(1 for e in self._events if e["kind"] == kind)

    def write_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for event in self._events:
                fh.write(json.dumps(event, sort_keys=True, default=str))
                fh.write("\n")


class ToolRegistry:
    """Named tools with validated invocation; immutable once sessions start."""

    def __init__(self):
        self._tools: dict[str, tuple[ToolDescriptor, Callable[[dict], list[ContentPart] | str]]] = {}

    def register(self, descriptor: ToolDescriptor, handler: Callable) -> None:
        if descriptor.name in self._tools:
            raise RegistrationError(f"tool already registered: {descriptor.name}")
        seen = set()
        for field_name in descriptor.input_schema.get("properties", {}):
            if field_name in seen:
                raise RegistrationError(f"duplicate schema field: {field_name}")
            seen.add(field_name)
        self._tools[descriptor.name] = (descriptor, handler)

    def __contains__(self, name: str) -> bool:
        return name in self._tools

    def descriptors(self) -> list[ToolDescriptor]:
        return [d for d, _ in self._tools.values()]

    def catalog_text(self) -> str:
        """Human/LLM readable tool list for prompt templates."""
        lines = []
        for desc in self.descriptors():
            props = desc.input_schema.get("properties", {})
            required = set(desc.input_schema.get("required", []))
            args = ", ".join(
                f"{n}{'' if n in required else '?'}: {spec.get('type', 'string')}"
                for n, spec in props.items()
            )
            lines.append(f"- {desc.name}({args}): {desc.description}")
        return "\n".join(lines)

    def invoke(self, call: ToolCall, trace: ActionTrace | None = None) -> ToolResult:
        """Run a tool call; handler failures surface as error results, never raise."""
        if trace is not None:
            trace.add("tool_call", call=call.to_dict())
        entry = self._tools.get(call.tool_name)
        if entry is None:
            result = text_result(call.call_id, f"unknown_tool: {call.tool_name}", is_error=True)
        else:
            descriptor, handler = entry
            bad = validate_arguments(descriptor.input_schema, call.arguments)
            if bad:
                result = text_result(
                    call.call_id, "invalid_arguments: " + ", ".join(bad), is_error=True
                )
            else:
                try:
                    payload = handler(call.arguments)
                    if isinstance(payload, str):
                        result = text_result(call.call_id, payload)
                    else:
                        result = ToolResult(call.call_id, tuple(payload))
                except Exception as exc:  # noqa: BLE001 - contract: never crash the session
                    logger.debug("tool %s failed: %s", call.tool_name, exc)
                    result = text_result(call.call_id, str(exc), is_error=True)
        if trace is not None:
            trace.add("tool_result", result=result.to_dict(), tool=call.tool_name)
        return result
