"""Scripted buyer tasks: file schema, validation, and success checking."""

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import TaskLoadError
from .memory import Role, WorkingMemory
from .placeholders import RefKind, classify_url, find_urls
from .world import World, world_from_dict

MODALITIES = ("unimodal", "multimodal")

NUMBER_RE = re.compile(r"[-+]?\d+(?:\.\d+)?")


@dataclass(frozen=True)
class BuyerTurn:
    utterance: str
    expected_phase: str | None = None


@dataclass(frozen=True)
class StateAssertion:
    path: str
    expected: object


@dataclass(frozen=True)
class ResponseFact:
    substring: str | None = None
    number: float | None = None
    tolerance: float = 0.0
    must_appear: bool = True

    def describe(self) -> str:
        target = self.substring if self.substring is not None else f"{self.number}±{self.tolerance}"
        return f"{'contains' if self.must_appear else 'omits'} {target!r}"


@dataclass(frozen=True)
class SuccessCriteria:
    state_assertions: tuple[StateAssertion, ...] = ()
    response_facts: tuple[ResponseFact, ...] = ()


@dataclass
class Task:
    task_id: str
    modality: str
    world_seed: dict
    buyer_script: tuple[BuyerTurn, ...]
    success: SuccessCriteria
    max_turns: int
    title: str = ""

    def reset(self) -> World:
        """Fresh, independent world instance from the seed literal."""
        return world_from_dict(self.world_seed)

    def image_urls(self) -> list[str]:
        urls = []
        for turn in self.buyer_script:
            for _, _, url in find_urls(turn.utterance):
                if classify_url(url) in (RefKind.IMAGE, RefKind.VIDEO):
                    urls.append(url)
        return urls


def _fail(path: str, why: str):
    raise TaskLoadError(f"{path}: {why}")


def load_task(path: str | Path, vision_fixtures=None) -> Task:
    """Parse and validate a task file; error messages name the bad path."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        _fail(str(path), "file not found")
    except json.JSONDecodeError as exc:
        _fail(str(path), f"not valid JSON ({exc})")
    return task_from_dict(data, source=str(path), vision_fixtures=vision_fixtures)


def task_from_dict(data: dict, source: str = "<task>", vision_fixtures=None) -> Task:
    task_id = data.get("task_id")
    if not task_id or not isinstance(task_id, str):
        _fail(f"{source}:task_id", "missing or not a string")
    modality = data.get("modality")
    if modality not in MODALITIES:
        _fail(f"{source}:modality", f"must be one of {MODALITIES}, got {modality!r}")
    if "world" not in data or not isinstance(data["world"], dict):
        _fail(f"{source}:world", "missing world seed object")
    try:
        world_from_dict(data["world"])  # validates the seed eagerly
    except Exception as exc:
        _fail(f"{source}:world", str(exc))

    raw_turns = data.get("buyer_script") or []
    if not raw_turns:
        _fail(f"{source}:buyer_script", "needs at least one turn")
    turns = []
    for i, row in enumerate(raw_turns):
        utterance = row.get("utterance") if isinstance(row, dict) else None
        if not utterance:
            _fail(f"{source}:buyer_script[{i}].utterance", "missing or empty")
        turns.append(BuyerTurn(utterance=utterance, expected_phase=row.get("expected_phase")))

    max_turns = data.get("max_turns")
    if not isinstance(max_turns, int) or max_turns < len(turns):
        _fail(f"{source}:max_turns", f"must be an integer >= {len(turns)}")

    success_row = data.get("success") or {}
    assertions = tuple(
        StateAssertion(path=row["path"], expected=row["expected"])
        for row in success_row.get("state_assertions", [])
    )
    facts = []
    for i, row in enumerate(success_row.get("response_facts", [])):
        match = row.get("match") or {}
        if "substring" in match:
            facts.append(ResponseFact(substring=match["substring"],
                                      must_appear=row.get("must_appear", True)))
        elif "number" in match:
            facts.append(ResponseFact(number=float(match["number"]),
                                      tolerance=float(match.get("tolerance", 0.0)),
                                      must_appear=row.get("must_appear", True)))
        else:
            _fail(f"{source}:success.response_facts[{i}].match", "needs substring or number")
    if not assertions and not facts:
        _fail(f"{source}:success", "needs at least one assertion or response fact")

    task = Task(
        task_id=task_id,
        modality=modality,
        world_seed=data["world"],
        buyer_script=tuple(turns),
        success=SuccessCriteria(state_assertions=assertions, response_facts=tuple(facts)),
        max_turns=max_turns,
        title=data.get("title", ""),
    )

    urls = task.image_urls()
    if modality == "multimodal" and not urls:
        _fail(f"{source}:buyer_script", "multimodal task embeds no image or video URL")
    if vision_fixtures is not None:
        for url in urls:
            if not vision_fixtures.has_asset(url):
                _fail(f"{source}:buyer_script", f"asset not in vision fixtures: {url}")
    return task


def load_suite(directory: str | Path, vision_fixtures=None) -> list[Task]:
    directory = Path(directory)
    files = sorted(directory.glob("*.json"))
    if not files:
        _fail(str(directory), "no task files found")
    return [load_task(f, vision_fixtures) for f in files]


def _resolve_path(snapshot: dict, dotted: str):
    node = snapshot
    for key in dotted.split("."):
        if isinstance(node, dict) and key in node:
            node = node[key]
        else:
            return None
    return node


@dataclass(frozen=True)
class CheckReport:
    rows: tuple[dict, ...]

    def passed(self) -> bool:
        return all(r["ok"] for r in self.rows)


def check_success(
    world: World,
    transcript: WorkingMemory,
    criteria: SuccessCriteria,
    table=None,
) -> tuple[bool, CheckReport]:
    """Conjunction of world-state assertions and reply facts.

    Agent reply text is checked after deabstraction when a placeholder
    table is supplied, so facts can reference original URLs.
    """
    snapshot = world.snapshot()
    rows = []
    for assertion in criteria.state_assertions:
        actual = _resolve_path(snapshot, assertion.path)
        rows.append({
            "predicate": f"{assertion.path} == {assertion.expected!r}",
            "ok": actual == assertion.expected,
            "actual": actual,
        })

    agent_text = "\n".join(
        m.text() for m in transcript.turns if m.role is Role.AGENT
    )
    if table is not None:
        from .placeholders import deabstract_text

        agent_text, _ = deabstract_text(agent_text, table)

    for fact in criteria.response_facts:
        if fact.substring is not None:
            found = fact.substring in agent_text
        else:
            found = any(
                abs(float(m.group(0)) - fact.number) <= fact.tolerance
                for m in NUMBER_RE.finditer(agent_text)
            )
        rows.append({
            "predicate": fact.describe(),
            "ok": found if fact.must_appear else not found,
            "actual": found,
        })

    report = CheckReport(rows=tuple(rows))
    return report.passed(), report
