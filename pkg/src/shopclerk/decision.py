"""Plan proposal, single-token scoring, and deterministic selection."""

import json
import re
import string
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .backends import ChatMessage, ChatRequest
from .errors import EvaluationError, ProposalError, UsageError

LABELS = string.ascii_uppercase
MAX_PLANS = len(LABELS)
FENCED_JSON_RE = re.compile(r"```(?:json)?\s*\n(.*?)```", re.DOTALL)

_TEMPLATE_DIR = Path(__file__).parent / "templates"


class PlanKind(str, Enum):
    TOOL_SEQUENCE = "tool_sequence"
    SINGLE_TOOL = "single_tool"
    DIRECT_REPLY = "direct_reply"


@dataclass(frozen=True)
class PlannedStep:
    tool_name: str
    arguments: dict

    def summary(self) -> str:
        args = ", ".join(f"{k}={v}" for k, v in self.arguments.items())
        return f"{self.tool_name}({args})"


@dataclass(frozen=True)
class CandidatePlan:
    plan_id: int
    kind: PlanKind
    steps: tuple[PlannedStep, ...]
    rationale: str
    draft_reply: str | None = None

    def dedup_key(self) -> tuple:
        return (self.kind.value, tuple(s.tool_name for s in self.steps))

    def summary(self) -> str:
        if self.kind is PlanKind.DIRECT_REPLY:
            body = f'reply: "{self.draft_reply}"'
        else:
            body = " -> ".join(s.summary() for s in self.steps)
        return f"({self.kind.value}) {body} | {self.rationale}"


@dataclass(frozen=True)
class PlanEvaluation:
    plan_id: int
    label: str
    confidence: float


@dataclass(frozen=True)
class Decision:
    selected: int | None
    evaluations: tuple[PlanEvaluation, ...]
    rejected_reason: str | None = None


def load_template(name: str, template_dir: str | Path | None = None) -> string.Template:
    base = Path(template_dir) if template_dir else _TEMPLATE_DIR
    return string.Template((base / name).read_text(encoding="utf-8"))


def _parse_plan(row: dict, plan_id: int) -> CandidatePlan | None:
    """One plan from backend JSON, or None when the entry is malformed."""
    if not isinstance(row, dict):
        return None
    try:
        kind = PlanKind(row.get("kind"))
    except ValueError:
        return None
    steps = []
    for step in row.get("steps") or []:
        if not isinstance(step, dict) or not step.get("tool"):
            return None
        args = step.get("arguments") or {}
        if not isinstance(args, dict):
            return None
        steps.append(PlannedStep(step["tool"], args))
    reply = row.get("reply")
    if kind is PlanKind.DIRECT_REPLY:
        if steps or not reply:
            return None
    else:
        if not steps:
            return None
        if kind is PlanKind.SINGLE_TOOL and len(steps) != 1:
            return None
    return CandidatePlan(
        plan_id=plan_id,
        kind=kind,
        steps=tuple(steps),
        rationale=str(row.get("rationale", "")),
        draft_reply=reply if kind is PlanKind.DIRECT_REPLY else None,
    )


def propose(
    context: str,
    tool_catalog: str,
    n_candidates: int,
    backend,
    template: string.Template | None = None,
) -> list[CandidatePlan]:
    """Ask the backend for candidate plans and parse its fenced JSON block.

    Malformed entries are dropped; duplicates (same kind and tool-name
    sequence) are collapsed to their first occurrence; at most n_candidates
    plans are kept, re-numbered densely from 0.
    """
    if n_candidates < 1:
        raise UsageError("n_candidates must be >= 1")
    template = template or load_template("propose.txt")
    prompt = template.substitute(
        context=context, tool_catalog=tool_catalog, n_candidates=n_candidates
    )
    response = backend.complete(ChatRequest(messages=(ChatMessage("user", prompt),)))
    match = FENCED_JSON_RE.search(response.text)
    if not match:
        raise ProposalError("backend reply has no fenced JSON block")
    try:
        rows = json.loads(match.group(1))
    except json.JSONDecodeError as exc:
        raise ProposalError(f"fenced block is not valid JSON: {exc}") from exc
    if isinstance(rows, dict):
        rows = rows.get("plans", [])
    plans: list[CandidatePlan] = []
    seen: set[tuple] = set()
    for row in rows:
        plan = _parse_plan(row, len(plans))
        if plan is None:
            continue
        key = plan.dedup_key()
        if key in seen:
            continue
        seen.add(key)
        plans.append(plan)
        if len(plans) == n_candidates:
            break
    if not plans:
        raise ProposalError("no parseable plan in backend reply")
    return plans


def plan_listing(plans: list[CandidatePlan]) -> str:
    return "\n".join(f"{LABELS[i]}. {p.summary()}" for i, p in enumerate(plans))


def evaluate(
    context: str,
    plans: list[CandidatePlan],
    backend,
    vote_samples: int = 5,
    template: string.Template | None = None,
) -> list[PlanEvaluation]:
    """Score plans as a single-token classification over labels A..Z.

    When the backend exposes per-label probabilities they are normalized
    over the round's alphabet; otherwise confidence is the vote fraction
    over vote_samples independent single-label completions.
    """
    if not plans:
        raise UsageError("evaluate needs at least one plan")
    if len(plans) > MAX_PLANS:
        raise UsageError(f"at most {MAX_PLANS} plans per round, got {len(plans)}")
    labels = tuple(LABELS[: len(plans)])
    template = template or load_template("evaluate.txt")
    prompt = template.substitute(context=context, plan_list=plan_listing(plans))
    request = ChatRequest(
        messages=(ChatMessage("user", prompt),),
        max_tokens=1,
        label_alphabet=labels,
    )

    first = backend.complete(request)
    if first.label_probs is not None:
        total = sum(first.label_probs.get(label, 0.0) for label in labels)
        if total <= 0:
            raise EvaluationError("label probabilities assign no mass to any plan label")
        confidences = {
            label: first.label_probs.get(label, 0.0) / total for label in labels
        }
    else:
        votes = {label: 0 for label in labels}
        votes[_label_from_response(first.text, labels, backend, request)] += 1
        for _ in range(vote_samples - 1):
            response = backend.complete(request)
            votes[_label_from_response(response.text, labels, backend, request)] += 1
        confidences = {label: votes[label] / vote_samples for label in labels}

    return [
        PlanEvaluation(plan_id=plan.plan_id, label=labels[i], confidence=confidences[labels[i]])
        for i, plan in enumerate(plans)
    ]


def _label_from_response(text: str, labels: tuple[str, ...], backend, request,
                         max_retries: int = 2) -> str:
    candidate = text.strip()
    for _ in range(max_retries):
        if candidate in labels:
            return candidate
        candidate = backend.complete(request).text.strip()
    if candidate in labels:
        return candidate
    raise EvaluationError(
        f"backend never produced a valid plan label; last reply: {candidate!r}"
    )


def select(evaluations: list[PlanEvaluation], confidence_floor: float = 0.0) -> Decision:
    """Argmax confidence, ties to the smallest plan_id; gate below the floor."""
    if not evaluations:
        raise UsageError("select needs at least one evaluation")
    best = min(evaluations, key=lambda e: (-e.confidence, e.plan_id))
    if best.confidence < confidence_floor:
        return Decision(
            selected=None, evaluations=tuple(evaluations), rejected_reason="low_confidence"
        )
    return Decision(selected=best.plan_id, evaluations=tuple(evaluations))
