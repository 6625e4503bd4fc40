"""The agent session loop: memory in, plans scored, tools run, reply out."""

import json
import logging
import time
from dataclasses import dataclass, field

from . import decision as dec
from .config import AgentConfig
from .errors import ClerkError, ConfigError
from .memory import (
    ContentPart,
    Message,
    PartKind,
    Role,
    WorkingMemory,
    render_context,
)
from .placeholders import (
    PlaceholderTable,
    RefKind,
    deabstract_text,
    placeholder_parts,
    split_parts,
)
from .shop_tools import build_registry
from .tasks import Task, check_success
from .toolkit import ActionTrace, ToolCall
from .vision import CountingVision, IntegrationStrategy
from .world import World, seed_store

logger = logging.getLogger(__name__)

CLARIFICATION_REPLY = "Sorry, I want to be sure I help correctly. Could you clarify what you need?"

ALL_KINDS = frozenset(RefKind)
NON_VISUAL_KINDS = frozenset({RefKind.PRODUCT, RefKind.ORDER, RefKind.OTHER})


@dataclass
class UsageTotals:
    prompt_chars: int = 0
    completion_chars: int = 0
    backend_calls: int = 0
    describe_calls: int = 0

    def to_dict(self) -> dict:
        return {
            "prompt_chars": self.prompt_chars,
            "completion_chars": self.completion_chars,
            "backend_calls": self.backend_calls,
            "describe_calls": self.describe_calls,
        }


@dataclass
class TurnReport:
    """What one buyer turn produced, for the REPL and for audits."""

    reply: str
    rounds: list[dict] = field(default_factory=list)
    tool_calls: list[dict] = field(default_factory=list)


@dataclass
class EpisodeResult:
    task_id: str
    trial_index: int
    success: bool
    transcript: WorkingMemory
    trace: ActionTrace
    wall_time_ms: float
    usage: UsageTotals
    modality: str = "unimodal"
    error: str | None = None
    report_rows: tuple = ()
    replies: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "trial_index": self.trial_index,
            "success": self.success,
            "modality": self.modality,
            "wall_time_ms": self.wall_time_ms,
            "usage": self.usage.to_dict(),
            "error": self.error,
            "check_report": list(self.report_rows),
            "replies": list(self.replies),
        }


class _CountingChat:
    """Accumulates usage over a session's backend calls."""

    def __init__(self, inner, totals: UsageTotals):
        self.inner = inner
        self.totals = totals

    def complete(self, request):
        response = self.inner.complete(request)
        self.totals.backend_calls += 1
        self.totals.prompt_chars += response.usage.prompt_chars
        self.totals.completion_chars += response.usage.completion_chars
        return response


class AgentSession:
    """One buyer-facing session over a world, a backend, and a tool registry."""

    def __init__(
        self,
        world: World,
        chat_backend,
        vision_backend,
        config: AgentConfig | None = None,
        session_id: str = "session",
    ):
        self.config = config or AgentConfig()
        self.world = world
        self.store = seed_store(world)
        self.table = PlaceholderTable(min_url_length=self.config.min_url_length)
        self.trace = ActionTrace()
        self.usage = UsageTotals()
        self.chat = _CountingChat(chat_backend, self.usage)
        self.vision = CountingVision(vision_backend, trace=self.trace)
        self.registry = build_registry(
            world, self.store, self.table, self.vision, self.config.strategy
        )
        self.wm = WorkingMemory(session_id)
        self._propose_template = dec.load_template("propose.txt", self.config.template_dir)
        self._evaluate_template = dec.load_template("evaluate.txt", self.config.template_dir)
        self._call_counter = 0
        self._mutation_cursor = 0

    # --- message plumbing ---

    def _inbound_parts(self, text: str) -> tuple[ContentPart, ...]:
        """Split inbound text, abstracting URL kinds allowed by the mode."""
        if not self.config.abstraction_enabled:
            kinds = frozenset()  # track URLs for resolution, rewrite nothing
        elif self.config.strategy is IntegrationStrategy.PLANNER:
            # raw image references go to the planner; other long URLs still shrink
            kinds = NON_VISUAL_KINDS
        else:
            kinds = ALL_KINDS
        return split_parts(text, self.table, abstract_kinds=kinds)

    def _append(self, role: Role, parts: tuple[ContentPart, ...]) -> None:
        self.wm.append_turn(
            Message(role=role, parts=parts, turn_index=len(self.wm), timestamp=self.world.clock)
        )

    def _context(self) -> str:
        return render_context(self.wm, self.config.context_budget)

    def image_refs_in_context(self) -> tuple[str, ...]:
        refs = []
        for msg in self.wm.turns:
            for part in msg.parts:
                if part.kind is PartKind.IMAGE_REF and part.value not in refs:
                    refs.append(part.value)
        return tuple(refs)

    # --- the decision cycle ---

    def handle_buyer_turn(self, utterance: str) -> TurnReport:
        """Ingest one buyer utterance and produce the outbound reply."""
        self.world.clock += 1
        self._append(Role.BUYER, self._inbound_parts(utterance))
        report = TurnReport(reply="")
        raw_reply = self._decision_cycle(report)
        outbound, warnings = deabstract_text(raw_reply, self.table)
        for token in warnings:
            self.trace.add("warning", about="unresolved_placeholder_in_reply", token=token)
        self._append(Role.AGENT, placeholder_parts(raw_reply))
        self.trace.add("emit", reply=outbound)
        report.reply = outbound
        return report

    def _decision_cycle(self, report: TurnReport) -> str:
        placeholder_retry_used = False
        for _ in range(self.config.max_plan_rounds):
            context = self._context()
            plans = self._propose(context)
            if self.config.decision_module:
                evaluations = dec.evaluate(
                    context,
                    plans,
                    self.chat,
                    vote_samples=self.config.vote_samples,
                    template=self._evaluate_template,
                )
                verdict = dec.select(evaluations, self.config.confidence_floor)
            else:
                evaluations = [dec.PlanEvaluation(plan_id=0, label="A", confidence=1.0)]
                verdict = dec.Decision(selected=0, evaluations=tuple(evaluations))
            self._record_round(report, plans, verdict)
            if verdict.selected is None:
                return CLARIFICATION_REPLY
            plan = plans[verdict.selected]
            if plan.kind is dec.PlanKind.DIRECT_REPLY:
                return plan.draft_reply or CLARIFICATION_REPLY
            hit_unknown_placeholder = self._run_steps(plan, report)
            if hit_unknown_placeholder:
                if placeholder_retry_used:
                    return CLARIFICATION_REPLY
                placeholder_retry_used = True
        return CLARIFICATION_REPLY

    def _propose(self, context: str):
        n = self.config.n_candidates if self.config.decision_module else 1
        return dec.propose(
            context,
            self.registry.catalog_text(),
            n,
            self.chat,
            template=self._propose_template,
        )

    def _record_round(self, report: TurnReport, plans, verdict: dec.Decision) -> None:
        row = {
            "plans": [p.summary() for p in plans],
            "evaluations": [
                {"label": e.label, "plan_id": e.plan_id, "confidence": round(e.confidence, 4)}
                for e in verdict.evaluations
            ],
            "selected": verdict.selected,
            "rejected_reason": verdict.rejected_reason,
        }
        report.rounds.append(row)
        self.trace.add("decision", **row)

    def _run_steps(self, plan, report: TurnReport) -> bool:
        """Execute plan steps; returns True when an unknown placeholder stopped it."""
        for step in plan.steps:
            self._call_counter += 1
            call = ToolCall(
                call_id=f"c{self._call_counter}",
                tool_name=step.tool_name,
                arguments=step.arguments,
            )
            result = self.registry.invoke(call, self.trace)
            while self._mutation_cursor < len(self.world.mutations):
                self.trace.add("mutation", **self.world.mutations[self._mutation_cursor])
                self._mutation_cursor += 1
            report.tool_calls.append(
                {"tool": step.tool_name, "arguments": step.arguments,
                 "is_error": result.is_error, "text": result.text()}
            )
            observation = f"{step.tool_name} => {result.text()}"
            self._append(Role.TOOL, self._inbound_parts(observation))
            if result.is_error:
                return result.text().startswith("unknown_placeholder")
        return False


def run_episode(
    task: Task,
    config: AgentConfig,
    chat_backend,
    vision_backend,
    trial_index: int = 0,
) -> EpisodeResult:
    """Play one scripted buyer through a fresh world; never raises mid-episode."""
    world = task.reset()
    session = AgentSession(
        world,
        chat_backend,
        vision_backend,
        config,
        session_id=f"{task.task_id}-t{trial_index}",
    )
    started = time.monotonic()
    error: str | None = None
    replies: list[str] = []
    for turn in task.buyer_script:
        if len(replies) >= task.max_turns:
            break
        try:
            report = session.handle_buyer_turn(turn.utterance)
            replies.append(report.reply)
        except ClerkError as exc:
            error = f"{type(exc).__name__}: {exc}"
            session.trace.add("episode_error", error=error)
            logger.debug("episode %s trial %d: %s", task.task_id, trial_index, error)
            break
    elapsed_ms = (time.monotonic() - started) * 1000.0
    session.usage.describe_calls = session.vision.calls
    if config.latency_model is not None:
        elapsed_ms = config.latency_model.wall_time_ms(
            session.usage.prompt_chars, session.usage.backend_calls
        )
    if error is None:
        success, report = check_success(world, session.wm, task.success, session.table)
        rows = report.rows
    else:
        success, rows = False, ()
    return EpisodeResult(
        task_id=task.task_id,
        trial_index=trial_index,
        success=success,
        transcript=session.wm,
        trace=session.trace,
        wall_time_ms=elapsed_ms,
        usage=session.usage,
        modality=task.modality,
        error=error,
        report_rows=rows,
        replies=tuple(replies),
    )


def write_result(result: EpisodeResult, directory) -> None:
    """Persist one trial: result JSON plus transcript and trace JSONL."""
    from pathlib import Path

    from .memory import write_transcript

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    stem = f"{result.task_id}-t{result.trial_index}"
    (directory / f"{stem}.result.json").write_text(
        json.dumps(result.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
    )
    write_transcript(result.transcript, directory / f"{stem}.transcript.jsonl")
    result.trace.write_jsonl(directory / f"{stem}.trace.jsonl")


def make_backends(script_path=None, replay_path=None, remote=False, record_path=None,
                  vision_fixture_path=None):
    """Build (chat, vision) backends from the exactly-one selection rule."""
    from .backends import RecordingBackend, RemoteBackend, ReplayBackend, ScriptedBackend
    from .vision import FixtureVisionBackend, RemoteVisionBackend

    chosen = [x for x in (script_path, replay_path, remote or None) if x]
    if len(chosen) != 1:
        raise ConfigError("select exactly one backend: --script, --replay, or --remote")
    if script_path:
        chat = ScriptedBackend.from_file(script_path)
    elif replay_path:
        chat = ReplayBackend(replay_path)
    else:
        chat = RemoteBackend()
    if record_path:
        chat = RecordingBackend(chat, record_path)
    if vision_fixture_path:
        vision = FixtureVisionBackend.from_file(vision_fixture_path)
    elif remote:
        vision = RemoteVisionBackend(chat)
    else:
        vision = FixtureVisionBackend({})
    return chat, vision
