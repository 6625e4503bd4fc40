"""Suite and ablation drivers: many episodes in, one report out."""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import AblationVariant, AgentConfig
from .episode import EpisodeResult, run_episode
from .errors import UsageError
from .metrics import TrialRecord, TrialSet, format_fraction, mean_completion_time, pass_hat_k
from .tasks import Task


@dataclass
class VariantReport:
    name: str
    flags: dict
    pass_k: dict[int, float]
    mean_times: dict[str, float | None]
    usage: dict
    episodes: int
    failures: int  # episodes that errored out (not task misses)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "flags": self.flags,
            "pass_hat_k": {str(k): v for k, v in self.pass_k.items()},
            "mean_time_ms": self.mean_times,
            "usage": self.usage,
            "episodes": self.episodes,
            "failures": self.failures,
        }


def run_trials(
    tasks: list[Task],
    config: AgentConfig,
    backend_factory,
    n_trials: int,
    workers: int = 1,
) -> list[EpisodeResult]:
    """n_trials episodes per task; backend_factory(task, trial) -> (chat, vision)."""

    def one(task: Task, trial: int) -> EpisodeResult:
        chat, vision = backend_factory(task, trial)
        return run_episode(task, config, chat, vision, trial_index=trial)

    jobs = [(task, trial) for task in tasks for trial in range(n_trials)]
    if workers <= 1:
        return [one(task, trial) for task, trial in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(one, task, trial) for task, trial in jobs]
        return [f.result() for f in futures]


def summarize(
    name: str,
    flags: dict,
    results: list[EpisodeResult],
    k_values: list[int],
) -> VariantReport:
    trials = TrialSet()
    usage = {"prompt_chars": 0, "completion_chars": 0, "backend_calls": 0, "describe_calls": 0}
    failures = 0
    for result in results:
        trials.add(
            TrialRecord(
                task_id=result.task_id,
                success=result.success,
                wall_time_ms=result.wall_time_ms,
                modality=result.modality,
            )
        )
        for key in usage:
            usage[key] += getattr(result.usage, key)
        if result.error is not None:
            failures += 1
    pass_k = {k: float(pass_hat_k(trials, k)) for k in k_values}
    mean_times: dict[str, float | None] = {"all": mean_completion_time(trials)}
    for modality in ("multimodal", "unimodal"):
        try:
            mean_times[modality] = mean_completion_time(trials, modality)
        except UsageError:
            mean_times[modality] = None
    return VariantReport(
        name=name,
        flags=flags,
        pass_k=pass_k,
        mean_times=mean_times,
        usage=usage,
        episodes=len(results),
        failures=failures,
    )


def run_ablation(
    tasks: list[Task],
    variants: list[AblationVariant],
    backend_factory,
    n_trials: int,
    k_values: list[int],
    workers: int = 1,
) -> tuple[list[VariantReport], list[EpisodeResult]]:
    """One report row per variant over the full suite."""
    if any(k > n_trials for k in k_values):
        raise UsageError(f"every k in {k_values} must be <= n_trials={n_trials}")
    if not variants:
        raise UsageError("ablation needs at least one variant")
    reports = []
    all_results: list[EpisodeResult] = []
    for variant in variants:
        results = run_trials(tasks, variant.agent, backend_factory, n_trials, workers)
        reports.append(summarize(variant.name, variant.agent.to_dict(), results, k_values))
        all_results.extend(results)
    return reports, all_results


def report_table(reports: list[VariantReport], k_values: list[int]) -> str:
    """Aligned text table, one row per variant."""
    headers = ["variant"] + [f"pass^{k}" for k in k_values] + [
        "t_multi(ms)", "t_uni(ms)", "prompt_chars", "calls", "failures",
    ]
    rows = []
    for report in reports:
        def fmt_time(value):
            return f"{value:.1f}" if value is not None else "-"

        rows.append(
            [report.name]
            + [format_fraction(report.pass_k[k]) for k in k_values]
            + [
                fmt_time(report.mean_times.get("multimodal")),
                fmt_time(report.mean_times.get("unimodal")),
                str(report.usage["prompt_chars"]),
                str(report.usage["backend_calls"]),
                str(report.failures),
            ]
        )
    widths = [max(len(headers[i]), *(len(r[i]) for r in rows)) for i in range(len(headers))]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines)


def write_report(reports: list[VariantReport], k_values: list[int], directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "report.json").write_text(
        json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True),
        encoding="utf-8",
    )
    (directory / "report.txt").write_text(report_table(reports, k_values) + "\n", encoding="utf-8")
