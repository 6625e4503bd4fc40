"""Evaluation metrics: pass^k, contribution ratio, improvements, times."""

import csv
import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from pathlib import Path

from .errors import UsageError


@dataclass(frozen=True)
class TrialRecord:
    task_id: str
    success: bool
    wall_time_ms: float = 0.0
    modality: str = "unimodal"


@dataclass
class TrialSet:
    """Per-task success counts plus the raw trial records behind them."""

    records: list[TrialRecord] = field(default_factory=list)

    def add(self, record: TrialRecord) -> None:
        self.records.append(record)

    def by_task(self) -> dict[str, list[TrialRecord]]:
        grouped: dict[str, list[TrialRecord]] = {}
        for record in self.records:
            grouped.setdefault(record.task_id, []).append(record)
        return grouped

    def counts(self) -> dict[str, tuple[int, int]]:
        """task_id -> (n trials, c successes)."""
        return {
            task: (len(rows), sum(1 for r in rows if r.success))
            for task, rows in self.by_task().items()
        }

    def validate_equal_n(self) -> None:
        ns = {len(rows) for rows in self.by_task().values()}
        if len(ns) > 1:
            raise UsageError(f"trial counts differ across tasks: {sorted(ns)}")


def pass_hat_k_counts(n: int, c: int, k: int) -> Fraction:
    """Probability that k trials drawn without replacement are all successes."""
    if not 0 <= c <= n:
        raise UsageError(f"need 0 <= c <= n, got c={c} n={n}")
    if k < 1 or k > n:
        raise UsageError(f"need 1 <= k <= n, got k={k} n={n}")
    if c < k:
        return Fraction(0)
    return Fraction(comb(c, k), comb(n, k))


def pass_hat_k(trials: TrialSet, k: int, enforce_equal_n: bool = True) -> Fraction:
    """Mean over tasks of C(c,k)/C(n,k), exact rational arithmetic."""
    counts = trials.counts()
    if not counts:
        raise UsageError("no trials recorded")
    if enforce_equal_n:
        trials.validate_equal_n()
    total = Fraction(0)
    for task_id, (n, c) in counts.items():
        if k > n:
            raise UsageError(f"k={k} exceeds n={n} for task {task_id}")
        total += pass_hat_k_counts(n, c, k)
    return total / len(counts)


@dataclass(frozen=True)
class ContributionInputs:
    valid_ai: int
    total_ai: int
    total_cr: int

    def __post_init__(self):
        if not 0 <= self.valid_ai <= self.total_ai:
            raise UsageError("need 0 <= valid_ai <= total_ai")
        if self.total_ai + self.total_cr <= 0:
            raise UsageError("ratio undefined: no messages at all")


def ai_contribution_ratio(inputs: ContributionInputs) -> float:
    """Share of all service messages that are AI-written and judged appropriate."""
    return inputs.valid_ai / (inputs.total_ai + inputs.total_cr)


def relative_improvement(baseline: float, treatment: float) -> float:
    if baseline <= 0:
        raise UsageError(f"baseline must be positive, got {baseline}")
    return (treatment - baseline) / baseline


def time_reduction(baseline: float, treatment: float) -> float:
    """Fractional drop from baseline to treatment."""
    if baseline <= 0:
        raise UsageError(f"baseline must be positive, got {baseline}")
    return (baseline - treatment) / baseline


def mean_completion_time(trials: TrialSet, modality: str | None = None) -> float:
    rows = [
        r for r in trials.records if modality is None or r.modality == modality
    ]
    if not rows:
        raise UsageError(f"no trials match modality filter {modality!r}")
    return sum(r.wall_time_ms for r in rows) / len(rows)


# --- file readers ---


def read_annotations_csv(path: str | Path) -> ContributionInputs:
    """Judged-message counts from a CSV with columns
    session_id, message_id, source, judged_valid."""
    required = {"session_id", "message_id", "source", "judged_valid"}
    total_ai = total_cr = valid_ai = 0
    bad_lines: list[int] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise UsageError(
                f"annotation CSV needs columns {sorted(required)}, got {reader.fieldnames}"
            )
        for line_no, row in enumerate(reader, start=2):
            source = (row.get("source") or "").strip()
            judged = (row.get("judged_valid") or "").strip()
            if source not in ("ai", "cr") or judged not in ("0", "1"):
                bad_lines.append(line_no)
                continue
            if source == "ai":
                total_ai += 1
                valid_ai += int(judged)
            else:
                total_cr += 1
    if bad_lines:
        raise UsageError(f"malformed annotation rows at lines: {bad_lines}")
    return ContributionInputs(valid_ai=valid_ai, total_ai=total_ai, total_cr=total_cr)


def read_trial_records(directory: str | Path) -> TrialSet:
    """Collect *.result.json files from episode runs into a TrialSet."""
    directory = Path(directory)
    files = sorted(directory.glob("*.result.json"))
    if not files:
        raise UsageError(f"no *.result.json files under {directory}")
    trials = TrialSet()
    for file in files:
        row = json.loads(file.read_text(encoding="utf-8"))
        trials.add(
            TrialRecord(
                task_id=row["task_id"],
                success=bool(row["success"]),
                wall_time_ms=float(row.get("wall_time_ms", 0.0)),
                modality=row.get("modality", "unimodal"),
            )
        )
    return trials


def format_fraction(value: Fraction, places: int = 4) -> str:
    return f"{float(value):.{places}f}"
