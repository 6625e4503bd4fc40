"""Run and agent configuration, mergeable from defaults, file, and flags."""

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ConfigError
from .placeholders import DEFAULT_MIN_URL_LENGTH
from .vision import IntegrationStrategy


@dataclass(frozen=True)
class LatencyModel:
    """Deterministic wall-time surrogate: alpha*prompt_chars + beta*backend_calls."""

    alpha: float
    beta: float

    def wall_time_ms(self, prompt_chars: int, backend_calls: int) -> float:
        return self.alpha * prompt_chars + self.beta * backend_calls


@dataclass(frozen=True)
class AgentConfig:
    n_candidates: int = 3
    confidence_floor: float = 0.0
    abstraction_enabled: bool = True  # the CLI exposes this as --aci
    strategy: IntegrationStrategy = IntegrationStrategy.TOOL
    decision_module: bool = True
    vote_samples: int = 5
    max_plan_rounds: int = 5
    context_budget: int = 8000
    min_url_length: int = DEFAULT_MIN_URL_LENGTH
    template_dir: str | None = None
    latency_model: LatencyModel | None = None

    def to_dict(self) -> dict:
        row = {
            "n_candidates": self.n_candidates,
            "confidence_floor": self.confidence_floor,
            "aci": "on" if self.abstraction_enabled else "off",
            "strategy": self.strategy.value,
            "decision_module": "on" if self.decision_module else "off",
            "vote_samples": self.vote_samples,
            "max_plan_rounds": self.max_plan_rounds,
            "context_budget": self.context_budget,
            "min_url_length": self.min_url_length,
        }
        if self.template_dir:
            row["template_dir"] = self.template_dir
        if self.latency_model:
            row["latency_alpha"] = self.latency_model.alpha
            row["latency_beta"] = self.latency_model.beta
        return row


_ON_OFF = {"on": True, "off": False, True: True, False: False}


def agent_config_from_dict(row: dict, base: AgentConfig | None = None) -> AgentConfig:
    config = base or AgentConfig()
    updates = {}
    if "n_candidates" in row:
        updates["n_candidates"] = int(row["n_candidates"])
    if "confidence_floor" in row:
        updates["confidence_floor"] = float(row["confidence_floor"])
    if "aci" in row:
        if row["aci"] not in _ON_OFF:
            raise ConfigError(f"aci must be on or off, got {row['aci']!r}")
        updates["abstraction_enabled"] = _ON_OFF[row["aci"]]
    if "strategy" in row:
        try:
            updates["strategy"] = IntegrationStrategy(row["strategy"])
        except ValueError:
            raise ConfigError(f"strategy must be tool or planner, got {row['strategy']!r}") from None
    if "decision_module" in row:
        if row["decision_module"] not in _ON_OFF:
            raise ConfigError(f"decision_module must be on or off, got {row['decision_module']!r}")
        updates["decision_module"] = _ON_OFF[row["decision_module"]]
    if "vote_samples" in row:
        updates["vote_samples"] = int(row["vote_samples"])
    if "max_plan_rounds" in row:
        updates["max_plan_rounds"] = int(row["max_plan_rounds"])
    if "context_budget" in row:
        updates["context_budget"] = int(row["context_budget"])
    if "min_url_length" in row:
        updates["min_url_length"] = int(row["min_url_length"])
    if "template_dir" in row:
        updates["template_dir"] = row["template_dir"]
    if "latency_alpha" in row or "latency_beta" in row:
        updates["latency_model"] = LatencyModel(
            alpha=float(row.get("latency_alpha", 0.0)),
            beta=float(row.get("latency_beta", 0.0)),
        )
    return replace(config, **updates)


def read_config_file(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None


@dataclass(frozen=True)
class AblationVariant:
    """One row of an ablation matrix: a named agent configuration."""

    name: str
    agent: AgentConfig

    @classmethod
    def from_dict(cls, row: dict, base: AgentConfig) -> "AblationVariant":
        name = row.get("name")
        if not name:
            raise ConfigError("ablation variant needs a name")
        return cls(name=name, agent=agent_config_from_dict(row, base))
