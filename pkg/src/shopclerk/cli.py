"""Command-line entry point: run, bench, ablate, metrics, chat, replay."""

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .backends import ScriptedBackend
from .bench import report_table, run_ablation, write_report
from .config import (
    AblationVariant,
    AgentConfig,
    agent_config_from_dict,
    read_config_file,
)
from .episode import make_backends, run_episode, write_result
from .errors import ClerkError, ConfigError, UsageError
from .metrics import (
    ai_contribution_ratio,
    format_fraction,
    pass_hat_k,
    read_annotations_csv,
    read_trial_records,
    relative_improvement,
    time_reduction,
)
from .tasks import load_suite, load_task
from .vision import FixtureVisionBackend

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

_PKG_DATA = Path(__file__).parent / "data"
DEFAULT_FIXTURES = _PKG_DATA / "vision_fixtures.json"
DEFAULT_SUITE = _PKG_DATA / "suite"
DEFAULT_SCRIPTS = _PKG_DATA / "scripts"


def _add_backend_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--script", help="scripted backend: path to a script JSON file")
    parser.add_argument("--replay", help="replay backend: path to a recorded store")
    parser.add_argument("--remote", action="store_true",
                        help="remote backend from SHOPCLERK_CHAT_URL / _KEY")
    parser.add_argument("--record", help="record exchanges into this store file")
    parser.add_argument("--fixtures", default=str(DEFAULT_FIXTURES),
                        help="vision fixture JSON (default: bundled)")


def _add_agent_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--n-candidates", type=int, dest="n_candidates")
    parser.add_argument("--confidence-floor", type=float, dest="confidence_floor")
    parser.add_argument("--aci", choices=["on", "off"])
    parser.add_argument("--strategy", choices=["tool", "planner"])
    parser.add_argument("--decision-module", choices=["on", "off"], dest="decision_module")
    parser.add_argument("--seed", type=int, default=0, help="random seed (reserved for stochastic backends)")


def _agent_config(args) -> AgentConfig:
    base = AgentConfig()
    if args.config:
        base = agent_config_from_dict(read_config_file(args.config), base)
    overrides = {}
    for key in ("n_candidates", "confidence_floor", "aci", "strategy", "decision_module"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return agent_config_from_dict(overrides, base)


def _backends_for(args):
    fixtures = args.fixtures if Path(args.fixtures).exists() else None
    return make_backends(
        script_path=args.script,
        replay_path=args.replay,
        remote=args.remote,
        record_path=args.record,
        vision_fixture_path=fixtures,
    )


def _suite_backend_factory(args, scripts_dir: Path):
    """Per-episode fresh backends; scripted scripts are looked up by task id."""
    fixtures = FixtureVisionBackend.from_file(args.fixtures)

    def factory(task, trial):
        if args.replay:
            chat, _ = make_backends(replay_path=args.replay)
        elif args.remote:
            chat, _ = make_backends(remote=True)
        else:
            script = scripts_dir / f"{task.task_id}.json"
            if not script.exists():
                raise ConfigError(f"no script for task {task.task_id}: {script}")
            chat = ScriptedBackend.from_file(script)
        return chat, fixtures

    return factory


def cmd_run(args) -> int:
    config = _agent_config(args)
    fixtures = FixtureVisionBackend.from_file(args.fixtures)
    task = load_task(args.task, vision_fixtures=fixtures)
    chat, vision = _backends_for(args)
    result = run_episode(task, config, chat, vision, trial_index=args.trial)
    if args.out:
        write_result(result, args.out)
    print(f"task={result.task_id} success={str(result.success).lower()} "
          f"replies={len(result.replies)} prompt_chars={result.usage.prompt_chars} "
          f"backend_calls={result.usage.backend_calls}")
    if result.error:
        print(f"episode error: {result.error}", file=sys.stderr)
    for row in result.report_rows:
        print(f"  {'PASS' if row['ok'] else 'FAIL'}  {row['predicate']}")
    return EXIT_OK if result.success else EXIT_FAILURE


def _parse_k_values(raw: str) -> list[int]:
    try:
        return [int(x) for x in raw.split(",") if x]
    except ValueError:
        raise UsageError(f"bad k list: {raw!r}") from None


def cmd_bench(args) -> int:
    config = _agent_config(args)
    fixtures = FixtureVisionBackend.from_file(args.fixtures)
    tasks = load_suite(args.suite, vision_fixtures=fixtures)
    factory = _suite_backend_factory(args, Path(args.scripts))
    k_values = _parse_k_values(args.k)
    variants = [AblationVariant(name="default", agent=config)]
    reports, results = run_ablation(tasks, variants, factory, args.n_trials, k_values,
                                    workers=args.workers)
    print(report_table(reports, k_values))
    if args.out:
        write_report(reports, k_values, args.out)
        for result in results:
            write_result(result, Path(args.out) / "trials")
    return EXIT_FAILURE if reports[0].failures else EXIT_OK


def _default_matrix(base: AgentConfig, vary: str) -> list[AblationVariant]:
    if vary == "aci":
        return [
            AblationVariant("aci-off", agent_config_from_dict({"aci": "off"}, base)),
            AblationVariant("aci-on", agent_config_from_dict({"aci": "on"}, base)),
        ]
    if vary == "decision":
        return [
            AblationVariant("decision-off",
                            agent_config_from_dict({"decision_module": "off"}, base)),
            AblationVariant("decision-on",
                            agent_config_from_dict({"decision_module": "on"}, base)),
        ]
    if vary == "strategy":
        return [
            AblationVariant("tool", agent_config_from_dict({"strategy": "tool"}, base)),
            AblationVariant("planner", agent_config_from_dict({"strategy": "planner"}, base)),
        ]
    raise UsageError(f"unknown ablation axis: {vary!r}")


def cmd_ablate(args) -> int:
    base = _agent_config(args)
    fixtures = FixtureVisionBackend.from_file(args.fixtures)
    tasks = load_suite(args.suite, vision_fixtures=fixtures)
    if args.modality:
        tasks = [t for t in tasks if t.modality == args.modality]
        if not tasks:
            raise UsageError(f"no {args.modality} tasks in suite")
    if args.matrix:
        rows = read_config_file(args.matrix)
        variants = [AblationVariant.from_dict(row, base) for row in rows]
    elif args.vary:
        variants = _default_matrix(base, args.vary)
    else:
        raise UsageError("ablate needs --matrix or --vary")
    factory = _suite_backend_factory(args, Path(args.scripts))
    k_values = _parse_k_values(args.k)
    reports, _ = run_ablation(tasks, variants, factory, args.n_trials, k_values,
                              workers=args.workers)
    print(report_table(reports, k_values))
    if args.out:
        write_report(reports, k_values, args.out)
    return EXIT_FAILURE if any(r.failures for r in reports) else EXIT_OK


def cmd_metrics(args) -> int:
    printed = False
    if args.annotations:
        inputs = read_annotations_csv(args.annotations)
        ratio = ai_contribution_ratio(inputs)
        print(f"ai_contribution_ratio={ratio:.4f} "
              f"(valid_ai={inputs.valid_ai} total_ai={inputs.total_ai} total_cr={inputs.total_cr})")
        printed = True
    if args.records:
        trials = read_trial_records(args.records)
        for k in _parse_k_values(args.k):
            value = pass_hat_k(trials, k)
            print(f"pass^{k}={format_fraction(value)}")
        printed = True
    if args.improvement:
        gains = []
        for pair in args.improvement:
            baseline, treatment = _parse_pair(pair)
            gain = relative_improvement(baseline, treatment)
            gains.append(gain)
            print(f"relative_improvement({baseline}, {treatment})={gain * 100:.2f}%")
        if len(gains) > 1:
            print(f"mean_relative_improvement={sum(gains) / len(gains) * 100:.2f}%")
        printed = True
    if args.time_reduction:
        baseline, treatment = _parse_pair(args.time_reduction)
        drop = time_reduction(baseline, treatment)
        print(f"time_reduction({baseline}, {treatment})={drop * 100:.2f}%")
        printed = True
    if not printed:
        raise UsageError("metrics needs --annotations, --records, --improvement, or --time-reduction")
    return EXIT_OK


def _parse_pair(raw: str) -> tuple[float, float]:
    try:
        baseline, treatment = raw.split(":")
        return float(baseline), float(treatment)
    except ValueError:
        raise UsageError(f"expected BASELINE:TREATMENT, got {raw!r}") from None


def cmd_chat(args) -> int:
    config = _agent_config(args)
    task_path = args.task or str(_PKG_DATA / "demo" / "task.json")
    if not args.script and not args.replay and not args.remote:
        args.script = str(_PKG_DATA / "demo" / "script.json")
    fixtures = FixtureVisionBackend.from_file(args.fixtures)
    task = load_task(task_path, vision_fixtures=fixtures)
    chat, vision = _backends_for(args)

    from .episode import AgentSession

    session = AgentSession(task.reset(), chat, vision, config, session_id="chat")
    print(f"shopclerk chat over task {task.task_id}; /trace shows actions, blank line or EOF quits")
    while True:
        try:
            line = input("buyer> ").strip()
        except EOFError:
            print()
            return EXIT_OK
        if not line or line == "/quit":
            return EXIT_OK
        if line == "/trace":
            for event in session.trace.events:
                print(json.dumps(event, sort_keys=True, default=str))
            continue
        try:
            report = session.handle_buyer_turn(line)
        except ClerkError as exc:
            print(f"[error] {exc}", file=sys.stderr)
            continue
        for i, round_row in enumerate(report.rounds):
            print(f"  round {i}:")
            for label_row in round_row["evaluations"]:
                marker = "*" if label_row["plan_id"] == round_row["selected"] else " "
                plan_text = round_row["plans"][label_row["plan_id"]]
                print(f"   {marker}{label_row['label']} conf={label_row['confidence']:.2f} {plan_text}")
        for call in report.tool_calls:
            status = "error" if call["is_error"] else "ok"
            print(f"  tool {call['tool']}({call['arguments']}) -> {status}: {call['text'][:120]}")
        print(f"agent> {report.reply}")


def cmd_replay(args) -> int:
    from .memory import read_transcript, render_turn

    path = Path(args.transcript)
    if not path.exists():
        raise ConfigError(f"transcript not found: {path}")
    wm = read_transcript(path)
    print(f"session {wm.session_id}: {len(wm)} turns")
    for msg in wm.turns:
        print(render_turn(msg))
    if args.trace:
        trace_path = Path(args.trace)
        if not trace_path.exists():
            raise ConfigError(f"trace not found: {trace_path}")
        for line in trace_path.read_text(encoding="utf-8").splitlines():
            row = json.loads(line)
            print(f"  [{row['kind']}] " + json.dumps(row, sort_keys=True)[:160])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shopclerk",
        description="Tool-using customer-service agent, simulated shop, and eval harness",
    )
    parser.add_argument("--version", action="version", version=f"shopclerk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one task episode")
    p_run.add_argument("--task", required=True)
    p_run.add_argument("--trial", type=int, default=0)
    p_run.add_argument("--out", help="directory for result/transcript/trace artifacts")
    _add_backend_flags(p_run)
    _add_agent_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_bench = sub.add_parser("bench", help="run the task suite and print pass^k")
    p_bench.add_argument("--suite", default=str(DEFAULT_SUITE))
    p_bench.add_argument("--scripts", default=str(DEFAULT_SCRIPTS))
    p_bench.add_argument("--n-trials", type=int, default=5, dest="n_trials")
    p_bench.add_argument("--k", default="1,2,3,4,5")
    p_bench.add_argument("--workers", type=int, default=1)
    p_bench.add_argument("--out")
    _add_backend_flags(p_bench)
    _add_agent_flags(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    p_ablate = sub.add_parser("ablate", help="compare agent configurations over the suite")
    p_ablate.add_argument("--suite", default=str(DEFAULT_SUITE))
    p_ablate.add_argument("--scripts", default=str(DEFAULT_SCRIPTS))
    p_ablate.add_argument("--matrix", help="JSON list of variant configs")
    p_ablate.add_argument("--vary", choices=["aci", "decision", "strategy"])
    p_ablate.add_argument("--modality", choices=["unimodal", "multimodal"])
    p_ablate.add_argument("--n-trials", type=int, default=5, dest="n_trials")
    p_ablate.add_argument("--k", default="1,5")
    p_ablate.add_argument("--workers", type=int, default=1)
    p_ablate.add_argument("--out")
    _add_backend_flags(p_ablate)
    _add_agent_flags(p_ablate)
    p_ablate.set_defaults(func=cmd_ablate)

    p_metrics = sub.add_parser("metrics", help="recompute metrics from recorded files")
    p_metrics.add_argument("--annotations", help="CSV of judged messages")
    p_metrics.add_argument("--records", help="directory of *.result.json trials")
    p_metrics.add_argument("--k", default="1,5")
    p_metrics.add_argument("--improvement", action="append",
                           help="BASELINE:TREATMENT pair; repeatable, prints mean")
    p_metrics.add_argument("--time-reduction", dest="time_reduction",
                           help="BASELINE:TREATMENT pair")
    p_metrics.set_defaults(func=cmd_metrics)

    p_chat = sub.add_parser("chat", help="interactive buyer REPL with decision traces")
    p_chat.add_argument("--task", help="world/task file (default: bundled demo)")
    _add_backend_flags(p_chat)
    _add_agent_flags(p_chat)
    p_chat.set_defaults(func=cmd_chat)

    p_replay = sub.add_parser("replay", help="pretty-print a recorded transcript")
    p_replay.add_argument("--transcript", required=True)
    p_replay.add_argument("--trace")
    p_replay.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ClerkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
