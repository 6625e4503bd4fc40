import pytest

from shopclerk.backends import ScriptedBackend
from shopclerk.bench import report_table, run_ablation, run_trials, summarize, write_report
from shopclerk.config import AblationVariant, AgentConfig, LatencyModel, agent_config_from_dict
from shopclerk.errors import UsageError
from shopclerk.tasks import load_suite, load_task

LATENCY = LatencyModel(alpha=0.01, beta=2.0)


def make_factory(scripts_dir, vision_fixtures):
    def factory(task, trial):
        return ScriptedBackend.from_file(scripts_dir / f"{task.task_id}.json"), vision_fixtures

    return factory


@pytest.fixture()
def three_tasks(suite_dir, vision_fixtures):
    wanted = ("kettle-capacity", "mug-price-stock", "damaged-kettle-refund")
    return [load_task(suite_dir / f"{t}.json", vision_fixtures) for t in wanted]


def test_trial_counting_contract(three_tasks, scripts_dir, vision_fixtures):
    factory = make_factory(scripts_dir, vision_fixtures)
    variants = [
        AblationVariant("a", AgentConfig(latency_model=LATENCY)),
        AblationVariant("b", agent_config_from_dict({"aci": "off"},
                                                    AgentConfig(latency_model=LATENCY))),
    ]
    reports, results = run_ablation(three_tasks, variants, factory, n_trials=5, k_values=[1, 5])
    assert len(results) == 2 * 3 * 5
    assert len(reports) == 2
    assert all(r.episodes == 15 for r in reports)


def test_k_values_bounded_by_n_trials(three_tasks, scripts_dir, vision_fixtures):
    factory = make_factory(scripts_dir, vision_fixtures)
    with pytest.raises(UsageError):
        run_ablation(three_tasks, [AblationVariant("a", AgentConfig())], factory,
                     n_trials=5, k_values=[7])


def test_aci_ablation_direction_on_multimodal(suite_dir, scripts_dir, vision_fixtures):
    tasks = [t for t in load_suite(suite_dir, vision_fixtures) if t.modality == "multimodal"]
    factory = make_factory(scripts_dir, vision_fixtures)
    base = AgentConfig(latency_model=LATENCY)
    variants = [
        AblationVariant("aci-off", agent_config_from_dict({"aci": "off"}, base)),
        AblationVariant("aci-on", base),
    ]
    reports, _ = run_ablation(tasks, variants, factory, n_trials=2, k_values=[1])
    off, on = reports
    assert on.usage["prompt_chars"] < off.usage["prompt_chars"]
    assert on.mean_times["multimodal"] < off.mean_times["multimodal"]


def test_parallel_workers_match_serial(three_tasks, scripts_dir, vision_fixtures):
    factory = make_factory(scripts_dir, vision_fixtures)
    config = AgentConfig(latency_model=LATENCY)
    serial = run_trials(three_tasks, config, factory, n_trials=2, workers=1)
    parallel = run_trials(three_tasks, config, factory, n_trials=2, workers=4)
    key = lambda r: (r.task_id, r.trial_index, r.success, r.usage.prompt_chars)
    assert sorted(map(key, serial)) == sorted(map(key, parallel))


def test_summarize_counts_episode_errors(three_tasks, vision_fixtures):
    def broken_factory(task, trial):
        return ScriptedBackend([]), vision_fixtures  # exhausts immediately

    results = run_trials(three_tasks, AgentConfig(), broken_factory, n_trials=1)
    report = summarize("broken", {}, results, k_values=[1])
    assert report.failures == 3
    assert report.pass_k[1] == 0.0


def test_report_table_and_files(tmp_path, three_tasks, scripts_dir, vision_fixtures):
    factory = make_factory(scripts_dir, vision_fixtures)
    variants = [AblationVariant("default", AgentConfig(latency_model=LATENCY))]
    reports, _ = run_ablation(three_tasks, variants, factory, n_trials=2, k_values=[1, 2])
    table = report_table(reports, [1, 2])
    assert "pass^1" in table.splitlines()[0]
    assert "default" in table
    write_report(reports, [1, 2], tmp_path)
    assert (tmp_path / "report.json").exists()
    assert "pass^2" in (tmp_path / "report.txt").read_text()
