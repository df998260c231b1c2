import json

import pytest

from vlkrl.core.goals import ConstraintSpec, UserGoal
from vlkrl.evalharness.experiment import (
    ExperimentConfig,
    low_resource_config,
    run_experiment,
)
from vlkrl.evalharness.metrics import act_metrics, attribute_failure
from vlkrl.evalharness.report import (
    RunReport,
    load_report,
    render_table,
    write_report,
)

FAST = dict(epochs=3, batch_size=4, episodes=6, seeds=(11,),
            bc_episodes=20, bc_epochs=3)


def make_goal(n_explicit=1, n_implicit=1):
    constraints = []
    for i in range(n_explicit):
        constraints.append(ConstraintSpec(
            kind="explicit", domain="hotel", slot=f"s{i}",
            description="", value="v",
        ))
    for i in range(n_implicit):
        constraints.append(ConstraintSpec(
            kind="implicit", domain="hotel", slot=f"t{i}",
            description="", rule_id="r", source_domain="train",
            source_slot="day", source_value="monday",
        ))
    return UserGoal(seed=0, active_domains=("hotel",),
                    constraints=tuple(constraints), requests={})


class TestActMetrics:
    def test_perfect_match(self):
        turns = [{"a", "b"}, {"c"}]
        assert act_metrics(turns, turns) == (1.0, 1.0, 1.0)

    def test_half_overlap(self):
        predicted = [{"a", "x"}, {"b", "y"}]
        reference = [{"a", "p"}, {"b", "q"}]
        assert act_metrics(predicted, reference) == (0.5, 0.5, 0.5)

    def test_empty_predictions_score_zero(self):
        assert act_metrics([set()], [{"a"}]) == (0.0, 0.0, 0.0)

    def test_misaligned_lists_rejected(self):
        with pytest.raises(ValueError):
            act_metrics([set()], [])


class TestAttributeFailure:
    def test_implicit_only_violation(self):
        goal = make_goal()
        satisfaction = {goal.constraints[0].key(): True,
                        goal.constraints[1].key(): False}
        assert attribute_failure(goal, satisfaction) == "implicit"

    def test_explicit_only_violation(self):
        goal = make_goal()
        satisfaction = {goal.constraints[0].key(): False,
                        goal.constraints[1].key(): True}
        assert attribute_failure(goal, satisfaction) == "explicit"

    def test_both_violated_prioritizes_implicit(self):
        goal = make_goal()
        satisfaction = {c.key(): False for c in goal.constraints}
        assert attribute_failure(goal, satisfaction) == "implicit"

    def test_nothing_violated_is_other(self):
        goal = make_goal()
        satisfaction = {c.key(): True for c in goal.constraints}
        assert attribute_failure(goal, satisfaction) == "other"

    def test_never_grounded_counts_as_violation(self):
        goal = make_goal()
        assert attribute_failure(goal, {}) == "implicit"


class TestRunExperiment:
    def test_rl_only_never_touches_the_gateway(self):
        report = run_experiment(ExperimentConfig(mode="rl_only", **FAST))
        assert report.aggregates["total_gateway_calls"] == 0

    def test_deterministic_reports(self):
        config = ExperimentConfig(mode="full", **FAST)
        first = run_experiment(config)
        second = run_experiment(config)
        assert first.to_json() == second.to_json()

    def test_llm_only_runs_with_oracle_policy_provider(self):
        report = run_experiment(ExperimentConfig(mode="llm_only", **FAST))
        assert report.aggregates["episodes"] == 6
        assert report.aggregates["total_gateway_calls"] > 0

    def test_dqn_and_pg_backbones_run(self):
        for backbone in ("dqn", "pg"):
            report = run_experiment(
                ExperimentConfig(mode="rl_only", backbone=backbone, **FAST)
            )
            assert report.aggregates["episodes"] == 6

    def test_dynamic_gating_records_tau(self):
        config = ExperimentConfig(mode="full", gating="dynamic",
                                  validation_episodes=1, **FAST)
        report = run_experiment(config)
        rows = report.curves["seed_11"]
        assert all("tau" in row for row in rows)
        assert all(0.0 <= row["tau"] <= 1.0 for row in rows)

    def test_retry_budget_counts_attempts(self):
        config = ExperimentConfig(mode="full", retry_budget=5, **FAST)
        report = run_experiment(config)
        assert report.aggregates["avg_retry_attempts"] >= 0.0

    def test_failure_shares_sum_to_at_most_one(self):
        report = run_experiment(ExperimentConfig(mode="rl_only", **FAST))
        agg = report.aggregates
        assert agg["implicit_failure_share"] + agg["explicit_failure_share"] <= 1.0 + 1e-12
        assert agg["complete_rate"] >= agg["success_rate"]
        assert agg["avg_turn_succ"] <= 30 and agg["avg_turn_all"] <= 30


class TestLowResource:
    def test_config_shape(self):
        config = low_resource_config()
        assert config.batch_size == 1
        assert config.warm_start == ""

    def test_smoke_runs_in_both_modes(self):
        for mode in ("rl_only", "full"):
            config = low_resource_config(ExperimentConfig(
                mode=mode, epochs=3, episodes=3, seeds=(11,),
            ))
            report = run_experiment(config)
            assert report.aggregates["episodes"] == 3


class TestReports:
    def _report(self):
        return run_experiment(ExperimentConfig(mode="rl_only", **FAST))

    def test_write_and_load_round_trip(self, tmp_path):
        report = self._report()
        out = write_report(report, tmp_path / "run")
        loaded = load_report(out / "report.json")
        assert loaded.aggregates == report.aggregates
        assert loaded.fingerprint == report.fingerprint

    def test_emits_delimited_output_and_figures(self, tmp_path):
        report = self._report()
        out = write_report(report, tmp_path / "run")
        assert (out / "report.csv").exists()
        assert (out / "table.txt").exists()
        assert (out / "failure_breakdown.png").stat().st_size > 0
        assert (out / "training_curves.png").stat().st_size > 0
        table = (out / "table.txt").read_text()
        for column in ("Avg. Precision", "Avg. F1", "Avg. Recall",
                       "Complete/Tot", "Success/Tot", "Avg. Turn (Succ)",
                       "Avg. Turn (All)"):
            assert column in table

    def test_tampered_aggregates_detected(self, tmp_path):
        report = self._report()
        out = write_report(report, tmp_path / "run")
        payload = json.loads((out / "report.json").read_text())
        payload["aggregates"]["success_rate"] = 0.999
        (out / "report.json").write_text(json.dumps(payload))
        with pytest.raises(ValueError):
            load_report(out / "report.json")

    def test_render_table_orders_columns(self):
        text = render_table({"run": {
            "avg_precision": 0.5, "avg_f1": 0.5, "avg_recall": 0.5,
            "complete_rate": 0.5, "success_rate": 0.25,
            "avg_turn_succ": 10.0, "avg_turn_all": 12.0,
        }})
        header = text.splitlines()[0]
        assert header.index("Avg. Precision") < header.index("Avg. F1")
        assert header.index("Success/Tot") < header.index("Avg. Turn (Succ)")
