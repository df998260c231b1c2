import json

import pytest
from fastapi.testclient import TestClient

from vlkrl.gateway.providers import TransportError
from vlkrl.orchestration.oracles import (
    DualRoleProvider,
    OracleJudgeProvider,
    OracleRespondentProvider,
)
from vlkrl.service.app import ServeSettings, create_app


@pytest.fixture
def client(world, tmp_path):
    settings = ServeSettings(worlds={"default": world}, data_dir=tmp_path / "data")
    return TestClient(create_app(settings))


def open_session(client, **overrides):
    payload = {"world": "default", "mode": "full", "user": "sim", "seed": 5}
    payload.update(overrides)
    response = client.post("/sessions", json=payload)
    assert response.status_code == 201, response.text
    return response.json()


def drive_to_completion(client, session_id, max_turns=40):
    for _ in range(max_turns):
        response = client.post(f"/sessions/{session_id}/utterance", json={"text": ""})
        assert response.status_code == 200, response.text
        if response.json()["status"] != "active":
            return response.json()
    raise AssertionError("session never finished")


class TestSessionLifecycle:
    def test_create_returns_id_and_opening(self, client):
        body = open_session(client)
        assert body["id"]
        assert body["opening"]

    def test_unknown_world_rejected(self, client):
        response = client.post("/sessions", json={"world": "narnia", "mode": "full"})
        assert response.status_code == 400

    def test_unknown_mode_rejected(self, client):
        response = client.post("/sessions", json={"world": "default", "mode": "psychic"})
        assert response.status_code == 400

    def test_two_sessions_get_distinct_ids(self, client):
        assert open_session(client)["id"] != open_session(client)["id"]

    def test_unknown_session_404(self, client):
        assert client.post("/sessions/nope/utterance", json={"text": ""}).status_code == 404
        assert client.get("/sessions/nope/trace").status_code == 404


class TestTurns:
    def test_rl_only_trace_has_no_claims(self, client):
        session = open_session(client, mode="rl_only")
        response = client.post(f"/sessions/{session['id']}/utterance", json={"text": ""})
        trace = response.json()["trace"]
        assert trace["claims"] == []
        assert trace["verified_ids"] == []

    def test_full_mode_shows_implicit_day_claim(self, client):
        # find a sim session whose first turns state the train day, then
        # check the trace carries claim -> accepted verdict -> pair -> diff
        for seed in range(3, 12):
            session = open_session(client, mode="full", seed=seed)
            saw = None
            for _ in range(12):
                response = client.post(
                    f"/sessions/{session['id']}/utterance", json={"text": ""}
                )
                body = response.json()
                trace = body["trace"]
                claims = {c["id"]: c for c in trace["claims"]}
                for cid, claim in claims.items():
                    if claim["hinted_pairs"] and \
                            claim["hinted_pairs"][0][0] == "hotel.day":
                        saw = (claim, trace, cid)
                if body["status"] != "active" or saw:
                    break
            if saw:
                claim, trace, cid = saw
                assert claim["kind"] == "implicit"
                assert cid in trace["verified_ids"]
                transcripts = {t["claim_id"]: t for t in trace["transcripts"]}
                assert transcripts[cid]["verdict"] == "accepted"
                pairs = [p for p in trace["pairs"] if p["slot"] == "day"]
                assert pairs and pairs[0]["domain"] == "hotel"
                assert ["hotel", "day", pairs[0]["value"]] in trace["state_diff"]["augmented"]
                return
        raise AssertionError("no hotel-day goal found in seed range")

    def test_sim_session_runs_to_terminal_status(self, client):
        session = open_session(client, mode="full", seed=5)
        final = drive_to_completion(client, session["id"])
        assert final["status"] in ("completed", "terminated-early")

    def test_llm_only_session_served(self, client):
        session = open_session(client, mode="llm_only", seed=5)
        response = client.post(f"/sessions/{session['id']}/utterance", json={"text": ""})
        assert response.status_code == 200
        # the unbound policy oracle ends the dialogue immediately
        assert response.json()["trace"]["action"] == "goodbye"

    def test_trace_carries_gateway_exchanges(self, client):
        session = open_session(client, mode="full", seed=5)
        response = client.post(f"/sessions/{session['id']}/utterance", json={"text": ""})
        exchanges = response.json()["trace"]["exchanges"]
        assert exchanges and {"role", "prompt", "response"} <= set(exchanges[0])

    def test_human_typed_statement_grounds_explicit_and_implicit(self, client):
        session = open_session(client, user="human")
        response = client.post(
            f"/sessions/{session['id']}/utterance",
            json={"text": "I want the train day to be wednesday"},
        )
        trace = response.json()["trace"]
        kinds = {c["hinted_pairs"][0][0]: c["kind"] for c in trace["claims"]}
        assert kinds.get("train.day") == "explicit"
        assert kinds.get("hotel.day") == "implicit"
        grounded = {(p["domain"], p["slot"]): p["value"] for p in trace["pairs"]}
        assert grounded[("train", "day")] == "wednesday"
        assert grounded[("hotel", "day")] == "wednesday night"

    def test_human_goodbye_completes_session(self, client):
        session = open_session(client, user="human")
        client.post(f"/sessions/{session['id']}/utterance",
                    json={"text": "I need a train to oldtown on monday"})
        response = client.post(f"/sessions/{session['id']}/utterance",
                               json={"text": "thanks, goodbye"})
        assert response.json()["status"] == "completed"

    def test_utterance_on_finished_session_409(self, client):
        session = open_session(client, user="human")
        client.post(f"/sessions/{session['id']}/utterance", json={"text": "goodbye"})
        response = client.post(f"/sessions/{session['id']}/utterance",
                               json={"text": "hello again"})
        assert response.status_code == 409

    def test_gateway_failure_502_and_turn_not_recorded(self, world, tmp_path):
        class FailingProvider:
            def complete(self, role, model, messages, temperature, max_tokens):
                raise TransportError("unreachable")

        settings = ServeSettings(
            worlds={"default": world}, data_dir=tmp_path / "data",
            provider_factory=lambda w: FailingProvider(),
        )
        client = TestClient(create_app(settings))
        session = open_session(client, user="human")
        response = client.post(f"/sessions/{session['id']}/utterance",
                               json={"text": "hello"})
        assert response.status_code == 502
        trace = client.get(f"/sessions/{session['id']}/trace").json()
        assert trace["status"] == "active"
        assert trace["records"] == []

    def test_sim_turn_rolls_back_on_gateway_failure(self, world, tmp_path):
        class FlakyProvider:
            def __init__(self, inner):
                self.inner = inner
                self.fail_next = False

            def complete(self, role, model, messages, temperature, max_tokens):
                if self.fail_next:
                    self.fail_next = False
                    raise TransportError("blip")
                return self.inner.complete(role, model, messages, temperature,
                                           max_tokens)

        provider = FlakyProvider(DualRoleProvider(
            OracleRespondentProvider(world), OracleJudgeProvider(world)
        ))
        settings = ServeSettings(worlds={"default": world},
                                 data_dir=tmp_path / "data",
                                 provider_factory=lambda w: provider)
        client = TestClient(create_app(settings))
        session = open_session(client, mode="full", seed=5)
        provider.fail_next = True
        failed = client.post(f"/sessions/{session['id']}/utterance", json={"text": ""})
        assert failed.status_code == 502
        retried = client.post(f"/sessions/{session['id']}/utterance", json={"text": ""})
        assert retried.status_code == 200
        # the retry replays the same user turn instead of skipping one
        assert retried.json()["trace"]["turn"] == 1

    def test_overlapping_turn_rejected(self, world, tmp_path):
        from vlkrl.service.runtime import SessionBusyError, SessionRuntime
        from vlkrl.orchestration.pipeline import PipelineConfig, TurnPipeline

        pipeline = TurnPipeline(world.ontology, PipelineConfig(knowledge="rl_only"))
        runtime = SessionRuntime("s1", world, "rl_only", pipeline,
                                 user_kind="sim", seed=5)
        assert runtime._lock.acquire(blocking=False)  # a turn is in flight
        try:
            with pytest.raises(SessionBusyError):
                runtime.utterance("")
        finally:
            runtime._lock.release()

    def test_sessions_are_isolated(self, client):
        a = open_session(client, mode="full", seed=5)
        b = open_session(client, mode="full", seed=6)
        for _ in range(4):
            ra = client.post(f"/sessions/{a['id']}/utterance", json={"text": ""})
            rb = client.post(f"/sessions/{b['id']}/utterance", json={"text": ""})
            if ra.json()["status"] != "active" or rb.json()["status"] != "active":
                break
        trace_a = client.get(f"/sessions/{a['id']}/trace").json()
        trace_b = client.get(f"/sessions/{b['id']}/trace").json()
        utterances_a = [r["user_utterance"] for r in trace_a["records"]]
        utterances_b = [r["user_utterance"] for r in trace_b["records"]]
        assert utterances_a != utterances_b


class TestTerminationAndRating:
    def test_terminate_then_sr_true_rejected(self, client):
        session = open_session(client)
        response = client.post(f"/sessions/{session['id']}/terminate")
        assert response.json()["status"] == "terminated-early"
        response = client.post(f"/sessions/{session['id']}/rating",
                               json={"sr": True, "hr": 4})
        assert response.status_code == 422

    def test_terminate_then_hr_still_recorded(self, client):
        session = open_session(client)
        client.post(f"/sessions/{session['id']}/terminate")
        response = client.post(f"/sessions/{session['id']}/rating",
                               json={"sr": False, "hr": 2})
        assert response.status_code == 200
        assert response.json()["rating"] == {"sr": False, "hr": 2}

    def test_double_terminate_409(self, client):
        session = open_session(client)
        client.post(f"/sessions/{session['id']}/terminate")
        assert client.post(f"/sessions/{session['id']}/terminate").status_code == 409

    def test_rating_while_active_409(self, client):
        session = open_session(client)
        response = client.post(f"/sessions/{session['id']}/rating",
                               json={"sr": True, "hr": 4})
        assert response.status_code == 409

    def test_hr_out_of_likert_range_422(self, client):
        session = open_session(client)
        client.post(f"/sessions/{session['id']}/terminate")
        for hr in (0, 6):
            response = client.post(f"/sessions/{session['id']}/rating",
                                   json={"sr": False, "hr": hr})
            assert response.status_code == 422

    def test_second_rating_409(self, client):
        session = open_session(client)
        client.post(f"/sessions/{session['id']}/terminate")
        client.post(f"/sessions/{session['id']}/rating", json={"sr": False, "hr": 3})
        response = client.post(f"/sessions/{session['id']}/rating",
                               json={"sr": False, "hr": 5})
        assert response.status_code == 409

    def test_summary_aggregates_three_rated_sessions(self, client):
        ratings = [(True, 5), (False, 2), (True, 4)]
        for sr, hr in ratings:
            session = open_session(client, mode="full", user="human")
            client.post(f"/sessions/{session['id']}/utterance",
                        json={"text": "thanks, goodbye"})
            response = client.post(f"/sessions/{session['id']}/rating",
                                   json={"sr": sr, "hr": hr})
            assert response.status_code == 200, response.text
        summary = client.get("/ratings/summary").json()["agents"]["full"]
        # hand aggregation over the three rated sessions
        assert summary["n"] == 3
        assert summary["sr"] == pytest.approx(2 / 3)
        assert summary["hr"] == pytest.approx((5 + 2 + 4) / 3)


class TestReportsEndpoint:
    def test_serves_written_report(self, world, tmp_path):
        from vlkrl.evalharness.experiment import ExperimentConfig, run_experiment
        from vlkrl.evalharness.report import write_report

        data_dir = tmp_path / "data"
        report = run_experiment(ExperimentConfig(
            mode="rl_only", epochs=2, batch_size=2, episodes=3, seeds=(11,),
            bc_episodes=10, bc_epochs=2,
        ))
        write_report(report, data_dir / "reports" / "run1")
        settings = ServeSettings(worlds={"default": world}, data_dir=data_dir)
        client = TestClient(create_app(settings))
        body = client.get("/reports/run1").json()
        assert body["fingerprint"] == report.fingerprint
        assert client.get("/reports/absent").status_code == 404


class TestAnonymization:
    def test_agent_labels_hidden(self, world, tmp_path):
        settings = ServeSettings(worlds={"default": world},
                                 data_dir=tmp_path / "data",
                                 anonymize_agents=True)
        client = TestClient(create_app(settings))
        body = open_session(client, mode="full", seed=5)
        assert body["agent"].startswith("agent-")
        assert "full" not in body["agent"]
