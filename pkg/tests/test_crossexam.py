import dataclasses
import logging

import pytest

from vlkrl.core.claims import ConstraintClaim
from vlkrl.core.ontology import Database
from vlkrl.core.state import empty_state, serialize_state
from vlkrl.crossexam.exam import examine, propose
from vlkrl.crossexam.gating import GatingConfig, gate_dynamic_update, gate_fixed
from vlkrl.crossexam.failures import classify_failure
from vlkrl.gateway.gateway import LlmGateway
from vlkrl.gateway.prompts import STOP_TOKEN
from vlkrl.gateway.providers import ScriptedProvider


def claim(cid="t0-k1", slot="hotel.day", value="monday night", confidence=0.9):
    return ConstraintClaim(
        id=cid,
        text=f"The hotel day should be {value}.",
        kind="implicit",
        hinted_pairs=((slot, value),),
        confidence=confidence,
    )


def respondent_output(state, fills, confidence="0.9"):
    belief = {d: dict(s) for d, s in state.belief_state.items()}
    for (domain, slot), value in fills.items():
        belief[domain][slot] = value
    updated = dataclasses.replace(state, belief_state=belief)
    return f"@{serialize_state(updated)}@, confidence coefficient: ${confidence}$"


class TestPropose:
    def test_unchanged_state_yields_no_claims(self, world):
        state = empty_state(world.ontology)
        provider = ScriptedProvider({"respondent": [respondent_output(state, {})]})
        claims = propose(LlmGateway(provider=provider), state, world.ontology)
        assert claims == []

    def test_two_fills_yield_two_claims(self, world):
        state = empty_state(world.ontology)
        raw = respondent_output(
            state,
            {("hotel", "day"): "monday night", ("attraction", "area"): "north end"},
        )
        provider = ScriptedProvider({"respondent": [raw]})
        claims = propose(LlmGateway(provider=provider), state, world.ontology)
        assert len(claims) == 2
        assert {c.hinted_pairs[0][0] for c in claims} == {"hotel.day", "attraction.area"}

    def test_malformed_output_degrades_to_empty(self, world, caplog):
        state = empty_state(world.ontology)
        provider = ScriptedProvider({"respondent": ["no delimiters at all"]})
        with caplog.at_level(logging.WARNING):
            claims = propose(LlmGateway(provider=provider), state, world.ontology)
        assert claims == []
        assert any("rejected" in r.message for r in caplog.records)


class TestExamine:
    def test_empty_claims_make_no_calls(self, world):
        provider = ScriptedProvider({})
        gateway = LlmGateway(provider=provider)
        verified, transcripts = examine(gateway, empty_state(world.ontology), [])
        assert verified == []
        assert transcripts == []
        assert gateway.call_count == 0

    def test_consistent_respondent_accepted(self, world):
        c = claim()
        provider = ScriptedProvider({
            "judge": [
                "What supports hotel.day = monday night?",
                STOP_TOKEN,
                f"{c.id}: True",
            ],
            "respondent": ["The train arrives monday, so the hotel night follows."],
        })
        gateway = LlmGateway(provider=provider)
        verified, transcripts = examine(gateway, empty_state(world.ontology), [c])
        assert verified == [c]
        assert transcripts[0].verdict == "accepted"
        assert transcripts[0].rounds_used == 1

    def test_contradicting_respondent_rejected(self, world):
        c = claim()
        provider = ScriptedProvider({
            "judge": [
                "Which night is the hotel for?",
                STOP_TOKEN,
                f"{c.id}: False",
            ],
            "respondent": ["Actually it should be tuesday night, not monday night."],
        })
        gateway = LlmGateway(provider=provider)
        verified, transcripts = examine(gateway, empty_state(world.ontology), [c])
        assert verified == []
        assert transcripts[0].verdict == "rejected"

    def test_round_cap_honored_with_persistent_judge(self, world):
        c = claim()
        provider = ScriptedProvider({
            "judge": [f"follow-up {i}?" for i in range(1, 9)] + [f"{c.id}: True"],
            "respondent": ["same answer."] * 8,
        }, strict=False, fallback=f"{c.id}: True")
        gateway = LlmGateway(provider=provider)
        verified, transcripts = examine(
            gateway, empty_state(world.ontology), [c], round_limit=5
        )
        assert transcripts[0].rounds_used == 5
        assert transcripts[0].verdict in ("accepted", "rejected")  # verdict rendered

    def test_evasive_respondent_rejected(self, world):
        # the judge keeps probing an evasive respondent, then rejects
        c = claim()
        provider = ScriptedProvider({
            "judge": [f"please answer directly ({i})" for i in range(1, 6)]
            + [f"{c.id}: False"],
            "respondent": ["I would rather not say."] * 5,
        })
        gateway = LlmGateway(provider=provider)
        verified, transcripts = examine(gateway, empty_state(world.ontology), [c])
        assert verified == []
        assert transcripts[0].rounds_used == 5
        assert transcripts[0].verdict == "rejected"

    def test_unparseable_verdict_fails_closed(self, world, caplog):
        c = claim()
        provider = ScriptedProvider({
            "judge": [STOP_TOKEN, "I cannot decide, sorry"],
            "respondent": [],
        })
        gateway = LlmGateway(provider=provider)
        with caplog.at_level(logging.WARNING):
            verified, transcripts = examine(gateway, empty_state(world.ontology), [c])
        assert verified == []
        assert transcripts[0].verdict == "rejected"

    def test_verified_is_subset_and_call_bound(self, world):
        claims = [claim(cid=f"t0-k{i}") for i in range(1, 4)]
        round_limit = 5
        script = {"judge": [], "respondent": []}
        for c in claims:
            script["judge"] += [f"q about {c.id}?", STOP_TOKEN, f"{c.id}: True"]
            script["respondent"] += ["consistent answer."]
        provider = ScriptedProvider(script)
        gateway = LlmGateway(provider=provider)
        verified, transcripts = examine(
            gateway, empty_state(world.ontology), claims, round_limit
        )
        assert set(c.id for c in verified) <= set(c.id for c in claims)
        assert gateway.call_count <= len(claims) * (2 * round_limit + 2)
        assert all(t.rounds_used <= round_limit for t in transcripts)

    def test_results_merged_in_claim_id_order(self, world):
        claims = [claim(cid="t0-k2"), claim(cid="t0-k1")]
        script = {"judge": [], "respondent": []}
        for cid in ("t0-k1", "t0-k2"):  # examined in sorted order
            script["judge"] += [STOP_TOKEN, f"{cid}: True"]
        gateway = LlmGateway(provider=ScriptedProvider(script))
        verified, transcripts = examine(gateway, empty_state(world.ontology), claims)
        assert [t.claim_id for t in transcripts] == ["t0-k1", "t0-k2"]
        assert [c.id for c in verified] == ["t0-k1", "t0-k2"]


class TestGating:
    def test_fixed_keeps_above_threshold(self):
        kept = gate_fixed([claim(confidence=0.9)], 0.85)
        assert len(kept) == 1

    def test_fixed_drops_exact_threshold(self):
        assert gate_fixed([claim(confidence=0.85)], 0.85) == []

    def test_fixed_empty(self):
        assert gate_fixed([], 0.85) == []

    def test_dynamic_warmup_branch(self):
        config = GatingConfig(mode="dynamic", tau0=0.85, warmup_epochs=10)
        assert gate_dynamic_update(config, 3, 0.99) == 0.85

    def test_dynamic_formula(self):
        config = GatingConfig(mode="dynamic", tau0=0.85, alpha=0.1,
                              f1_threshold=0.70, warmup_epochs=0)
        assert gate_dynamic_update(config, 5, 0.80) == pytest.approx(0.86)

    def test_dynamic_below_target_clamps_to_tau0(self):
        config = GatingConfig(mode="dynamic", tau0=0.85, alpha=0.1,
                              f1_threshold=0.70, warmup_epochs=0)
        assert gate_dynamic_update(config, 5, 0.50) == 0.85

    def test_dynamic_monotone_in_f1_and_clamped(self):
        config = GatingConfig(mode="dynamic", tau0=0.9, alpha=2.0,
                              f1_threshold=0.2, warmup_epochs=0)
        values = [gate_dynamic_update(config, 10, f1 / 10) for f1 in range(11)]
        assert values == sorted(values)
        assert all(0.0 <= v <= 1.0 for v in values)
        assert values[-1] == 1.0  # clamped


class TestClassifyFailure:
    @pytest.fixture
    def database(self):
        return Database({
            "restaurant": (
                {"id": "r1", "name": "cotto", "price": "moderate", "open": "late"},
                {"id": "r2", "name": "acorn", "price": "cheap", "open": "early"},
            ),
        })

    def test_t1_fabricated_value(self, database):
        informs = [("restaurant", "name", "kings garden bistro")]
        assert classify_failure(informs, {}, database, {}) == "T1"

    def test_t2_conflicting_values(self, database):
        informs = [
            ("restaurant", "price", "cheap"),
            ("restaurant", "price", "moderate"),
        ]
        assert classify_failure(informs, {}, database, {}) == "T2"

    def test_t3_booking_violates_constraint(self, database):
        bookings = {"restaurant": {"id": "r2", "open": "early"}}
        satisfaction = {"explicit:restaurant.open:late": False}
        assert classify_failure([], bookings, database, satisfaction) == "T3"

    def test_priority_t1_over_t2_over_t3(self, database):
        informs = [
            ("restaurant", "name", "kings garden bistro"),
            ("restaurant", "price", "cheap"),
            ("restaurant", "price", "moderate"),
        ]
        bookings = {"restaurant": {"id": "r2"}}
        satisfaction = {"explicit:restaurant.open:late": False}
        assert classify_failure(informs, bookings, database, satisfaction) == "T1"
        assert classify_failure(informs[1:], bookings, database, satisfaction) == "T2"

    def test_clean_record_is_none(self, database):
        informs = [("restaurant", "price", "cheap")]
        bookings = {"restaurant": {"id": "r2"}}
        assert classify_failure(informs, bookings, database, {"k": True}) == "none"
