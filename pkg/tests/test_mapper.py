import dataclasses
import logging

import numpy as np
import pytest

from vlkrl.core.claims import ConstraintClaim, EnrichedState, SlotValuePair
from vlkrl.core.ontology import EMPTY, Ontology
from vlkrl.core.state import empty_state
from vlkrl.gateway.gateway import LlmGateway
from vlkrl.gateway.providers import ScriptedProvider
from vlkrl.mapper.embedding import (
    EmbeddingError,
    StubEmbeddingProvider,
    TrigramEmbeddingProvider,
    cosine,
)
from vlkrl.mapper.extraction import extract
from vlkrl.mapper.mapping import (
    MapperConfig,
    UnknownSlotError,
    enrich,
    map_claims,
    match_slot,
    normalize_value,
)
from vlkrl.mapper.retries import map_with_retries


def free_text_claim(cid, text):
    return ConstraintClaim(id=cid, text=text, kind="implicit")


def hinted_claim(cid, slot, value, confidence=0.9):
    return ConstraintClaim(
        id=cid, text=f"{slot} should be {value}.", kind="implicit",
        hinted_pairs=((slot, value),), confidence=confidence,
    )


def brute_force_normalize(value_text, values, provider, tau):
    """Independent oracle: plain scan, max similarity, lexicographic ties."""
    best, best_sim = None, -2.0
    for candidate in values:
        sim = cosine(provider.embed(value_text), provider.embed(candidate))
        if sim > best_sim or (sim == best_sim and candidate < best):
            best, best_sim = candidate, sim
    return (best, best_sim) if best_sim >= tau else None


class TestCosine:
    def test_identity(self):
        assert cosine(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 1.0

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_forty_five_degrees(self):
        value = cosine(np.array([1.0, 1.0]), np.array([1.0, 0.0]))
        assert abs(value - 0.7071067811865476) < 1e-9

    def test_zero_vector_error(self):
        with pytest.raises(EmbeddingError):
            cosine(np.zeros(3), np.ones(3))

    def test_dimension_mismatch(self):
        with pytest.raises(EmbeddingError):
            cosine(np.ones(3), np.ones(4))


class TestTrigramProvider:
    def test_deterministic_across_calls(self):
        provider = TrigramEmbeddingProvider()
        first = provider.embed("x")
        second = TrigramEmbeddingProvider().embed("x")
        assert np.array_equal(first, second)
        assert provider.dimension == 256

    def test_unit_norm(self):
        vector = TrigramEmbeddingProvider().embed("some text")
        assert abs(np.linalg.norm(vector) - 1.0) < 1e-12


class TestNormalizeValue:
    def test_legal_value_maps_to_itself_with_similarity_one(self, city_ontology):
        provider = TrigramEmbeddingProvider()
        result = normalize_value("hotel", "area", "Brooklyn", city_ontology,
                                 provider, tau=0.7)
        assert result == ("Brooklyn", 1.0)

    def test_stub_provider_resolves_paraphrase(self, city_ontology):
        provider = StubEmbeddingProvider({
            "NYC downtown": [1.0, 0.1, 0.0],
            "Midtown Manhattan": [0.9, 0.2, 0.0],
            "Brooklyn": [0.0, 0.0, 1.0],
        })
        result = normalize_value("hotel", "area", "NYC downtown", city_ontology,
                                 provider, tau=0.7)
        assert result is not None
        value, similarity = result
        assert value == "Midtown Manhattan"
        assert similarity >= 0.7

    def test_below_threshold_discarded(self, city_ontology):
        provider = TrigramEmbeddingProvider()
        oracle = brute_force_normalize(
            "zzzzqq", city_ontology.legal_values("hotel", "area"), provider, 0.7
        )
        assert oracle is None  # confirms the fixture really is below tau
        assert normalize_value("hotel", "area", "zzzzqq", city_ontology,
                               provider, tau=0.7) is None

    def test_unknown_slot_error(self, city_ontology):
        with pytest.raises(UnknownSlotError):
            normalize_value("hotel", "vibe", "x", city_ontology,
                            TrigramEmbeddingProvider(), 0.7)

    def test_tie_breaks_lexicographically(self, tiny_ontology):
        same = [1.0, 0.0]
        provider = StubEmbeddingProvider({
            "anything": same, "espresso": same, "tea": same,
        })
        result = normalize_value("cafe", "drink", "anything", tiny_ontology,
                                 provider, tau=0.0)
        assert result == ("espresso", 1.0)  # lexicographically first among ties

    def test_matches_brute_force_on_random_sets(self):
        provider = TrigramEmbeddingProvider()
        rng = np.random.default_rng(42)
        alphabet = list("abcdefghijklmnopqrstuvwxyz ")
        for _ in range(100):
            size = int(rng.integers(1, 50))
            values = sorted({
                "".join(rng.choice(alphabet, size=int(rng.integers(3, 12))))
                for _ in range(size)
            })
            ontology = Ontology(("d",), {"d": ("s",)}, {("d", "s"): tuple(values)})
            query = "".join(rng.choice(alphabet, size=int(rng.integers(3, 12))))
            tau = float(rng.choice([0.0, 0.3, 0.7, 1.0]))
            assert normalize_value("d", "s", query, ontology, provider, tau) == \
                brute_force_normalize(query, values, provider, tau)


class TestMatchSlot:
    def test_exact_name_short_circuits(self, city_ontology):
        provider = TrigramEmbeddingProvider()
        assert match_slot("hotel.area", city_ontology, provider) == ("hotel", "area")
        assert match_slot("hotel_area", city_ontology, provider) == ("hotel", "area")

    def test_fuzzy_hotel_location(self, city_ontology):
        provider = TrigramEmbeddingProvider()
        assert match_slot("hotel location", city_ontology, provider) == ("hotel", "area")

    def test_single_slot_ontology_forced(self, tiny_ontology):
        provider = TrigramEmbeddingProvider()
        assert match_slot("complete nonsense", tiny_ontology, provider) == ("cafe", "drink")


class TestExtract:
    def test_hinted_pairs_pass_through(self):
        claim = hinted_claim("c1", "hotel.area", "NYC downtown")
        candidates = extract([claim])
        assert len(candidates) == 1
        assert candidates[0].slot_text == "hotel.area"
        assert candidates[0].value_text == "NYC downtown"
        assert candidates[0].hinted

    def test_area_cue_template(self):
        claim = free_text_claim("c1", "the area is definitely Bateman Street")
        candidates = extract([claim])
        assert len(candidates) == 1
        assert candidates[0].slot_text == "area"
        assert candidates[0].value_text == "Bateman Street"

    def test_unmatched_claim_yields_nothing(self, caplog):
        claim = free_text_claim("c1", "hmm, who knows, really")
        with caplog.at_level(logging.INFO):
            assert extract([claim]) == []

    def test_cue_variants(self):
        texts = {
            "price range should be cheap": ("price range", "cheap"),
            "the stars must be four.": ("stars", "four"),
            "set the destination to oldtown": ("destination", "oldtown"),
            "day = monday": ("day", "monday"),
        }
        for text, expected in texts.items():
            candidates = extract([free_text_claim("c", text)])
            assert (candidates[0].slot_text, candidates[0].value_text) == expected, text

    def test_free_text_to_attraction_area(self, trip_ontology):
        # extraction then slot matching lands on the only 'area' slot
        provider = TrigramEmbeddingProvider()
        claim = free_text_claim("c1", "the area is definitely Bateman Street")
        candidate = extract([claim])[0]
        matched = match_slot(candidate.slot_text, trip_ontology, provider)
        assert matched == ("attraction", "area")
        normalized = normalize_value(*matched, candidate.value_text, trip_ontology,
                                     provider, tau=0.7)
        assert normalized is not None
        assert normalized[0] == "Bateman Street"


class TestMapClaims:
    def test_empty_claims(self, world):
        pairs, diagnostics = map_claims(
            [], empty_state(world.ontology), world.ontology,
            TrigramEmbeddingProvider(), MapperConfig(),
        )
        assert pairs == []
        assert diagnostics == []

    def test_single_claim_end_to_end(self, world):
        claim = hinted_claim("c1", "hotel.day", "monday night")
        pairs, _ = map_claims([claim], empty_state(world.ontology), world.ontology,
                              TrigramEmbeddingProvider(), MapperConfig())
        assert [(p.domain, p.slot, p.value) for p in pairs] == \
            [("hotel", "day", "monday night")]
        assert pairs[0].similarity == 1.0
        assert pairs[0].source_claim == "c1"

    def test_duplicate_slot_keeps_highest_similarity(self, city_ontology):
        provider = StubEmbeddingProvider({
            "downtown-ish": [0.9, 0.1],
            "downtown": [1.0, 0.0],
            "Midtown Manhattan": [1.0, 0.0],
            "Brooklyn": [0.0, 1.0],
        })
        claims = [
            hinted_claim("c1", "hotel.area", "downtown-ish"),
            hinted_claim("c2", "hotel.area", "downtown"),
        ]
        pairs, diagnostics = map_claims(
            claims, empty_state(city_ontology), city_ontology, provider,
            MapperConfig(tau=0.5),
        )
        assert len(pairs) == 1
        assert pairs[0].source_claim == "c2"  # exact match wins
        reasons = {d.reason for d in diagnostics}
        assert "kept" in reasons and ("superseded" in reasons or "duplicate" in reasons)

    def test_pairs_for_filled_slots_dropped(self, world):
        state = empty_state(world.ontology)
        belief = {d: dict(s) for d, s in state.belief_state.items()}
        belief["hotel"]["day"] = "friday night"
        state = dataclasses.replace(state, belief_state=belief)
        claim = hinted_claim("c1", "hotel.day", "monday night")
        pairs, diagnostics = map_claims([claim], state, world.ontology,
                                        TrigramEmbeddingProvider(), MapperConfig())
        assert pairs == []
        assert diagnostics[0].reason == "slot_filled"

    def test_every_emitted_pair_is_database_legal(self, world):
        claims = [
            hinted_claim("c1", "hotel.day", "monday night"),
            hinted_claim("c2", "attraction.area", "north end"),
            hinted_claim("c3", "hotel.area", "not a real place at all"),
        ]
        pairs, _ = map_claims(claims, empty_state(world.ontology), world.ontology,
                              TrigramEmbeddingProvider(), MapperConfig())
        for pair in pairs:
            assert pair.value in world.ontology.legal_values(pair.domain, pair.slot)

    def test_idempotent_on_enriched_state(self, world):
        claims = [hinted_claim("c1", "hotel.day", "monday night")]
        provider = TrigramEmbeddingProvider()
        state = empty_state(world.ontology)
        pairs, _ = map_claims(claims, state, world.ontology, provider, MapperConfig())
        enriched = EnrichedState(state, tuple(pairs))
        again, _ = map_claims(claims, enriched, world.ontology, provider, MapperConfig())
        assert again == []

    def test_tau_monotonicity(self, world):
        rng = np.random.default_rng(9)
        provider = TrigramEmbeddingProvider()
        alphabet = list("abcdefghijklmnopqrstuvwxyz")
        claims = []
        for i in range(20):
            text = "".join(rng.choice(alphabet, size=6))
            slot = ["hotel.day", "hotel.area", "attraction.type"][i % 3]
            claims.append(hinted_claim(f"c{i}", slot, text))
        previous = None
        for tau in (0.0, 0.3, 0.6, 0.8, 1.0):
            pairs, _ = map_claims(claims, empty_state(world.ontology), world.ontology,
                                  provider, MapperConfig(tau=tau))
            keys = {(p.domain, p.slot, p.value, p.source_claim) for p in pairs}
            if previous is not None:
                assert keys <= previous
            previous = keys
        # tau=0 maps every candidate to its argmax (one pair per target slot)
        pairs, _ = map_claims(claims, empty_state(world.ontology), world.ontology,
                              provider, MapperConfig(tau=0.0))
        assert {(p.domain, p.slot) for p in pairs} == {
            ("hotel", "day"), ("hotel", "area"), ("attraction", "type")
        }


class TestEnrich:
    def test_no_pairs_merged_equals_base(self, world):
        state = empty_state(world.ontology)
        enriched = enrich(state, [])
        assert enriched.merged_belief() == state.belief_state

    def test_fills_empty_slot(self, city_ontology):
        state = empty_state(city_ontology)
        pair = SlotValuePair("hotel", "area", "Midtown Manhattan", 0.95, "c1")
        enriched = enrich(state, [pair])
        assert enriched.merged_belief()["hotel"]["area"] == "Midtown Manhattan"
        assert state.belief_state["hotel"]["area"] == EMPTY  # base untouched

    def test_pair_for_filled_slot_ignored(self, city_ontology, caplog):
        state = empty_state(city_ontology)
        belief = {d: dict(s) for d, s in state.belief_state.items()}
        belief["hotel"]["area"] = "Brooklyn"
        state = dataclasses.replace(state, belief_state=belief)
        pair = SlotValuePair("hotel", "area", "Midtown Manhattan", 0.95, "c1")
        with caplog.at_level(logging.INFO):
            enriched = enrich(state, [pair])
        assert enriched.merged_belief()["hotel"]["area"] == "Brooklyn"
        assert enriched.augmentations == ()

    def test_never_shrinks_filled_set(self, world):
        rng = np.random.default_rng(21)
        from conftest import make_random_state

        for _ in range(50):
            state = make_random_state(world.ontology, rng)
            pair = SlotValuePair("hotel", "day", "monday night", 0.9, "c")
            merged = enrich(state, [pair]).merged_belief()
            for domain, slot in world.ontology.slot_pairs():
                if state.slot_value(domain, slot) != EMPTY:
                    assert merged[domain][slot] == state.slot_value(domain, slot)


class TestMapWithRetries:
    def test_valid_first_attempt(self, world):
        claim = hinted_claim("c1", "hotel.day", "monday night")
        provider = ScriptedProvider({"respondent": ["hotel.day = monday night"]})
        outcome = map_with_retries(claim, 5, LlmGateway(provider=provider),
                                   world.ontology)
        assert outcome.attempts == 1
        assert not outcome.discarded
        assert [(p.domain, p.slot, p.value) for p in outcome.pairs] == \
            [("hotel", "day", "monday night")]

    def test_four_invalid_then_valid_uses_five_attempts(self, world):
        claim = hinted_claim("c1", "hotel.day", "monday night")
        provider = ScriptedProvider({"respondent": [
            "the hotel day is monday night",      # wrong format
            "hotel.weekday = monday night",       # unknown slot
            "hotel.day = some tuesday",           # illegal value
            "hotel.day == monday night",          # malformed key-value
            "hotel.day = monday night",           # valid
        ]})
        outcome = map_with_retries(claim, 5, LlmGateway(provider=provider),
                                   world.ontology)
        assert outcome.attempts == 5
        assert not outcome.discarded

    def test_all_attempts_fail_discards_output(self, world):
        claim = hinted_claim("c1", "hotel.day", "monday night")
        provider = ScriptedProvider({"respondent": ["garbage"] * 5})
        outcome = map_with_retries(claim, 5, LlmGateway(provider=provider),
                                   world.ontology)
        assert outcome.attempts == 5
        assert outcome.discarded
        assert outcome.pairs == ()

    def test_budget_minimum(self, world):
        claim = hinted_claim("c1", "hotel.day", "monday night")
        with pytest.raises(ValueError):
            map_with_retries(claim, 0, LlmGateway(provider=ScriptedProvider({})),
                             world.ontology)
