import numpy as np
import pytest

from vlkrl.core.ontology import Ontology
from vlkrl.core.state import DialogueState, empty_state
from vlkrl.env.world import default_world


@pytest.fixture(scope="session")
def world():
    return default_world()


@pytest.fixture
def tiny_ontology():
    """One domain, one slot, two values."""
    return Ontology(
        domains=("cafe",),
        slots_by_domain={"cafe": ("drink",)},
        values_by_slot={("cafe", "drink"): ("espresso", "tea")},
    )


@pytest.fixture
def trip_ontology():
    """Mapper fixture: exactly one slot is named 'area' (attraction's)."""
    return Ontology(
        domains=("attraction", "hotel", "train"),
        slots_by_domain={
            "train": ("day", "destination"),
            "hotel": ("price_range", "stars"),
            "attraction": ("area", "type"),
        },
        values_by_slot={
            ("train", "day"): ("monday", "tuesday"),
            ("train", "destination"): ("oldtown", "harborview"),
            ("hotel", "price_range"): ("cheap", "expensive"),
            ("hotel", "stars"): ("two", "four"),
            ("attraction", "area"): ("Bateman Street", "Mill Road"),
            ("attraction", "type"): ("museum", "park"),
        },
    )


@pytest.fixture
def city_ontology():
    """Slot-matching fixture where hotel.area is hotel's shortest slot."""
    return Ontology(
        domains=("hotel", "train"),
        slots_by_domain={
            "hotel": ("area", "price_range", "stars"),
            "train": ("day", "destination"),
        },
        values_by_slot={
            ("hotel", "area"): ("Midtown Manhattan", "Brooklyn"),
            ("hotel", "price_range"): ("cheap", "expensive"),
            ("hotel", "stars"): ("two", "four"),
            ("train", "day"): ("monday", "tuesday"),
            ("train", "destination"): ("oldtown", "harborview"),
        },
    )


def make_random_state(ontology: Ontology, rng: np.random.Generator) -> DialogueState:
    state = empty_state(ontology)
    belief = {d: dict(s) for d, s in state.belief_state.items()}
    for domain, slot in ontology.slot_pairs():
        if rng.random() < 0.5:
            values = ontology.legal_values(domain, slot)
            belief[domain][slot] = values[int(rng.integers(len(values)))]
    request_state = {}
    for domain in ontology.domains:
        if rng.random() < 0.3:
            slots = ontology.slots_by_domain[domain]
            request_state[domain] = (slots[int(rng.integers(len(slots)))],)
    history = tuple(
        ("user" if i % 2 == 0 else "system", f"utterance {i}")
        for i in range(int(rng.integers(0, 5)))
    )
    return DialogueState(
        belief_state=belief,
        request_state=request_state,
        history=history,
        turn=int(rng.integers(0, 10)),
    )
