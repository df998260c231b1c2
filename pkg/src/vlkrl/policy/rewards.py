"""Reward convention for the dialogue MDP.

Completing every domain goal pays 2L, each domain completed short of that
pays +5 (granted at the moment the outcome is judged, i.e. the terminal
step), failure pays -L, and every intermediate turn costs 1. The terminal
step receives the outcome reward instead of the turn penalty, so an
all-success dialogue of T turns returns exactly 2L - (T - 1).
"""

from __future__ import annotations

EVENT_TURN = "turn"
EVENT_SINGLE_DOMAIN = "single_domain_complete"
EVENT_ALL_DOMAINS = "all_domains_complete"
EVENT_FAILURE = "failure"

EVENTS = (EVENT_TURN, EVENT_SINGLE_DOMAIN, EVENT_ALL_DOMAINS, EVENT_FAILURE)


def reward(event: str, max_len: int) -> float:
    """Pure total function of (event, L)."""
    if max_len <= 0:
        raise ValueError("max dialogue length must be positive")
    if event == EVENT_TURN:
        return -1.0
    if event == EVENT_SINGLE_DOMAIN:
        return 5.0
    if event == EVENT_ALL_DOMAINS:
        return 2.0 * max_len
    if event == EVENT_FAILURE:
        return -float(max_len)
    raise ValueError(f"unknown reward event '{event}'")
