"""Verified language-model knowledge for RL dialogue policies.

A multi-domain task-oriented dialogue stack: a respondent/judge
cross-examination loop filters language-model constraint inferences, a
text-to-slot mapper grounds the survivors into ontology-legal slot-value
pairs, and an RL policy (PPO by default) plans over the enriched state.
Ships with a seeded synthetic world, an evaluation harness, an HTTP
session service, and a CLI.
"""

__version__ = "0.1.0"
