"""Seeded synthetic multi-domain dialogue world and its rule-based user."""

from vlkrl.env.world import Rule, World, default_world, load_world, validate_world
from vlkrl.env.database import db_query
from vlkrl.env.goals import GoalError, generate_goal
from vlkrl.env.simulator import UserAgenda, UserTurn
from vlkrl.env.outcome import Outcome, judge_outcome

__all__ = [
    "GoalError",
    "Outcome",
    "Rule",
    "UserAgenda",
    "UserTurn",
    "World",
    "db_query",
    "default_world",
    "generate_goal",
    "judge_outcome",
    "load_world",
    "validate_world",
]
