"""Deterministic gridworld environments, predicates, and shaping."""

from .grid import (
    GridObs,
    GridWorld,
    Layout,
    encode_obs,
    layout_from_text,
    solve_layout,
    frozen_copy,
    shifted_eval,
)
from .worlds import (
    obstacle_course,
    randomized_skill,
    three_room,
    two_room,
)
from .predicates import make_predicate, predicate_names
from .shaping import PotentialShaper, gap_potential, goal_distance_potential
from .tabular_view import tabularize

__all__ = [
    "GridObs",
    "GridWorld",
    "Layout",
    "encode_obs",
    "layout_from_text",
    "solve_layout",
    "frozen_copy",
    "shifted_eval",
    "three_room",
    "two_room",
    "obstacle_course",
    "randomized_skill",
    "make_predicate",
    "predicate_names",
    "PotentialShaper",
    "gap_potential",
    "goal_distance_potential",
    "tabularize",
]
