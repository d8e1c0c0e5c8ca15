"""Transition record shared by every replay table."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any


@dataclass(frozen=True, eq=False)
class Transition:
    """One environment step.

    ``state`` and ``next_state`` can be ints (tabular MDPs), tuples, frozen
    observation records, or numpy arrays; the buffer never copies them.
    Equality is identity, so the same step stored in several tables compares
    equal to itself and to nothing else.
    """

    state: Any
    action: int
    reward: float
    next_state: Any
    done: bool
    episode_id: int
    step_index: int

    def __post_init__(self) -> None:
        if self.episode_id < 0:
            raise ValueError(f"episode_id must be >= 0, got {self.episode_id}")
        if self.step_index < 0:
            raise ValueError(f"step_index must be >= 0, got {self.step_index}")
