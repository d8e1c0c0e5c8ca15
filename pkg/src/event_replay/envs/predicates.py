"""Named event predicates over grid transitions.

Every predicate has the buffer's condition signature: it receives the
just-inserted transition plus the open episode so far (the transition is
the last entry), and returns a bool.  Grid predicates inspect GridObs
fields; ``reward-threshold`` works for any transition type.
"""

from __future__ import annotations

from typing import Callable, List

from ..transition import Transition
from .grid import kind_class

Predicate = Callable[[Transition, list], bool]


def _cell_is(transition: Transition, base: str) -> bool:
    return kind_class(transition.next_state.cell) == base


def at_gap(t: Transition, history: list) -> bool:
    return _cell_is(t, "gap")


def at_goal(t: Transition, history: list) -> bool:
    return _cell_is(t, "goal")


def at_spike(t: Transition, history: list) -> bool:
    return _cell_is(t, "spike")


def at_lava(t: Transition, history: list) -> bool:
    return _cell_is(t, "lava")


def at_door(t: Transition, history: list) -> bool:
    return kind_class(t.next_state.cell) in ("door-locked", "door-open")


def done(t: Transition, history: list) -> bool:
    return bool(t.done)


def pickup_key(t: Transition, history: list) -> bool:
    return t.state.carrying is None and t.next_state.carrying is not None


def reward_threshold(c: float) -> Predicate:
    """Fires when the step reward exceeds ``c``."""
    c = float(c)

    def check(t: Transition, history: list) -> bool:
        return t.reward > c

    check.__name__ = f"reward_threshold_{c}"
    return check


HAZARD_CELLS = ("spike", "lava")


def reestablish(window: int) -> Predicate:
    """Fires when the agent has stayed off hazard cells for ``window``
    consecutive steps immediately after standing on one.

    History-conditioned: fires exactly once per recovery, at the step that
    completes the window, and needs at least window+1 steps of episode
    history to judge.
    """
    window = int(window)
    if window < 1:
        raise ValueError("window must be a positive integer")

    def check(t: Transition, history: list) -> bool:
        if len(history) < window + 1:
            return False
        recent = history[-window:]
        if any(kind_class(h.next_state.cell) in HAZARD_CELLS for h in recent):
            return False
        return kind_class(history[-window - 1].next_state.cell) in HAZARD_CELLS

    check.__name__ = f"reestablish_{window}"
    return check


_SIMPLE = {
    "at-gap": at_gap,
    "at-goal": at_goal,
    "done": done,
    "at-spike": at_spike,
    "at-lava": at_lava,
    "at-door": at_door,
    "pickup-key": pickup_key,
}

_PARAMETRIC = {
    "reward-threshold": reward_threshold,
    "reestablish": reestablish,
}


def predicate_names() -> List[str]:
    return sorted(_SIMPLE) + sorted(_PARAMETRIC)


def make_predicate(name: str, **params) -> Predicate:
    """Look up a predicate by name; parametric ones take keyword args.

    Examples: make_predicate("at-gap"), make_predicate("reward-threshold",
    c=0.5), make_predicate("reestablish", window=3).
    """
    if name in _SIMPLE:
        if params:
            raise ValueError(f"predicate {name!r} takes no parameters")
        return _SIMPLE[name]
    if name in _PARAMETRIC:
        return _PARAMETRIC[name](**params)
    raise ValueError(f"unknown predicate {name!r}; known: {', '.join(predicate_names())}")
