"""Shipped world builders: fixed rooms and per-episode randomized courses."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .grid import GridWorld, Layout, border_walls

THREE_ROOM_GAPS = ((4, 2), (8, 4))
THREE_ROOM_GOAL = (11, 5)
TWO_ROOM_GAP = (4, 2)
# Goal sits on the gap row so the optimal return stays positive; thresholds
# expressed as fractions of optimal then keep their meaning.
TWO_ROOM_GOAL = (7, 2)


def _room_layout(width: int, height: int, dividers, gaps, goal, start) -> Layout:
    cells = border_walls(width, height)
    for x in dividers:
        for y in range(1, height - 1):
            cells[(x, y)] = "wall"
    for gx, gy in gaps:
        cells[(gx, gy)] = "gap"
    cells[goal] = "goal"
    return Layout(width=width, height=height, cells=cells, start=start)


def three_room(seed: Optional[int] = None, horizon: int = 200,
               slip: float = 0.0) -> GridWorld:
    """13x7 triple room: two wall dividers with one gap each.

    Start (1, 1) facing east, goal in the far room; -0.1 per step and +1 on
    the goal.  Movement-only action set (turn, turn, forward).
    """
    layout = _room_layout(
        width=13,
        height=7,
        dividers=(4, 8),
        gaps=THREE_ROOM_GAPS,
        goal=THREE_ROOM_GOAL,
        start=(1, 1, 1),
    )
    return GridWorld(
        builder=layout,
        horizon=horizon,
        step_reward=-0.1,
        goal_reward=1.0,
        num_actions=3,
        slip=slip,
        seed=seed,
        name="three_room",
    )


def two_room(seed: Optional[int] = None, horizon: int = 200,
             slip: float = 0.0) -> GridWorld:
    """9x5 double room with a single gap; used by the shaping experiments."""
    layout = _room_layout(
        width=9,
        height=5,
        dividers=(4,),
        gaps=(TWO_ROOM_GAP,),
        goal=TWO_ROOM_GOAL,
        start=(1, 1, 1),
    )
    return GridWorld(
        builder=layout,
        horizon=horizon,
        step_reward=-0.1,
        goal_reward=1.0,
        num_actions=3,
        slip=slip,
        seed=seed,
        name="two_room",
    )


COURSE_HEIGHT = 9
# Interior section themes in their fixed left-to-right order; a course with
# fewer sections keeps a prefix.  "key" brings the locked door in the
# divider that follows it.
COURSE_THEMES = ("spike", "lava", "key", "approach")


def course_dividers(sections: int) -> tuple:
    return tuple(4 * i for i in range(1, sections))


def _make_course_layout(sections: int):
    if not 2 <= sections <= 6:
        raise ValueError(f"sections must be 2..6, got {sections}")
    themes = COURSE_THEMES[: sections - 2]
    width = 4 * sections + 1
    dividers = course_dividers(sections)
    door_divider = None
    if "key" in themes:
        door_divider = dividers[themes.index("key") + 1]

    def build(rng: np.random.Generator) -> Layout:
        height = COURSE_HEIGHT
        cells = border_walls(width, height)
        interior_ys = list(range(1, height - 1))
        for x in dividers:
            for y in interior_ys:
                cells[(x, y)] = "wall"
        for x in dividers:
            opening = int(rng.choice(interior_ys))
            if x == door_divider:
                cells[(x, opening)] = "door:red:locked"
            else:
                cells[(x, opening)] = "gap"

        def scatter(kind: str, x_range, count: int) -> None:
            spots = [(x, y) for x in x_range for y in interior_ys if (x, y) not in cells]
            picks = rng.choice(len(spots), size=min(count, len(spots)), replace=False)
            for i in picks:
                cells[spots[i]] = kind

        for k, theme in enumerate(themes):
            xs = range(4 * (k + 1) + 1, 4 * (k + 2))
            if theme == "spike":
                scatter("spike", xs, 6)
            elif theme == "lava":
                scatter("lava", xs, 6)
            elif theme == "key":
                scatter("key:red", xs, 1)
        goal_y = int(rng.choice(interior_ys))
        cells[(width - 3, goal_y)] = "goal"
        return Layout(width=width, height=height, cells=cells, start=(1, 1, 1))

    return build


def obstacle_course(
    seed: Optional[int] = None, horizon: int = 400, sections: int = 6,
    slip: float = 0.0,
) -> GridWorld:
    """Multi-section course with the full action set; 25x9 at full size.

    Fixed section order (start, spikes, lava, key room, door, approach,
    goal at ``sections=6``); obstacle positions are drawn per episode.
    Spikes cost -1 and keep the episode alive, lava costs -1 and ends it,
    the goal pays +1; plain steps are free.  Reset rejects layouts whose
    goal is unreachable and draws again.
    """
    return GridWorld(
        builder=_make_course_layout(sections),
        horizon=horizon,
        step_reward=0.0,
        goal_reward=1.0,
        spike_reward=-1.0,
        lava_reward=-1.0,
        num_actions=6,
        slip=slip,
        seed=seed,
        name="obstacle_course",
    )


SKILL_SCENARIOS = ("lava", "gap", "door")


def _skill_layout(rng: np.random.Generator) -> Layout:
    """9x9 single-skill room; one scenario drawn uniformly per episode.

    A vertical barrier at x=4 is either lava with one safe crossing, wall
    with one gap, or wall with a locked door whose key spawns on the start
    side.  The scenario name lands in ``layout.meta['scenario']``.
    """
    width = height = 9
    cells = border_walls(width, height)
    interior_ys = list(range(1, height - 1))
    scenario = SKILL_SCENARIOS[int(rng.integers(0, len(SKILL_SCENARIOS)))]
    opening = int(rng.choice(interior_ys))
    for y in interior_ys:
        if scenario == "lava":
            if y != opening:
                cells[(4, y)] = "lava"
        else:
            cells[(4, y)] = "wall"
    if scenario == "gap":
        cells[(4, opening)] = "gap"
    elif scenario == "door":
        color = "red"
        cells[(4, opening)] = f"door:{color}:locked"
        spots = [(x, y) for x in range(1, 4) for y in interior_ys
                 if (x, y) not in cells and (x, y) != (1, 1)]
        kx, ky = spots[int(rng.integers(0, len(spots)))]
        cells[(kx, ky)] = f"key:{color}"
    cells[(7, 7)] = "goal"
    layout = Layout(width=width, height=height, cells=cells, start=(1, 1, 1))
    layout.meta["scenario"] = scenario
    return layout


def randomized_skill(seed: Optional[int] = None, horizon: int = 100,
                     slip: float = 0.0) -> GridWorld:
    """9x9 room whose barrier skill (lava, gap, or door) varies per reset."""
    return GridWorld(
        builder=_skill_layout,
        horizon=horizon,
        step_reward=0.0,
        goal_reward=1.0,
        num_actions=6,
        slip=slip,
        seed=seed,
        name="randomized_skill",
    )
