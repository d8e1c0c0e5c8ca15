"""Grid engine with typed cells, partial observations, and layout tooling.

Cells are plain strings so layouts stay JSON-friendly: "empty", "wall",
"gap", "goal", "spike", "lava", "key:<color>", "door:<color>:locked",
"door:<color>:open".  Positions use x to the right and y downward; facing
theta is 0=north, 1=east, 2=south, 3=west.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

# (dx, dy) per facing; y grows downward so north is -y.
DELTAS = ((0, -1), (1, 0), (0, 1), (-1, 0))

ACTIONS = ("left", "right", "forward", "pickup", "drop", "toggle")

# Base classes used for one-hot encoding and rendering.
CELL_CLASSES = (
    "empty",
    "wall",
    "gap",
    "goal",
    "spike",
    "lava",
    "key",
    "door-locked",
    "door-open",
)

COLORS = ("red", "green", "blue")

EGO_SIZE = 5


def kind_class(kind: str) -> str:
    """Collapse a cell kind to its base class (color stripped)."""
    if kind.startswith("key:"):
        return "key"
    if kind.startswith("door:"):
        return "door-open" if kind.endswith(":open") else "door-locked"
    if kind not in CELL_CLASSES:
        raise ValueError(f"unknown cell kind {kind!r}")
    return kind


def kind_color(kind: str) -> Optional[str]:
    """Color of a key or door kind, None for uncolored cells."""
    parts = kind.split(":")
    if len(parts) >= 2 and parts[0] in ("key", "door"):
        if parts[1] not in COLORS:
            raise ValueError(f"unknown color in {kind!r}")
        return parts[1]
    return None


@dataclass
class Layout:
    """Static map description: sparse cells over an empty field."""

    width: int
    height: int
    cells: dict = field(default_factory=dict)  # (x, y) -> kind, "empty" omitted
    start: tuple = (1, 1, 1)  # (x, y, theta)
    meta: dict = field(default_factory=dict)  # builder annotations, not serialized

    def kind_at(self, x: int, y: int) -> str:
        if not (0 <= x < self.width and 0 <= y < self.height):
            return "wall"
        return self.cells.get((x, y), "empty")

    def copy(self) -> "Layout":
        return Layout(
            self.width, self.height, dict(self.cells), tuple(self.start), dict(self.meta)
        )

    def validate(self) -> None:
        if self.width < 3 or self.height < 3:
            raise ValueError("layout must be at least 3x3")
        x, y, theta = self.start
        if theta not in (0, 1, 2, 3):
            raise ValueError(f"start facing must be 0..3, got {theta}")
        if self.kind_at(x, y) not in ("empty", "gap"):
            raise ValueError(f"start cell ({x}, {y}) is not walkable")
        for (cx, cy), kind in self.cells.items():
            if not (0 <= cx < self.width and 0 <= cy < self.height):
                raise ValueError(f"cell ({cx}, {cy}) outside the {self.width}x{self.height} field")
            kind_class(kind)
            kind_color(kind)


def border_walls(width: int, height: int) -> dict:
    """Wall cells along the rectangle border."""
    cells = {}
    for x in range(width):
        cells[(x, 0)] = "wall"
        cells[(x, height - 1)] = "wall"
    for y in range(height):
        cells[(0, y)] = "wall"
        cells[(width - 1, y)] = "wall"
    return cells


# Cells an agent may stand on.  Lava and goal are enterable (they end the
# episode); walls, keys, and doors block movement, open doors do not.
def is_blocking(kind: str) -> bool:
    base = kind_class(kind)
    return base in ("wall", "key", "door-locked")


def next_pose(layout_kind: Callable[[int, int], str], pose: tuple, action: int) -> tuple:
    """Pose after a movement action; forward into a blocked cell is a no-op.

    Shared by the stepper and the tabular exporter so both agree exactly.
    """
    x, y, theta = pose
    if action == 0:
        return (x, y, (theta - 1) % 4)
    if action == 1:
        return (x, y, (theta + 1) % 4)
    if action == 2:
        dx, dy = DELTAS[theta]
        nx, ny = x + dx, y + dy
        if is_blocking(layout_kind(nx, ny)):
            return (x, y, theta)
        return (nx, ny, theta)
    return (x, y, theta)


@dataclass(frozen=True)
class GridObs:
    """Hashable observation: pose, cell underfoot, inventory, 5x5 view.

    ego[i][j] is the cell kind 4-i steps ahead and j-2 to the right of the
    facing direction; the agent sits at ego[4][2].  Off-map cells read "wall".
    """

    x: int
    y: int
    theta: int
    cell: str
    carrying: Optional[str]
    ego: tuple


def _ego_view(kind_at: Callable[[int, int], str], x: int, y: int, theta: int) -> tuple:
    fdx, fdy = DELTAS[theta]
    rdx, rdy = DELTAS[(theta + 1) % 4]
    rows = []
    for i in range(EGO_SIZE):
        ahead = EGO_SIZE - 1 - i
        row = []
        for j in range(EGO_SIZE):
            side = j - EGO_SIZE // 2
            row.append(kind_at(x + ahead * fdx + side * rdx, y + ahead * fdy + side * rdy))
        rows.append(tuple(row))
    return tuple(rows)


class GridWorld:
    """Stepped gridworld over per-episode layouts.

    ``builder(rng)`` produces a Layout at every reset; a constant layout is
    wrapped automatically.  Reset regenerates until the goal is reachable
    (``regenerations`` counts the rejected draws).  Rewards use replace
    semantics: every step pays ``step_reward`` unless the agent lands on a
    special cell, which pays its own reward instead.  Reaching the goal or
    lava terminates; running out the horizon truncates.  ``slip`` is the
    probability that a forward action veers to a random turn instead.
    """

    def __init__(
        self,
        builder,
        horizon: int,
        step_reward: float,
        goal_reward: float = 1.0,
        spike_reward: float = -1.0,
        lava_reward: float = -1.0,
        num_actions: int = len(ACTIONS),
        slip: float = 0.0,
        seed: Optional[int] = None,
        max_regenerations: int = 1000,
        name: str = "grid",
    ):
        if isinstance(builder, Layout):
            fixed = builder.copy()
            builder = lambda rng: fixed  # noqa: E731
        if horizon < 1:
            raise ValueError("horizon must be positive")
        if not 1 <= num_actions <= len(ACTIONS):
            raise ValueError(f"num_actions must be 1..{len(ACTIONS)}")
        if not 0.0 <= slip < 1.0:
            raise ValueError("slip must lie in [0, 1)")
        self._builder = builder
        self.horizon = int(horizon)
        self.step_reward = float(step_reward)
        self.goal_reward = float(goal_reward)
        self.spike_reward = float(spike_reward)
        self.lava_reward = float(lava_reward)
        self.num_actions = int(num_actions)
        self.slip = float(slip)
        self.max_regenerations = int(max_regenerations)
        self.name = name
        self.rng = np.random.default_rng(seed)
        self.regenerations = 0
        self._start_override: Optional[tuple] = None
        self.layout: Optional[Layout] = None
        self._pose = None
        self._carrying = None
        self._steps = 0
        self.terminated = False
        self.truncated = False
        self._in_episode = False

    # -- episode control -------------------------------------------------

    def reset(self) -> GridObs:
        for _ in range(self.max_regenerations + 1):
            layout = self._builder(self.rng).copy()
            layout.validate()
            if self._start_override is not None:
                sx, sy, stheta = self._start_override
                if layout.kind_at(sx, sy) not in ("empty", "gap"):
                    raise ValueError(
                        f"override start ({sx}, {sy}) is not walkable in this layout"
                    )
                layout.start = self._start_override
            if solve_layout(layout):
                break
            self.regenerations += 1
        else:
            raise RuntimeError(
                f"no solvable layout after {self.max_regenerations} regenerations"
            )
        self.layout = layout
        self._pose = tuple(layout.start)
        self._carrying = None
        self._steps = 0
        self.terminated = False
        self.truncated = False
        self._in_episode = True
        return self._obs()

    def step(self, action: int):
        if not self._in_episode:
            raise RuntimeError("episode is finished; call reset() first")
        if not 0 <= action < self.num_actions:
            raise ValueError(f"action must be 0..{self.num_actions - 1}, got {action}")

        if action == 2 and self.slip > 0.0 and self.rng.random() < self.slip:
            action = int(self.rng.integers(0, 2))

        x, y, theta = self._pose
        if action in (0, 1, 2):
            self._pose = next_pose(self.layout.kind_at, self._pose, action)
        elif action == 3:  # pickup
            ax, ay = self._ahead()
            kind = self.layout.kind_at(ax, ay)
            if self._carrying is None and kind_class(kind) == "key":
                self._carrying = kind
                del self.layout.cells[(ax, ay)]
        elif action == 4:  # drop, only onto an empty cell
            ax, ay = self._ahead()
            if self._carrying is not None and self.layout.kind_at(ax, ay) == "empty":
                self.layout.cells[(ax, ay)] = self._carrying
                self._carrying = None
        elif action == 5:  # toggle a locked door with the matching key
            ax, ay = self._ahead()
            kind = self.layout.kind_at(ax, ay)
            if kind_class(kind) == "door-locked":
                color = kind_color(kind)
                if self._carrying == f"key:{color}":
                    self.layout.cells[(ax, ay)] = f"door:{color}:open"

        self._steps += 1
        here = self.layout.kind_at(*self._pose[:2])
        reward = self.step_reward
        if here == "goal":
            reward = self.goal_reward
            self.terminated = True
        elif here == "lava":
            reward = self.lava_reward
            self.terminated = True
        elif here == "spike":
            reward = self.spike_reward
        if not self.terminated and self._steps >= self.horizon:
            self.truncated = True
        done = self.terminated or self.truncated
        if done:
            self._in_episode = False
        return self._obs(), reward, done

    def _ahead(self) -> tuple:
        x, y, theta = self._pose
        dx, dy = DELTAS[theta]
        return x + dx, y + dy

    def _obs(self) -> GridObs:
        x, y, theta = self._pose
        return GridObs(
            x=x,
            y=y,
            theta=theta,
            cell=self.layout.kind_at(x, y),
            carrying=self._carrying,
            ego=_ego_view(self.layout.kind_at, x, y, theta),
        )

    @property
    def steps_taken(self) -> int:
        return self._steps

    # -- encoding and serialization ---------------------------------------

    def encode(self, obs: GridObs) -> np.ndarray:
        return encode_obs(obs, self.layout.width, self.layout.height)

    def dump_layout(self) -> str:
        """Serialize the current layout as JSON text."""
        if self.layout is None:
            raise RuntimeError("no layout yet; call reset() first")
        payload = {
            "width": self.layout.width,
            "height": self.layout.height,
            "start": list(self.layout.start),
            "cells": [[x, y, kind] for (x, y), kind in sorted(self.layout.cells.items())],
        }
        return json.dumps(payload, indent=2)

    @staticmethod
    def restore_layout(text: str) -> Layout:
        payload = json.loads(text)
        cells = {(int(x), int(y)): str(kind) for x, y, kind in payload["cells"]}
        layout = Layout(
            width=int(payload["width"]),
            height=int(payload["height"]),
            cells=cells,
            start=tuple(int(v) for v in payload["start"]),
        )
        layout.validate()
        return layout

    def render(self) -> str:
        """ASCII map; the agent shows as ^>v< by facing."""
        if self.layout is None:
            raise RuntimeError("no layout yet; call reset() first")
        glyphs = {
            "empty": " ",
            "wall": "#",
            "gap": "_",
            "goal": "G",
            "spike": "x",
            "lava": "L",
            "key": "k",
            "door-locked": "D",
            "door-open": "d",
        }
        rows = []
        for y in range(self.layout.height):
            row = []
            for x in range(self.layout.width):
                if (x, y) == self._pose[:2] and self._in_episode:
                    row.append("^>v<"[self._pose[2]])
                else:
                    row.append(glyphs[kind_class(self.layout.kind_at(x, y))])
            rows.append("".join(row))
        return "\n".join(rows)


def encode_obs(obs: GridObs, width: int, height: int) -> np.ndarray:
    """Flat float32 features: normalized pose, inventory, one-hot ego view."""
    feats = [obs.x / max(width - 1, 1), obs.y / max(height - 1, 1), obs.theta / 3.0]
    carry_color = kind_color(obs.carrying) if obs.carrying else None
    feats.append(0.0 if obs.carrying is None else 1.0)
    for color in COLORS:
        feats.append(1.0 if carry_color == color else 0.0)
    for row in obs.ego:
        for kind in row:
            base = kind_class(kind)
            color = kind_color(kind)
            for cls in CELL_CLASSES:
                feats.append(1.0 if base == cls else 0.0)
            for c in COLORS:
                feats.append(1.0 if color == c else 0.0)
    return np.asarray(feats, dtype=np.float32)


def encoded_size() -> int:
    """Length of the vector ``encode_obs`` produces (layout independent)."""
    return 4 + len(COLORS) + EGO_SIZE * EGO_SIZE * (len(CELL_CLASSES) + len(COLORS))


def layout_from_text(text: str, start: tuple, legend: Optional[dict] = None) -> Layout:
    """Build a layout from an ASCII sketch; handy for tests.

    Default legend: '#' wall, '.' or ' ' empty, '_' gap, 'G' goal, 'x' spike,
    'L' lava.  Extra glyphs (keys, doors) go through ``legend``.
    """
    base = {
        "#": "wall",
        ".": "empty",
        " ": "empty",
        "_": "gap",
        "G": "goal",
        "x": "spike",
        "L": "lava",
    }
    if legend:
        base.update(legend)
    lines = [line for line in text.strip("\n").splitlines()]
    width = max(len(line) for line in lines)
    cells = {}
    for y, line in enumerate(lines):
        for x in range(width):
            glyph = line[x] if x < len(line) else " "
            kind = base[glyph]
            if kind != "empty":
                cells[(x, y)] = kind
    layout = Layout(width=width, height=len(lines), cells=cells, start=start)
    layout.validate()
    return layout


def solve_layout(layout: Layout, allow_pickup: bool = True) -> bool:
    """Breadth-first reachability of the goal from the start.

    Searches over (position, carried key, remaining keys, opened doors);
    lava is treated as impassable since entering it ends the episode.
    With ``allow_pickup=False`` keys stay on the ground, which checks
    whether a keyless path exists.  The search never drops a key, so
    layouts needing two different keys in sequence count as unsolvable;
    that is conservative and fine for the shipped worlds.
    """
    keys = frozenset(
        (pos, kind_color(kind)) for pos, kind in layout.cells.items()
        if kind_class(kind) == "key"
    )
    pre_opened = frozenset(
        pos for pos, kind in layout.cells.items() if kind_class(kind) == "door-open"
    )
    start = (tuple(layout.start[:2]), None, keys, pre_opened)
    seen = {start}
    queue = deque([start])
    while queue:
        pos, carrying, ground_keys, opened = queue.popleft()
        if layout.kind_at(*pos) == "goal":
            return True
        nexts = []
        for dx, dy in DELTAS:
            npos = (pos[0] + dx, pos[1] + dy)
            kind = layout.kind_at(*npos)
            base = kind_class(kind)
            if base == "key" and (npos, kind_color(kind)) not in ground_keys:
                base = "empty"  # already picked up, cell is clear
            if base in ("wall", "lava"):
                continue
            if base == "key":
                if allow_pickup and carrying is None:
                    color = kind_color(kind)
                    nexts.append((pos, color, ground_keys - {(npos, color)}, opened))
                continue
            if base == "door-locked" and npos not in opened:
                if carrying is not None and kind_color(kind) == carrying:
                    nexts.append((pos, carrying, ground_keys, opened | {npos}))
                continue
            nexts.append((npos, carrying, ground_keys, opened))
        for state in nexts:
            if state not in seen:
                seen.add(state)
                queue.append(state)
    return False


def frozen_copy(env: GridWorld, seed: Optional[int] = None) -> GridWorld:
    """Copy of ``env`` whose layout never changes again across resets.

    Resets the source if it has no layout yet, then pins that layout;
    randomized worlds become one fixed instance.  Episode state (keys
    picked up, doors opened) still resets normally because each episode
    plays on a fresh copy of the pinned layout.
    """
    if env.layout is None:
        env.reset()
    return GridWorld(
        builder=env.layout.copy(),
        horizon=env.horizon,
        step_reward=env.step_reward,
        goal_reward=env.goal_reward,
        spike_reward=env.spike_reward,
        lava_reward=env.lava_reward,
        num_actions=env.num_actions,
        slip=env.slip,
        seed=seed,
        max_regenerations=env.max_regenerations,
        name=env.name,
    )


def shifted_eval(env: GridWorld, start: tuple, seed: Optional[int] = None) -> GridWorld:
    """Copy of ``env`` whose episodes begin at ``start`` (x, y, theta).

    The original environment keeps its own start; the copy validates the
    override against each generated layout at reset time.
    """
    x, y, theta = start
    if theta not in (0, 1, 2, 3):
        raise ValueError(f"facing must be 0..3, got {theta}")
    clone = GridWorld(
        builder=env._builder,
        horizon=env.horizon,
        step_reward=env.step_reward,
        goal_reward=env.goal_reward,
        spike_reward=env.spike_reward,
        lava_reward=env.lava_reward,
        num_actions=env.num_actions,
        slip=env.slip,
        seed=seed,
        max_regenerations=env.max_regenerations,
        name=f"{env.name}-shifted",
    )
    clone._start_override = (int(x), int(y), int(theta))
    return clone
