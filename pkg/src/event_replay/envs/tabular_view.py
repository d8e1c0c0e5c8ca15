"""Exact tabular export of static grid environments.

Enumerates every walkable pose (x, y, facing) of a fixed layout and emits
the corresponding finite MDP, so dynamic-programming tools and density
analyses can run against the very same dynamics the stepper executes.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..theory.mdp import TabularMDP
from .grid import GridWorld, Layout, kind_class, next_pose

WALKABLE = ("empty", "gap", "goal", "spike", "lava")


def _landing_reward(env: GridWorld, kind: str) -> float:
    base = kind_class(kind)
    if base == "goal":
        return env.goal_reward
    if base == "lava":
        return env.lava_reward
    if base == "spike":
        return env.spike_reward
    return env.step_reward


def tabularize(
    env: GridWorld,
    gamma: float = 0.99,
    normalize_rewards: bool = True,
):
    """Build (mdp, poses, index) for a static, key-free environment.

    ``poses`` lists (x, y, theta) per state id; ``index`` inverts it.
    Randomized builders and layouts containing keys or doors are rejected:
    inventory would make the pose state incomplete.  With
    ``normalize_rewards`` the reward range maps affinely onto [0, 1],
    which leaves greedy policies unchanged; otherwise raw rewards are kept
    and bound checking is disabled.
    """
    probes = [env._builder(np.random.default_rng(s)) for s in (0, 99, 7, 123)]
    if any(
        p.cells != probes[0].cells or tuple(p.start) != tuple(probes[0].start)
        for p in probes[1:]
    ):
        raise ValueError("tabularize requires a fixed layout, not a randomized builder")
    layout: Layout = probes[0].copy()
    layout.validate()
    for kind in layout.cells.values():
        if kind_class(kind) in ("key", "door-locked", "door-open"):
            raise ValueError("tabularize does not support layouts with keys or doors")

    poses = [
        (x, y, theta)
        for y in range(layout.height)
        for x in range(layout.width)
        if kind_class(layout.kind_at(x, y)) in WALKABLE
        for theta in range(4)
    ]
    index = {pose: i for i, pose in enumerate(poses)}
    n = len(poses)
    num_actions = env.num_actions

    transitions = np.zeros((n, num_actions, n))
    rewards = np.zeros((n, num_actions))
    terminal = np.zeros(n, dtype=bool)
    for i, pose in enumerate(poses):
        base = kind_class(layout.kind_at(*pose[:2]))
        if base in ("goal", "lava"):
            terminal[i] = True
            transitions[i, :, i] = 1.0
            continue
        for a in range(num_actions):
            if a == 2 and env.slip > 0.0:
                outcomes = ((2, 1.0 - env.slip), (0, env.slip / 2), (1, env.slip / 2))
            else:
                outcomes = ((a, 1.0),)
            for real_action, prob in outcomes:
                nxt = next_pose(layout.kind_at, pose, real_action)
                j = index[nxt]
                transitions[i, a, j] += prob
                rewards[i, a] += prob * _landing_reward(env, layout.kind_at(*nxt[:2]))

    bounds: Optional[tuple] = None
    if normalize_rewards:
        live = ~terminal
        lo = rewards[live].min()
        hi = rewards[live].max()
        if hi > lo:
            rewards = (rewards - lo) / (hi - lo)
        else:
            rewards = np.zeros_like(rewards)
        bounds = (0.0, 1.0)

    initial = np.zeros(n)
    initial[index[tuple(layout.start)]] = 1.0
    mdp = TabularMDP(
        transitions=transitions,
        rewards=rewards,
        gamma=gamma,
        horizon=env.horizon,
        initial=initial,
        terminal=terminal,
        reward_bounds=bounds,
    )
    return mdp, poses, index
