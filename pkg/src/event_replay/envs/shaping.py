"""Potential-based reward shaping wrapper for grid environments.

The wrapped step pays r + gamma * phi(s') - phi(s); terminal next states
use phi = 0, so the shaping bonus telescopes out of episode returns up to
a discount-weighted start term and the optimal policy is unchanged.
"""

from __future__ import annotations

from typing import Callable, Optional

from .grid import GridObs, GridWorld, kind_class


class PotentialShaper:
    """Wraps a GridWorld; observations pass through, rewards are shaped."""

    def __init__(self, env: GridWorld, phi: Callable[[GridObs], float], gamma: float):
        if not 0.0 < gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        self.env = env
        self.phi = phi
        self.gamma = float(gamma)
        self._prev_obs: Optional[GridObs] = None

    def reset(self) -> GridObs:
        obs = self.env.reset()
        self._prev_obs = obs
        return obs

    def step(self, action: int):
        if self._prev_obs is None:
            raise RuntimeError("call reset() before step()")
        obs, reward, done = self.env.step(action)
        bonus_next = 0.0 if self.env.terminated else float(self.phi(obs))
        shaped = reward + self.gamma * bonus_next - float(self.phi(self._prev_obs))
        self._prev_obs = obs
        return obs, shaped, done

    # Expose the underlying env's attributes (horizon, encode, flags, ...).
    def __getattr__(self, name):
        return getattr(self.env, name)


def gap_potential(obs: GridObs) -> float:
    """1 on gap cells, 0 elsewhere: rewards reaching a room passage."""
    return 1.0 if kind_class(obs.cell) == "gap" else 0.0


def goal_distance_potential(env: GridWorld) -> Callable[[GridObs], float]:
    """Potential that rises toward the goal: 1 - manhattan / max_distance.

    Reads the goal position from the environment's current layout, so the
    env must have been reset and the layout must contain exactly one goal.
    """
    if env.layout is None:
        raise RuntimeError("reset the environment before building the potential")
    goals = [pos for pos, kind in env.layout.cells.items() if kind == "goal"]
    if len(goals) != 1:
        raise ValueError(f"expected exactly one goal cell, found {len(goals)}")
    gx, gy = goals[0]
    max_d = float(env.layout.width + env.layout.height)

    def phi(obs: GridObs) -> float:
        return 1.0 - (abs(obs.x - gx) + abs(obs.y - gy)) / max_d

    return phi
