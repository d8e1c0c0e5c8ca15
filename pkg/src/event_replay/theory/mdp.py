"""Finite tabular MDPs with exact dynamic programming.

States and actions are integer ids.  Terminal states follow the trap
convention: the constructor rewrites their rows to zero-reward self-loops,
so finite-horizon occupancy sums behave as if the agent stays put after
termination.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ..transition import Transition

_STOCH_TOL = 1e-9


@dataclass
class TabularMDP:
    """Finite MDP: dense transition tensor, reward matrix, episodic horizon.

    ``transitions`` has shape (S, A, S) with row-stochastic slices,
    ``rewards`` shape (S, A).  ``reward_bounds`` is checked at construction;
    pass ``None`` to allow out-of-range rewards (e.g. shaped variants).
    """

    transitions: np.ndarray
    rewards: np.ndarray
    gamma: float
    horizon: int
    initial: np.ndarray
    terminal: np.ndarray
    reward_bounds: Optional[tuple[float, float]] = (0.0, 1.0)

    def __post_init__(self) -> None:
        self.transitions = np.asarray(self.transitions, dtype=np.float64)
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        self.initial = np.asarray(self.initial, dtype=np.float64)
        self.terminal = np.asarray(self.terminal, dtype=bool)
        s, a = self.rewards.shape
        if self.transitions.shape != (s, a, s):
            raise ValueError(
                f"transitions shape {self.transitions.shape} does not match "
                f"rewards shape {self.rewards.shape}"
            )
        if self.initial.shape != (s,) or self.terminal.shape != (s,):
            raise ValueError("initial and terminal must have one entry per state")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if np.any(self.initial < 0) or abs(self.initial.sum() - 1.0) > _STOCH_TOL:
            raise ValueError("initial must be a probability distribution")
        if np.any(self.initial[self.terminal] > 0):
            raise ValueError("initial distribution must not start in a terminal state")

        # Trap convention: terminal rows self-loop with zero reward.
        for t in np.flatnonzero(self.terminal):
            self.transitions[t, :, :] = 0.0
            self.transitions[t, :, t] = 1.0
            self.rewards[t, :] = 0.0

        row_sums = self.transitions.sum(axis=2)
        if np.any(self.transitions < -_STOCH_TOL) or np.any(np.abs(row_sums - 1.0) > _STOCH_TOL):
            raise ValueError("every transitions[s, a] row must be a distribution")
        if self.reward_bounds is not None:
            lo, hi = self.reward_bounds
            live = ~self.terminal
            if np.any(self.rewards[live] < lo - _STOCH_TOL) or np.any(
                self.rewards[live] > hi + _STOCH_TOL
            ):
                raise ValueError(f"rewards must lie in [{lo}, {hi}]")

    @property
    def num_states(self) -> int:
        return self.rewards.shape[0]

    @property
    def num_actions(self) -> int:
        return self.rewards.shape[1]

    def policy_transition_matrix(self, policy: np.ndarray) -> np.ndarray:
        """State-to-state matrix under a (S, A) policy distribution."""
        pol = policy_matrix(policy, self.num_states, self.num_actions)
        return np.einsum("sa,sat->st", pol, self.transitions)


def policy_matrix(policy: np.ndarray, num_states: int, num_actions: int) -> np.ndarray:
    """Lift a policy to a (S, A) distribution matrix.

    Accepts an int vector of greedy actions or an already-stochastic
    (S, A) array.
    """
    policy = np.asarray(policy)
    if policy.ndim == 1:
        if policy.shape != (num_states,):
            raise ValueError(f"greedy policy must have shape ({num_states},)")
        out = np.zeros((num_states, num_actions), dtype=np.float64)
        out[np.arange(num_states), policy.astype(int)] = 1.0
        return out
    if policy.shape != (num_states, num_actions):
        raise ValueError(
            f"policy shape {policy.shape} does not match ({num_states}, {num_actions})"
        )
    if np.any(policy < -_STOCH_TOL) or np.any(np.abs(policy.sum(axis=1) - 1.0) > 1e-6):
        raise ValueError("policy rows must be distributions")
    return policy.astype(np.float64)


def value_iteration(
    mdp: TabularMDP, tol: float = 1e-10, max_iter: int = 100000
) -> tuple[np.ndarray, np.ndarray]:
    """Return (Q_star, greedy_policy) for the discounted problem.

    Iterates the Bellman optimality operator until the sup-norm residual
    drops below ``tol``.  Ties in the greedy policy break toward the lower
    action id.  Terminal states converge to zero value under the trap
    convention.
    """
    q = np.zeros((mdp.num_states, mdp.num_actions), dtype=np.float64)
    for _ in range(max_iter):
        v = q.max(axis=1)
        q_next = mdp.rewards + mdp.gamma * np.einsum("sat,t->sa", mdp.transitions, v)
        residual = np.max(np.abs(q_next - q))
        q = q_next
        if residual < tol:
            return q, q.argmax(axis=1)
    raise RuntimeError(f"value iteration did not reach tol={tol} in {max_iter} sweeps")


def rollout_steps(
    mdp: TabularMDP,
    policy: np.ndarray,
    rng: np.random.Generator,
    start: Optional[int] = None,
    max_steps: Optional[int] = None,
) -> list[tuple[int, int, float, int, bool]]:
    """Sample one episode as (s, a, r, s', done) tuples.

    The episode stops on entering a terminal state or after ``max_steps``
    (default: the MDP horizon).  Trap steps are not emitted.
    """
    pol = policy_matrix(policy, mdp.num_states, mdp.num_actions)
    if start is None:
        s = int(rng.choice(mdp.num_states, p=mdp.initial))
    else:
        s = int(start)
    limit = mdp.horizon if max_steps is None else max_steps
    steps = []
    for _ in range(limit):
        a = int(rng.choice(mdp.num_actions, p=pol[s]))
        s_next = int(rng.choice(mdp.num_states, p=mdp.transitions[s, a]))
        done = bool(mdp.terminal[s_next])
        steps.append((s, a, float(mdp.rewards[s, a]), s_next, done))
        s = s_next
        if done:
            break
    return steps


def episode_transitions(
    steps: list[tuple[int, int, float, int, bool]], episode_id: int
) -> list[Transition]:
    """Wrap rollout tuples as buffer transitions."""
    return [
        Transition(
            state=s, action=a, reward=r, next_state=s2, done=d,
            episode_id=episode_id, step_index=i,
        )
        for i, (s, a, r, s2, d) in enumerate(steps)
    ]


# ----------------------------------------------------------------------
# Builders


def random_mdp(
    num_states: int,
    num_actions: int,
    rng: np.random.Generator,
    branching: Optional[int] = None,
    gamma: float = 0.9,
    horizon: int = 50,
) -> TabularMDP:
    """Dense random MDP with uniform [0, 1] rewards and no terminal states."""
    if branching is None:
        branching = num_states
    p = np.zeros((num_states, num_actions, num_states))
    for s in range(num_states):
        for a in range(num_actions):
            support = rng.choice(num_states, size=min(branching, num_states), replace=False)
            weights = rng.random(len(support)) + 1e-3
            p[s, a, support] = weights / weights.sum()
    r = rng.random((num_states, num_actions))
    initial = np.zeros(num_states)
    initial[0] = 1.0
    terminal = np.zeros(num_states, dtype=bool)
    return TabularMDP(p, r, gamma=gamma, horizon=horizon, initial=initial, terminal=terminal)


def single_state_mdp(reward: float = 1.0, gamma: float = 0.5) -> TabularMDP:
    """One live state with a self-loop; Q* = reward / (1 - gamma)."""
    p = np.ones((1, 1, 1))
    r = np.array([[reward]])
    return TabularMDP(
        p, r, gamma=gamma, horizon=10,
        initial=np.array([1.0]), terminal=np.array([False]),
    )


def chain_mdp(length: int = 3, gamma: float = 0.9, reward: float = 1.0) -> TabularMDP:
    """Deterministic chain 0 -> 1 -> ... ending in a terminal state.

    One action; the final move pays ``reward``, earlier moves pay 0.
    """
    n = length + 1
    p = np.zeros((n, 1, n))
    r = np.zeros((n, 1))
    for s in range(length):
        p[s, 0, s + 1] = 1.0
    r[length - 1, 0] = reward
    p[length, 0, length] = 1.0
    initial = np.zeros(n)
    initial[0] = 1.0
    terminal = np.zeros(n, dtype=bool)
    terminal[length] = True
    return TabularMDP(p, r, gamma=gamma, horizon=length + 5, initial=initial, terminal=terminal)


def two_terminal_mdp(corridor: int = 3, gamma: float = 0.9) -> TabularMDP:
    """Corridor into a 50/50 fork between a rewarded and an unrewarded exit.

    States 0..corridor-1 advance deterministically; the last corridor state
    forks with equal probability to ``good = corridor`` or
    ``bad = corridor + 1``, both of which step into the shared terminal
    ``corridor + 2``.  Leaving ``good`` pays 1, everything else pays 0, so
    Bellman targets at the fork depend on the sampled outcome.  One action
    everywhere.
    """
    if corridor < 1:
        raise ValueError("corridor must be >= 1")
    good, bad, end = corridor, corridor + 1, corridor + 2
    n = corridor + 3
    p = np.zeros((n, 1, n))
    r = np.zeros((n, 1))
    for s in range(corridor - 1):
        p[s, 0, s + 1] = 1.0
    p[corridor - 1, 0, good] = 0.5
    p[corridor - 1, 0, bad] = 0.5
    p[good, 0, end] = 1.0
    p[bad, 0, end] = 1.0
    r[good, 0] = 1.0
    initial = np.zeros(n)
    initial[0] = 1.0
    terminal = np.zeros(n, dtype=bool)
    terminal[end] = True
    return TabularMDP(
        p, r, gamma=gamma, horizon=corridor + 5, initial=initial, terminal=terminal
    )


def corridor_mdp(
    wander: int = 3,
    forced: int = 2,
    gamma: float = 0.95,
    horizon: int = 12,
) -> TabularMDP:
    """Corridor with a stochastic wander zone and a deterministic approach.

    States 0..wander-1 respond to two actions (0 stays, 1 advances); the
    next ``forced`` states advance regardless of action, ending in a single
    terminal goal.  The final approach being forced makes every
    goal-entering history pass through the same states, which keeps the
    oversampling analysis tight.
    """
    n = wander + forced + 1
    goal = n - 1
    p = np.zeros((n, 2, n))
    r = np.zeros((n, 2))
    for s in range(wander):
        p[s, 0, s] = 1.0
        p[s, 1, s + 1] = 1.0
    for s in range(wander, wander + forced):
        p[s, 0, s + 1] = 1.0
        p[s, 1, s + 1] = 1.0
    p[goal, :, goal] = 1.0
    r[wander + forced - 1, :] = 1.0  # entering the goal pays 1
    initial = np.zeros(n)
    initial[0] = 1.0
    terminal = np.zeros(n, dtype=bool)
    terminal[goal] = True
    return TabularMDP(p, r, gamma=gamma, horizon=horizon, initial=initial, terminal=terminal)
