"""Exact tabular Q-learning with a periodically refreshed target table.

The update rule bootstraps from a frozen target table that is hard-copied
from the online table every fixed number of inner steps; step sizes follow
an inverse-time schedule that restarts with each refresh.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..buffer import ReplayBuffer
from ..transition import Transition


class StepSizeSchedule:
    """Inverse-time step sizes ``alpha / (lam + t)`` for t >= 0.

    Requires ``lam >= alpha`` (and both positive) so every step size lies
    in (0, 1].
    """

    def __init__(self, alpha: float, lam: float):
        if not (alpha > 0 and np.isfinite(alpha)):
            raise ValueError("alpha must be positive and finite")
        if not (lam >= alpha and np.isfinite(lam)):
            raise ValueError("lam must be >= alpha so step sizes stay in (0, 1]")
        self.alpha = float(alpha)
        self.lam = float(lam)

    def __call__(self, t: int) -> float:
        if t < 0:
            raise ValueError("t must be >= 0")
        return self.alpha / (self.lam + t)


def td_error(
    q_online: np.ndarray,
    q_target: np.ndarray,
    t: Transition,
    gamma: float,
) -> float:
    """Temporal-difference error of one transition against the target table.

    Terminal transitions bootstrap with value 0.
    """
    bootstrap = 0.0 if t.done else float(q_target[t.next_state].max())
    return t.reward + gamma * bootstrap - float(q_online[t.state, t.action])


def q_update(
    q_online: np.ndarray,
    q_target: np.ndarray,
    t: Transition,
    alpha: float,
    gamma: float,
    weight: float = 1.0,
) -> float:
    """One in-place tabular update; returns the new entry.

    ``weight`` scales the TD error, carrying any importance correction
    from stratified sampling.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must be in (0, 1]")
    delta = td_error(q_online, q_target, t, gamma)
    q_online[t.state, t.action] += alpha * weight * delta
    return float(q_online[t.state, t.action])


def epsilon_greedy(
    q: np.ndarray,
    state: Optional[int],
    epsilon: float,
    rng: np.random.Generator,
) -> int:
    """Greedy action with probability 1 - epsilon, uniform otherwise.

    ``q`` is either a full (S, A) table indexed by ``state`` or a 1-D
    action-value vector (then ``state`` is ignored and may be None).
    Greedy ties resolve to the lowest action id.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must be in [0, 1]")
    values = np.asarray(q)
    if values.ndim == 2:
        values = values[state]
    elif values.ndim != 1:
        raise ValueError("q must be a (S, A) table or an action-value vector")
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.integers(len(values)))
    return int(np.argmax(values))


def target_q_learning(
    mdp,
    buffer: ReplayBuffer,
    outer_iters: int,
    inner_iters: int,
    schedule: StepSizeSchedule,
    rng: np.random.Generator,
    gamma: Optional[float] = None,
    batch_size: int = 1,
) -> np.ndarray:
    """Offline target-table Q-learning over a pre-filled buffer.

    Runs ``outer_iters`` refresh rounds; each round hard-copies the target
    from the online table, then performs ``inner_iters`` sampled updates
    with step sizes ``schedule(0..inner_iters-1)`` (the schedule restarts
    every round).  ``mdp`` only provides the table shape via
    ``num_states`` / ``num_actions`` (and ``gamma`` when not given).
    Returns the final online table; ``outer_iters = 0`` returns all zeros.

    With ``batch_size > 1`` each step samples a stratified batch and
    applies, per visited (s, a) pair, the mean of that pair's weighted TD
    errors.
    """
    if outer_iters < 0 or inner_iters < 1:
        raise ValueError("need outer_iters >= 0 and inner_iters >= 1")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if gamma is None:
        gamma = float(mdp.gamma)
    q = np.zeros((mdp.num_states, mdp.num_actions))
    if outer_iters == 0:
        return q
    if buffer.size(0) == 0:
        raise ValueError("buffer default table is empty")
    for _ in range(outer_iters):
        target = q.copy()
        for i in range(inner_iters):
            alpha = schedule(i)
            if batch_size == 1:
                sample = next(iter(buffer.sample_batch(1, rng)))
                q_update(q, target, sample.transition, alpha, gamma, sample.weight)
                continue
            batch = buffer.sample_batch(batch_size, rng)
            deltas: dict[tuple[int, int], list[float]] = {}
            for s in batch:
                t = s.transition
                deltas.setdefault((t.state, t.action), []).append(
                    s.weight * td_error(q, target, t, gamma)
                )
            for (s_id, a_id), ds in deltas.items():
                q[s_id, a_id] += alpha * float(np.mean(ds))
    if not np.all(np.isfinite(q)):
        raise RuntimeError("tabular learning diverged to non-finite values")
    return q
