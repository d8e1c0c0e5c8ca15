"""Finite-horizon state densities, disparity, and event classification.

The density of a state is its per-step occupancy probability averaged over
steps 0..K under the trap convention, so densities are distributions over
states.  Event classification marks states that the optimal policy visits
with much higher density than the behavior policy (from the start states
or, transitively, from already-classified event states) plus the states
where optimal trajectories sit at the horizon.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .mdp import TabularMDP, policy_matrix, value_iteration

_SUPPORT_TOL = 1e-12


@dataclass(frozen=True)
class DensityVector:
    """Averaged occupancy: ``rho`` sums to 1; ``normalizer`` is K + 1."""

    rho: np.ndarray
    normalizer: float


@dataclass(frozen=True)
class EventAnalysis:
    """Result of :func:`classify_events`.

    ``event_sets`` lists the classification levels: level 0 holds states
    classified from the start states, level k those classified from level
    k-1 anchors.  ``horizon_states`` are where optimal trajectories from
    the start distribution sit at step K (length-K trajectories; under the
    trap convention these are the terminal states the optimal policy
    reaches, or a mid-path state when the horizon is too short).
    ``sections`` has one state tuple per event set: the states from which
    the behavior policy reaches that set's states almost as densely as the
    optimal policy (disparity at most delta).  ``coverage_ok`` records
    whether every start, event, and horizon state lies in some section.
    """

    mu: float
    delta: float
    event_sets: tuple[tuple[int, ...], ...]
    horizon_states: tuple[int, ...]
    event_states: tuple[int, ...]
    sections: tuple[tuple[int, ...], ...]
    coverage_ok: bool


def state_density(
    mdp: TabularMDP,
    policy: np.ndarray,
    start: Union[int, np.ndarray],
    horizon: Optional[int] = None,
) -> DensityVector:
    """Exact averaged occupancy from ``start`` over steps 0..K.

    ``start`` is a state id or a distribution; ``horizon`` defaults to the
    MDP horizon.  The result sums to 1 with normalizer K + 1.
    """
    k_max = mdp.horizon if horizon is None else int(horizon)
    if k_max < 0:
        raise ValueError(f"horizon must be >= 0, got {k_max}")
    p_pi = mdp.policy_transition_matrix(policy)
    if np.isscalar(start) or np.ndim(start) == 0:
        d = np.zeros(mdp.num_states)
        d[int(start)] = 1.0
    else:
        d = np.asarray(start, dtype=np.float64)
        if d.shape != (mdp.num_states,) or abs(d.sum() - 1.0) > 1e-9 or np.any(d < 0):
            raise ValueError("start must be a state id or a distribution over states")
    acc = d.copy()
    for _ in range(k_max):
        d = d @ p_pi
        acc += d
    return DensityVector(rho=acc / (k_max + 1), normalizer=float(k_max + 1))


def density_matrix(mdp: TabularMDP, policy: np.ndarray, horizon: Optional[int] = None) -> np.ndarray:
    """All-starts density: row s is the density vector started from s."""
    k_max = mdp.horizon if horizon is None else int(horizon)
    p_pi = mdp.policy_transition_matrix(policy)
    d = np.eye(mdp.num_states)
    acc = d.copy()
    for _ in range(k_max):
        d = d @ p_pi
        acc += d
    return acc / (k_max + 1)


def disparity(
    mdp: TabularMDP,
    behavior_policy: np.ndarray,
    start: Union[int, np.ndarray],
    horizon: Optional[int] = None,
    optimal_policy: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Signed density difference (optimal minus behavior) from ``start``.

    The optimal policy is the greedy result of value iteration unless
    given.  Entries lie in [-1, 1] and the vector sums to ~0.
    """
    if optimal_policy is None:
        _, optimal_policy = value_iteration(mdp)
    rho_opt = state_density(mdp, optimal_policy, start, horizon).rho
    rho_beh = state_density(mdp, behavior_policy, start, horizon).rho
    return rho_opt - rho_beh


def classify_events(
    mdp: TabularMDP,
    behavior_policy: np.ndarray,
    mu: float,
    horizon: Optional[int] = None,
) -> EventAnalysis:
    """Classify event states at threshold ``delta = 1 - mu``.

    A state is an event if its density disparity from some anchor reaches
    delta, where anchors are the start states and, level by level, the
    event states found so far (a greedy chain; the decomposition of the
    definition is not unique, this one is the canonical breadth-first
    version).  States where optimal trajectories from the start sit at the
    horizon step are events unconditionally and seed the anchor pool.
    """
    if not 0.0 < mu < 1.0:
        raise ValueError(f"mu must lie in (0, 1), got {mu}")
    delta = 1.0 - mu
    k_max = mdp.horizon if horizon is None else int(horizon)
    _, pi_star = value_iteration(mdp)

    rho_opt = density_matrix(mdp, pi_star, k_max)
    rho_beh = density_matrix(mdp, behavior_policy, k_max)
    disp = rho_opt - rho_beh  # disp[j, i]: disparity of state i from anchor j

    # Horizon states: support of the optimal step-K distribution.
    p_star = mdp.policy_transition_matrix(pi_star)
    d = mdp.initial.copy()
    for _ in range(k_max):
        d = d @ p_star
    horizon_states = tuple(int(s) for s in np.flatnonzero(d > _SUPPORT_TOL))

    classified = set(horizon_states)
    anchors = set(int(s) for s in np.flatnonzero(mdp.initial > _SUPPORT_TOL))
    anchors |= classified
    event_sets: list[tuple[int, ...]] = []
    if horizon_states:
        event_sets.append(horizon_states)
    while True:
        anchor_rows = sorted(anchors)
        reach = disp[anchor_rows].max(axis=0)
        new = [
            int(s)
            for s in np.flatnonzero(reach >= delta - 1e-12)
            if int(s) not in classified
        ]
        if not new:
            break
        event_sets.append(tuple(new))
        classified.update(new)
        anchors.update(new)

    event_states = tuple(sorted(classified))

    sections = []
    for group in event_sets:
        cols = list(group)
        worst = disp[:, cols].max(axis=1)
        sections.append(tuple(int(s) for s in np.flatnonzero(worst <= delta + 1e-12)))

    must_cover = set(int(s) for s in np.flatnonzero(mdp.initial > _SUPPORT_TOL))
    must_cover |= set(event_states)
    covered = set()
    for sec in sections:
        covered.update(sec)
    coverage_ok = must_cover <= covered if sections else False

    return EventAnalysis(
        mu=mu,
        delta=delta,
        event_sets=tuple(event_sets),
        horizon_states=horizon_states,
        event_states=event_states,
        sections=tuple(sections),
        coverage_ok=coverage_ok,
    )
