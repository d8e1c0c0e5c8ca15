"""Numerical verification of the sampling guarantees.

Each suite reproduces one analytical result as a finite, seeded
experiment against the real replay buffer or the rate arithmetic:

* ``lemma1`` -- oversampling: on corridor MDPs whose event-state density
  is computed exactly, states held by an event table are drawn from the
  stratified mix at least ``(1 - eta) ** -m`` times as often as from the
  default table alone, within Monte Carlo tolerance.
* ``lemma2`` -- bias correction: importance-weighted Bellman-target means
  over stratified samples match unweighted default-table means on the
  two-outcome fork MDP.
* ``lambert`` -- the Lambert-W rate: round-tripping ``m_exact`` through
  ``tau_bound``, the small-mu asymptote, and Halley-iteration residuals.
* ``complexity`` -- the iteration-count formula against an independent
  log-space evaluation and its monotonicities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..buffer import EventSpec, ReplayBuffer, TableConfig
from ..transition import Transition
from .density import state_density
from .mdp import (
    TabularMDP,
    corridor_mdp,
    episode_transitions,
    rollout_steps,
    two_terminal_mdp,
    value_iteration,
)
from .rates import lambert_w0, m_asymptotic, m_exact, sample_complexity, tau_bound


@dataclass
class CheckResult:
    name: str
    passed: bool
    stats: dict = field(default_factory=dict)
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extras = " ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                          for k, v in self.stats.items())
        out = f"[{status}] {self.name}"
        if extras:
            out += f"  ({extras})"
        if self.detail and not self.passed:
            out += f"\n       {self.detail}"
        return out


# ----------------------------------------------------------------------
# Oversampling (stratified-draw floor)


def _behavior_policy(mdp: TabularMDP, advance_prob: float) -> np.ndarray:
    pol = np.zeros((mdp.num_states, mdp.num_actions))
    pol[:, 0] = 1.0 - advance_prob
    pol[:, 1] = advance_prob
    return pol


def _fill_buffer_from_policy(
    mdp: TabularMDP,
    policy: np.ndarray,
    episodes: int,
    rng: np.random.Generator,
    event_state: int,
    tau: int,
    eta: float,
) -> ReplayBuffer:
    capacity = episodes * mdp.horizon + 1
    spec = EventSpec(
        condition=lambda t, h, goal=event_state: t.next_state == goal,
        tau=tau,
        name="goal-entry",
    )
    buf = ReplayBuffer(
        [spec],
        [TableConfig(eta=1.0 - eta, kappa=capacity),
         TableConfig(eta=eta, kappa=capacity)],
        allocation="multinomial",
    )
    for ep in range(episodes):
        steps = rollout_steps(mdp, policy, rng)
        for t in episode_transitions(steps, ep):
            buf.insert(t)
        buf.end_episode()
    return buf


def _empirical_state_probs(
    buf: ReplayBuffer,
    num_states: int,
    draws: int,
    rng: np.random.Generator,
    batch: int = 1000,
) -> np.ndarray:
    """State frequencies of stratified draws through the buffer's sampler."""
    counts = np.zeros(num_states, dtype=np.int64)
    remaining = draws
    while remaining > 0:
        b = min(batch, remaining)
        for s in buf.sample_batch(b, rng):
            counts[s.transition.state] += 1
        remaining -= b
    return counts / draws


def verify_oversampling(
    eta: float = 0.3,
    tau: int = 2,
    seeds: Sequence[int] = range(10),
    episodes: int = 10_000,
    draws: int = 1_000_000,
    wander: int = 3,
    forced: int = 2,
    advance_prob: float = 0.25,
    horizon: int = 12,
) -> CheckResult:
    """Monte Carlo check of the stratified-draw floor on a corridor MDP.

    The event-state density mu comes from exact DP under the behavior
    policy; m is the floor of the exact oversampling exponent for the
    given history length.  For every state held by the event table the
    stratified draw frequency must reach ``(1 - eta) ** -m`` times the
    default-table frequency, minus three binomial standard errors.
    ``eta = 0`` is the degenerate m = 0 case (the bound holds with
    equality in expectation).
    """
    if draws < 10_000:
        raise ValueError("need at least 10_000 draws per estimate")
    mdp = corridor_mdp(wander=wander, forced=forced, horizon=horizon)
    goal = mdp.num_states - 1
    behavior = _behavior_policy(mdp, advance_prob)
    mu = float(state_density(mdp, behavior, 0).rho[goal])
    m_real = 0.0 if eta == 0.0 else m_exact(eta, 1, tau, mu)
    m = math.floor(m_real)
    if m < 0:
        return CheckResult(
            name=f"oversampling eta={eta} tau={tau}",
            passed=False,
            stats={"mu": mu, "m_exact": m_real},
            detail="precondition violated: no non-negative exponent admits this tau (m < 0)",
        )
    if eta > 0 and tau > tau_bound(m, eta, 1, mu) * (1 + 1e-12):
        return CheckResult(
            name=f"oversampling eta={eta} tau={tau}",
            passed=False,
            stats={"mu": mu, "m": m, "tau_bound": tau_bound(m, eta, 1, mu)},
            detail="precondition violated: tau exceeds the admissible bound at floor(m)",
        )
    factor = (1.0 - eta) ** (-m)

    worst_margin = math.inf
    failures = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        buf = _fill_buffer_from_policy(mdp, behavior, episodes, rng, goal, tau, eta)
        event_states = sorted({t.state for t in buf.table_contents(1)})
        p_mix = _empirical_state_probs(buf, mdp.num_states, draws, rng)
        defaults = np.array([t.state for t in buf.table_contents(0)])
        draws_default = defaults[rng.integers(len(defaults), size=draws)]
        p_def = np.bincount(draws_default, minlength=mdp.num_states) / draws
        for s in event_states:
            lhs = p_mix[s]
            rhs = factor * p_def[s]
            sigma = math.sqrt(
                lhs * (1 - lhs) / draws + factor ** 2 * p_def[s] * (1 - p_def[s]) / draws
            )
            margin = lhs - (rhs - 3 * sigma)
            worst_margin = min(worst_margin, margin)
            if margin < 0:
                failures.append((seed, s, lhs, rhs, sigma))
    return CheckResult(
        name=f"oversampling eta={eta} tau={tau}",
        passed=not failures,
        stats={
            "mu": mu,
            "m": m,
            "m_exact": m_real,
            "factor": factor,
            "worst_margin": worst_margin,
            "seeds": len(list(seeds)),
        },
        detail="; ".join(
            f"seed {sd} state {st}: lhs={l:.5f} < rhs={r:.5f} (sigma={sg:.5f})"
            for sd, st, l, r, sg in failures
        ),
    )


# ----------------------------------------------------------------------
# Bias correction (weighted target means)


def verify_bias_correction(
    eta: float = 0.1,
    corridor: int = 6,
    episodes: int = 30_000,
    samples: int = 100_000,
    seed: int = 0,
    tolerance: float = 1e-2,
) -> CheckResult:
    """Weighted stratified Bellman-target mean vs the default-table mean.

    Uses the fork MDP with two equiprobable outcomes, only one of which is
    an event; full-episode histories are captured.  Targets bootstrap from
    the exact optimal value table.
    """
    mdp = two_terminal_mdp(corridor=corridor)
    good = corridor
    rng = np.random.default_rng(seed)
    q_star, _ = value_iteration(mdp)
    v_star = q_star.max(axis=1)

    episode_len = corridor + 2
    capacity = episodes * episode_len + 1
    spec = EventSpec(
        condition=lambda t, h: t.next_state == good, tau=episode_len, name="good-exit"
    )
    buf = ReplayBuffer(
        [spec],
        [TableConfig(eta=1.0 - eta, kappa=capacity),
         TableConfig(eta=eta, kappa=capacity)],
        bias_mode="discrete-count",
    )
    policy = np.ones((mdp.num_states, 1))
    for ep in range(episodes):
        steps = rollout_steps(mdp, policy, rng)
        for t in episode_transitions(steps, ep):
            buf.insert(t)
        buf.end_episode()

    def target(t: Transition) -> float:
        if t.done:
            return t.reward
        return t.reward + mdp.gamma * float(v_star[t.next_state])

    num = 0.0
    den = 0.0
    remaining = samples
    while remaining > 0:
        b = min(1000, remaining)
        for s in buf.sample_batch(b, rng):
            num += s.weight * target(s.transition)
            den += s.weight
        remaining -= b
    weighted_mean = num / den

    defaults = buf.table_contents(0)
    idx = rng.integers(len(defaults), size=samples)
    default_mean = float(np.mean([target(defaults[i]) for i in idx]))

    gap = abs(weighted_mean - default_mean)
    fork_weight = buf.bias_weight(corridor - 1, 0)
    return CheckResult(
        name=f"bias-correction eta={eta}",
        passed=gap <= tolerance,
        stats={
            "weighted_mean": weighted_mean,
            "default_mean": default_mean,
            "gap": gap,
            "tolerance": tolerance,
            "fork_pair_weight": fork_weight,
        },
        detail=f"|weighted - default| = {gap:.5f} exceeds {tolerance}",
    )


# ----------------------------------------------------------------------
# Rate arithmetic


def verify_rate_roundtrip(num_draws: int = 100, seed: int = 0) -> CheckResult:
    """tau_bound(m_exact(...)) returns tau to 1e-9 relative."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(num_draws):
        eta = float(rng.uniform(0.05, 0.9))
        n = int(rng.integers(1, 6))
        tau = float(rng.uniform(1.0, 50.0))
        # Keep mu below the m = 0 bound so the exponent stays non-negative.
        mu = float(rng.uniform(0.001, 0.999)) / (n * tau)
        m = m_exact(eta, n, tau, mu)
        if m < -1e-12:
            return CheckResult(
                name="rate round-trip", passed=False,
                stats={"eta": eta, "n": n, "tau": tau, "mu": mu, "m": m},
                detail="m_exact went negative inside the admissible region",
            )
        back = tau_bound(max(m, 0.0), eta, n, mu)
        worst = max(worst, abs(back - tau) / tau)
    return CheckResult(
        name="rate round-trip",
        passed=worst <= 1e-9,
        stats={"draws": num_draws, "worst_rel_err": worst},
    )


def verify_lambert_residuals() -> CheckResult:
    """Halley residuals across fourteen decades plus the classic W(1)."""
    xs = [10.0 ** k for k in range(-6, 8)] + [1.0, math.e, 0.5]
    worst = 0.0
    for x in xs:
        w = lambert_w0(x)
        worst = max(worst, abs(w * math.exp(w) - x) / max(1.0, x))
    omega = lambert_w0(1.0)
    ok = worst <= 1e-12 and abs(omega - 0.5671432904097838) < 1e-12
    return CheckResult(
        name="lambert residuals",
        passed=ok,
        stats={"worst_rel_residual": worst, "w_at_1": omega},
    )


def verify_rate_asymptote(
    mu: float = 1e-8, tau: float = 10.0, low: float = 0.9, high: float = 1.1
) -> CheckResult:
    """m_exact approaches the small-mu asymptote at eta = 1 - 1/e.

    At that event proportion the exact rate's log base equals 1 and the
    asymptote's dropped factor is exact.
    """
    eta = 1.0 - 1.0 / math.e
    exact = m_exact(eta, 1, tau, mu)
    asym = m_asymptotic(tau, mu)
    ratio = exact / asym
    return CheckResult(
        name="rate asymptote",
        passed=low <= ratio <= high,
        stats={"m_exact": exact, "m_asymptotic": asym, "ratio": ratio},
    )


def verify_rate_exceeds_one(
    eta: float = 0.5, n: int = 1, tau: float = 1.0, mu_max: float = 0.01
) -> CheckResult:
    """The exponent stays above 1 for rare events (mu <= 0.01 here)."""
    mus = np.geomspace(1e-10, mu_max, 50)
    worst = min(m_exact(eta, n, tau, float(mu)) for mu in mus)
    return CheckResult(
        name="rate exceeds one for rare events",
        passed=worst > 1.0,
        stats={"min_m": worst, "mu_max": mu_max},
    )


def _complexity_logspace(gamma: float, eps: float, c_b: float, l_b: float) -> float:
    # Deliberately different evaluation path: assemble the value in
    # log space and exponentiate once.
    log_n = (
        math.log(832.0)
        + 2.0 * math.log(gamma)
        - 5.0 * math.log(1.0 - gamma)
        - 2.0 * math.log(eps)
        + math.log(math.log(4.0 / ((1.0 - gamma) * eps)))
        + math.log(l_b)
        - 3.0 * math.log(c_b)
    )
    return math.exp(log_n)


def verify_sample_complexity(num_draws: int = 100, seed: int = 0) -> CheckResult:
    """Direct formula vs log-space evaluation, plus monotonicity spot checks."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(num_draws):
        gamma = float(rng.uniform(0.1, 0.99))
        eps = float(rng.uniform(0.01, 1.0))
        c_b = float(rng.uniform(0.001, 0.5))
        l_b = float(rng.uniform(c_b, min(1.0, c_b * 10)))
        direct = sample_complexity(gamma, eps, c_b, l_b)
        logspace = _complexity_logspace(gamma, eps, c_b, l_b)
        worst = max(worst, abs(direct - logspace) / direct)
    reference = sample_complexity(0.5, 0.1, 1.0, 1.0)
    ref_ok = abs(reference - 2.9166e6) / 2.9166e6 < 1e-3
    mono_ok = (
        sample_complexity(0.5, 0.05, 1.0, 1.0) > reference
        and sample_complexity(0.6, 0.1, 1.0, 1.0) > reference
        and sample_complexity(0.5, 0.1, 0.5, 1.0) > reference
    )
    return CheckResult(
        name="sample complexity",
        passed=worst <= 1e-9 and ref_ok and mono_ok,
        stats={"worst_rel_err": worst, "reference": reference},
    )


# ----------------------------------------------------------------------
# Suites


def _lemma1_suite(fast: bool = False) -> list[CheckResult]:
    seeds = range(3) if fast else range(10)
    draws = 100_000 if fast else 1_000_000
    episodes = 1000 if fast else 3000
    return [
        verify_oversampling(tau=1, seeds=seeds, draws=draws, episodes=episodes),
        verify_oversampling(tau=2, seeds=seeds, draws=draws, episodes=episodes),
    ]


def _lemma2_suite(fast: bool = False) -> list[CheckResult]:
    episodes = 5000 if fast else 30_000
    samples = 20_000 if fast else 100_000
    return [verify_bias_correction(episodes=episodes, samples=samples)]


def _lambert_suite(fast: bool = False) -> list[CheckResult]:
    return [
        verify_lambert_residuals(),
        verify_rate_roundtrip(),
        verify_rate_asymptote(),
        verify_rate_exceeds_one(),
    ]


def _complexity_suite(fast: bool = False) -> list[CheckResult]:
    return [verify_sample_complexity()]


SUITES: dict[str, Callable[..., list[CheckResult]]] = {
    "lemma1": _lemma1_suite,
    "lemma2": _lemma2_suite,
    "lambert": _lambert_suite,
    "complexity": _complexity_suite,
}


def run_suite(name: str = "all", fast: bool = False) -> list[CheckResult]:
    """Run one named suite or all of them; returns individual results."""
    if name == "all":
        results = []
        for suite in SUITES.values():
            results.extend(suite(fast=fast))
        return results
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)} or 'all'")
    return SUITES[name](fast=fast)
