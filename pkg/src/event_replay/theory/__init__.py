"""Exact finite-MDP analysis and numerical verification suites."""

from .mdp import (
    TabularMDP,
    value_iteration,
    policy_matrix,
    rollout_steps,
    episode_transitions,
    random_mdp,
    chain_mdp,
    single_state_mdp,
    two_terminal_mdp,
    corridor_mdp,
)
from .density import (
    DensityVector,
    EventAnalysis,
    state_density,
    density_matrix,
    disparity,
    classify_events,
)
from .rates import (
    lambert_w0,
    tau_bound,
    m_exact,
    m_asymptotic,
    sample_complexity,
    step_size_constants,
)
from .verify import (
    CheckResult,
    verify_oversampling,
    verify_bias_correction,
    verify_rate_roundtrip,
    verify_sample_complexity,
    run_suite,
    SUITES,
)

__all__ = [
    "TabularMDP",
    "value_iteration",
    "policy_matrix",
    "rollout_steps",
    "episode_transitions",
    "random_mdp",
    "chain_mdp",
    "single_state_mdp",
    "two_terminal_mdp",
    "corridor_mdp",
    "DensityVector",
    "EventAnalysis",
    "state_density",
    "density_matrix",
    "disparity",
    "classify_events",
    "lambert_w0",
    "tau_bound",
    "m_exact",
    "m_asymptotic",
    "sample_complexity",
    "step_size_constants",
    "CheckResult",
    "verify_oversampling",
    "verify_bias_correction",
    "verify_rate_roundtrip",
    "verify_sample_complexity",
    "run_suite",
    "SUITES",
]
