"""Reference off-policy learners driven by the replay buffer."""

from .tabular import (
    StepSizeSchedule,
    epsilon_greedy,
    q_update,
    target_q_learning,
    td_error,
)
from .mlp import MLPValueNet, ddqn_step, loss_and_grads, refresh_target

__all__ = [
    "StepSizeSchedule",
    "epsilon_greedy",
    "q_update",
    "td_error",
    "target_q_learning",
    "MLPValueNet",
    "ddqn_step",
    "loss_and_grads",
    "refresh_target",
]
