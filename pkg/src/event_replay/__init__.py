"""Stratified experience replay with event tables.

The package is organized around five pieces:

* ``event_replay.buffer`` -- the partitioned replay buffer: a default table
  that sees every transition plus any number of event tables that capture
  short histories leading into user-defined events, with stratified
  minibatch sampling and optional bias-corrected importance weights.
* ``event_replay.learners`` -- reference off-policy learners (tabular
  target Q-learning and a manually differentiated double-DQN) that consume
  sampled batches.
* ``event_replay.envs`` -- small deterministic gridworlds with event
  predicates, potential-based reward shaping, and evaluation-start shifts.
* ``event_replay.theory`` -- exact finite-MDP analysis: state densities,
  event classification, oversampling rates via the Lambert W function, and
  numerical verification suites for the sampling guarantees.
* ``event_replay.harness`` -- config-driven multi-seed experiment runner
  with a CSV metrics schema and a command line interface.
"""

from .transition import Transition
from .sum_tree import SumTree
from .buffer import (
    EventSpec,
    TableConfig,
    TableStats,
    BatchSample,
    SampledBatch,
    ReplayBuffer,
    create_buffer,
)

__version__ = "0.1.0"

__all__ = [
    "Transition",
    "SumTree",
    "EventSpec",
    "TableConfig",
    "TableStats",
    "BatchSample",
    "SampledBatch",
    "ReplayBuffer",
    "create_buffer",
    "__version__",
]
