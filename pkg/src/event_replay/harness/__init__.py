"""Config-driven experiment runner, metrics tooling, and CLI."""

from .config import ConfigError, load_config, resolve_config, set_by_path
from .metrics import canonical_csv_bytes, read_metrics, summarize_dir, write_metrics
from .runner import forgetting_eval, run_experiment, run_seed, sweep

__all__ = [
    "ConfigError",
    "load_config",
    "resolve_config",
    "set_by_path",
    "read_metrics",
    "write_metrics",
    "summarize_dir",
    "canonical_csv_bytes",
    "run_experiment",
    "run_seed",
    "sweep",
    "forgetting_eval",
]
