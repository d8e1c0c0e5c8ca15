"""Experiment config schema: JSON in, validated and default-filled dict out.

The schema is strict: unknown keys anywhere raise ConfigError with the
offending dotted path, so typos cannot silently fall back to defaults.
The resolved config echoed into each output directory replays the run
bit-exactly.
"""

from __future__ import annotations

import copy
import json
import os
from pathlib import Path
from typing import Any, Optional

SAMPLER_KINDS = ("uniform", "per", "sset", "sset-per")
LEARNER_KINDS = ("tabular", "ddqn")
ENV_NAMES = ("three_room", "two_room", "obstacle_course", "randomized_skill")
BIAS_MODES = ("none", "discrete-count", "sum-tree")
ALLOCATIONS = ("largest-remainder", "multinomial")
SHAPING_KINDS = ("none", "gap", "goal-distance")

OUTPUT_ROOT_VAR = "EVENT_REPLAY_OUT"


class ConfigError(ValueError):
    """Invalid experiment configuration; message carries the dotted path."""


def default_output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_VAR, "runs"))


def _err(path: str, msg: str) -> ConfigError:
    return ConfigError(f"{path}: {msg}")


def _require(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise _err(path, msg)


def _check_keys(section: dict, allowed, path: str) -> None:
    if not isinstance(section, dict):
        raise _err(path, f"expected an object, got {type(section).__name__}")
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise _err(path, f"unknown keys {unknown}; allowed: {sorted(allowed)}")


def _number(section, key, path, default=None, lo=None, hi=None, integer=False,
            lo_open=False, hi_open=False):
    if key not in section:
        if default is None:
            raise _err(f"{path}.{key}", "required value is missing")
        return default
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise _err(f"{path}.{key}", f"expected a number, got {v!r}")
    if integer and int(v) != v:
        raise _err(f"{path}.{key}", f"expected an integer, got {v!r}")
    if lo is not None and (v <= lo if lo_open else v < lo):
        raise _err(f"{path}.{key}", f"must be {'>' if lo_open else '>='} {lo}, got {v}")
    if hi is not None and (v >= hi if hi_open else v > hi):
        raise _err(f"{path}.{key}", f"must be {'<' if hi_open else '<='} {hi}, got {v}")
    return int(v) if integer else float(v)


def _choice(section, key, path, options, default=None):
    v = section.get(key, default)
    if v is None:
        raise _err(f"{path}.{key}", "required value is missing")
    if v not in options:
        raise _err(f"{path}.{key}", f"must be one of {list(options)}, got {v!r}")
    return v


def _resolve_env(raw: dict) -> dict:
    _check_keys(raw, ("name", "params", "fixed_layout", "shaping"), "env")
    name = _choice(raw, "name", "env", ENV_NAMES)
    params = raw.get("params", {})
    _check_keys(params, ("horizon", "slip", "sections"), "env.params")
    out = {"name": name, "params": {}}
    if "horizon" in params:
        out["params"]["horizon"] = _number(params, "horizon", "env.params", integer=True, lo=1)
    if "slip" in params:
        out["params"]["slip"] = _number(params, "slip", "env.params", lo=0.0, hi=1.0, hi_open=True)
    if "sections" in params:
        _require(name == "obstacle_course", "env.params.sections",
                 "only the obstacle course takes a section count")
        out["params"]["sections"] = _number(
            params, "sections", "env.params", integer=True, lo=2, hi=6
        )
    fixed = raw.get("fixed_layout", False)
    if not isinstance(fixed, bool):
        raise _err("env.fixed_layout", "expected true or false")
    out["fixed_layout"] = fixed
    shaping = _choice(raw, "shaping", "env", SHAPING_KINDS, default="none")
    _require(shaping == "none" or name in ("three_room", "two_room"),
             "env.shaping",
             "reward shaping needs a fixed single-goal room")
    out["shaping"] = shaping
    return out


def _resolve_learner(raw: dict) -> dict:
    allowed = (
        "kind", "gamma", "epsilon", "batch_size",
        "alpha", "learning_rate", "hidden_sizes", "refresh_rate",
    )
    _check_keys(raw, allowed, "learner")
    kind = _choice(raw, "kind", "learner", LEARNER_KINDS)
    out = {
        "kind": kind,
        "gamma": _number(raw, "gamma", "learner", default=0.99, lo=0.0, hi=1.0, hi_open=True),
        "epsilon": _number(raw, "epsilon", "learner", default=0.3, lo=0.0, hi=1.0),
        "batch_size": _number(raw, "batch_size", "learner", default=32, integer=True, lo=1),
        "refresh_rate": _number(
            raw, "refresh_rate", "learner", default=0.01, lo=0.0, hi=1.0, lo_open=True
        ),
    }
    if kind == "tabular":
        for key in ("learning_rate", "hidden_sizes"):
            _require(key not in raw, f"learner.{key}", "not a tabular learner option")
        out["alpha"] = _number(raw, "alpha", "learner", default=0.25, lo=0.0, hi=1.0, lo_open=True)
    else:
        _require("alpha" not in raw, "learner.alpha", "not a ddqn option; use learning_rate")
        out["learning_rate"] = _number(
            raw, "learning_rate", "learner", default=1e-3, lo=0.0, lo_open=True
        )
        sizes = raw.get("hidden_sizes", [256])
        if (
            not isinstance(sizes, list)
            or not sizes
            or len(sizes) > 2
            or not all(isinstance(w, int) and w > 0 for w in sizes)
        ):
            raise _err("learner.hidden_sizes", f"expected 1 or 2 positive ints, got {sizes!r}")
        out["hidden_sizes"] = list(sizes)
    return out


def _resolve_event(raw: dict, i: int, capacity: int, batch_size: int) -> dict:
    path = f"sampler.events.{i}"
    _check_keys(raw, ("predicate", "params", "tau", "eta", "kappa", "d_min"), path)
    predicate = raw.get("predicate")
    if not isinstance(predicate, str) or not predicate:
        raise _err(f"{path}.predicate", "required predicate name is missing")
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise _err(f"{path}.params", "predicate params must be an object")
    eta = _number(raw, "eta", path, lo=0.0, hi=1.0, lo_open=True, hi_open=True)
    kappa_default = max(1, round(capacity * eta))
    out = {
        "predicate": predicate,
        "params": dict(params),
        "tau": _number(raw, "tau", path, integer=True, lo=1),
        "eta": eta,
        "kappa": _number(raw, "kappa", path, default=kappa_default, integer=True, lo=1),
        "d_min": _number(raw, "d_min", path, default=batch_size, integer=True, lo=0),
    }
    return out


def _resolve_sampler(raw: dict, batch_size: int) -> dict:
    allowed = (
        "kind", "capacity", "bias_mode", "priority_exponent", "allocation",
        "eta_default", "events", "reverse_sweep",
    )
    _check_keys(raw, allowed, "sampler")
    kind = _choice(raw, "kind", "sampler", SAMPLER_KINDS)
    capacity = _number(raw, "capacity", "sampler", default=20000, integer=True, lo=1)
    out = {
        "kind": kind,
        "capacity": capacity,
        "bias_mode": _choice(raw, "bias_mode", "sampler", BIAS_MODES, default="none"),
        "priority_exponent": _number(
            raw, "priority_exponent", "sampler", default=0.65, lo=0.0
        ),
        "allocation": _choice(raw, "allocation", "sampler", ALLOCATIONS,
                              default="largest-remainder"),
        "reverse_sweep": bool(raw.get("reverse_sweep", False)),
    }
    if "reverse_sweep" in raw and not isinstance(raw["reverse_sweep"], bool):
        raise _err("sampler.reverse_sweep", "expected true or false")

    events = raw.get("events", [])
    if not isinstance(events, list):
        raise _err("sampler.events", "expected a list of event specs")
    if kind in ("uniform", "per"):
        _require(not events, "sampler.events", f"sampler kind {kind!r} takes no event tables")
    out["events"] = [
        _resolve_event(e, i, capacity, batch_size) for i, e in enumerate(events)
    ]

    eta_default = raw.get("eta_default")
    if eta_default is not None:
        eta_default = _number(raw, "eta_default", "sampler", lo=0.0, hi=1.0,
                              lo_open=True, hi_open=True)
        _require(bool(out["events"]), "sampler.eta_default",
                 "needs at least one event table to rescale")
        total = sum(e["eta"] for e in out["events"])
        scale = (1.0 - eta_default) / total
        for e in out["events"]:
            e["eta"] = e["eta"] * scale
    eta_sum = sum(e["eta"] for e in out["events"])
    _require(eta_sum < 1.0 - 1e-12, "sampler.events",
             f"event etas sum to {eta_sum}; the default table needs a positive share")
    # echo the default-table share actually used, whether given or implied
    out["eta_default"] = 1.0 - eta_sum
    return out


def _resolve_schedule(raw: dict) -> dict:
    allowed = (
        "epochs", "steps_per_epoch", "updates_per_epoch", "eval_cadence",
        "eval_episodes", "eval_epsilon", "eval_start",
    )
    _check_keys(raw, allowed, "schedule")
    out = {
        "epochs": _number(raw, "epochs", "schedule", integer=True, lo=1),
        "steps_per_epoch": _number(
            raw, "steps_per_epoch", "schedule", default=500, integer=True, lo=1
        ),
        "updates_per_epoch": _number(
            raw, "updates_per_epoch", "schedule", default=500, integer=True, lo=0
        ),
        "eval_cadence": _number(raw, "eval_cadence", "schedule", default=1, integer=True, lo=1),
        "eval_episodes": _number(raw, "eval_episodes", "schedule", default=5, integer=True, lo=1),
        "eval_epsilon": _number(raw, "eval_epsilon", "schedule", default=0.0, lo=0.0, hi=1.0),
    }
    start = raw.get("eval_start")
    if start is not None:
        if (
            not isinstance(start, list)
            or len(start) != 3
            or not all(isinstance(v, int) for v in start)
        ):
            raise _err("schedule.eval_start", f"expected [x, y, theta], got {start!r}")
    out["eval_start"] = start
    return out


def resolve_config(raw: dict) -> dict:
    """Validate a raw config dict and fill defaults; raises ConfigError."""
    if not isinstance(raw, dict):
        raise ConfigError(f"top level: expected an object, got {type(raw).__name__}")
    _check_keys(raw, ("run_id", "env", "learner", "sampler", "schedule", "seeds"), "top level")
    for key in ("env", "learner", "sampler", "schedule", "seeds"):
        if key not in raw:
            raise _err(key, "required section is missing")

    seeds = raw["seeds"]
    if (
        not isinstance(seeds, list)
        or not seeds
        or not all(isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in seeds)
    ):
        raise _err("seeds", f"expected a non-empty list of non-negative ints, got {seeds!r}")
    if len(set(seeds)) != len(seeds):
        raise _err("seeds", "seed values must be distinct")

    learner = _resolve_learner(raw["learner"])
    out = {
        "env": _resolve_env(raw["env"]),
        "learner": learner,
        "sampler": _resolve_sampler(raw["sampler"], learner["batch_size"]),
        "schedule": _resolve_schedule(raw["schedule"]),
        "seeds": list(seeds),
    }
    run_id = raw.get("run_id", f"{out['env']['name']}-{out['sampler']['kind']}")
    if not isinstance(run_id, str) or not run_id:
        raise _err("run_id", f"expected a non-empty string, got {run_id!r}")
    out["run_id"] = run_id

    if learner["kind"] == "tabular" and out["env"]["name"] not in ("three_room", "two_room"):
        raise _err("learner.kind", "the tabular learner needs a static keyless env "
                                   "(three_room or two_room)")
    if out["sampler"]["reverse_sweep"] and out["sampler"]["kind"] != "uniform":
        raise _err("sampler.reverse_sweep",
                   "the reverse-sweep baseline runs on the uniform sampler only")
    return out


def load_config(path) -> dict:
    """Read and resolve a JSON config file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return resolve_config(raw)


def set_by_path(config: dict, dotted: str, value: Any) -> dict:
    """Return a copy of ``config`` with the dotted path replaced.

    Integer segments index lists: "sampler.events.0.tau".  Unknown paths
    raise ConfigError; the result is re-validated by the caller.
    """
    if not dotted:
        raise ConfigError("axis path must be non-empty")
    out = copy.deepcopy(config)
    node = out
    parts = dotted.split(".")
    for i, part in enumerate(parts):
        last = i == len(parts) - 1
        where = ".".join(parts[: i + 1])
        if isinstance(node, list):
            try:
                idx = int(part)
                node[idx]
            except (ValueError, IndexError):
                raise ConfigError(f"axis {where}: no such list index") from None
            if last:
                node[idx] = value
            else:
                node = node[idx]
        elif isinstance(node, dict):
            if part not in node:
                raise ConfigError(f"axis {where}: no such key")
            if last:
                node[part] = value
            else:
                node = node[part]
        else:
            raise ConfigError(f"axis {where}: path descends into a scalar")
    return out
