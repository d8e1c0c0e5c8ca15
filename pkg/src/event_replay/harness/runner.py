"""Experiment execution: seeded training loops, sweeps, forgetting evals.

A run trains one agent per seed.  Each epoch interleaves environment steps
(inserted into the replay buffer as they happen) with gradient updates
drawn through the configured sampler, then evaluates at the configured
cadence.  Seeds never share mutable state, so they can execute in a
process pool; rows come out sorted by (seed, epoch) regardless of the
parallelism degree.
"""

from __future__ import annotations

import copy
import csv
import json
import os
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional

import numpy as np

from ..buffer import (
    BatchSample,
    EventSpec,
    ReplayBuffer,
    SampledBatch,
    TableConfig,
)
from ..envs import (
    PotentialShaper,
    frozen_copy,
    gap_potential,
    goal_distance_potential,
    make_predicate,
    obstacle_course,
    randomized_skill,
    shifted_eval,
    tabularize,
    three_room,
    two_room,
)
from ..envs.grid import GridObs, GridWorld, _ego_view, encoded_size
from ..learners import MLPValueNet, ddqn_step, epsilon_greedy, refresh_target, td_error
from ..transition import Transition
from .metrics import SCHEMA_LINE, read_metrics, summarize_rows, write_metrics

WORLD_BUILDERS = {
    "three_room": three_room,
    "two_room": two_room,
    "obstacle_course": obstacle_course,
    "randomized_skill": randomized_skill,
}

SKILL_SCENARIOS = ("lava", "gap", "door")

# Seed-stream salts: every consumer of randomness gets its own generator
# derived from (seed, salt) so timing changes in one cannot shift another.
_SALT_ENV, _SALT_ACT, _SALT_BUF, _SALT_NET, _SALT_EVAL_ENV, _SALT_EVAL_ACT = (
    11, 13, 17, 29, 19, 23,
)


def make_env(env_cfg: dict, seed_key) -> GridWorld:
    builder = WORLD_BUILDERS[env_cfg["name"]]
    env = builder(seed=seed_key, **env_cfg["params"])
    if env_cfg.get("fixed_layout"):
        env = frozen_copy(env, seed=seed_key)
    return env


def build_buffer(sampler_cfg: dict) -> ReplayBuffer:
    events = sampler_cfg["events"]
    specs = [
        EventSpec(
            condition=make_predicate(e["predicate"], **e["params"]),
            tau=e["tau"],
            name=e["predicate"],
        )
        for e in events
    ]
    eta_default = 1.0 - sum(e["eta"] for e in events)
    tables = [TableConfig(eta=eta_default, kappa=sampler_cfg["capacity"], d_min=1)]
    tables += [
        TableConfig(eta=e["eta"], kappa=e["kappa"], d_min=e["d_min"]) for e in events
    ]
    prioritized = sampler_cfg["kind"] in ("per", "sset-per")
    return ReplayBuffer(
        specs,
        tables,
        bias_mode=sampler_cfg["bias_mode"],
        prioritized=prioritized,
        priority_exponent=sampler_cfg["priority_exponent"],
        allocation=sampler_cfg["allocation"],
    )


def _all_poses(env: GridWorld):
    """Every walkable pose of a static layout as GridObs, for sum_q scans."""
    layout = env._builder(np.random.default_rng(0))
    obs = []
    for y in range(layout.height):
        for x in range(layout.width):
            kind = layout.kind_at(x, y)
            if kind in ("empty", "gap", "goal", "spike", "lava"):
                for theta in range(4):
                    obs.append(
                        GridObs(
                            x=x, y=y, theta=theta, cell=kind, carrying=None,
                            ego=_ego_view(layout.kind_at, x, y, theta),
                        )
                    )
    return obs


class TabularAgent:
    """Online/target Q tables over pose ids with Polyak target refresh."""

    def __init__(self, env: GridWorld, learner_cfg: dict, rng: np.random.Generator):
        _, poses, index = tabularize(env, gamma=learner_cfg["gamma"],
                                     normalize_rewards=False)
        self.index = index
        self.q_online = np.zeros((len(poses), env.num_actions))
        self.q_target = np.zeros_like(self.q_online)
        self.alpha = learner_cfg["alpha"]
        self.gamma = learner_cfg["gamma"]
        self.refresh = learner_cfg["refresh_rate"]

    def _sid(self, obs: GridObs) -> int:
        return self.index[(obs.x, obs.y, obs.theta)]

    def act(self, obs: GridObs, epsilon: float, rng: np.random.Generator) -> int:
        return epsilon_greedy(self.q_online, self._sid(obs), epsilon, rng)

    def update(self, batch: SampledBatch):
        abs_td = np.empty(len(batch))
        sq = 0.0
        for i, s in enumerate(batch):
            t = s.transition
            conv = replace(t, state=self._sid(t.state), next_state=self._sid(t.next_state))
            delta = td_error(self.q_online, self.q_target, conv, self.gamma)
            self.q_online[conv.state, conv.action] += self.alpha * s.weight * delta
            abs_td[i] = abs(delta)
            sq += delta * delta
        self.q_target += self.refresh * (self.q_online - self.q_target)
        return sq / len(batch), abs_td

    def finite(self) -> bool:
        return bool(np.isfinite(self.q_online).all())

    def sum_q(self) -> Optional[float]:
        return float(self.q_target.sum())


class DDQNAgent:
    """Double-DQN on encoded observations; sums target Q over static worlds."""

    def __init__(self, env: GridWorld, learner_cfg: dict, rng: np.random.Generator):
        self.env = env
        self.net = MLPValueNet(
            encoded_size(), env.num_actions,
            hidden=tuple(learner_cfg["hidden_sizes"]), rng=rng,
        )
        self.gamma = learner_cfg["gamma"]
        self.lr = learner_cfg["learning_rate"]
        self.refresh = learner_cfg["refresh_rate"]
        # Observations recur constantly in replay; encoding one is pure
        # python and dominates update cost, so memoize per agent.  Callers
        # only ever stack or copy the returned arrays.
        cache: dict = {}
        base_encode = env.encode

        def cached_encode(obs):
            arr = cache.get(obs)
            if arr is None:
                arr = base_encode(obs)
                cache[obs] = arr
            return arr

        self._encode = cached_encode
        self._scan = None
        if env.name in ("three_room", "two_room"):
            if env.layout is None:
                env.reset()  # the scan needs a materialized layout
            poses = _all_poses(env)
            self._scan = np.stack([env.encode(o) for o in poses]).astype(np.float64)

    def act(self, obs: GridObs, epsilon: float, rng: np.random.Generator) -> int:
        q = self.net.forward(self._encode(obs)[None, :].astype(np.float64))
        return epsilon_greedy(q[0], None, epsilon, rng)

    def update(self, batch: SampledBatch):
        loss, abs_td = ddqn_step(self.net, batch, self.gamma, self.lr,
                                 encoder=self._encode)
        refresh_target(self.net, self.refresh)
        return loss, abs_td

    def finite(self) -> bool:
        return bool(np.isfinite(self.net.get_flat_params()).all())

    def sum_q(self) -> Optional[float]:
        if self._scan is None:
            return None
        return float(self.net.forward_target(self._scan).sum())


def _make_agent(env: GridWorld, learner_cfg: dict, rng: np.random.Generator):
    if learner_cfg["kind"] == "tabular":
        return TabularAgent(env, learner_cfg, rng)
    return DDQNAgent(env, learner_cfg, rng)


def _make_eval_env(cfg: dict, seed: int) -> GridWorld:
    # A pinned layout must be the same instance the training seed plays on,
    # so rebuild it from the training salt; evaluation is never shaped.
    salt = _SALT_ENV if cfg["env"].get("fixed_layout") else _SALT_EVAL_ENV
    base = make_env(cfg["env"], [seed, salt])
    start = cfg["schedule"]["eval_start"]
    if start is not None:
        return shifted_eval(base, tuple(start), seed=[seed, _SALT_EVAL_ENV, 1])
    return base


def _evaluate(agent, eval_env: GridWorld, episodes: int, epsilon: float,
              rng: np.random.Generator):
    returns = []
    successes = 0
    for _ in range(episodes):
        obs = eval_env.reset()
        total = 0.0
        while True:
            a = agent.act(obs, epsilon, rng)
            obs, r, done = eval_env.step(a)
            total += r
            if done:
                break
        returns.append(total)
        if eval_env.terminated and r > 0:
            successes += 1
    return float(np.mean(returns)), successes / episodes


def metric_columns(cfg: dict) -> list[str]:
    cols = [
        "run_id", "seed", "epoch", "status",
        "episodic_return", "eval_return", "eval_success", "sum_q",
    ]
    for i in range(len(cfg["sampler"]["events"]) + 1):
        cols += [f"table{i}_size", f"table{i}_inserts"]
    if cfg["env"]["name"] == "randomized_skill":
        cols += [f"return_{s}" for s in SKILL_SCENARIOS]
    cols.append("wall_time_s")
    return cols


def _fmt(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def run_seed(cfg: dict, seed: int) -> tuple[list[list[str]], str]:
    """Train one seed; returns (csv rows, final status)."""
    sched = cfg["schedule"]
    learner_cfg = cfg["learner"]
    sampler_cfg = cfg["sampler"]
    batch_size = learner_cfg["batch_size"]
    epsilon = learner_cfg["epsilon"]
    skill_env = cfg["env"]["name"] == "randomized_skill"

    env = make_env(cfg["env"], [seed, _SALT_ENV])
    buffer = build_buffer(sampler_cfg)
    agent = _make_agent(env, learner_cfg, np.random.default_rng([seed, _SALT_NET]))
    shaping = cfg["env"].get("shaping", "none")
    if shaping != "none":
        # Shaping alters training rewards only; evaluation stays unshaped.
        if env.layout is None:
            env.reset()
        phi = gap_potential if shaping == "gap" else goal_distance_potential(env)
        env = PotentialShaper(env, phi, learner_cfg["gamma"])
    act_rng = np.random.default_rng([seed, _SALT_ACT])
    buf_rng = np.random.default_rng([seed, _SALT_BUF])
    eval_env = _make_eval_env(cfg, seed)
    eval_rng = np.random.default_rng([seed, _SALT_EVAL_ACT])

    reverse_sweep = sampler_cfg["reverse_sweep"]
    reverse_stream: deque = deque()
    prioritized = sampler_cfg["kind"] in ("per", "sset-per")

    obs = env.reset()
    scenario = env.layout.meta.get("scenario")
    episode_id = 0
    step_index = 0
    episode: list[Transition] = []
    cur_return = 0.0

    rows: list[list[str]] = []
    status = "ok"
    for epoch in range(sched["epochs"]):
        t0 = time.perf_counter()
        ep_returns: list[float] = []
        scenario_returns: dict[str, list[float]] = {s: [] for s in SKILL_SCENARIOS}

        for _ in range(sched["steps_per_epoch"]):
            a = agent.act(obs, epsilon, act_rng)
            nxt, r, done = env.step(a)
            t = Transition(
                state=obs, action=a, reward=r, next_state=nxt,
                done=env.terminated, episode_id=episode_id, step_index=step_index,
            )
            buffer.insert(t)
            episode.append(t)
            cur_return += r
            step_index += 1
            if done:
                buffer.end_episode()
                ep_returns.append(cur_return)
                if skill_env and scenario in scenario_returns:
                    scenario_returns[scenario].append(cur_return)
                if reverse_sweep:
                    reverse_stream.extend(reversed(episode))
                episode = []
                cur_return = 0.0
                episode_id += 1
                step_index = 0
                obs = env.reset()
                scenario = env.layout.meta.get("scenario")
            else:
                obs = nxt

        try:
            for _ in range(sched["updates_per_epoch"]):
                if reverse_sweep:
                    if len(reverse_stream) < batch_size:
                        continue
                    picked = [reverse_stream.popleft() for _ in range(batch_size)]
                    reverse_stream.extend(picked)
                    batch = SampledBatch(
                        tuple(BatchSample(t, 0, 1.0, (0, 0)) for t in picked)
                    )
                else:
                    if buffer.size(0) < batch_size:
                        continue
                    batch = buffer.sample_batch(batch_size, buf_rng)
                _, abs_td = agent.update(batch)
                if prioritized:
                    for s, td in zip(batch, abs_td):
                        buffer.update_priority(s.leaf_id, float(td))
            if not agent.finite():
                raise RuntimeError("non-finite values in the value function")
        except RuntimeError:
            status = "failed"

        eval_return: Optional[float] = None
        eval_success: Optional[float] = None
        last_epoch = epoch == sched["epochs"] - 1
        if status == "ok" and ((epoch + 1) % sched["eval_cadence"] == 0 or last_epoch):
            eval_return, eval_success = _evaluate(
                agent, eval_env, sched["eval_episodes"], sched["eval_epsilon"], eval_rng
            )

        row = [
            cfg["run_id"], str(seed), str(epoch), status,
            _fmt(float(np.mean(ep_returns)) if ep_returns else None),
            _fmt(eval_return),
            _fmt(eval_success),
            _fmt(agent.sum_q() if status == "ok" else None),
        ]
        for stats in buffer.table_stats():
            row += [str(stats.size), str(stats.inserts)]
        if skill_env:
            for s in SKILL_SCENARIOS:
                vals = scenario_returns[s]
                row.append(_fmt(float(np.mean(vals)) if vals else None))
        row.append(_fmt(time.perf_counter() - t0))
        rows.append(row)
        if status != "ok":
            break
    return rows, status


def _seed_task(payload: tuple) -> tuple[int, list[list[str]], str]:
    cfg, seed = payload
    rows, status = run_seed(cfg, seed)
    return seed, rows, status


def run_experiment(cfg: dict, out_dir, workers: Optional[int] = None) -> dict:
    """Execute all seeds of a resolved config; writes metrics.csv + echo.

    Returns {"metrics": path, "statuses": {seed: status}}.  A seed whose
    loss goes non-finite is marked failed in its rows; the others continue.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")

    seeds = cfg["seeds"]
    if workers is None:
        workers = min(len(seeds), os.cpu_count() or 1)
    payloads = [(cfg, s) for s in seeds]
    if workers <= 1 or len(seeds) == 1:
        results = [_seed_task(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_seed_task, payloads))

    results.sort(key=lambda r: r[0])
    all_rows = [row for _, rows, _ in results for row in rows]
    path = write_metrics(out / "metrics.csv", metric_columns(cfg), all_rows)
    return {
        "metrics": path,
        "statuses": {seed: status for seed, _, status in results},
    }


def sweep(cfg: dict, axis: str, values: list, out_dir,
          workers: Optional[int] = None) -> dict:
    """One run per axis value under out_dir, plus a final-epoch summary CSV.

    Values are substituted into the resolved config, so defaults derived
    from other fields (event kappa, d_min) are not recomputed.
    """
    from .config import resolve_config, set_by_path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs = []
    for value in values:
        variant = set_by_path(cfg, axis, value)
        variant["run_id"] = f"{cfg['run_id']}.{axis}={value}"
        variant = resolve_config(variant)
        sub = out / f"{axis}={value}"
        result = run_experiment(variant, sub, workers)
        runs.append((value, result))

    summary_rows = []
    for value, result in runs:
        _, rows = read_metrics(result["metrics"])
        final_epoch = max(int(r["epoch"]) for r in rows)
        finals = [r for r in rows if int(r["epoch"]) == final_epoch]
        agg = summarize_rows(finals)[0]
        summary_rows.append({
            "axis": axis, "value": value, "final_epoch": final_epoch,
            "seeds": agg["seeds"],
            "eval_return_mean": agg["eval_return_mean"],
            "eval_return_stderr": agg["eval_return_stderr"],
            "eval_success_mean": agg["eval_success_mean"],
            "episodic_return_mean": agg["episodic_return_mean"],
            "sum_q_mean": agg["sum_q_mean"],
        })
    summary_path = out / "sweep_summary.csv"
    cols = list(summary_rows[0])
    with open(summary_path, "w", newline="") as fh:
        fh.write(SCHEMA_LINE + "\n")
        writer = csv.writer(fh)
        writer.writerow(cols)
        for r in summary_rows:
            writer.writerow([_fmt(r[c]) if isinstance(r[c], float) else r[c] for c in cols])
    return {"summary": summary_path, "runs": [r for _, r in runs]}


FORGETTING_CADENCE = 20
FORGETTING_START = (1, 4, 1)


def forgetting_eval(cfg: dict, out_dir, workers: Optional[int] = None) -> dict:
    """Skill-retention protocol: shifted-start checkpoints every 20 epochs.

    Runs the config with evaluation forced to the shifted start, then
    reduces the metrics to one row per checkpoint with the success count
    summed across seeds.
    """
    cfg = copy.deepcopy(cfg)
    cfg["schedule"]["eval_cadence"] = FORGETTING_CADENCE
    if cfg["schedule"]["eval_start"] is None:
        cfg["schedule"]["eval_start"] = list(FORGETTING_START)
    result = run_experiment(cfg, out_dir, workers)

    _, rows = read_metrics(result["metrics"])
    episodes = cfg["schedule"]["eval_episodes"]
    checkpoints: dict[int, list[dict]] = {}
    for r in rows:
        if r["eval_success"] != "":
            checkpoints.setdefault(int(r["epoch"]), []).append(r)
    out_rows = []
    for epoch in sorted(checkpoints):
        bucket = checkpoints[epoch]
        count = sum(int(round(float(r["eval_success"]) * episodes)) for r in bucket)
        mean_return = float(np.mean([float(r["eval_return"]) for r in bucket]))
        out_rows.append([
            str(epoch), str(len(bucket)), str(episodes), str(count),
            _fmt(count / (len(bucket) * episodes)), _fmt(mean_return),
        ])
    path = Path(out_dir) / "forgetting.csv"
    write_metrics(
        path,
        ["epoch", "seeds", "eval_episodes", "success_count", "success_rate",
         "eval_return_mean"],
        out_rows,
    )
    out = dict(result)
    out["forgetting"] = path
    return out
