"""Training orchestration: episodes, metric records, run logs, checkpoints.

A run produces one EpisodeRecord per episode (return, rolling average,
epsilon, jam/switch counts) — the series the operator charts live against
the solved threshold. Records are stored already rounded to two decimals so
the persisted line format round-trips exactly; given the same config and
seed the record lines are byte-identical across processes.
"""

from __future__ import annotations

import os
import time
import uuid
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import agent as agent_mod
from .agent import AgentHyper, DdqnAgent, EpsilonSchedule, Transition
from .env import ConfigError, EnvConfig, JammerSpec, JammedChannelEnv
from .fmtutil import fmt2, format_pairs, parse_pairs, round2

RUN_STATUSES = ("running", "completed", "solved", "stopped", "failed")

_META_KEYS = ("run_id", "status", "created_at_ms", "failure_reason")


@dataclass(frozen=True)
class TrainConfig:
    episodes: int = 200
    env: EnvConfig = field(default_factory=EnvConfig)
    jammer: JammerSpec = field(default_factory=JammerSpec)
    hyper: AgentHyper = field(default_factory=AgentHyper)
    epsilon_start: float = 0.93
    epsilon_end: float = 0.08
    epsilon_decay: str = "linear_per_episode"
    epsilon_horizon: int = 0  # 0 = span the configured episodes (or steps)
    solved_threshold: float = 90.0
    rolling_window: int = 10
    seed: int = 0
    checkpoint_every: int = 0  # 0 = final checkpoint only
    stop_on_solved: bool = True
    output_dir: str = ""  # empty = do not persist

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.episodes, int) or self.episodes < 1:
            raise ConfigError("episodes", "must be an integer >= 1")
        if not isinstance(self.rolling_window, int) or self.rolling_window < 1:
            raise ConfigError("rolling_window", "must be an integer >= 1")
        if self.rolling_window > self.episodes:
            raise ConfigError("rolling_window", "must be <= episodes")
        max_return = float(self.env.steps_per_episode)  # utility is capped at 1 per step
        if self.solved_threshold > max_return:
            raise ConfigError(
                "solved_threshold", f"must be <= max attainable return {max_return}"
            )
        if self.checkpoint_every < 0:
            raise ConfigError("checkpoint_every", "must be >= 0")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed", "must be a nonnegative integer")
        if self.epsilon_horizon < 0:
            raise ConfigError("epsilon_horizon", "must be >= 0 (0 = auto)")
        try:
            self.schedule()
        except ValueError as exc:
            raise ConfigError(str(exc).split()[0], str(exc)) from exc
        self.jammer.check_against(self.env)

    def schedule(self) -> EpsilonSchedule:
        horizon = self.epsilon_horizon
        if horizon == 0:
            horizon = self.episodes
            if self.epsilon_decay == "exponential_per_step":
                horizon = self.episodes * self.env.steps_per_episode
        return EpsilonSchedule(self.epsilon_start, self.epsilon_end, self.epsilon_decay, horizon)

    def to_pairs(self) -> dict[str, str]:
        """Flat canonical key=value mapping (config files and run-log headers)."""
        e, j, h = self.env, self.jammer, self.hyper
        return {
            "episodes": str(self.episodes),
            "num_channels": str(e.num_channels),
            "steps_per_episode": str(e.steps_per_episode),
            "switching_cost": repr(e.switching_cost),
            "jammer_power": repr(e.jammer_power),
            "noise_floor": repr(e.noise_floor),
            "adjacent_leakage": repr(e.adjacent_leakage),
            "utility_mode": e.utility_mode,
            "env_seed": str(e.rng_seed),
            "jammer_kind": j.kind,
            "jammer_channel": str(j.channel),
            "jammer_start": str(j.start),
            "jammer_stride": str(j.stride),
            "jammer_direction": str(j.direction),
            "jammer_stay_probability": repr(j.stay_probability),
            "gamma": repr(h.gamma),
            "batch_size": str(h.batch_size),
            "replay_capacity": str(h.replay_capacity),
            "learning_rate": repr(h.learning_rate),
            "target_sync_interval": str(h.target_sync_interval),
            "grad_clip_norm": repr(h.grad_clip_norm),
            "epsilon_start": repr(self.epsilon_start),
            "epsilon_end": repr(self.epsilon_end),
            "epsilon_decay": self.epsilon_decay,
            "epsilon_horizon": str(self.epsilon_horizon),
            "solved_threshold": repr(self.solved_threshold),
            "rolling_window": str(self.rolling_window),
            "seed": str(self.seed),
            "checkpoint_every": str(self.checkpoint_every),
            "stop_on_solved": "true" if self.stop_on_solved else "false",
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_pairs(cls, pairs: dict[str, str]) -> "TrainConfig":
        """Build from flat keys; unknown keys are rejected, missing ones default."""
        known = cls().to_pairs().keys()
        unknown = sorted(set(pairs) - set(known))
        if unknown:
            raise ConfigError(unknown[0], "unknown configuration key")

        def geti(key: str, default: int) -> int:
            try:
                return int(pairs[key]) if key in pairs else default
            except ValueError as exc:
                raise ConfigError(key, f"not an integer: {pairs[key]!r}") from exc

        def getf(key: str, default: float) -> float:
            try:
                return float(pairs[key]) if key in pairs else default
            except ValueError as exc:
                raise ConfigError(key, f"not a number: {pairs[key]!r}") from exc

        def getb(key: str, default: bool) -> bool:
            if key not in pairs:
                return default
            if pairs[key] not in ("true", "false"):
                raise ConfigError(key, "must be true or false")
            return pairs[key] == "true"

        env = EnvConfig(
            num_channels=geti("num_channels", 10),
            steps_per_episode=geti("steps_per_episode", 100),
            switching_cost=getf("switching_cost", 0.1),
            jammer_power=getf("jammer_power", 1.0),
            noise_floor=getf("noise_floor", 0.01) if "noise_floor" in pairs else None,
            adjacent_leakage=getf("adjacent_leakage", 0.0),
            utility_mode=pairs.get("utility_mode", "binary"),
            rng_seed=geti("env_seed", 0),
        )
        jammer = JammerSpec(
            kind=pairs.get("jammer_kind", "sweep"),
            channel=geti("jammer_channel", 0),
            start=geti("jammer_start", 0),
            stride=geti("jammer_stride", 1),
            direction=geti("jammer_direction", 1),
            stay_probability=getf("jammer_stay_probability", 0.9),
        )
        try:
            hyper = AgentHyper(
                gamma=getf("gamma", 0.99),
                batch_size=geti("batch_size", 32),
                replay_capacity=geti("replay_capacity", 10_000),
                learning_rate=getf("learning_rate", 1e-3),
                target_sync_interval=geti("target_sync_interval", 100),
                grad_clip_norm=getf("grad_clip_norm", 0.0),
            )
            return cls(
                episodes=geti("episodes", 200),
                env=env,
                jammer=jammer,
                hyper=hyper,
                epsilon_start=getf("epsilon_start", 0.93),
                epsilon_end=getf("epsilon_end", 0.08),
                epsilon_decay=pairs.get("epsilon_decay", "linear_per_episode"),
                epsilon_horizon=geti("epsilon_horizon", 0),
                solved_threshold=getf("solved_threshold", 90.0),
                rolling_window=geti("rolling_window", 10),
                seed=geti("seed", 0),
                checkpoint_every=geti("checkpoint_every", 0),
                stop_on_solved=getb("stop_on_solved", True),
                output_dir=pairs.get("output_dir", ""),
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            # AgentHyper/EpsilonSchedule messages lead with the field name.
            raise ConfigError(str(exc).split()[0], str(exc)) from exc


@dataclass(frozen=True)
class EpisodeRecord:
    """One episode's telemetry; real-valued fields are stored at 2 decimals.

    wall_time_ms is persisted as 0: record lines are part of the
    bit-reproducibility contract and measured time cannot be.
    """

    index: int
    episode_return: float
    rolling_average: float
    epsilon: float
    steps: int
    jam_hits: int
    switches: int
    wall_time_ms: int = 0


@dataclass
class RunLog:
    run_id: str
    config: TrainConfig
    records: list[EpisodeRecord]
    status: str = "running"
    created_at_ms: int = 0
    failure_reason: str = ""


def new_run_id() -> str:
    return f"run-{time.strftime('%Y%m%d%H%M%S')}-{uuid.uuid4().hex[:8]}"


def rolling_average(returns: list[float], window: int) -> float:
    """Mean of the last min(len, window) values."""
    if not returns:
        raise ValueError("rolling_average of an empty sequence")
    if window < 1:
        raise ValueError("window must be >= 1")
    tail = returns[-window:]
    return sum(tail) / len(tail)


def format_record_line(r: EpisodeRecord) -> str:
    return (
        f"{r.index},{fmt2(r.episode_return)},{fmt2(r.rolling_average)},{fmt2(r.epsilon)},"
        f"{r.steps},{r.jam_hits},{r.switches},{r.wall_time_ms}"
    )


def parse_record_line(line: str) -> EpisodeRecord:
    parts = line.split(",")
    if len(parts) != 8:
        raise ValueError(f"expected 8 comma-separated fields, got {len(parts)}")
    return EpisodeRecord(
        index=int(parts[0]),
        episode_return=float(parts[1]),
        rolling_average=float(parts[2]),
        epsilon=float(parts[3]),
        steps=int(parts[4]),
        jam_hits=int(parts[5]),
        switches=int(parts[6]),
        wall_time_ms=int(parts[7]),
    )


def run_log_header(log: RunLog) -> str:
    pairs = log.config.to_pairs()
    pairs["run_id"] = log.run_id
    pairs["status"] = log.status
    pairs["created_at_ms"] = str(log.created_at_ms)
    pairs["failure_reason"] = log.failure_reason
    return format_pairs(pairs)


def save_run_log(log: RunLog, path: str) -> None:
    """Write header + one record line per episode, atomically."""
    lines = [run_log_header(log)]
    lines.extend(format_record_line(r) for r in log.records)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


def load_run_log(path: str) -> RunLog:
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines:
        raise ValueError(f"{path}:1: empty run log")
    try:
        pairs = parse_pairs(lines[0])
    except ValueError as exc:
        raise ValueError(f"{path}:1: {exc}") from exc
    meta = {k: pairs.pop(k, "") for k in _META_KEYS}
    if meta["status"] not in RUN_STATUSES:
        raise ValueError(f"{path}:1: unknown status {meta['status']!r}")
    try:
        config = TrainConfig.from_pairs(pairs)
    except ConfigError as exc:
        raise ValueError(f"{path}:1: {exc}") from exc
    records = []
    for n, line in enumerate(lines[1:], start=2):
        try:
            rec = parse_record_line(line)
        except ValueError as exc:
            raise ValueError(f"{path}:{n}: {exc}") from exc
        if rec.index != n - 2:
            raise ValueError(f"{path}:{n}: record index {rec.index} not contiguous")
        records.append(rec)
    return RunLog(
        run_id=meta["run_id"],
        config=config,
        records=records,
        status=meta["status"],
        created_at_ms=int(meta["created_at_ms"] or 0),
        failure_reason=meta["failure_reason"],
    )


def build_agent(config: TrainConfig) -> DdqnAgent:
    return DdqnAgent(
        config.env.num_channels,
        hyper=config.hyper,
        schedule=config.schedule(),
        seed=config.seed,
    )


def train(
    config: TrainConfig,
    progress_sink: Optional[Callable[[EpisodeRecord], None]] = None,
    should_stop: Optional[Callable[[], bool]] = None,
    agent: Optional[DdqnAgent] = None,
    run_id: Optional[str] = None,
) -> RunLog:
    """Run the full act/step/remember/learn loop and return the RunLog.

    One learn() call per environment step. Emits each EpisodeRecord to
    ``progress_sink`` as it completes; stops early with status "solved" when
    the rolling average reaches the threshold (unless stop_on_solved is off)
    and cooperatively at episode boundaries via ``should_stop``. Fully
    deterministic for a given (config, seed): the loop is single-threaded
    and agent/env each draw from one seeded generator.
    """
    config.validate()
    if agent is None:
        agent = build_agent(config)
    elif agent.num_channels != config.env.num_channels:
        raise ValueError("provided agent does not match env num_channels")
    env = JammedChannelEnv(config.env, config.jammer)
    schedule = agent.schedule
    per_episode = config.epsilon_decay == "linear_per_episode"

    log = RunLog(
        run_id=run_id or new_run_id(),
        config=config,
        records=[],
        status="running",
        created_at_ms=int(time.time() * 1000),
    )
    returns: list[float] = []
    stopped = False
    global_step = 0
    for episode in range(config.episodes):
        if should_stop is not None and should_stop():
            stopped = True
            break
        obs = env.reset()
        ep_return = 0.0
        jam_hits = 0
        switches = 0
        epsilon = schedule.value(episode if per_episode else global_step)
        for _ in range(config.env.steps_per_episode):
            action = agent.act(obs, episode if per_episode else global_step)
            outcome = env.step(action)
            agent.remember(
                Transition(obs, action, outcome.reward, outcome.observation, outcome.done)
            )
            agent.learn()
            ep_return += outcome.reward
            jam_hits += outcome.info["jammed"]
            switches += outcome.info["switched"]
            obs = outcome.observation
            global_step += 1
        returns.append(round2(ep_return))
        record = EpisodeRecord(
            index=episode,
            episode_return=returns[-1],
            rolling_average=round2(rolling_average(returns, config.rolling_window)),
            epsilon=round2(epsilon),
            steps=config.env.steps_per_episode,
            jam_hits=jam_hits,
            switches=switches,
            wall_time_ms=0,
        )
        log.records.append(record)
        if progress_sink is not None:
            progress_sink(record)
        if config.checkpoint_every > 0 and (episode + 1) % config.checkpoint_every == 0:
            _persist_checkpoint(agent, config.output_dir, f"checkpoint-ep{episode + 1}.txt", log)
        if (
            config.stop_on_solved
            and record.rolling_average >= config.solved_threshold
        ):
            break

    if stopped:
        log.status = "stopped"
    elif log.records and log.records[-1].rolling_average >= config.solved_threshold:
        log.status = "solved"
    else:
        log.status = "completed"
    if log.failure_reason:
        log.status = "failed"

    if config.output_dir:
        try:
            os.makedirs(config.output_dir, exist_ok=True)
            agent_mod.save_checkpoint(agent, os.path.join(config.output_dir, "checkpoint.txt"))
            save_run_log(log, os.path.join(config.output_dir, "run.log"))
        except OSError as exc:
            log.status = "failed"
            log.failure_reason = f"I/O error: {exc}"
            try:
                save_run_log(log, os.path.join(config.output_dir, "run.log"))
            except OSError:
                pass
    return log


def _persist_checkpoint(agent: DdqnAgent, output_dir: str, name: str, log: RunLog) -> None:
    if not output_dir:
        return
    try:
        os.makedirs(output_dir, exist_ok=True)
        agent_mod.save_checkpoint(agent, os.path.join(output_dir, name))
    except OSError as exc:
        log.failure_reason = f"I/O error: {exc}"


def evaluate(
    checkpoint_path: str,
    env_config: EnvConfig,
    jammer: JammerSpec,
    episodes: int,
) -> dict[str, float]:
    """Greedy-policy rollout statistics with learning disabled."""
    if episodes < 1:
        raise ValueError("empty evaluation: episodes must be >= 1")
    agent = agent_mod.load_checkpoint(checkpoint_path)
    if agent.num_channels != env_config.num_channels:
        raise ValueError(
            f"checkpoint is for {agent.num_channels} channels, env has {env_config.num_channels}"
        )
    env = JammedChannelEnv(env_config, jammer)
    ep_returns = []
    jam_hits = 0
    switches = 0
    total_steps = 0
    for _ in range(episodes):
        obs = env.reset()
        total = 0.0
        for _ in range(env_config.steps_per_episode):
            outcome = env.step(agent.greedy_policy(obs))
            total += outcome.reward
            jam_hits += outcome.info["jammed"]
            switches += outcome.info["switched"]
            obs = outcome.observation
            total_steps += 1
        ep_returns.append(total)
    arr = np.asarray(ep_returns)
    return {
        "mean_return": float(arr.mean()),
        "std": float(arr.std()),
        "jam_rate": jam_hits / total_steps,
        "switch_rate": switches / total_steps,
    }
