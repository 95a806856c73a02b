"""Jammed multi-channel radio environment.

A transmitter picks one of ``num_channels`` channels each slot while a jammer
occupies one channel per slot. The agent observes the received power on every
channel (jammer power, adjacent-channel leakage, and additive noise,
normalized to [0, 1]). Reward is 0 whenever the chosen channel matches the
jammer's channel; otherwise it is the channel utility minus a switching cost
incurred when the action differs from the previous one.

Timing: the agent and jammer commit to the same slot simultaneously, so the
reward uses the jammer channel in effect during that slot. The observation
returned by ``step`` already shows the jammer's next position, which makes
predictable jammers (fixed, sweep) learnable from the power vector alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

UTILITY_MODES = ("binary", "sinr")
JAMMER_KINDS = ("fixed", "sweep", "random_uniform", "markov")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class EnvConfig:
    """Environment parameters.

    Parameters
    ----------
    num_channels : int
        Number of selectable channels (>= 2).
    steps_per_episode : int
        Episode length T.
    switching_cost : float
        Reward penalty for changing channel between consecutive steps.
        Must stay below the maximum per-step utility (1.0), otherwise
        switching would never be rational.
    jammer_power : float
        Received power on the jammed channel, linear units (> 0).
    noise_floor : float
        Upper bound of the additive uniform noise per channel. Defaults to
        0.01 * jammer_power. Must be > 0 in sinr mode.
    adjacent_leakage : float
        Fraction of jammer power leaking into each directly adjacent
        channel, in [0, 1). No wraparound: channels 0 and N-1 only have one
        neighbour each.
    utility_mode : str
        "binary" (1 for any unjammed channel) or "sinr" (normalized log SINR
        using the deterministic interference on the chosen channel).
    rng_seed : int
        Seed for the environment's own generator (noise and jammer moves).
    """

    num_channels: int = 10
    steps_per_episode: int = 100
    switching_cost: float = 0.1
    jammer_power: float = 1.0
    noise_floor: Optional[float] = None
    adjacent_leakage: float = 0.0
    utility_mode: str = "binary"
    rng_seed: int = 0

    def __post_init__(self):
        if self.noise_floor is None:
            object.__setattr__(self, "noise_floor", 0.01 * float(self.jammer_power))
        self.validate()

    def validate(self) -> None:
        if not isinstance(self.num_channels, int) or self.num_channels < 2:
            raise ConfigError("num_channels", "must be an integer >= 2")
        if not isinstance(self.steps_per_episode, int) or self.steps_per_episode < 1:
            raise ConfigError("steps_per_episode", "must be an integer >= 1")
        if not math.isfinite(self.jammer_power) or self.jammer_power <= 0:
            raise ConfigError("jammer_power", "must be > 0")
        if not math.isfinite(self.noise_floor) or self.noise_floor < 0:
            raise ConfigError("noise_floor", "must be >= 0")
        if not (0.0 <= self.adjacent_leakage < 1.0):
            raise ConfigError("adjacent_leakage", "must be in [0, 1)")
        if self.utility_mode not in UTILITY_MODES:
            raise ConfigError("utility_mode", f"must be one of {UTILITY_MODES}")
        if self.utility_mode == "sinr" and self.noise_floor <= 0:
            raise ConfigError("noise_floor", "must be > 0 in sinr mode")
        max_utility = 1.0
        if not (0.0 <= self.switching_cost < max_utility):
            raise ConfigError(
                "switching_cost",
                f"must be in [0, {max_utility}) so that switching can pay off",
            )
        if not isinstance(self.rng_seed, int) or self.rng_seed < 0 or self.rng_seed >= 2**64:
            raise ConfigError("rng_seed", "must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class JammerSpec:
    """Jammer behaviour description (runtime state lives in the env).

    kind: "fixed" (stays on ``channel``), "sweep" (starts at ``start`` and
    moves ``stride`` channels per step in ``direction``), "random_uniform"
    (uniform channel each step), or "markov" (keeps its channel with
    ``stay_probability``, else jumps to a uniformly random other channel).
    """

    kind: str = "sweep"
    channel: int = 0
    start: int = 0
    stride: int = 1
    direction: int = 1
    stay_probability: float = 0.9

    def __post_init__(self):
        if self.kind not in JAMMER_KINDS:
            raise ConfigError("jammer_kind", f"must be one of {JAMMER_KINDS}")
        if not isinstance(self.channel, int) or self.channel < 0:
            raise ConfigError("jammer_channel", "must be a channel index >= 0")
        if not isinstance(self.start, int) or self.start < 0:
            raise ConfigError("jammer_start", "must be a channel index >= 0")
        if not isinstance(self.stride, int) or self.stride < 1:
            raise ConfigError("jammer_stride", "must be an integer >= 1")
        if self.direction not in (1, -1):
            raise ConfigError("jammer_direction", "must be 1 or -1")
        if not (0.0 <= self.stay_probability <= 1.0):
            raise ConfigError("jammer_stay_probability", "must be in [0, 1]")

    def check_against(self, config: EnvConfig) -> None:
        if self.kind == "fixed" and self.channel >= config.num_channels:
            raise ConfigError("jammer_channel", "out of channel range")
        if self.kind == "sweep" and self.start >= config.num_channels:
            raise ConfigError("jammer_start", "out of channel range")


class StepOutcome(NamedTuple):
    observation: np.ndarray
    reward: float
    done: bool
    info: dict


def utility(f_t: int, f_j: int, config: EnvConfig) -> float:
    """Per-step utility of transmitting on ``f_t`` while the jammer sits on ``f_j``.

    binary: 1.0 for any channel. sinr: normalized spectral efficiency
    log2(1 + S/(I + n0)) / log2(1 + S/n0) with S = jammer_power and I the
    deterministic interference (jammer + leakage) on ``f_t``. Deterministic
    by construction so the reward is a pure function of its arguments.
    """
    if config.utility_mode == "binary":
        return 1.0
    s = config.jammer_power
    n0 = config.noise_floor
    interference = 0.0
    if f_t == f_j:
        interference = config.jammer_power
    elif abs(f_t - f_j) == 1:
        interference = config.adjacent_leakage * config.jammer_power
    return math.log2(1.0 + s / (interference + n0)) / math.log2(1.0 + s / n0)


def compute_reward(
    f_t: int,
    f_j: int,
    action: int,
    prev_action: Optional[int],
    config: EnvConfig,
) -> float:
    """Reward for one slot: 0 exactly on a jam hit, else utility minus switching cost.

    ``prev_action`` is None only on the first step of an episode, in which
    case no switching cost applies.
    """
    for name, value in (("f_t", f_t), ("f_j", f_j), ("action", action)):
        if not 0 <= value < config.num_channels:
            raise ValueError(f"{name}={value} out of range [0, {config.num_channels})")
    if prev_action is not None and not 0 <= prev_action < config.num_channels:
        raise ValueError(f"prev_action={prev_action} out of range [0, {config.num_channels})")
    if f_t == f_j:
        return 0.0
    switched = prev_action is not None and action != prev_action
    return utility(f_t, f_j, config) - (config.switching_cost if switched else 0.0)


def received_powers(
    jammer_channel: int,
    config: EnvConfig,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Raw per-channel received power: jammer + single-neighbour leakage + noise.

    Noise is additive uniform in [0, noise_floor] per channel, drawn from
    ``rng`` (all zeros when ``rng`` is None). Adjacency is linear, no
    wraparound.
    """
    if not 0 <= jammer_channel < config.num_channels:
        raise ValueError(f"jammer_channel={jammer_channel} out of range")
    powers = np.zeros(config.num_channels, dtype=np.float64)
    powers[jammer_channel] = config.jammer_power
    leak = config.adjacent_leakage * config.jammer_power
    if jammer_channel > 0:
        powers[jammer_channel - 1] += leak
    if jammer_channel < config.num_channels - 1:
        powers[jammer_channel + 1] += leak
    if rng is not None and config.noise_floor > 0:
        powers += rng.uniform(0.0, config.noise_floor, config.num_channels)
    return powers


def normalize_powers(powers: np.ndarray, config: EnvConfig) -> np.ndarray:
    """Scale raw powers by (jammer_power + noise_floor) so entries land in [0, 1]."""
    return powers / (config.jammer_power + config.noise_floor)


class JammedChannelEnv:
    """Episodic environment over ``EnvConfig`` and a ``JammerSpec``.

    All randomness (noise draws, random/markov jammer moves) comes from one
    generator seeded with ``config.rng_seed``; identical config + spec +
    action sequence reproduces the trajectory bit for bit. One instance is
    single-threaded; independent instances do not share state.
    """

    def __init__(self, config: EnvConfig, jammer: JammerSpec):
        config.validate()
        jammer.check_against(config)
        self.config = config
        self.jammer = jammer
        self._rng = np.random.default_rng(config.rng_seed)
        self._jammer_channel: Optional[int] = None
        self._prev_action: Optional[int] = None
        self._t = 0
        self._done = True

    def _initial_jammer_channel(self) -> int:
        kind = self.jammer.kind
        if kind == "fixed":
            return self.jammer.channel
        if kind == "sweep":
            return self.jammer.start
        return int(self._rng.integers(self.config.num_channels))

    def _advance_jammer(self) -> None:
        kind = self.jammer.kind
        n = self.config.num_channels
        if kind == "fixed":
            return
        if kind == "sweep":
            move = self.jammer.stride * self.jammer.direction
            self._jammer_channel = (self._jammer_channel + move) % n
        elif kind == "random_uniform":
            self._jammer_channel = int(self._rng.integers(n))
        else:  # markov
            if self._rng.random() >= self.jammer.stay_probability:
                hop = int(self._rng.integers(n - 1))
                self._jammer_channel = hop if hop < self._jammer_channel else hop + 1

    def _observe(self) -> np.ndarray:
        raw = received_powers(self._jammer_channel, self.config, self._rng)
        return normalize_powers(raw, self.config)

    @property
    def jammer_channel(self) -> Optional[int]:
        return self._jammer_channel

    def reset(self) -> np.ndarray:
        """Start a new episode; returns the observation for t=0."""
        self._jammer_channel = self._initial_jammer_channel()
        self._prev_action = None
        self._t = 0
        self._done = False
        return self._observe()

    def step(self, action: int) -> StepOutcome:
        """Advance one slot with the chosen channel.

        The reward uses the jammer channel in effect during this slot; the
        returned observation reflects the jammer's next position.
        """
        if self._done:
            raise RuntimeError("step() called on a finished episode; call reset()")
        if not isinstance(action, (int, np.integer)) or not 0 <= action < self.config.num_channels:
            raise ValueError(
                f"action={action} out of range [0, {self.config.num_channels})"
            )
        action = int(action)
        f_j = self._jammer_channel
        reward = compute_reward(action, f_j, action, self._prev_action, self.config)
        jammed = action == f_j
        switched = self._prev_action is not None and action != self._prev_action
        self._advance_jammer()
        self._prev_action = action
        self._t += 1
        self._done = self._t >= self.config.steps_per_episode
        return StepOutcome(
            observation=self._observe(),
            reward=reward,
            done=self._done,
            info={"jammed": jammed, "switched": switched, "jammer_channel": f_j},
        )
