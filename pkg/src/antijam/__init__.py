"""DDQN anti-jamming channel selection with telemetry and operator reports."""

from .agent import AgentHyper, DdqnAgent, EpsilonSchedule, ReplayBuffer, Transition
from .env import ConfigError, EnvConfig, JammedChannelEnv, JammerSpec, StepOutcome
from .insights import InsightReport, LlmEndpointConfig, TrainingSummary
from .trainer import EpisodeRecord, RunLog, TrainConfig

__version__ = "0.1.0"

__all__ = [
    "AgentHyper",
    "ConfigError",
    "DdqnAgent",
    "EnvConfig",
    "EpisodeRecord",
    "EpsilonSchedule",
    "InsightReport",
    "JammedChannelEnv",
    "JammerSpec",
    "LlmEndpointConfig",
    "ReplayBuffer",
    "RunLog",
    "StepOutcome",
    "TrainConfig",
    "TrainingSummary",
    "Transition",
    "__version__",
]
