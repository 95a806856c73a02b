"""Training telemetry to human-readable reports.

Distills a RunLog into the statistics an operator cares about (reward and
rolling-average ranges, epsilon endpoints, solved threshold), renders them
into a fixed data prompt, and asks a configured completion endpoint to
narrate them. Without an endpoint — or when the call fails — a deterministic
offline narrative covers the same statistics, so report generation never
depends on network availability.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass

import requests

from .fmtutil import fmt2, round2
from .trainer import RunLog

PROMPT_TEMPLATE = (
    "The graph represents training rewards over {episode_count} episodes. "
    "The actual rewards range from {reward_min} to {reward_max} with an average "
    "of {reward_avg}. The rolling average values range from {rolling_min} to "
    "{rolling_max} with an average of {rolling_avg}. The epsilon values decrease "
    "from {epsilon_start} to {epsilon_end} over the episodes. The solved "
    "threshold is set at {solved_threshold}."
)

SYSTEM_PREAMBLE = (
    "You are a network operations analyst. Explain the following DRL training "
    "summary for a human operator, noting strengths and potential refinements."
)


class InsightError(Exception):
    """Base for insight-layer failures."""


class LlmConfigError(InsightError):
    """Endpoint misconfiguration (e.g. missing api key) detected before any call."""


class LlmTransportError(InsightError):
    """The endpoint was unreachable, timed out, or answered with an error."""


@dataclass(frozen=True)
class TrainingSummary:
    episode_count: int
    reward_min: float
    reward_max: float
    reward_avg: float
    rolling_min: float
    rolling_max: float
    rolling_avg: float
    epsilon_start: float
    epsilon_end: float
    solved_threshold: float

    def __post_init__(self):
        if not self.reward_min <= self.reward_avg <= self.reward_max:
            raise ValueError("reward stats must satisfy min <= avg <= max")
        if not self.rolling_min <= self.rolling_avg <= self.rolling_max:
            raise ValueError("rolling stats must satisfy min <= avg <= max")
        if self.epsilon_start < self.epsilon_end:
            raise ValueError("epsilon_start must be >= epsilon_end")


@dataclass(frozen=True)
class LlmEndpointConfig:
    """Where and how to reach a text-completion endpoint.

    The api key is read from the environment variable named by
    ``api_key_env`` at request time and never persisted or logged.
    """

    base_url: str
    model_name: str = "local-model"
    api_key_env: str = "ANTIJAM_LLM_API_KEY"
    timeout_ms: int = 30_000
    max_tokens: int = 512
    temperature: float = 0.2

    def __post_init__(self):
        if not self.base_url:
            raise ValueError("base_url must be set")
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be > 0")


@dataclass
class InsightReport:
    run_id: str
    prompt: str
    narrative: str
    source: str  # "llm" | "fallback"
    model_name: str = ""
    generated_at_ms: int = 0
    warning: str = ""

    def __post_init__(self):
        if not self.narrative:
            raise ValueError("narrative must be non-empty")
        if self.source not in ("llm", "fallback"):
            raise ValueError("source must be llm or fallback")
        if self.source == "llm" and not self.model_name:
            raise ValueError("llm reports must carry the model name")


def summarize(log: RunLog) -> TrainingSummary:
    """Statistics over all episode records, 2-decimal half-away-from-zero."""
    if not log.records:
        raise ValueError("cannot summarize an empty run log")
    returns = [r.episode_return for r in log.records]
    rollings = [r.rolling_average for r in log.records]
    return TrainingSummary(
        episode_count=len(log.records),
        reward_min=round2(min(returns)),
        reward_max=round2(max(returns)),
        reward_avg=round2(sum(returns) / len(returns)),
        rolling_min=round2(min(rollings)),
        rolling_max=round2(max(rollings)),
        rolling_avg=round2(sum(rollings) / len(rollings)),
        epsilon_start=round2(log.records[0].epsilon),
        epsilon_end=round2(log.records[-1].epsilon),
        solved_threshold=round2(log.config.solved_threshold),
    )


def render_prompt(s: TrainingSummary) -> str:
    """The data prompt, byte-stable: fixed template, all reals at 2 decimals."""
    return PROMPT_TEMPLATE.format(
        episode_count=s.episode_count,
        reward_min=fmt2(s.reward_min),
        reward_max=fmt2(s.reward_max),
        reward_avg=fmt2(s.reward_avg),
        rolling_min=fmt2(s.rolling_min),
        rolling_max=fmt2(s.rolling_max),
        rolling_avg=fmt2(s.rolling_avg),
        epsilon_start=fmt2(s.epsilon_start),
        epsilon_end=fmt2(s.epsilon_end),
        solved_threshold=fmt2(s.solved_threshold),
    )


def _scrub(text: str, secret: str) -> str:
    return text.replace(secret, "***") if secret else text


def request_insight(prompt: str, cfg: LlmEndpointConfig) -> str:
    """Single-turn completion request; retries once on transient failure."""
    api_key = os.environ.get(cfg.api_key_env)
    if not api_key:
        raise LlmConfigError(
            f"api key environment variable {cfg.api_key_env} is not set"
        )
    body = {
        "model": cfg.model_name,
        "prompt": f"{SYSTEM_PREAMBLE}\n\n{prompt}",
        "max_tokens": cfg.max_tokens,
        "temperature": cfg.temperature,
    }
    headers = {"Authorization": f"Bearer {api_key}"}
    timeout = cfg.timeout_ms / 1000.0
    last_error = ""
    for _ in range(2):
        try:
            resp = requests.post(cfg.base_url, json=body, headers=headers, timeout=timeout)
        except requests.RequestException as exc:
            last_error = _scrub(f"request failed: {exc}", api_key)
            continue
        if resp.status_code >= 500:
            last_error = f"endpoint returned HTTP {resp.status_code}"
            continue
        if resp.status_code != 200:
            raise LlmTransportError(f"endpoint returned HTTP {resp.status_code}")
        try:
            text = _extract_completion(resp.json())
        except (ValueError, KeyError, TypeError) as exc:
            raise LlmTransportError(f"unparseable completion response: {exc}") from exc
        if not text:
            raise LlmTransportError("endpoint returned an empty completion")
        return text
    raise LlmTransportError(last_error or "request failed")


def _extract_completion(payload: dict) -> str:
    """First candidate text from the common completion response shapes."""
    choices = payload.get("choices")
    if isinstance(choices, list) and choices:
        first = choices[0]
        if isinstance(first, dict):
            if isinstance(first.get("text"), str):
                return first["text"].strip()
            message = first.get("message")
            if isinstance(message, dict) and isinstance(message.get("content"), str):
                return message["content"].strip()
    for key in ("text", "completion", "generated_text"):
        if isinstance(payload.get(key), str):
            return payload[key].strip()
    raise ValueError(f"no completion text in keys {sorted(payload)}")


def fallback_narrative(s: TrainingSummary) -> str:
    """Deterministic offline narrative covering the same statistics."""
    if s.rolling_avg >= s.solved_threshold:
        verdict = (
            f"The mean rolling average of {fmt2(s.rolling_avg)} meets the target of "
            f"{fmt2(s.solved_threshold)}, so the run is considered solved."
        )
        advice = (
            "The policy is performing at the target level; consider locking the "
            "checkpoint and validating it against harder jammer behaviours."
        )
    else:
        verdict = (
            f"The mean rolling average of {fmt2(s.rolling_avg)} is below solved "
            f"threshold {fmt2(s.solved_threshold)}."
        )
        advice = (
            "Performance has headroom: consider more training episodes, a slower "
            "epsilon decay, or revisiting the learning rate."
        )
    return (
        f"Training ran for {s.episode_count} episodes. Episode rewards ranged from "
        f"{fmt2(s.reward_min)} to {fmt2(s.reward_max)} and averaged {fmt2(s.reward_avg)}. "
        f"The rolling average moved between {fmt2(s.rolling_min)} and {fmt2(s.rolling_max)} "
        f"with a mean of {fmt2(s.rolling_avg)}. Exploration decayed from epsilon "
        f"{fmt2(s.epsilon_start)} to {fmt2(s.epsilon_end)} over the run. "
        f"{verdict} {advice}"
    )


def generate_report(log: RunLog, cfg: LlmEndpointConfig | None = None) -> InsightReport:
    """Summarize, render the prompt, and narrate; degrades to the offline path.

    LLM failures never fail the report: the fallback narrative is used and
    the failure is recorded as a warning. Only an empty log raises.
    """
    summary = summarize(log)
    prompt = render_prompt(summary)
    if cfg is not None:
        try:
            narrative = request_insight(prompt, cfg)
            return InsightReport(
                run_id=log.run_id,
                prompt=prompt,
                narrative=narrative,
                source="llm",
                model_name=cfg.model_name,
                generated_at_ms=int(time.time() * 1000),
            )
        except InsightError as exc:
            warning = f"llm unavailable, used offline narrative: {exc}"
            return InsightReport(
                run_id=log.run_id,
                prompt=prompt,
                narrative=fallback_narrative(summary),
                source="fallback",
                generated_at_ms=int(time.time() * 1000),
                warning=warning,
            )
    return InsightReport(
        run_id=log.run_id,
        prompt=prompt,
        narrative=fallback_narrative(summary),
        source="fallback",
        generated_at_ms=int(time.time() * 1000),
    )


def report_to_text(report: InsightReport) -> str:
    """Structured text block for report files."""
    lines = [
        "insight-report v1",
        f"run_id: {report.run_id}",
        f"source: {report.source}",
        f"model: {report.model_name or '-'}",
        f"generated_at_ms: {report.generated_at_ms}",
    ]
    if report.warning:
        lines.append(f"warning: {report.warning}")
    lines.extend(["prompt:", report.prompt, "narrative:", report.narrative])
    return "\n".join(lines) + "\n"


def load_llm_config(path: str) -> LlmEndpointConfig:
    """Read an endpoint config from flat key=value lines."""
    fields: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for n, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{n}: expected key=value")
            key, _, value = line.partition("=")
            fields[key.strip()] = value.strip()
    known = {"base_url", "model_name", "api_key_env", "timeout_ms", "max_tokens", "temperature"}
    unknown = sorted(set(fields) - known)
    if unknown:
        raise ValueError(f"{path}: unknown key {unknown[0]!r}")
    if "base_url" not in fields:
        raise ValueError(f"{path}: base_url is required")
    return LlmEndpointConfig(
        base_url=fields["base_url"],
        model_name=fields.get("model_name", "local-model"),
        api_key_env=fields.get("api_key_env", "ANTIJAM_LLM_API_KEY"),
        timeout_ms=int(fields.get("timeout_ms", "30000")),
        max_tokens=int(fields.get("max_tokens", "512")),
        temperature=float(fields.get("temperature", "0.2")),
    )
