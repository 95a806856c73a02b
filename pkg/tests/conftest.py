import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from antijam import agent, env, trainer
from antijam.fmtutil import round2

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover
    threadpool_limits = None

# 25-episode return series whose summary hits the reference statistics the
# report tests assert: rewards 52.10..88.10 mean 75.50, window-10 rolling
# 65.80..83.56 mean 77.27 (found by integer search over 2-decimal values).
SAMPLE_REPORT_RETURNS = [
    83.56, 71.16, 55.85, 52.62, 87.93, 87.49, 88.07, 87.92, 82.89, 65.40,
    76.43, 75.18, 81.83, 75.96, 88.10, 87.54, 87.87, 83.69, 81.34, 78.57,
    72.05, 66.64, 64.87, 52.44, 52.10,
]

SAMPLE_REPORT_PROMPT = (
    "The graph represents training rewards over 25 episodes. The actual rewards "
    "range from 52.10 to 88.10 with an average of 75.50. The rolling average "
    "values range from 65.80 to 83.56 with an average of 77.27. The epsilon "
    "values decrease from 0.93 to 0.08 over the episodes. The solved threshold "
    "is set at 90.00."
)


@pytest.fixture(scope="session", autouse=True)
def single_thread_blas():
    """The training nets are tiny; multi-threaded BLAS only adds overhead."""
    if threadpool_limits is None:
        yield
    else:
        with threadpool_limits(1):
            yield


def make_env_config(**overrides) -> env.EnvConfig:
    base = dict(
        num_channels=10,
        steps_per_episode=100,
        switching_cost=0.1,
        jammer_power=1.0,
        noise_floor=0.0,
        adjacent_leakage=0.0,
        utility_mode="binary",
        rng_seed=0,
    )
    base.update(overrides)
    return env.EnvConfig(**base)


def make_records(returns, window=10, epsilons=None, steps=100):
    """Build consistent EpisodeRecords from a return series (rolling recomputed)."""
    records = []
    rounded = [round2(r) for r in returns]
    n = len(rounded)
    if epsilons is None:
        sched = agent.EpsilonSchedule(0.93, 0.08, "linear_per_episode", n if n > 1 else 2)
        epsilons = [sched.value(i) for i in range(n)]
    for i in range(n):
        records.append(
            trainer.EpisodeRecord(
                index=i,
                episode_return=rounded[i],
                rolling_average=round2(trainer.rolling_average(rounded[: i + 1], window)),
                epsilon=round2(epsilons[i]),
                steps=steps,
                jam_hits=0,
                switches=0,
                wall_time_ms=0,
            )
        )
    return records


def make_run_log(returns, window=10, solved_threshold=90.0, **config_overrides):
    episodes = max(len(returns), window)
    config = trainer.TrainConfig(
        episodes=episodes,
        env=make_env_config(),
        jammer=env.JammerSpec(kind="sweep"),
        rolling_window=window,
        solved_threshold=solved_threshold,
        **config_overrides,
    )
    return trainer.RunLog(
        run_id="run-test",
        config=config,
        records=make_records(returns, window),
        status="completed",
        created_at_ms=1_723_000_000_000,
    )


class MockLlmServer:
    """Tiny completion endpoint: canned text, configurable status, request capture."""

    def __init__(self, text="The agent is improving steadily.", status=200):
        self.text = text
        self.status = status
        self.requests: list[dict] = []
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length) or b"{}")
                outer.requests.append(
                    {"body": body, "auth": self.headers.get("Authorization", "")}
                )
                if outer.status != 200:
                    self.send_response(outer.status)
                    self.end_headers()
                    self.wfile.write(b"{}")
                    return
                payload = json.dumps({"choices": [{"text": outer.text}]}).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        self._server = HTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        return f"http://127.0.0.1:{self._server.server_port}/v1/completions"

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def mock_llm():
    with MockLlmServer() as server:
        yield server
