"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion lines.
The two training criteria build real runs (a few minutes total); everything
else is sub-second.
"""

import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from antijam import insights, nn, trainer
from antijam.agent import (
    AgentHyper,
    DdqnAgent,
    EpsilonSchedule,
    ReplayBuffer,
    Transition,
    load_checkpoint,
    sample_batch,
    save_checkpoint,
)
from antijam.env import EnvConfig, JammerSpec, compute_reward, utility
from antijam.fmtutil import round2
from antijam.insights import LlmEndpointConfig, generate_report, render_prompt, summarize
from antijam.trainer import TrainConfig, evaluate, format_record_line, load_run_log, save_run_log, train
from conftest import SAMPLE_REPORT_PROMPT, SAMPLE_REPORT_RETURNS, make_env_config, make_run_log
from gradcheck import finite_difference_grads, max_relative_error, random_small_net

SEEDS = (101, 102, 103, 104, 105)


def announce(number: int, name: str, detail: str):
    print(f"\nACCEPTANCE {number} ({name}): PASS [{detail}]")


# ---------------------------------------------------------------- training runs


def sweep_env(seed: int) -> EnvConfig:
    return EnvConfig(
        num_channels=10, steps_per_episode=100, switching_cost=0.1, jammer_power=1.0,
        noise_floor=0.0, adjacent_leakage=0.0, utility_mode="binary", rng_seed=seed,
    )


def sweep_config(seed: int, out: str) -> TrainConfig:
    return TrainConfig(
        episodes=500,
        env=sweep_env(seed),
        jammer=JammerSpec(kind="sweep", start=0, stride=1, direction=1),
        hyper=AgentHyper(gamma=0.9, batch_size=32, replay_capacity=10_000,
                         learning_rate=1e-3, target_sync_interval=100),
        epsilon_start=0.93, epsilon_end=0.08, epsilon_decay="linear_per_episode",
        epsilon_horizon=120, solved_threshold=90.0, rolling_window=10,
        seed=seed, stop_on_solved=True, output_dir=out,
    )


def fixed_env(seed: int) -> EnvConfig:
    return EnvConfig(
        num_channels=10, steps_per_episode=100, switching_cost=0.0, jammer_power=1.0,
        noise_floor=0.0, adjacent_leakage=0.0, utility_mode="binary", rng_seed=seed,
    )


def fixed_config(seed: int, out: str) -> TrainConfig:
    return TrainConfig(
        episodes=150,  # within the criterion's 200-episode budget
        env=fixed_env(seed),
        jammer=JammerSpec(kind="fixed", channel=0),
        hyper=AgentHyper(gamma=0.9, batch_size=32, replay_capacity=10_000,
                         learning_rate=1e-3, target_sync_interval=100),
        epsilon_start=0.93, epsilon_end=0.02, epsilon_decay="linear_per_episode",
        epsilon_horizon=40, solved_threshold=99.5, rolling_window=10,
        seed=seed, stop_on_solved=True, output_dir=out,
    )


@pytest.fixture(scope="module")
def sweep_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("sweep")
    runs = {}
    for seed in SEEDS:
        out = str(base / f"seed{seed}")
        log = train(sweep_config(seed, out))
        runs[seed] = (log, out)
    return runs


def random_baseline_monte_carlo(n_rollouts: int = 10_000, seed: int = 4242) -> float:
    """Fresh oracle: uniform-random play against the stride-1 sweep, vectorized."""
    rng = np.random.default_rng(seed)
    t = np.arange(100)
    jammer = t % 10
    actions = rng.integers(0, 10, size=(n_rollouts, 100))
    unjammed = actions != jammer
    switched = np.zeros_like(unjammed, dtype=bool)
    switched[:, 1:] = actions[:, 1:] != actions[:, :-1]
    rewards = np.where(unjammed, 1.0 - 0.1 * switched, 0.0)
    return float(rewards.sum(axis=1).mean())


# ---------------------------------------------------------------- criteria


def test_criterion_1_prompt_fidelity():
    start = time.perf_counter()
    log = make_run_log(SAMPLE_REPORT_RETURNS)
    prompt = render_prompt(summarize(log))
    assert prompt == SAMPLE_REPORT_PROMPT
    announce(1, "prompt fidelity", f"byte-exact, {time.perf_counter() - start:.2f}s")


def test_criterion_2_reward_algebra_exhaustive():
    start = time.perf_counter()
    checked = 0
    for mode in ("binary", "sinr"):
        for n in range(2, 7):
            cfg = make_env_config(
                num_channels=n, switching_cost=0.3, utility_mode=mode,
                noise_floor=0.05, adjacent_leakage=0.4,
            )
            for f_t in range(n):
                for f_j in range(n):
                    for a_t in range(n):
                        for a_prev in [None, *range(n)]:
                            got = compute_reward(f_t, f_j, a_t, a_prev, cfg)
                            # independent restatement of the rule
                            if f_t == f_j:
                                expected = 0.0
                            else:
                                if mode == "binary":
                                    u = 1.0
                                else:
                                    i = 1.0 if f_t == f_j else (0.4 if abs(f_t - f_j) == 1 else 0.0)
                                    u = math.log2(1.0 + 1.0 / (i + 0.05)) / math.log2(1.0 + 1.0 / 0.05)
                                delta = a_prev is not None and a_t != a_prev
                                expected = u - (0.3 if delta else 0.0)
                            assert got == expected, (mode, n, f_t, f_j, a_t, a_prev)
                            checked += 1
    announce(2, "reward algebra", f"{checked} cases exact, {time.perf_counter() - start:.2f}s")


def test_criterion_3_gradient_correctness():
    start = time.perf_counter()
    rng = np.random.default_rng(20240809)
    worst = 0.0
    for _ in range(100):
        net = random_small_net(rng)
        assert sum(l.weights.size + l.biases.size for l in net.layers) <= 64
        x = rng.normal(size=net.input_dim)
        action = int(rng.integers(net.output_dim))
        target = float(nn.forward(net, x)[action] + rng.uniform(0.5, 1.5) * rng.choice([-1, 1]))
        _, analytic = nn.backward(net, x, action, target)
        numeric_w, numeric_b = finite_difference_grads(net, x, action, target, h=1e-5)
        worst = max(worst, max_relative_error(analytic, numeric_w, numeric_b))
    assert worst < 1e-4
    announce(3, "gradient correctness",
             f"100 nets, max rel err {worst:.2e}, {time.perf_counter() - start:.2f}s")


def test_criterion_4_double_q_reduction():
    start = time.perf_counter()
    agent = DdqnAgent(8, hyper=AgentHyper(gamma=0.9), seed=77, hidden=32)
    nn.copy_parameters(agent.online, agent.target)
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        t = Transition(rng.random(8), int(rng.integers(8)), float(rng.normal()),
                       rng.random(8), False)
        vanilla = t.reward + 0.9 * float(np.max(nn.forward(agent.online, t.next_state)))
        worst = max(worst, abs(agent.compute_target(t) - vanilla))
    assert worst <= 1e-12
    announce(4, "double-Q reduction",
             f"1000 transitions, max |diff| {worst:.1e}, {time.perf_counter() - start:.2f}s")


def test_criterion_5_fixed_jammer_optimality(tmp_path):
    start = time.perf_counter()
    perfect = 0
    details = []
    for seed in SEEDS:
        out = str(tmp_path / f"seed{seed}")
        log = train(fixed_config(seed, out))
        assert len(log.records) <= 200
        stats = evaluate(
            os.path.join(out, "checkpoint.txt"),
            fixed_env(seed + 1000),
            JammerSpec(kind="fixed", channel=0),
            episodes=5,
        )
        details.append(f"seed {seed}: {len(log.records)} eps, greedy {stats['mean_return']}")
        if stats["mean_return"] == 100.0:
            perfect += 1
    assert perfect >= 4, details
    announce(5, "fixed-jammer optimality",
             f"{perfect}/5 seeds at exactly 100, {time.perf_counter() - start:.0f}s")


def test_criterion_6_sweep_jammer_solve(sweep_runs):
    start = time.perf_counter()
    baseline = random_baseline_monte_carlo()
    assert 81.0 < baseline < 83.0  # sanity on the oracle itself
    good = 0
    details = [f"baseline {baseline:.2f}"]
    for seed, (log, out) in sweep_runs.items():
        solved = log.status == "solved" and len(log.records) <= 500
        stats = evaluate(
            os.path.join(out, "checkpoint.txt"),
            sweep_env(seed + 1000),
            JammerSpec(kind="sweep", start=0, stride=1, direction=1),
            episodes=20,
        )
        beats_baseline = stats["mean_return"] >= baseline + 5.0
        details.append(
            f"seed {seed}: {log.status}@{len(log.records)} greedy {stats['mean_return']:.2f}"
        )
        if solved and beats_baseline:
            good += 1
    assert good >= 3, details
    announce(6, "sweep-jammer solve", "; ".join(details) + f", {time.perf_counter() - start:.0f}s")


def test_criterion_7_early_training_band(sweep_runs):
    start = time.perf_counter()
    baseline = random_baseline_monte_carlo(seed=777)
    first25 = []
    for _, (log, _) in sweep_runs.items():
        first25.extend(r.episode_return for r in log.records[:25])
    pooled_mean = float(np.mean(first25))
    # optimum: all steps unjammed, minimal dodging switches against the sweep
    t_steps, n_channels, gamma_cost = 100, 10, 0.1
    min_switches = math.ceil(t_steps / (n_channels - 1)) - 1
    optimum = t_steps * 1.0 - gamma_cost * min_switches
    assert baseline < pooled_mean < optimum
    announce(7, "early-training band",
             f"baseline {baseline:.2f} < first-25 mean {pooled_mean:.2f} < optimum {optimum:.1f}, "
             f"{time.perf_counter() - start:.1f}s")


CRIT8_CONFIG = """\
episodes=5
num_channels=6
steps_per_episode=10
switching_cost=0.1
jammer_kind=sweep
jammer_start=0
batch_size=8
replay_capacity=128
gamma=0.9
rolling_window=5
solved_threshold=10.0
stop_on_solved=false
seed=33
env_seed=33
"""


def test_criterion_8_determinism_and_persistence(tmp_path):
    start = time.perf_counter()
    conf = tmp_path / "repro.conf"
    conf.write_text(CRIT8_CONFIG)
    record_lines = []
    for name in ("p1", "p2"):
        out = tmp_path / name
        result = subprocess.run(
            [sys.executable, "-m", "antijam", "train", "--config", str(conf),
             "--out", str(out)],
            capture_output=True, text=True,
        )
        assert result.returncode == 0, result.stderr
        with open(out / "run.log", "rb") as f:
            record_lines.append(f.read().split(b"\n")[1:])
    assert record_lines[0] == record_lines[1]

    # run-log round trip
    log = make_run_log(SAMPLE_REPORT_RETURNS)
    path = str(tmp_path / "t1.log")
    save_run_log(log, path)
    loaded = load_run_log(path)
    assert (loaded.records, loaded.config, loaded.run_id, loaded.status) == (
        log.records, log.config, log.run_id, log.status
    )

    # checkpoint round trip
    agent = DdqnAgent(6, hyper=AgentHyper(gamma=0.9, batch_size=4, replay_capacity=64),
                      seed=5, hidden=16)
    rng = np.random.default_rng(0)
    for _ in range(10):
        agent.remember(Transition(rng.random(6), int(rng.integers(6)),
                                  float(rng.random()), rng.random(6), False))
        agent.learn()
    ckpt = str(tmp_path / "agent.txt")
    save_checkpoint(agent, ckpt)
    restored = load_checkpoint(ckpt)
    assert restored.hyper == agent.hyper and restored.update_count == agent.update_count
    x = rng.random(6)
    assert nn.forward(restored.online, x).tobytes() == nn.forward(agent.online, x).tobytes()
    assert nn.forward(restored.target, x).tobytes() == nn.forward(agent.target, x).tobytes()
    announce(8, "determinism & persistence",
             f"record lines byte-identical across processes, {time.perf_counter() - start:.0f}s")


def test_criterion_9_replay_and_schedule_properties():
    start = time.perf_counter()
    buf = ReplayBuffer(3)
    marks = []
    for i in range(5):
        t = Transition(np.zeros(2), 0, float(i), np.zeros(2), False)
        buf.push(t)
        marks.append(t)
    assert [buf[i].reward for i in range(3)] == [2.0, 3.0, 4.0]  # strict insertion order

    buf10 = ReplayBuffer(10)
    for i in range(10):
        buf10.push(Transition(np.zeros(2), 0, float(i), np.zeros(2), False))
    rng = np.random.default_rng(99)
    counts = np.zeros(10)
    for _ in range(10_000):
        for t in sample_batch(buf10, 10, rng):
            counts[int(t.reward)] += 1
    assert counts.sum() == 100_000
    assert ((counts >= 9_500) & (counts <= 10_500)).all()  # within +-5% of 10%

    sched = EpsilonSchedule(0.93, 0.08, "linear_per_episode", 25)
    assert sched.value(0) == 0.93
    assert sched.value(24) == 0.08
    values = [sched.value(t) for t in range(25)]
    assert all(a >= b for a, b in zip(values, values[1:]))
    announce(9, "replay & schedule",
             f"freq spread {counts.min():.0f}..{counts.max():.0f} per 10k, endpoints exact, "
             f"{time.perf_counter() - start:.1f}s")


def test_criterion_10_report_degradation(tmp_path, monkeypatch):
    start = time.perf_counter()
    sentinel = "sk-VERY-SECRET-SENTINEL-42"
    monkeypatch.setenv("ACCEPT_LLM_KEY", sentinel)
    cfg = LlmEndpointConfig(
        base_url="http://127.0.0.1:9/unreachable",
        model_name="desk-model",
        api_key_env="ACCEPT_LLM_KEY",
        timeout_ms=300,
    )
    log = make_run_log(SAMPLE_REPORT_RETURNS)
    report = generate_report(log, cfg)  # must not raise
    assert report.source == "fallback"
    assert report.narrative
    report_path = tmp_path / "report.txt"
    report_path.write_text(insights.report_to_text(report))
    log_path = tmp_path / "run.log"
    save_run_log(log, str(log_path))
    for artifact in (
        report_path.read_text(),
        log_path.read_text(),
        report.prompt,
        report.narrative,
        report.warning,
        str(report),
    ):
        assert sentinel not in artifact
    announce(10, "report degradation",
             f"fallback + key scrubbed, {time.perf_counter() - start:.1f}s")
