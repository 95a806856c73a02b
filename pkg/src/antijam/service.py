"""HTTP facade: run management, live episode streaming, explanation queries.

One training thread per run; episode records cross the thread boundary by
value through per-subscriber queues with snapshot-on-subscribe semantics.
Run logs are appended (and fsynced) at every episode boundary and finalized
atomically when the run reaches a terminal status, so the persisted file
always parses and ends at an episode boundary. On startup, runs found on
disk are recovered; a run that was mid-flight when the process died is
reported as stopped.
"""

from __future__ import annotations

import json
import os
import queue
import threading
import time
from dataclasses import dataclass, replace
from typing import Iterator, Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, StreamingResponse

from . import insights, trainer
from .env import ConfigError
from .insights import LlmEndpointConfig
from .trainer import EpisodeRecord, RunLog, TrainConfig

TERMINAL = ("completed", "solved", "stopped", "failed")


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8787
    data_dir: str = "data"
    llm: Optional[LlmEndpointConfig] = None
    max_concurrent_runs: int = 4


def record_to_dict(r: EpisodeRecord) -> dict:
    return {
        "index": r.index,
        "return": r.episode_return,
        "rolling_average": r.rolling_average,
        "epsilon": r.epsilon,
        "steps": r.steps,
        "jam_hits": r.jam_hits,
        "switches": r.switches,
        "wall_time_ms": r.wall_time_ms,
    }


class RunHandle:
    """Live state of one run: records so far, status, stop signal, subscribers."""

    def __init__(self, run_id: str, config: TrainConfig, created_at_ms: int):
        self.run_id = run_id
        self.config = config
        self.created_at_ms = created_at_ms
        self.records: list[EpisodeRecord] = []
        self.status = "running"
        self.failure_reason = ""
        self.stop_event = threading.Event()
        self.lock = threading.Lock()
        self.subscribers: list[queue.SimpleQueue] = []
        self._log_file = None

    def open_incremental_log(self, path: str) -> None:
        header = trainer.run_log_header(self.as_log())
        self._log_file = open(path, "w", encoding="utf-8")
        self._log_file.write(header + "\n")
        self._log_file.flush()
        os.fsync(self._log_file.fileno())

    def publish(self, record: EpisodeRecord) -> None:
        with self.lock:
            self.records.append(record)
            for q in self.subscribers:
                q.put(("episode", record))
        if self._log_file is not None:
            self._log_file.write(trainer.format_record_line(record) + "\n")
            self._log_file.flush()
            os.fsync(self._log_file.fileno())

    def finish(self, status: str, failure_reason: str = "") -> None:
        with self.lock:
            self.status = status
            self.failure_reason = failure_reason
            for q in self.subscribers:
                q.put(("status", status))
            self.subscribers.clear()
        if self._log_file is not None:
            self._log_file.close()
            self._log_file = None

    def as_log(self) -> RunLog:
        return RunLog(
            run_id=self.run_id,
            config=self.config,
            records=list(self.records),
            status=self.status,
            created_at_ms=self.created_at_ms,
            failure_reason=self.failure_reason,
        )

    def subscribe(self) -> tuple[list[EpisodeRecord], str, Optional[queue.SimpleQueue]]:
        """Snapshot of prior records plus a live queue (None if already terminal)."""
        with self.lock:
            snapshot = list(self.records)
            if self.status in TERMINAL:
                return snapshot, self.status, None
            q: queue.SimpleQueue = queue.SimpleQueue()
            self.subscribers.append(q)
            return snapshot, self.status, q

    def unsubscribe(self, q: queue.SimpleQueue) -> None:
        with self.lock:
            if q in self.subscribers:
                self.subscribers.remove(q)


class RunRegistry:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.runs: dict[str, RunHandle] = {}
        self.lock = threading.Lock()
        os.makedirs(config.data_dir, exist_ok=True)
        self._recover()

    def _recover(self) -> None:
        for name in sorted(os.listdir(self.config.data_dir)):
            log_path = os.path.join(self.config.data_dir, name, "run.log")
            if not os.path.isfile(log_path):
                continue
            try:
                log = trainer.load_run_log(log_path)
            except (ValueError, OSError):
                continue  # unreadable runs are skipped, not fatal
            handle = RunHandle(log.run_id or name, log.config, log.created_at_ms)
            handle.records = list(log.records)
            if log.status in TERMINAL:
                handle.status = log.status
                handle.failure_reason = log.failure_reason
            else:
                # The process died mid-run; it can only be reported as stopped.
                handle.status = "stopped"
                try:
                    trainer.save_run_log(handle.as_log(), log_path)
                except OSError:
                    pass
            self.runs[handle.run_id] = handle

    def get(self, run_id: str) -> RunHandle:
        with self.lock:
            handle = self.runs.get(run_id)
        if handle is None:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id}")
        return handle

    def running_count(self) -> int:
        with self.lock:
            return sum(1 for h in self.runs.values() if h.status not in TERMINAL)

    def start_run(self, config: TrainConfig) -> RunHandle:
        with self.lock:
            active = sum(1 for h in self.runs.values() if h.status not in TERMINAL)
            if active >= self.config.max_concurrent_runs:
                raise HTTPException(
                    status_code=429,
                    detail=f"at capacity: {active} runs already executing",
                )
            run_id = trainer.new_run_id()
            run_dir = os.path.join(self.config.data_dir, run_id)
            os.makedirs(run_dir, exist_ok=True)
            config = replace(config, output_dir=run_dir)
            handle = RunHandle(run_id, config, int(time.time() * 1000))
            handle.open_incremental_log(os.path.join(run_dir, "run.log"))
            self.runs[run_id] = handle
        thread = threading.Thread(target=self._run_thread, args=(handle,), daemon=True)
        thread.start()
        return handle

    def _run_thread(self, handle: RunHandle) -> None:
        try:
            log = trainer.train(
                handle.config,
                progress_sink=handle.publish,
                should_stop=handle.stop_event.is_set,
                run_id=handle.run_id,
            )
            handle.finish(log.status, log.failure_reason)
        except Exception as exc:  # defensive: a crashed run must still terminate streams
            handle.finish("failed", str(exc))
            try:
                trainer.save_run_log(
                    handle.as_log(),
                    os.path.join(self.config.data_dir, handle.run_id, "run.log"),
                )
            except OSError:
                pass


def _parse_train_config(body: dict) -> TrainConfig:
    if not isinstance(body, dict):
        raise ConfigError("body", "expected a JSON object of config keys")
    pairs = {}
    for key, value in body.items():
        if isinstance(value, bool):
            pairs[str(key)] = "true" if value else "false"
        else:
            pairs[str(key)] = str(value)
    pairs.pop("output_dir", None)  # server owns persistence paths
    return TrainConfig.from_pairs(pairs)


def _sse_event(event: str, data: dict, event_id: Optional[int] = None) -> str:
    lines = []
    if event_id is not None:
        lines.append(f"id: {event_id}")
    lines.append(f"event: {event}")
    lines.append(f"data: {json.dumps(data, separators=(',', ':'))}")
    return "\n".join(lines) + "\n\n"


def create_app(config: ServiceConfig) -> FastAPI:
    probe = os.path.join(config.data_dir, ".writable")
    os.makedirs(config.data_dir, exist_ok=True)
    with open(probe, "w") as f:
        f.write("ok")
    os.remove(probe)

    app = FastAPI(title="antijam service")
    registry = RunRegistry(config)
    app.state.registry = registry

    @app.exception_handler(ConfigError)
    async def config_error_handler(request: Request, exc: ConfigError):
        return JSONResponse(status_code=400, content={"detail": str(exc), "field": exc.field})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/runs", status_code=202)
    async def create_run(request: Request):
        try:
            body = await request.json()
        except Exception:
            raise HTTPException(status_code=400, detail="request body must be valid JSON")
        train_config = _parse_train_config(body)
        handle = registry.start_run(train_config)
        return {"run_id": handle.run_id}

    @app.get("/runs")
    def list_runs():
        with registry.lock:
            handles = list(registry.runs.values())
        out = []
        for h in sorted(handles, key=lambda h: h.created_at_ms):
            with h.lock:
                latest = record_to_dict(h.records[-1]) if h.records else None
                out.append(
                    {
                        "run_id": h.run_id,
                        "status": h.status,
                        "episodes_done": len(h.records),
                        "created_at_ms": h.created_at_ms,
                        "latest": latest,
                    }
                )
        return {"runs": out}

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        h = registry.get(run_id)
        with h.lock:
            log = h.as_log()
        summary = None
        if log.records:
            s = insights.summarize(log)
            summary = {
                "episode_count": s.episode_count,
                "reward_min": s.reward_min,
                "reward_max": s.reward_max,
                "reward_avg": s.reward_avg,
                "rolling_min": s.rolling_min,
                "rolling_max": s.rolling_max,
                "rolling_avg": s.rolling_avg,
                "epsilon_start": s.epsilon_start,
                "epsilon_end": s.epsilon_end,
                "solved_threshold": s.solved_threshold,
            }
        return {
            "run_id": log.run_id,
            "status": log.status,
            "created_at_ms": log.created_at_ms,
            "episodes_done": len(log.records),
            "config": log.config.to_pairs(),
            "latest": record_to_dict(log.records[-1]) if log.records else None,
            "summary": summary,
            "solved_threshold": log.config.solved_threshold,
        }

    @app.get("/runs/{run_id}/stream")
    def stream_run(run_id: str):
        h = registry.get(run_id)

        def gen() -> Iterator[str]:
            snapshot, status, q = h.subscribe()
            try:
                for record in snapshot:
                    yield _sse_event("episode", record_to_dict(record), record.index)
                if q is None:
                    yield _sse_event("status", {"status": status})
                    return
                while True:
                    kind, payload = q.get()
                    if kind == "episode":
                        yield _sse_event("episode", record_to_dict(payload), payload.index)
                    else:
                        yield _sse_event("status", {"status": payload})
                        return
            finally:
                if q is not None:
                    h.unsubscribe(q)

        return StreamingResponse(gen(), media_type="text/event-stream")

    @app.post("/runs/{run_id}/explain")
    def explain_run(run_id: str):
        h = registry.get(run_id)
        with h.lock:
            log = h.as_log()
        if not log.records:
            raise HTTPException(status_code=409, detail="run has no episode records yet")
        report = insights.generate_report(log, config.llm)
        report_path = os.path.join(config.data_dir, run_id, "reports.txt")
        try:
            os.makedirs(os.path.dirname(report_path), exist_ok=True)
            with open(report_path, "a", encoding="utf-8") as f:
                f.write(insights.report_to_text(report) + "\n")
        except OSError:
            pass  # the report is still returned
        return {
            "run_id": report.run_id,
            "prompt": report.prompt,
            "narrative": report.narrative,
            "source": report.source,
            "model_name": report.model_name,
            "generated_at_ms": report.generated_at_ms,
            "warning": report.warning,
        }

    @app.post("/runs/{run_id}/stop")
    def stop_run(run_id: str):
        h = registry.get(run_id)
        h.stop_event.set()
        with h.lock:
            return {"run_id": run_id, "status": h.status}

    return app


def serve(config: ServiceConfig) -> None:
    """Blocking server entry point."""
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
