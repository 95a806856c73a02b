"""Batch entry points: train, eval, report, serve.

Everything here runs headless — no UI and no LLM required. Exit codes:
0 success, 2 usage/configuration problems, 3 data errors (unreadable logs
or checkpoints).
"""

from __future__ import annotations

import argparse
import os
import sys

from . import insights, trainer
from .env import ConfigError
from .fmtutil import fmt2

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3


def read_config_file(path: str) -> dict[str, str]:
    """Flat key=value lines; blank lines and # comments allowed."""
    pairs: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for n, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError("config", f"{path}:{n}: expected key=value")
            key, _, value = line.partition("=")
            pairs[key.strip()] = value.strip()
    return pairs


def _load_train_config(args) -> trainer.TrainConfig:
    if not os.path.isfile(args.config):
        raise ConfigError("config", f"config file not found: {args.config}")
    pairs = read_config_file(args.config)
    for override in args.set or []:
        if "=" not in override:
            raise ConfigError("set", f"--set expects key=value, got {override!r}")
        key, _, value = override.partition("=")
        pairs[key] = value
    if args.episodes is not None:
        pairs["episodes"] = str(args.episodes)
    if args.seed is not None:
        pairs["seed"] = str(args.seed)
    if args.out is not None:
        pairs["output_dir"] = args.out
    return trainer.TrainConfig.from_pairs(pairs)


def cmd_train(args) -> int:
    config = _load_train_config(args)

    def sink(record: trainer.EpisodeRecord) -> None:
        print(
            f"ep={record.index} return={fmt2(record.episode_return)} "
            f"roll={fmt2(record.rolling_average)} eps={fmt2(record.epsilon)}"
        )

    log = trainer.train(config, progress_sink=sink)
    print(f"status={log.status} episodes={len(log.records)} run_id={log.run_id}")
    if log.status == "failed":
        print(f"error: {log.failure_reason}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def cmd_eval(args) -> int:
    if not os.path.isfile(args.config):
        raise ConfigError("config", f"config file not found: {args.config}")
    config = trainer.TrainConfig.from_pairs(read_config_file(args.config))
    try:
        stats = trainer.evaluate(args.checkpoint, config.env, config.jammer, args.episodes)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(
        f"mean_return={stats['mean_return']:.2f} std={stats['std']:.2f} "
        f"jam_rate={stats['jam_rate']:.4f} switch_rate={stats['switch_rate']:.4f}"
    )
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        log = trainer.load_run_log(args.log)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    llm_config = None
    if args.llm_config:
        if not os.path.isfile(args.llm_config):
            raise ConfigError("llm-config", f"config file not found: {args.llm_config}")
        llm_config = insights.load_llm_config(args.llm_config)
    try:
        report = insights.generate_report(log, llm_config)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print("prompt:")
    print(report.prompt)
    print(f"narrative (source={report.source}):")
    print(report.narrative)
    if report.warning:
        print(f"warning: {report.warning}", file=sys.stderr)
    return EXIT_OK


def cmd_serve(args) -> int:
    from . import service

    host, _, port_text = args.bind.partition(":")
    if not host or not port_text.isdigit():
        raise ConfigError("bind", f"expected HOST:PORT, got {args.bind!r}")
    llm_config = None
    if args.llm_config:
        if not os.path.isfile(args.llm_config):
            raise ConfigError("llm-config", f"config file not found: {args.llm_config}")
        llm_config = insights.load_llm_config(args.llm_config)
    try:
        service_config = service.ServiceConfig(
            host=host, port=int(port_text), data_dir=args.data, llm=llm_config
        )
        service.serve(service_config)
    except OSError as exc:
        raise ConfigError("data", f"cannot use data directory {args.data}: {exc}") from exc
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="antijam",
        description="Anti-jamming channel selection: train, evaluate, report, serve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run a training job from a config file")
    p_train.add_argument("--config", required=True, help="flat key=value config file")
    p_train.add_argument("--episodes", type=int, help="override episode count")
    p_train.add_argument("--seed", type=int, help="override the run seed")
    p_train.add_argument("--out", help="override the output directory")
    p_train.add_argument(
        "--set", action="append", metavar="KEY=VALUE", help="override any config key"
    )
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="greedy-policy evaluation of a checkpoint")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--config", required=True, help="config file with env/jammer keys")
    p_eval.add_argument("--episodes", type=int, required=True)
    p_eval.set_defaults(func=cmd_eval)

    p_report = sub.add_parser("report", help="render the insight prompt and narrative")
    p_report.add_argument("--log", required=True, help="run log file")
    p_report.add_argument("--llm-config", dest="llm_config", help="LLM endpoint config file")
    p_report.set_defaults(func=cmd_report)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--bind", default="127.0.0.1:8787", metavar="HOST:PORT")
    p_serve.add_argument("--data", required=True, help="data directory for run logs")
    p_serve.add_argument("--llm-config", dest="llm_config", help="LLM endpoint config file")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
