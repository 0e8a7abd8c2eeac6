"""Command line entry point.

Subcommands:
  run <config> --trace <file> --report <out> [--seed N]
  bandwidth-report <config>
  serve <config> --port <p> [--record <file>]

Exit codes: 0 success, 2 usage error, 3 missing file, 4 invalid config,
5 runtime failure. Errors print one machine-parseable line on stderr:
``teleopsim: error[<code>]: <message>``.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .config import load_config
from .errors import ConfigError, TeleopsimError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_BAD_CONFIG = 4
EXIT_RUNTIME = 5


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="teleopsim",
        description="Desk-scale teleoperation stack: scenarios, bandwidth budgets, operator console.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="enable debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scripted operator trace through the pipeline")
    p_run.add_argument("config", help="scenario config (path, .yaml optional)")
    p_run.add_argument("--trace", required=True, help="operator trace file")
    p_run.add_argument("--report", required=True, help="where to write the JSON report")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")

    p_bw = sub.add_parser("bandwidth-report", help="print the stream bandwidth budget")
    p_bw.add_argument("config", help="scenario config (path, .yaml optional)")

    p_serve = sub.add_parser("serve", help="serve the operator console protocol")
    p_serve.add_argument("config", help="scenario config (path, .yaml optional)")
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--record", default=None, help="record the live session as a trace file")

    return parser


def _fail(code: int, message: str) -> int:
    print(f"teleopsim: error[{code}]: {message}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")

    try:
        config = load_config(args.config)
        if getattr(args, "seed", None) is not None:
            link = dataclasses.replace(config.link, seed=args.seed)
            config = dataclasses.replace(config, seed=args.seed, link=link)
    except FileNotFoundError as exc:
        return _fail(EXIT_MISSING_FILE, f"config not found: {exc}")
    except ConfigError as exc:
        return _fail(EXIT_BAD_CONFIG, str(exc))

    try:
        if args.command == "bandwidth-report":
            from .scenario import render_bandwidth_report
            print(render_bandwidth_report(config), end="")
            return EXIT_OK
        if args.command == "run":
            from .scenario import report_to_json, run_scenario
            from .trace import load_trace
            try:
                trace = load_trace(args.trace)
            except FileNotFoundError:
                return _fail(EXIT_MISSING_FILE, f"trace not found: {args.trace}")
            report = run_scenario(config, trace)
            with open(args.report, "w") as fh:
                fh.write(report_to_json(report))
            reached = sum(1 for wp in report["waypoints"] if wp["reached"])
            print(f"scenario {config.name}: {report['duration_s']:.3f} s simulated, "
                  f"final pose {report['final_pose']}, "
                  f"waypoints {reached}/{len(report['waypoints'])}, "
                  f"report -> {args.report}")
            return EXIT_OK
        if args.command == "serve":
            from .server import serve
            serve(config, args.port, args.host, record_path=args.record)
            return EXIT_OK
    except ConfigError as exc:
        return _fail(EXIT_BAD_CONFIG, str(exc))
    except TeleopsimError as exc:
        return _fail(EXIT_RUNTIME, str(exc))
    except OSError as exc:
        return _fail(EXIT_RUNTIME, str(exc))
    return _fail(EXIT_USAGE, f"unknown command {args.command!r}")


if __name__ == "__main__":
    raise SystemExit(main())
