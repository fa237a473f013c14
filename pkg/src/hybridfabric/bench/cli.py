"""Command-line entry point for the benchmark series.

Exit codes: 0 success, 2 setup failure, 3 invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import sys

from ..errors import InvariantViolation, SetupFailed
from .harness import run_graceful_stop, run_latency, run_serde_comparison, run_throughput
from .records import DESK_PRESET, DESK_STOP_AFTER, FULL_PRESET, FULL_STOP_AFTER, BenchConfig, dumps_records

EXIT_OK = 0
EXIT_SETUP = 2
EXIT_INVARIANT = 3


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--path", choices=("local", "distributed", "hybrid"), default=None)
    common.add_argument("--payload-size", type=int, default=256, help="payload bytes (default 256)")
    common.add_argument("--messages", type=int, default=None, help="messages per run (preset default)")
    common.add_argument("--repetitions", type=int, default=3)
    common.add_argument("--warmup", type=int, default=1)
    common.add_argument("--codec", choices=("native", "json"), default="native")
    common.add_argument("--validate", choices=("on", "off"), default="on")
    common.add_argument("--stop-after", type=float, default=None, help="seconds before forced stop")
    common.add_argument("--stop-mode", choices=("abrupt", "drain"), default="abrupt")
    common.add_argument("--drain-deadline", type=float, default=10.0)
    target = common.add_mutually_exclusive_group()
    target.add_argument("--server", default=None, help="NATS server URL, e.g. nats://127.0.0.1:4222")
    target.add_argument("--loopback", action="store_true", help="use the in-memory transport (default)")
    common.add_argument("--paper-preset", action="store_true", help="use the full-size message counts")
    common.add_argument("--output", default=None, help="write records here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="hybridfabric-bench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="series", required=True)
    sub.add_parser("latency", parents=[common], help="one-way latency per path")
    sub.add_parser("throughput", parents=[common], help="messages per second per path")
    sub.add_parser("serde", parents=[common], help="codec/validation comparison on the distributed path")
    sub.add_parser("stop", parents=[common], help="forced stop of a saturated hybrid bridge")
    return parser


def config_from_args(args: argparse.Namespace) -> BenchConfig:
    preset = FULL_PRESET if args.paper_preset else DESK_PRESET
    default_path = {"serde": "distributed", "stop": "hybrid"}.get(args.series, "local")
    return BenchConfig(
        series=args.series,
        path=args.path or default_path,
        payload_size=args.payload_size,
        messages=args.messages if args.messages is not None else preset[args.series],
        repetitions=args.repetitions,
        warmup=args.warmup,
        codec=args.codec,
        validate=args.validate == "on",
        stop_after=args.stop_after if args.stop_after is not None else (FULL_STOP_AFTER if args.paper_preset else DESK_STOP_AFTER),
        stop_mode=args.stop_mode,
        drain_deadline=args.drain_deadline,
        server=None if args.loopback else args.server,
        output_format=args.format,
        output=args.output,
    )


def run(config: BenchConfig):
    if config.series == "latency":
        return [run_latency(config)]
    if config.series == "throughput":
        return [run_throughput(config)]
    if config.series == "serde":
        return run_serde_comparison(config)
    return [run_graceful_stop(config)]


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
    except ValueError as exc:
        parser.error(str(exc))
    try:
        records = run(config)
    except SetupFailed as exc:
        print(f"setup failed: {exc}", file=sys.stderr)
        return EXIT_SETUP
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    text = dumps_records(records, config.output_format)
    if config.output:
        with open(config.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
