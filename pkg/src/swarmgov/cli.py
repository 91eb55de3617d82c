"""Command line entry points for running, replaying, and auditing scenarios.

Subcommands:

``run``       execute a scenario script, print the trajectory table, and
              optionally export CSV / radar JSON or serve the control plane.
``validate``  statically check a script and list every violation found.
``replay``    re-execute a script and byte-compare the fresh event log
              against a stored one; any drift is a nonzero exit.
``audit``     check a stored event log for internal consistency.
``pigr``      summarize review flags and the surrounding trajectory for a
              tick window of a stored log, and print the recommendations.
``certify``   run an admission suite through the certification harness.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from swarmgov.certify import (
    CecSuite,
    IatSuite,
    SuiteValidationError,
    render_cec_text,
    render_iat_text,
    run_cec,
    run_iat,
)
from swarmgov.events import EventLog
from swarmgov.protocols import ReviewNotRequiredError, generate_review
from swarmgov.runtime import (
    CSV_HEADER,
    GovernanceRuntime,
    audit_log_consistency,
    radar_json,
    run_scenario,
    trajectory_csv,
)
from swarmgov.scenario import ScriptValidationError, load_scenario, validate_script

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / "data"


def resolve_script(ref: str) -> Path:
    """Resolve a script argument to a file, falling back to packaged data.

    ``swarmgov run golden_scenario`` works without knowing where the
    package is installed; an explicit path always wins.
    """
    direct = Path(ref)
    if direct.is_file():
        return direct
    for candidate in (DATA_DIR / ref, DATA_DIR / f"{ref}.json"):
        if candidate.is_file():
            return candidate
    raise FileNotFoundError(f"no script file or packaged scenario named {ref!r}")


def _load(ref: str):
    return load_scenario(str(resolve_script(ref)))


def cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = _load(args.script)
    except ScriptValidationError as exc:
        for problem in exc.problems:
            print(f"invalid: {problem}", file=sys.stderr)
        return 2
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)

    if args.serve:
        from swarmgov.api import serve

        serve(scenario, host=args.host, port=args.port, tick_seconds=args.tick_seconds)
        return 0

    runtime = run_scenario(scenario)
    print(trajectory_csv(runtime))
    if args.export_csv:
        Path(args.export_csv).write_text(trajectory_csv(runtime) + "\n", encoding="utf-8")
        logger.info("wrote trajectory to %s", args.export_csv)
    if args.export_radar:
        Path(args.export_radar).write_text(radar_json(runtime) + "\n", encoding="utf-8")
        logger.info("wrote radar export to %s", args.export_radar)
    if args.export_log:
        runtime.log.write_jsonl(args.export_log)
        logger.info("wrote event log to %s", args.export_log)
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    path = resolve_script(args.script)
    with open(path, encoding="utf-8") as handle:
        script = json.load(handle)
    problems = validate_script(script)
    if not problems:
        print(f"{path}: ok")
        return 0
    for problem in problems:
        print(f"{path}: {problem}")
    return 1


def _load_log(path: str) -> tuple[EventLog | None, str, list[str]]:
    """Parse a stored log, turning structural damage into audit problems."""

    text = Path(path).read_text(encoding="utf-8")
    try:
        return EventLog.from_jsonl(text), text, []
    except ValueError as exc:
        return None, text, [str(exc)]


def cmd_replay(args: argparse.Namespace) -> int:
    stored, stored_text, problems = _load_log(args.log)
    if stored is not None:
        problems = audit_log_consistency(stored)
    for problem in problems:
        print(f"audit: {problem}")

    if args.against:
        scenario = _load(args.against)
        fresh = run_scenario(scenario).log.to_jsonl()
        if fresh != stored_text:
            stored_lines = stored_text.splitlines()
            fresh_lines = fresh.splitlines()
            limit = min(len(stored_lines), len(fresh_lines))
            for i in range(limit):
                if stored_lines[i] != fresh_lines[i]:
                    print(f"divergence at event {i}:")
                    print(f"  stored: {stored_lines[i]}")
                    print(f"  replay: {fresh_lines[i]}")
                    break
            else:
                print(
                    f"divergence in length: stored {len(stored_lines)} events,"
                    f" replay {len(fresh_lines)}"
                )
            return 1
        print(f"replay matches: {len(fresh.splitlines())} events byte-identical")

    return 1 if problems else 0


def cmd_audit(args: argparse.Namespace) -> int:
    log, _, problems = _load_log(args.log)
    if log is not None:
        problems = audit_log_consistency(log)
    if not problems:
        print(f"{args.log}: consistent ({len(log)} events)")
        return 0
    for problem in problems:
        print(f"{args.log}: {problem}")
    return 1


def _parse_window(text: str) -> tuple[int, int]:
    try:
        start_text, _, end_text = text.partition("..")
        start, end = int(start_text), int(end_text)
    except ValueError as exc:
        raise SystemExit(f"window must look like A..B, got {text!r}") from exc
    if end < start:
        raise SystemExit(f"window end {end} precedes start {start}")
    return start, end


def cmd_pigr(args: argparse.Namespace) -> int:
    log, _, problems = _load_log(args.log)
    if log is None:
        for problem in problems:
            print(f"audit: {problem}", file=sys.stderr)
        return 1
    window = _parse_window(args.window)
    try:
        review = generate_review(log, window=window)
    except ReviewNotRequiredError as exc:
        print(f"no review required for {window[0]}..{window[1]}: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(review.to_dict(), indent=2, sort_keys=True))
    return 0


def cmd_certify(args: argparse.Namespace) -> int:
    with open(resolve_script(args.suite), encoding="utf-8") as handle:
        data = json.load(handle)
    try:
        if args.protocol == "iat":
            report = run_iat(IatSuite.from_dict(data))
            text = render_iat_text(report)
        else:
            report = run_cec(CecSuite.from_dict(data))
            text = render_cec_text(report)
    except SuiteValidationError as exc:
        for problem in exc.problems:
            print(f"invalid: {problem}", file=sys.stderr)
        return 2
    print(text)
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmgov",
        description="Runtime governance engine for multi-agent formations.",
    )
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="logging verbosity (default: WARNING)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="execute a scenario script")
    run_parser.add_argument("script", help="script path or packaged scenario name")
    run_parser.add_argument("--seed", type=int, default=None, help="override the script seed")
    run_parser.add_argument("--export-csv", metavar="PATH", help="write the trajectory table")
    run_parser.add_argument("--export-radar", metavar="PATH", help="write radar-chart JSON")
    run_parser.add_argument("--export-log", metavar="PATH", help="write the event log as JSONL")
    run_parser.add_argument("--serve", action="store_true", help="serve the live control plane")
    run_parser.add_argument("--host", default="127.0.0.1", help="control plane bind host")
    run_parser.add_argument("--port", type=int, default=8741, help="control plane bind port")
    run_parser.add_argument(
        "--tick-seconds",
        type=float,
        default=1.0,
        help="wall-clock seconds per tick when serving (default: 1.0)",
    )
    run_parser.set_defaults(func=cmd_run)

    validate_parser = sub.add_parser("validate", help="statically check a script")
    validate_parser.add_argument("script", help="script path or packaged scenario name")
    validate_parser.set_defaults(func=cmd_validate)

    replay_parser = sub.add_parser("replay", help="audit a stored log and compare to a fresh run")
    replay_parser.add_argument("log", help="stored event log (JSONL)")
    replay_parser.add_argument(
        "--against", metavar="SCRIPT", help="script to re-execute for byte comparison"
    )
    replay_parser.set_defaults(func=cmd_replay)

    audit_parser = sub.add_parser("audit", help="check a stored event log for consistency")
    audit_parser.add_argument("log", help="stored event log (JSONL)")
    audit_parser.set_defaults(func=cmd_audit)

    pigr_parser = sub.add_parser("pigr", help="summarize review flags for a tick window")
    pigr_parser.add_argument("log", help="stored event log (JSONL)")
    pigr_parser.add_argument("--window", required=True, metavar="A..B", help="tick window")
    pigr_parser.set_defaults(func=cmd_pigr)

    certify_parser = sub.add_parser("certify", help="run an admission suite")
    certify_parser.add_argument("protocol", choices=["iat", "cec"], help="protocol to run")
    certify_parser.add_argument("suite", help="suite definition (JSON)")
    certify_parser.set_defaults(func=cmd_certify)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level))
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
