"""``iotforge`` command line.

Exit codes: 0 success, 1 model errors (or warnings under
``--fail-on-warning``), 2 I/O or usage failure, 3 valid but not schedulable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from . import __version__
from .diagnostics import Diagnostic
from .parser import SourceFile
from .sched.report import dumps_report, format_report_text
from .workflow import OPERATIONS, UNSCHEDULABLE

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2
EXIT_UNSCHEDULABLE = 3

_COLORS = {"error": "31", "warning": "33", "SCHEDULABLE": "32", "NOT SCHEDULABLE": "31"}


class CliError(Exception):
    """An I/O or transport failure; reported on stderr with exit code 2."""


def use_color(stream) -> bool:
    setting = os.environ.get("IOTFORGE_COLOR", "auto").lower()
    if setting == "never" or "NO_COLOR" in os.environ:
        return False
    return hasattr(stream, "isatty") and stream.isatty()


def paint(text: str, key: str, stream) -> str:
    code = _COLORS.get(key)
    if code is None or not use_color(stream):
        return text
    return f"\033[{code}m{text}\033[0m"


def read_source(path: str) -> str:
    try:
        return SourceFile.read(path).text
    except OSError as exc:
        raise CliError(f"{path}: cannot read: {exc.strerror or exc}") from None
    except UnicodeDecodeError as exc:
        raise CliError(f"{path}: not valid UTF-8 (byte offset {exc.start})") from None


def run_outcome(operation: str, text: str, path: str, server: Optional[str]) -> dict:
    """Run one verb locally, or on a remote service when ``server`` is set."""
    if server is None:
        return OPERATIONS[operation](text, path).to_dict()
    import httpx

    url = f"{server.rstrip('/')}/v1/{operation}"
    try:
        resp = httpx.post(url, json={"model_text": text, "operation": operation}, timeout=60.0)
    except httpx.HTTPError as exc:
        raise CliError(f"{url}: {exc}") from None
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        raise CliError(f"{url}: HTTP {resp.status_code}: {detail}")
    return resp.json()


def _diagnostics(outcome: dict) -> List[Diagnostic]:
    return [Diagnostic(**d) for d in outcome["diagnostics"]]


def _print_diagnostics(diags: Sequence[Diagnostic], path: str, stream) -> None:
    for d in diags:
        line = d.format(path)
        stream.write(paint(line, d.severity, stream) + "\n")


def _blocked(diags: Sequence[Diagnostic], fail_on_warning: bool) -> bool:
    return any(d.is_error or fail_on_warning for d in diags)


def cmd_validate(args) -> int:
    results: Dict[str, list] = {}
    code = EXIT_OK
    for path in args.paths:
        try:
            outcome = run_outcome("validate", read_source(path), path, args.server)
        except CliError as exc:
            print(f"iotforge: {exc}", file=sys.stderr)
            code = EXIT_IO
            continue
        diags = _diagnostics(outcome)
        results[path] = outcome["diagnostics"]
        if _blocked(diags, args.fail_on_warning) and code == EXIT_OK:
            code = EXIT_INVALID
        if args.format == "text":
            _print_diagnostics(diags, path, sys.stdout)
            if not diags:
                print(f"{path}: ok")
    if args.format == "json":
        # one path: the bare diagnostics array; several: keyed by path
        if len(args.paths) > 1:
            print(json.dumps(results, indent=2))
        elif results:
            print(json.dumps(results[args.paths[0]], indent=2))
    return code


def _report_failure(outcome: dict, path: str, fmt: str) -> int:
    diags = _diagnostics(outcome)
    if fmt == "json":
        print(json.dumps(outcome["diagnostics"], indent=2))
    else:
        _print_diagnostics(diags, path, sys.stderr)
    return EXIT_INVALID


def write_units(units: List[dict], directory: Path) -> List[Path]:
    """Write each unit atomically (temp file + rename) under ``directory``."""
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for unit in units:
        target = directory / unit["file_name"]
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{unit['file_name']}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(unit["text"])
            os.replace(tmp, target)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        written.append(target)
    return written


def cmd_generate(args) -> int:
    outcome = run_outcome("generate", read_source(args.path), args.path, args.server)
    diags = _diagnostics(outcome)
    if outcome["units"] is None or _blocked(diags, args.fail_on_warning):
        return _report_failure(outcome, args.path, args.format)
    if args.format == "text":
        _print_diagnostics(diags, args.path, sys.stderr)
    units = outcome["units"]
    if args.unit is not None:
        units = [u for u in units if u["file_name"] in (args.unit, f"{args.unit}.thingml")]
        if not units:
            raise CliError(f"no generated unit named {args.unit!r}")
    if args.stdout:
        for i, unit in enumerate(units):
            if len(units) > 1:
                sys.stdout.write(("\n" if i else "") + f"// file: {unit['file_name']}\n")
            sys.stdout.write(unit["text"])
        return EXIT_OK
    try:
        written = write_units(units, Path(args.out) / outcome["system"])
    except OSError as exc:
        raise CliError(f"cannot write to {args.out}: {exc.strerror or exc}") from None
    if args.format == "json":
        print(json.dumps([str(p) for p in written], indent=2))
    else:
        for p in written:
            print(p)
    return EXIT_OK


def cmd_analyze(args) -> int:
    outcome = run_outcome("analyze", read_source(args.path), args.path, args.server)
    diags = _diagnostics(outcome)
    if outcome["report"] is None or _blocked(diags, args.fail_on_warning):
        return _report_failure(outcome, args.path, args.format)
    report = outcome["report"]
    if args.format == "json":
        sys.stdout.write(dumps_report(report))
    else:
        _print_diagnostics(diags, args.path, sys.stderr)
        _write_report_text(report)
    return EXIT_UNSCHEDULABLE if outcome["status"] == UNSCHEDULABLE else EXIT_OK


def _write_report_text(report: dict) -> None:
    text = format_report_text(report)
    head, _, rest = text.partition("\n")
    verdict = report["verdict"]
    head = head[: -len(verdict)] + paint(verdict, verdict, sys.stdout)
    sys.stdout.write(head + "\n" + rest)


_REPORT_KEYS = ("system", "verdict", "cores")


def cmd_report(args) -> int:
    text = read_source(args.path)
    try:
        report = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(f"{args.path}: not JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(report, dict) or any(k not in report for k in _REPORT_KEYS):
        raise CliError(f"{args.path}: not an analysis report")
    try:
        if args.format == "json":
            sys.stdout.write(dumps_report(report))
        else:
            _write_report_text(report)
    except (KeyError, TypeError, ValueError, AttributeError):
        raise CliError(f"{args.path}: malformed analysis report") from None
    return EXIT_OK


def cmd_serve(args) -> int:
    from .server import serve

    serve(host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iotforge", description="Validate, generate and analyse IoT component models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--server", metavar="URL",
                        help="send validate/generate/analyze to a running iotforge service")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--fail-on-warning", action="store_true", help="treat warnings as errors")

    p = sub.add_parser("validate", parents=[common], help="check models and print diagnostics")
    p.add_argument("paths", nargs="+", metavar="PATH")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("generate", parents=[common], help="emit ThingML under OUT/<system>/")
    p.add_argument("path", metavar="PATH")
    p.add_argument("--out", default="out", help="output root (default: out)")
    p.add_argument("--stdout", action="store_true", help="print units instead of writing files")
    p.add_argument("--unit", metavar="NAME", help="only this unit, e.g. datatypes or Node.thingml")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("analyze", parents=[common], help="schedulability analysis")
    p.add_argument("path", metavar="PATH")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", parents=[common], help="pretty-print a saved JSON report")
    p.add_argument("path", metavar="REPORT")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None, help="default: $IOTFORGE_PORT or 8470")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"iotforge: {exc}", file=sys.stderr)
        return EXIT_IO
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
