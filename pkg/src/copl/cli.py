"""copl command line: run or check .cop programs.

Exit codes: 0 success, 1 runtime error, 2 parse/analyze error, 64 usage.
Program output goes to stdout; diagnostics and traces go to stderr.
"""

import argparse
import os
import sys

from .errors import AnalyzeError, CoplError, CoplRuntimeError, LexError, ParseError
from .evaluator import Interpreter
from .lexer import tokenize
from .parser import parse
from .semantics import analyze

USAGE_EXIT = 64


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_arg_parser():
    parser = _Parser(prog="copl", description="concept-oriented language interpreter")
    sub = parser.add_subparsers(dest="command")

    run = sub.add_parser("run", help="execute a program")
    run.add_argument("path")
    run.add_argument("--trace", action="store_true",
                     help="emit access-phase trace lines to stderr")
    run.add_argument("--max-steps", type=int, default=10_000_000,
                     help="interpreter fuel (default 10^7 steps)")

    check = sub.add_parser("check", help="parse and analyze only")
    check.add_argument("path")

    dump = sub.add_parser("trace-dump", help="run with the trace on stdout")
    dump.add_argument("path")
    dump.add_argument("--max-steps", type=int, default=10_000_000)
    return parser


def _load(path):
    if not os.path.exists(path):
        raise _UsageError(f"no such file: {path}")
    with open(path, encoding="utf-8") as f:
        return f.read()


def _compile(source):
    program = parse(tokenize(source))
    table = analyze(program)
    return program, table


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    parser = build_arg_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _UsageError("a command is required (run | check | trace-dump)")
        source = _load(args.path)
    except _UsageError as e:
        stderr.write(f"usage error: {e}\n")
        stderr.write(parser.format_usage())
        return USAGE_EXIT

    try:
        program, table = _compile(source)
    except (LexError, ParseError, AnalyzeError) as e:
        stderr.write(e.diagnostic(args.path) + "\n")
        return 2

    for w in table.warnings:
        stderr.write(f"warning: {w}\n")

    if args.command == "check":
        return 0

    trace = args.command == "trace-dump" or getattr(args, "trace", False)
    if os.environ.get("COPL_TRACE") == "1":
        trace = True
    trace_sink = stdout if args.command == "trace-dump" else stderr
    interp = Interpreter(program, table,
                         stdout=stdout if args.command != "trace-dump" else _Null(),
                         stderr=trace_sink,
                         trace=trace, max_steps=args.max_steps)
    try:
        interp.run()
    except CoplRuntimeError as e:
        stderr.write(e.diagnostic(args.path) + "\n")
        return 1
    except CoplError as e:
        stderr.write(e.diagnostic(args.path) + "\n")
        return 1
    return 0


class _Null:
    def write(self, text):
        pass

    def flush(self):
        pass


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
