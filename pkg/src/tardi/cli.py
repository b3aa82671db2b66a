"""Command line entry point: program loading, the interactive REPL, and the
protocol server launcher.

Exit codes: 0 normal, 1 usage or load error, 2 program fault, 3 divergence halt.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

from .checker import CheckFailure, compile_source
from .debugger import (
    DivergenceEvent,
    ExitedEvent,
    IoActionEvent,
    NoSuchLocation,
    NotTabled,
    RetriedEvent,
    Session,
    SessionStateError,
    StoppedEvent,
    UnboundVariable,
    WarningEvent,
)
from .io_world import OsBackend, load_script_config
from .lexer import LexError
from .parser import ParseError
from .protocol import PAGE_SIZE, serve
from .tabling import TablingError, TablingState
from .values import render, render_values
from .vm import BadDepth

USAGE = """usage: tardi debug <program.tardi> [options]

options:
  --table-io=MODE     off | full | manual        (default: full)
  --backend=SPEC      os:<sandbox dir> | script:<config file>   (default: os:.)
  --serve=ENDPOINT    stdio | tcp:<port>         (default: run the interactive REPL)
  -h, --help          show this help

debugger commands:
  break <proc|file:line|line>   set a breakpoint
  continue | step | next | finish
  retry <depth> [--force]       jump back to the start of an active call
  stack                         show frames with their I/O counters
  print <var>                   show a binding in the current frame
  io-actions <depth> [offset]   list recorded I/O actions of a call
  io-table                      dump the I/O action table
  table start|stop              control tabling in manual mode
  trace-dump <file>             write the effects trace
  quit
"""


class UsageError(Exception):
    pass


@dataclass
class LaunchConfig:
    program: str
    mode: str = "full"
    backend: str = "os:."
    serve: str = "none"


def parse_cli(argv: list[str]) -> LaunchConfig:
    if not argv or argv[0] in ("-h", "--help"):
        raise UsageError("help")
    if argv[0] != "debug":
        raise UsageError(f"unknown subcommand: {argv[0]}")
    program: str | None = None
    mode = "full"
    backend = "os:."
    serve_endpoint = "none"
    i = 1
    while i < len(argv):
        arg = argv[i]
        if arg in ("-h", "--help"):
            raise UsageError("help")
        if arg.startswith("--table-io"):
            mode, i = _flag_value(argv, i, "--table-io")
            if mode not in ("off", "full", "manual"):
                raise UsageError(f"invalid --table-io: {mode}")
        elif arg.startswith("--backend"):
            backend, i = _flag_value(argv, i, "--backend")
            if not backend.startswith(("os:", "script:")):
                raise UsageError(f"invalid --backend: {backend}")
        elif arg.startswith("--serve"):
            serve_endpoint, i = _flag_value(argv, i, "--serve")
            if serve_endpoint != "stdio" and not _valid_tcp(serve_endpoint):
                raise UsageError(f"invalid --serve: {serve_endpoint}")
        elif arg.startswith("-"):
            raise UsageError(f"unknown option: {arg}")
        elif program is None:
            program = arg
            i += 1
        else:
            raise UsageError(f"unexpected argument: {arg}")
    if program is None:
        raise UsageError("no program path given")
    return LaunchConfig(program=program, mode=mode, backend=backend, serve=serve_endpoint)


def _flag_value(argv: list[str], i: int, name: str) -> tuple[str, int]:
    arg = argv[i]
    if arg.startswith(name + "="):
        return arg[len(name) + 1 :], i + 1
    if arg == name:
        if i + 1 >= len(argv):
            raise UsageError(f"{name} needs a value")
        return argv[i + 1], i + 2
    raise UsageError(f"unknown option: {arg}")


def _valid_tcp(endpoint: str) -> bool:
    return endpoint.startswith("tcp:") and endpoint[4:].isdigit()


def _build_session(config: LaunchConfig) -> Session:
    source = Path(config.program).read_text(encoding="utf-8")
    checked = compile_source(source)
    if config.backend.startswith("script:"):
        backend = load_script_config(config.backend[len("script:"):])
    else:
        backend = OsBackend(config.backend[len("os:"):])
    tabling = TablingState(mode=config.mode)
    return Session(checked, backend, tabling, source_path=config.program, source_text=source)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        config = parse_cli(argv)
    except UsageError as exc:
        if str(exc) == "help":
            print(USAGE)
            return 0
        print(f"error: {exc}", file=sys.stderr)
        print(USAGE, file=sys.stderr)
        return 1
    try:
        session = _build_session(config)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (LexError, ParseError) as exc:
        print(f"{config.program}:{exc}", file=sys.stderr)
        return 1
    except CheckFailure as exc:
        for err in exc.errors:
            print(f"{config.program}:{err}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if config.serve == "none":
        return repl(session)
    return serve(session, config.serve)


# --- REPL ---


def _print_event(session: Session, event) -> None:
    if isinstance(event, StoppedEvent):
        where = str(event.location) if event.location is not None else "(before return)"
        line = f"stopped ({event.reason}) at {where}"
        if event.detail:
            line += f": {event.detail}"
        print(line)
        _print_source_line(session, event)
    elif isinstance(event, IoActionEvent):
        r = event.record
        suffix = " (replayed)" if r.replayed else ""
        print(f"io #{r.number} {r.name}{render_values(r.inputs)} -> {render_values(r.outputs)}{suffix}")
    elif isinstance(event, WarningEvent):
        print(f"warning: {event.text}")
    elif isinstance(event, DivergenceEvent):
        print(f"divergence: {event.details}")
        print("session halted; only inspection commands and quit are allowed")
    elif isinstance(event, ExitedEvent):
        print(f"program exited with code {event.code}")
    elif isinstance(event, RetriedEvent):
        print(f"retried to frame {event.depth}")


def _print_source_line(session: Session, event: StoppedEvent) -> None:
    if event.location is None or session.source_text is None:
        return
    lines = session.source_text.splitlines()
    number = event.location.line
    if 1 <= number <= len(lines):
        print(f"  {number} | {lines[number - 1]}")


def _drain(session: Session) -> None:
    for event in session.take_events():
        _print_event(session, event)


def repl(session: Session) -> int:
    interactive = sys.stdin.isatty()
    _drain(session)
    while True:
        try:
            if interactive:
                print("(tardi) ", end="", flush=True)
            line = input()
        except EOFError:
            break
        parts = line.split()
        if not parts:
            continue
        cmd, args = parts[0], parts[1:]
        if cmd in ("quit", "q", "exit"):
            break
        try:
            _run_command(session, cmd, args)
        except (SessionStateError, BadDepth, NoSuchLocation, UnboundVariable,
                NotTabled, TablingError, ValueError) as exc:
            _drain(session)
            print(f"error: {exc}")
            continue
        _drain(session)
    return session.exit_code


def _run_command(session: Session, cmd: str, args: list[str]) -> None:
    if cmd in ("break", "b"):
        if not args:
            raise ValueError("break needs a location")
        session.cmd_break(args[0])
        print(f"breakpoints: {', '.join(session.breakpoint_specs())}")
    elif cmd in ("continue", "c"):
        session.cmd_continue()
    elif cmd in ("step", "s"):
        session.cmd_step()
    elif cmd in ("next", "n"):
        session.cmd_next()
    elif cmd == "finish":
        session.cmd_finish()
    elif cmd == "retry":
        if not args:
            raise ValueError("retry needs a frame depth")
        depth = int(args[0])
        force = "--force" in args
        event = session.cmd_retry(depth, confirm_unsafe=force)
        if isinstance(event, WarningEvent):
            _drain(session)
            print("proceed? [y/N] ", end="", flush=True)
            try:
                answer = input()
            except EOFError:
                answer = ""
            if answer.strip().lower() in ("y", "yes"):
                session.cmd_retry(depth, confirm_unsafe=True)
            else:
                print("retry aborted")
    elif cmd in ("stack", "bt"):
        for f in session.cmd_stack():
            site = f"called at {f.call_site}" if f.call_site is not None else "entry"
            print(f"#{f.depth} {f.proc} ({site}) io_counter_on_entry={f.io_counter_on_entry}")
    elif cmd in ("print", "p"):
        if not args:
            raise ValueError("print needs a variable name")
        print(f"{args[0]} = {render(session.cmd_print(args[0]))}")
    elif cmd == "io-actions":
        if not args:
            raise ValueError("io-actions needs a frame depth")
        depth = int(args[0])
        offset = int(args[1]) if len(args) > 1 else 0
        summary = session.list_io_actions(depth)
        total = len(summary.actions)
        print(f"actions [{summary.entry_counter}, {summary.exit_counter}) total {total}")
        for record in summary.actions[offset : offset + PAGE_SIZE]:
            suffix = " replayed" if record.replayed else ""
            print(f"  #{record.number} {record.name}{render_values(record.inputs)}"
                  f" -> {render_values(record.outputs)}{suffix}")
        shown = min(total, offset + PAGE_SIZE)
        if shown < total:
            print(f"  ... {total - shown} more (io-actions {depth} {shown})")
    elif cmd == "io-table":
        print(session.cmd_io_table(), end="")
    elif cmd == "table":
        if not args or args[0] not in ("start", "stop"):
            raise ValueError("usage: table start|stop")
        session.cmd_table(args[0])
        region = session.region_payload()
        print(f"tabling {args[0]}: region [{region['start']}, {region['end']})")
    elif cmd == "trace-dump":
        if not args:
            raise ValueError("trace-dump needs a file path")
        Path(args[0]).write_text(session.trace_text(), encoding="utf-8")
        print(f"trace written to {args[0]}")
    elif cmd == "help":
        print(USAGE)
    else:
        print(f"unknown command: {cmd}")
