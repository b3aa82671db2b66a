"""Tardi: a tiny single-assignment language with a time-travel debugger.

The debugger's retry command jumps back to the start of any active call.
Retries are safe across I/O because every I/O action is idempotent: its first
execution performs and records the effect, and re-execution after a retry
replays the recorded result without touching the outside world.
"""

from .checker import CheckedProgram, CheckError, CheckFailure, check_program, compile_source
from .debugger import Session
from .io_world import OsBackend, ScriptedBackend, dump_trace, registry
from .lexer import LexError, tokenize
from .parser import ParseError, parse_program
from .tabling import TablingState
from .values import render

__version__ = "0.1.0"

__all__ = [
    "CheckedProgram",
    "CheckError",
    "CheckFailure",
    "LexError",
    "OsBackend",
    "ParseError",
    "ScriptedBackend",
    "Session",
    "TablingState",
    "check_program",
    "compile_source",
    "dump_trace",
    "parse_program",
    "registry",
    "render",
    "tokenize",
]
