"""Runtime values of the Tardi language.

All values are immutable and compare structurally; they are the only things
stored in environments, answer blocks, and the effects trace.
"""

from __future__ import annotations

from dataclasses import dataclass

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


@dataclass(frozen=True, slots=True)
class Value:
    pass


@dataclass(frozen=True, slots=True)
class Unit(Value):
    pass


@dataclass(frozen=True, slots=True)
class Bool(Value):
    value: bool


@dataclass(frozen=True, slots=True)
class Int(Value):
    value: int


@dataclass(frozen=True, slots=True)
class Char(Value):
    value: str  # exactly one Unicode scalar


@dataclass(frozen=True, slots=True)
class Str(Value):
    value: str


@dataclass(frozen=True, slots=True)
class Eof(Value):
    pass


@dataclass(frozen=True, slots=True)
class Handle(Value):
    id: int


@dataclass(frozen=True, slots=True)
class Variant(Value):
    tag: str
    payload: tuple[Value, ...] = ()


UNIT = Unit()
EOF = Eof()
TRUE = Bool(True)
FALSE = Bool(False)
NO = Variant("no")
OK = Variant("ok")
STDIN_HANDLE = Handle(0)
STDOUT_HANDLE = Handle(1)


def boolean(flag: bool) -> Bool:
    return TRUE if flag else FALSE


def ok(*payload: Value) -> Variant:
    return Variant("ok", tuple(payload))


def yes(value: Value) -> Variant:
    return Variant("yes", (value,))


def error(message: str) -> Variant:
    return Variant("error", (Str(message),))


def is_error(value: Value) -> bool:
    return isinstance(value, Variant) and value.tag == "error"


_ESCAPES = {"\\": "\\\\", "\n": "\\n", "\t": "\\t", "\r": "\\r"}


def escape_string(text: str) -> str:
    out = []
    for ch in text:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ch == '"':
            out.append('\\"')
        else:
            out.append(ch)
    return '"' + "".join(out) + '"'


def escape_char(ch: str) -> str:
    if ch in _ESCAPES:
        return "'" + _ESCAPES[ch] + "'"
    if ch == "'":
        return "'\\''"
    return "'" + ch + "'"


def render(value: Value) -> str:
    """Render a value in the language's literal syntax (stable, bit-exact)."""
    if isinstance(value, Unit):
        return "unit"
    if isinstance(value, Bool):
        return "true" if value.value else "false"
    if isinstance(value, Int):
        return str(value.value)
    if isinstance(value, Char):
        return escape_char(value.value)
    if isinstance(value, Str):
        return escape_string(value.value)
    if isinstance(value, Eof):
        return "eof"
    if isinstance(value, Handle):
        return f"handle({value.id})"
    if isinstance(value, Variant):
        if not value.payload:
            return value.tag
        return value.tag + "(" + ", ".join(render(v) for v in value.payload) + ")"
    raise TypeError(f"not a value: {value!r}")


def render_values(values) -> str:
    return "[" + ", ".join(render(v) for v in values) + "]"
