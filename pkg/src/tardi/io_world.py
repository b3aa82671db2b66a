"""The external world: primitive registry, I/O backends, and the effects trace.

Every side effect a program can cause flows through `perform`. The trace is
the ground truth of what actually happened to the world: it grows only when a
backend is really invoked, never when a recorded result is replayed.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

from . import values as V
from .values import EOF, OK, UNIT, Char, Handle, Str, Value, error, render_values


@dataclass(frozen=True)
class PrimitiveDescriptor:
    name: str
    n_inputs: int
    n_outputs: int
    effectful: bool


_PRIMITIVES = {
    d.name: d
    for d in [
        PrimitiveDescriptor("open_file", 2, 2, True),
        PrimitiveDescriptor("close_file", 1, 1, True),
        PrimitiveDescriptor("read_char", 1, 1, True),
        PrimitiveDescriptor("read_line", 1, 1, True),
        PrimitiveDescriptor("write_string", 2, 1, True),
        PrimitiveDescriptor("string_length", 1, 1, False),
        PrimitiveDescriptor("int_to_string", 1, 1, False),
        PrimitiveDescriptor("char_to_string", 1, 1, False),
        PrimitiveDescriptor("string_to_int", 1, 1, False),
    ]
}


def registry() -> list[PrimitiveDescriptor]:
    return list(_PRIMITIVES.values())


def find_primitive(name: str) -> PrimitiveDescriptor | None:
    return _PRIMITIVES.get(name)


@dataclass(frozen=True)
class TraceRecord:
    seq: int
    action_number: int
    name: str
    inputs: tuple[Value, ...]
    outputs: tuple[Value, ...]


class EffectsTrace:
    """Append-only log of real backend invocations."""

    def __init__(self):
        self.records: list[TraceRecord] = []

    def append(self, action_number: int, name: str, inputs, outputs) -> None:
        self.records.append(
            TraceRecord(len(self.records), action_number, name, tuple(inputs), tuple(outputs))
        )

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def dump_trace(trace: EffectsTrace) -> str:
    lines = []
    for r in trace.records:
        lines.append(
            f"{r.seq}\t{r.action_number}\t{r.name}\t{render_values(r.inputs)}\t{render_values(r.outputs)}"
        )
    return "\n".join(lines) + ("\n" if lines else "")


class IoBackend:
    """Interface every backend implements; owns the effects trace for its run."""

    def __init__(self):
        self.trace = EffectsTrace()

    def open(self, path: str, mode: str) -> tuple[Value, Value]:
        raise NotImplementedError

    def close(self, handle: int) -> Value:
        raise NotImplementedError

    def read_char(self, handle: int) -> Value:
        raise NotImplementedError

    def read_line(self, handle: int) -> Value:
        raise NotImplementedError

    def write_string(self, handle: int, text: str) -> Value:
        raise NotImplementedError


def perform(backend: IoBackend, descriptor: PrimitiveDescriptor, inputs, action_number=None):
    """Execute one primitive for real.

    Effectful primitives hit the backend and append to the trace; pure helpers
    never touch either. Backend failures come back as error-variant values so
    programs can branch on them.
    """
    inputs = list(inputs)
    if len(inputs) != descriptor.n_inputs:
        raise ValueError(f"{descriptor.name}: expected {descriptor.n_inputs} inputs, got {len(inputs)}")
    if not descriptor.effectful:
        return _pure_apply(descriptor.name, inputs)
    outputs = _effectful_apply(backend, descriptor.name, inputs)
    backend.trace.append(action_number, descriptor.name, inputs, outputs)
    return outputs


def _effectful_apply(backend: IoBackend, name: str, inputs: list[Value]) -> list[Value]:
    if name == "open_file":
        path, mode = inputs
        if not isinstance(path, Str) or not isinstance(mode, Str):
            return [error("open_file: path and mode must be strings"), UNIT]
        status, handle = backend.open(path.value, mode.value)
        return [status, handle]
    if name == "close_file":
        (h,) = inputs
        if not isinstance(h, Handle):
            return [error("close_file: not a handle")]
        return [backend.close(h.id)]
    if name == "read_char":
        (h,) = inputs
        if not isinstance(h, Handle):
            return [error("read_char: not a handle")]
        return [backend.read_char(h.id)]
    if name == "read_line":
        (h,) = inputs
        if not isinstance(h, Handle):
            return [error("read_line: not a handle")]
        return [backend.read_line(h.id)]
    if name == "write_string":
        h, text = inputs
        if not isinstance(h, Handle) or not isinstance(text, Str):
            return [error("write_string: expected handle and string")]
        return [backend.write_string(h.id, text.value)]
    raise ValueError(f"unknown effectful primitive {name}")


def _pure_apply(name: str, inputs: list[Value]) -> list[Value]:
    if name == "string_length":
        (s,) = inputs
        if not isinstance(s, Str):
            return [error("string_length: not a string")]
        return [V.Int(len(s.value))]
    if name == "int_to_string":
        (i,) = inputs
        if not isinstance(i, V.Int):
            return [error("int_to_string: not an int")]
        return [Str(str(i.value))]
    if name == "char_to_string":
        (c,) = inputs
        if not isinstance(c, Char):
            return [error("char_to_string: not a char")]
        return [Str(c.value)]
    if name == "string_to_int":
        (s,) = inputs
        if not isinstance(s, Str):
            return [error("string_to_int: not a string")]
        try:
            return [V.ok(V.Int(int(s.value, 10)))]
        except ValueError:
            return [error(f"string_to_int: bad integer {s.value!r}")]
    raise ValueError(f"unknown pure primitive {name}")


class ScriptedBackend(IoBackend):
    """Deterministic fake world: a stdin script plus an in-memory file map.

    Reading past the end of the script or a file yields eof, and so does
    reading a stream that has been closed (it is drained; closing twice is
    the operation that fails). Handle ids are never reused within a run, so
    a leaked handle stays visible. Optional failure injections force an
    error at a given backend-invocation index.
    """

    def __init__(self, stdin_script: str = "", files: dict[str, str] | None = None,
                 failure_injections: dict[int, str] | None = None):
        super().__init__()
        self.stdin_script = stdin_script
        self.files = dict(files or {})
        self.failure_injections = dict(failure_injections or {})
        self._contents: dict[int, str] = {0: stdin_script}
        self._cursors: dict[int, int] = {0: 0}
        self._writable: set[int] = {1}
        self._written: dict[int, list[str]] = {1: []}
        self._open: set[int] = {0, 1}
        self._next_id = 2
        self.opens = 0
        self.closes = 0
        self._op_index = 0

    @property
    def open_file_count(self) -> int:
        """Open handles excluding the stdin/stdout pseudo-handles."""
        return len([h for h in self._open if h >= 2])

    @property
    def stdout_text(self) -> str:
        return "".join(self._written[1])

    def written_text(self, handle: int) -> str:
        return "".join(self._written.get(handle, []))

    def _injected(self) -> str | None:
        msg = self.failure_injections.get(self._op_index)
        self._op_index += 1
        return msg

    def open(self, path: str, mode: str) -> tuple[Value, Value]:
        msg = self._injected()
        if msg is not None:
            return error(msg), UNIT
        if mode == "read":
            if path not in self.files:
                return error(f"no such file: {path}"), UNIT
            h = self._next_id
            self._next_id += 1
            self._contents[h] = self.files[path]
            self._cursors[h] = 0
        elif mode == "write":
            h = self._next_id
            self._next_id += 1
            self._writable.add(h)
            self._written[h] = []
        else:
            return error(f"bad mode: {mode}"), UNIT
        self._open.add(h)
        self.opens += 1
        return OK, Handle(h)

    def close(self, handle: int) -> Value:
        msg = self._injected()
        if msg is not None:
            return error(msg)
        if handle not in self._open:
            return error("close on closed stream")
        self._open.discard(handle)
        if handle >= 2:
            self.closes += 1
        return OK

    def read_char(self, handle: int) -> Value:
        msg = self._injected()
        if msg is not None:
            return error(msg)
        if handle not in self._contents:
            return error("not readable")
        if handle not in self._open:
            return EOF
        pos = self._cursors[handle]
        content = self._contents[handle]
        if pos >= len(content):
            return EOF
        self._cursors[handle] = pos + 1
        return Char(content[pos])

    def read_line(self, handle: int) -> Value:
        msg = self._injected()
        if msg is not None:
            return error(msg)
        if handle not in self._contents:
            return error("not readable")
        if handle not in self._open:
            return EOF
        pos = self._cursors[handle]
        content = self._contents[handle]
        if pos >= len(content):
            return EOF
        nl = content.find("\n", pos)
        if nl < 0:
            self._cursors[handle] = len(content)
            return Str(content[pos:])
        self._cursors[handle] = nl + 1
        return Str(content[pos:nl])

    def write_string(self, handle: int, text: str) -> Value:
        msg = self._injected()
        if msg is not None:
            return error(msg)
        if handle not in self._open:
            return error("write on closed stream")
        if handle not in self._writable:
            return error("not writable")
        self._written[handle].append(text)
        return OK


class OsBackend(IoBackend):
    """Host-filesystem backend confined to a sandbox root directory."""

    def __init__(self, root: str | Path):
        super().__init__()
        self.root = Path(root).resolve()
        self._files: dict[int, object] = {}
        self._open: set[int] = {0, 1}
        self._next_id = 2

    def _resolve(self, path: str) -> Path | None:
        candidate = (self.root / path).resolve()
        if candidate != self.root and self.root not in candidate.parents:
            return None
        return candidate

    def open(self, path: str, mode: str) -> tuple[Value, Value]:
        target = self._resolve(path)
        if target is None:
            return error(f"path escapes sandbox: {path}"), UNIT
        if mode not in ("read", "write"):
            return error(f"bad mode: {mode}"), UNIT
        try:
            f = open(target, "r" if mode == "read" else "w", encoding="utf-8")
        except OSError as exc:
            return error(f"open failed: {exc.strerror or exc}"), UNIT
        h = self._next_id
        self._next_id += 1
        self._files[h] = f
        self._open.add(h)
        return OK, Handle(h)

    def close(self, handle: int) -> Value:
        if handle not in self._open:
            return error("close on closed stream")
        self._open.discard(handle)
        f = self._files.pop(handle, None)
        if f is not None:
            f.close()
        return OK

    def _stream(self, handle: int):
        if handle == 0:
            return sys.stdin
        if handle == 1:
            return None
        return self._files.get(handle)

    def read_char(self, handle: int) -> Value:
        if handle not in self._open:
            return error("read on closed stream")
        stream = self._stream(handle)
        if stream is None:
            return error("not readable")
        ch = stream.read(1)
        return Char(ch) if ch else EOF

    def read_line(self, handle: int) -> Value:
        if handle not in self._open:
            return error("read on closed stream")
        stream = self._stream(handle)
        if stream is None:
            return error("not readable")
        line = stream.readline()
        if not line:
            return EOF
        return Str(line[:-1] if line.endswith("\n") else line)

    def write_string(self, handle: int, text: str) -> Value:
        if handle not in self._open:
            return error("write on closed stream")
        if handle == 1:
            sys.stdout.write(text)
            sys.stdout.flush()
            return OK
        if handle == 0:
            return error("not writable")
        f = self._files.get(handle)
        if f is None or f.mode != "w":
            return error("not writable")
        f.write(text)
        return OK


def unquote(text: str, where: str) -> str:
    """Decode one double-quoted string with the language's escape set."""
    text = text.strip()
    if len(text) < 2 or not text.startswith('"') or not text.endswith('"'):
        raise ValueError(f"{where}: expected a quoted string")
    body = text[1:-1]
    out: list[str] = []
    i = 0
    escapes = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", '"': '"', "'": "'", "0": "\0"}
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            if i + 1 >= len(body) or body[i + 1] not in escapes:
                raise ValueError(f"{where}: bad escape")
            out.append(escapes[body[i + 1]])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def load_script_config(path: str | Path) -> ScriptedBackend:
    """Build a ScriptedBackend from a config file.

    Format: an optional header line `stdin: "<script>"`, then one
    `file <path>: "<content>"` line per scripted file. Blank lines and lines
    starting with # are ignored.
    """
    stdin_script = ""
    files: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        where = f"{path}:{lineno}"
        if line.startswith("stdin:"):
            stdin_script = unquote(line[len("stdin:"):], where)
        elif line.startswith("file "):
            rest = line[len("file "):]
            sep = rest.find(":")
            if sep < 0:
                raise ValueError(f"{where}: expected `file <path>: \"...\"`")
            files[rest[:sep].strip()] = unquote(rest[sep + 1:], where)
        else:
            raise ValueError(f"{where}: unrecognized line")
    return ScriptedBackend(stdin_script=stdin_script, files=files)
