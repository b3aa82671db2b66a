"""Newline-delimited JSON protocol for driving a session remotely.

One request line in, zero or more event lines plus exactly one response line
out. Requests are `{"id": int, "cmd": str, "args": {...}}`; responses echo the
id and carry `ok` plus `body` or `error`; events are `{"type": ..., "payload": ...}`.
"""

from __future__ import annotations

import json
import selectors
import socket
import sys

from . import vm
from .debugger import (
    NoSuchLocation,
    NotTabled,
    Session,
    SessionStateError,
    UnboundVariable,
    WarningEvent,
)
from .tabling import TablingError
from .values import render
from .vm import BadDepth

PAGE_SIZE = 20

# Commands that stay available after a divergence halt.
INSPECTION_COMMANDS = {
    "stack", "print", "io-actions", "io-table", "trace-dump", "source", "info", "safety", "quit",
}

COMMANDS = {
    "break", "continue", "step", "next", "finish", "retry", "safety", "stack", "print",
    "io-actions", "io-table", "table", "trace-dump", "source", "info", "quit",
}


def encode(message: dict) -> str:
    """Canonical one-line encoding; decode(encode(m)) == m for all messages."""
    return json.dumps(message, sort_keys=True, separators=(",", ":"))

def decode(line: str) -> dict:
    message = json.loads(line)
    if not isinstance(message, dict):
        raise ValueError("message is not an object")
    return message


def encode_event(event) -> str:
    return encode({"type": event.kind(), "payload": event.to_payload()})


def encode_response(request_id, ok: bool, body=None, error: str | None = None) -> str:
    message = {"id": request_id, "ok": ok}
    if ok:
        message["body"] = body
    else:
        message["error"] = error
    return encode(message)


def _frames_payload(session: Session) -> dict:
    frames = []
    for f in session.cmd_stack():
        frames.append(
            {
                "depth": f.depth,
                "proc": f.proc,
                "call_site": None if f.call_site is None else {"line": f.call_site.line, "col": f.call_site.col},
                "io_counter_on_entry": f.io_counter_on_entry,
            }
        )
    return {"frames": frames}


def _stop_payload(session: Session, event) -> dict:
    kind = event.kind()
    payload = {"status": "stopped", "event": kind}
    if kind == "stopped":
        payload.update(event.to_payload())
    elif kind == "exited":
        payload["status"] = "exited"
        payload["code"] = event.to_payload()["code"]
    elif kind == "divergence":
        payload["status"] = "divergence"
        payload.update(event.to_payload())
    return payload


class ProtocolServer:
    """Stateless line handler; transports feed it lines and write back what it returns."""

    def __init__(self, session: Session):
        self.session = session
        self.session.take_events()  # drop the initial entry event from the buffer
        self.closed = False

    def handle_line(self, line: str) -> tuple[list[str], bool]:
        """Returns (output lines, keep_serving)."""
        line = line.strip()
        if not line:
            return [], True
        try:
            message = decode(line)
        except (json.JSONDecodeError, ValueError):
            return [encode_response(None, False, error="parse")], True
        request_id = message.get("id")
        cmd = message.get("cmd")
        args = message.get("args") or {}
        if not isinstance(cmd, str) or cmd not in COMMANDS:
            return [encode_response(request_id, False, error=f"unknown command: {cmd}")], True
        if self.session.halted and cmd not in INSPECTION_COMMANDS:
            lines = self._drain()
            lines.append(encode_response(
                request_id, False,
                error="session halted after divergence; only inspection and quit are allowed"))
            return lines, True
        try:
            body = self._dispatch(cmd, args)
        except (SessionStateError, BadDepth, NoSuchLocation, UnboundVariable,
                NotTabled, TablingError, ValueError) as exc:
            lines = self._drain()
            lines.append(encode_response(request_id, False, error=str(exc)))
            return lines, True
        lines = self._drain()
        lines.append(encode_response(request_id, True, body=body))
        return lines, cmd != "quit"

    def _drain(self) -> list[str]:
        return [encode_event(e) for e in self.session.take_events()]

    def _dispatch(self, cmd: str, args: dict):
        session = self.session
        if cmd == "break":
            return {"breakpoints": session.cmd_break(str(args["spec"]))}
        if cmd == "continue":
            return _stop_payload(session, session.cmd_continue())
        if cmd == "step":
            return _stop_payload(session, session.cmd_step())
        if cmd == "next":
            return _stop_payload(session, session.cmd_next())
        if cmd == "finish":
            return _stop_payload(session, session.cmd_finish())
        if cmd == "retry":
            depth = int(args["depth"])
            force = bool(args.get("force", False))
            report = session.safety_check(depth)
            event = session.cmd_retry(depth, confirm_unsafe=force)
            body = report.to_payload()
            if isinstance(event, WarningEvent):
                body["needs_confirm"] = True
                body["retried"] = False
            else:
                body["needs_confirm"] = False
                body["retried"] = True
            return body
        if cmd == "safety":
            return session.safety_check(int(args["depth"])).to_payload()
        if cmd == "stack":
            return _frames_payload(session)
        if cmd == "print":
            name = str(args["name"])
            return {"name": name, "value": render(session.cmd_print(name))}
        if cmd == "io-actions":
            depth = int(args["depth"])
            offset = int(args.get("offset", 0))
            limit = int(args.get("limit", PAGE_SIZE))
            summary = session.list_io_actions(depth)
            window = summary.actions[offset : offset + limit]
            return {
                "entry": summary.entry_counter,
                "exit": summary.exit_counter,
                "total": len(summary.actions),
                "offset": offset,
                "actions": [r.to_payload() for r in window],
            }
        if cmd == "io-table":
            return {"text": session.cmd_io_table()}
        if cmd == "table":
            session.cmd_table(str(args["action"]))
            return session.region_payload()
        if cmd == "trace-dump":
            return {"text": session.trace_text()}
        if cmd == "source":
            return {"path": session.source_path, "text": session.source_text}
        if cmd == "info":
            machine = session.machine
            return {
                "status": machine.status,
                "counter": session.tabling.counter,
                "region": session.region_payload(),
                "halted": session.halted,
                "finished": session.finished,
                "exit_code": session.exit_code,
                "stack_height": len(machine.stack),
                "location": _location(session),
            }
        if cmd == "quit":
            return {"bye": True}
        raise ValueError(f"unknown command: {cmd}")


def _location(session: Session):
    loc = vm.current_location(session.machine)
    if loc is None:
        return None
    return {"proc": loc.proc, "line": loc.line, "col": loc.col}


def serve(session: Session, endpoint: str) -> int:
    """Serve one session over stdio or a loopback TCP port.

    At most one client is attached at a time; a concurrent second connection
    is refused. A dropped connection leaves the session stopped; a later
    client may reattach."""
    if endpoint == "stdio":
        server = ProtocolServer(session)
        for raw in sys.stdin:
            lines, keep_going = server.handle_line(raw)
            for line in lines:
                sys.stdout.write(line + "\n")
            sys.stdout.flush()
            if not keep_going:
                break
        return session.exit_code
    if endpoint.startswith("tcp:"):
        return _serve_tcp(session, int(endpoint[4:]))
    raise ValueError(f"bad serve endpoint: {endpoint}")


def _serve_tcp(session: Session, port: int) -> int:
    server = ProtocolServer(session)
    listener = socket.create_server(("127.0.0.1", port))
    actual_port = listener.getsockname()[1]
    print(f"listening on 127.0.0.1:{actual_port}", flush=True)
    selector = selectors.DefaultSelector()
    selector.register(listener, selectors.EVENT_READ)
    client: socket.socket | None = None
    buffer = b""
    serving = True
    try:
        while serving:
            for key, _ in selector.select():
                if key.fileobj is listener:
                    conn, _addr = listener.accept()
                    if client is not None:
                        conn.sendall((encode({"type": "error", "payload": {"reason": "session busy"}}) + "\n").encode())
                        conn.close()
                        continue
                    client = conn
                    buffer = b""
                    selector.register(conn, selectors.EVENT_READ)
                    continue
                data = key.fileobj.recv(65536)
                if not data:
                    selector.unregister(key.fileobj)
                    key.fileobj.close()
                    client = None
                    continue
                buffer += data
                while b"\n" in buffer:
                    raw, buffer = buffer.split(b"\n", 1)
                    lines, keep_going = server.handle_line(raw.decode("utf-8"))
                    if client is not None:
                        payload = "".join(line + "\n" for line in lines)
                        client.sendall(payload.encode("utf-8"))
                    if not keep_going:
                        serving = False
                        break
    finally:
        if client is not None:
            client.close()
        listener.close()
        selector.close()
    return session.exit_code
