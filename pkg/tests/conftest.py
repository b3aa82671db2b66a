import json
from pathlib import Path

import pytest

from tardi.checker import compile_source
from tardi.debugger import Session
from tardi.io_world import ScriptedBackend
from tardi.protocol import ProtocolServer
from tardi.tabling import TablingState

PROGRAMS = Path(__file__).parent / "programs"


def load_program(name: str) -> str:
    return (PROGRAMS / name).read_text(encoding="utf-8")


def line_of(source: str, needle: str) -> int:
    """1-based line number of the first source line containing `needle`."""
    for number, line in enumerate(source.splitlines(), start=1):
        if needle in line:
            return number
    raise AssertionError(f"{needle!r} not found in source")


def make_session(source: str, mode: str = "full", stdin: str = "",
                 files: dict | None = None, backend: ScriptedBackend | None = None) -> Session:
    if backend is None:
        backend = ScriptedBackend(stdin_script=stdin, files=files)
    checked = compile_source(source)
    return Session(checked, backend, TablingState(mode=mode),
                   source_path="program.tardi", source_text=source)


def run_to_exit(session: Session) -> None:
    """Continue to program exit, riding over any breakpoints hit on the way."""
    for _ in range(100):
        event = session.cmd_continue()
        if event.kind() == "exited":
            return
        assert event.kind() == "stopped" and event.reason == "breakpoint", (
            f"expected clean exit, got {event.kind()}: {event}"
        )
    raise AssertionError("program did not exit after 100 continues")


class ProtocolDriver:
    """Drives a session through the wire protocol, line by line."""

    def __init__(self, session: Session):
        self.server = ProtocolServer(session)
        self.session = session
        self.next_id = 0
        self.events: list[dict] = []

    def send(self, cmd: str, **args) -> dict:
        """Send one request; stash events; return the parsed response."""
        self.next_id += 1
        request = {"id": self.next_id, "cmd": cmd, "args": args}
        lines, _keep = self.server.handle_line(json.dumps(request))
        response = None
        for line in lines:
            message = json.loads(line)
            if "id" in message:
                assert response is None, "more than one response line"
                assert message["id"] == self.next_id
                response = message
            else:
                self.events.append(message)
        assert response is not None, "no response line"
        return response

    def ok(self, cmd: str, **args) -> dict:
        response = self.send(cmd, **args)
        assert response["ok"], f"{cmd} failed: {response.get('error')}"
        return response["body"]

    def take_events(self) -> list[dict]:
        events, self.events = self.events, []
        return events

    def frame_depth_of(self, proc: str, entry: int | None = None) -> int:
        """Innermost frame depth for a procedure (optionally at a given entry counter)."""
        frames = self.ok("stack")["frames"]
        for frame in reversed(frames):
            if frame["proc"] == proc and (entry is None or frame["io_counter_on_entry"] == entry):
                return frame["depth"]
        raise AssertionError(f"no active frame for {proc}")


@pytest.fixture
def protocol_session():
    def build(source: str, mode: str = "full", stdin: str = "", files: dict | None = None):
        return ProtocolDriver(make_session(source, mode=mode, stdin=stdin, files=files))

    return build
