import json
import socket
import subprocess
import sys
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tardi.protocol import ProtocolServer, decode, encode

from conftest import PROGRAMS, ProtocolDriver, line_of, load_program, make_session

READS = """
proc reads(k) {
    if (k == 0) {
        return;
    } else {
        read_char(stdin);
        reads(k - 1);
        return;
    }
}
"""


def driver(source, **kwargs) -> ProtocolDriver:
    return ProtocolDriver(make_session(source, **kwargs))


# --- message encoding ---

_json_scalars = st.one_of(st.none(), st.booleans(), st.integers(), st.text())
_json_values = st.recursive(
    _json_scalars,
    lambda child: st.one_of(st.lists(child, max_size=3), st.dictionaries(st.text(), child, max_size=3)),
    max_leaves=8,
)
_messages = st.one_of(
    st.fixed_dictionaries({"id": st.integers(), "cmd": st.text(), "args": _json_values}),
    st.fixed_dictionaries({"id": st.integers(), "ok": st.booleans(), "body": _json_values}),
    st.fixed_dictionaries({"type": st.text(), "payload": _json_values}),
)


@settings(max_examples=200, deadline=None)
@given(_messages)
def test_message_round_trip(message):
    assert decode(encode(message)) == message
    line = encode(message)
    assert encode(decode(line)) == line


def test_malformed_json_gets_parse_error():
    server = ProtocolServer(make_session("proc main() { }"))
    lines, keep = server.handle_line("this is not json")
    assert keep
    (response,) = [json.loads(l) for l in lines]
    assert response == {"id": None, "ok": False, "error": "parse"}


def test_unknown_command_reports_and_continues():
    d = driver("proc main() { }")
    response = d.send("frobnicate")
    assert not response["ok"]
    assert "unknown command" in response["error"]


def test_ids_echo_back_unchanged():
    server = ProtocolServer(make_session("proc main() { }"))
    lines, _ = server.handle_line(json.dumps({"id": 987, "cmd": "stack"}))
    assert json.loads(lines[-1])["id"] == 987


def test_stack_body_carries_counters():
    source = READS + "proc main() {\n    reads(2);\n    let x = 1;\n}"
    d = driver(source, stdin="ab")
    d.ok("break", spec=line_of(source, "let x = 1;"))
    d.ok("continue")
    frames = d.ok("stack")["frames"]
    assert frames == [
        {"depth": 0, "proc": "main", "call_site": None, "io_counter_on_entry": 0}
    ]


def test_break_spec_coerced_to_string():
    d = driver("proc main() {\n    let x = 1;\n    let y = 2;\n}")
    body = d.ok("break", spec=3)
    assert body["breakpoints"] == ["line 3"]


def test_retry_response_unsafe_then_forced():
    source = READS + "proc main() {\n    reads(3);\n    let x = 1;\n}"
    d = driver(source, mode="off", stdin="abcdef")
    d.ok("break", spec=line_of(source, "let x = 1;"))
    d.ok("continue")
    body = d.ok("retry", depth=0)
    assert body["verdict"] == "unsafe"
    assert body["n_actions"] == 3
    assert body["needs_confirm"] is True
    assert body["retried"] is False
    warnings = [e for e in d.take_events() if e["type"] == "warning"]
    assert warnings and warnings[-1]["payload"]["requires_confirmation"]
    # no state change happened
    assert d.ok("info")["counter"] == 3
    body = d.ok("retry", depth=0, force=True)
    assert body["retried"] is True and body["needs_confirm"] is False
    assert d.ok("info")["counter"] == 0


def test_retry_response_safe():
    source = READS + "proc main() {\n    reads(2);\n    let x = 1;\n}"
    d = driver(source, stdin="ab")
    d.ok("break", spec=line_of(source, "let x = 1;"))
    d.ok("continue")
    body = d.ok("retry", depth=0)
    assert body == {
        "target_depth": 0,
        "entry_counter": 0,
        "current_counter": 2,
        "n_actions": 2,
        "all_tabled": True,
        "verdict": "safe",
        "reason": None,
        "needs_confirm": False,
        "retried": True,
    }


def test_io_action_events_forwarded_with_replay_flag():
    source = READS + "proc main() {\n    reads(2);\n    let x = 1;\n}"
    d = driver(source, stdin="ab")
    d.ok("break", spec=line_of(source, "let x = 1;"))
    d.ok("continue")
    d.take_events()
    d.ok("retry", depth=0)
    d.ok("continue")
    io_events = [e for e in d.take_events() if e["type"] == "io_action"]
    assert [e["payload"]["replayed"] for e in io_events] == [True, True]
    assert [e["payload"]["n"] for e in io_events] == [0, 1]


def test_io_actions_paging():
    source = READS + "proc main() {\n    reads(45);\n    let x = 1;\n}"
    d = driver(source, stdin="a" * 45)
    d.ok("break", spec=line_of(source, "let x = 1;"))
    d.ok("continue")
    first = d.ok("io-actions", depth=0)
    assert first["total"] == 45 and len(first["actions"]) == 20
    second = d.ok("io-actions", depth=0, offset=20)
    assert len(second["actions"]) == 20
    third = d.ok("io-actions", depth=0, offset=40)
    assert len(third["actions"]) == 5
    numbers = [a["n"] for a in first["actions"] + second["actions"] + third["actions"]]
    assert numbers == list(range(45))


def test_every_debugger_operation_reachable():
    source = READS + "proc work() {\n    reads(2);\n    let t = 1;\n    return;\n}\nproc main() {\n    work();\n    let x = 1;\n}"
    d = driver(source, mode="manual", stdin="abcd")
    assert d.ok("source")["text"] == source
    assert d.ok("info")["status"] == "stopped"
    d.ok("break", spec="work")
    d.ok("continue")
    d.ok("table", action="start")
    d.ok("step")    # into reads
    d.ok("finish")  # run reads to its exit, back in work
    d.ok("step")    # let t = 1
    assert d.ok("print", name="t")["value"] == "1"
    d.ok("next")    # the return, back in main
    assert d.ok("safety", depth=0)["verdict"] == "safe"
    d.ok("stack")
    assert d.ok("io-actions", depth=0, offset=0, limit=5)["total"] == 2
    d.ok("io-table")
    d.ok("table", action="stop")
    d.ok("trace-dump")
    assert d.ok("retry", depth=0, force=True)["retried"] is True
    response = d.send("quit")
    assert response["ok"] and response["body"] == {"bye": True}


def test_halted_session_allows_inspection_only():
    source = load_program("divergent.tardi")
    d = driver(source, mode="manual", stdin="xy")
    d.ok("step")
    d.ok("step")
    d.ok("table", action="start")
    d.ok("step")
    d.ok("step")
    d.ok("retry", depth=0, force=True)
    body = d.ok("continue")
    assert body["status"] == "divergence"
    divergences = [e for e in d.take_events() if e["type"] == "divergence"]
    assert len(divergences) == 1
    assert not d.send("continue")["ok"]
    assert not d.send("retry", depth=0)["ok"]
    assert d.ok("stack")["frames"]
    assert d.ok("info")["halted"] is True
    assert "write_string" in d.ok("io-table")["text"]  # the read predates the region
    assert d.send("quit")["ok"]


def test_errors_come_back_as_failures_not_crashes():
    d = driver("proc main() { let x = 1; }")
    assert not d.send("retry", depth=9)["ok"]
    assert not d.send("print", name="ghost")["ok"]
    assert not d.send("break", spec="zzz")["ok"]
    assert not d.send("table", action="start")["ok"]  # full mode


# --- TCP transport ---


def _connect(port, timeout=5.0):
    deadline = time.monotonic() + timeout
    while True:
        try:
            return socket.create_connection(("127.0.0.1", port), timeout=1.0)
        except OSError:
            if time.monotonic() > deadline:
                raise
            time.sleep(0.05)


class _LineClient:
    def __init__(self, sock):
        self.sock = sock
        self.file = sock.makefile("r", encoding="utf-8")

    def request(self, message: dict) -> tuple[list[dict], dict]:
        self.sock.sendall((json.dumps(message) + "\n").encode())
        events = []
        while True:
            line = self.file.readline()
            assert line, "server closed the connection"
            parsed = json.loads(line)
            if "id" in parsed:
                return events, parsed
            events.append(parsed)

    def close(self):
        self.file.close()
        self.sock.close()


@pytest.fixture
def tcp_server(tmp_path):
    program = PROGRAMS / "reads_chain.tardi"
    script = tmp_path / "world.script"
    script.write_text('stdin: "' + "a" * 40 + '"\n', encoding="utf-8")
    proc = subprocess.Popen(
        [sys.executable, "-m", "tardi", "debug", str(program),
         "--backend", f"script:{script}", "--serve", "tcp:0"],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
    )
    banner = proc.stdout.readline()
    port = int(banner.rsplit(":", 1)[1])
    yield port
    proc.terminate()
    proc.wait(timeout=5)


def test_tcp_serves_one_client_and_refuses_a_second(tcp_server):
    port = tcp_server
    first = _LineClient(_connect(port))
    _events, response = first.request({"id": 1, "cmd": "stack"})
    assert response["ok"]
    second = _LineClient(_connect(port))
    refusal = json.loads(second.file.readline())
    assert refusal["payload"]["reason"] == "session busy"
    second.close()
    # the first client still works
    _events, response = first.request({"id": 2, "cmd": "info"})
    assert response["ok"]
    first.close()
    # after a disconnect, a later client may attach and sees preserved state
    third = _LineClient(_connect(port))
    _events, response = third.request({"id": 3, "cmd": "info"})
    assert response["ok"]
    third.close()
