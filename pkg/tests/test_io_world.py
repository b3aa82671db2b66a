import pytest

from tardi import values as V
from tardi.io_world import (
    EffectsTrace,
    OsBackend,
    ScriptedBackend,
    dump_trace,
    find_primitive,
    load_script_config,
    perform,
    registry,
)
from tardi.values import EOF, OK, Char, Handle, Int, Str


def test_registry_contents():
    names = {d.name: d for d in registry()}
    assert names["read_char"].n_inputs == 1
    assert names["read_char"].n_outputs == 1
    assert names["read_char"].effectful
    assert names["open_file"].n_inputs == 2 and names["open_file"].n_outputs == 2
    assert not names["string_length"].effectful


def test_no_process_state_primitives():
    assert find_primitive("getpid") is None
    assert find_primitive("getrusage") is None


def test_scripted_read_char_advances_cursor():
    backend = ScriptedBackend(stdin_script="ab")
    desc = find_primitive("read_char")
    assert perform(backend, desc, [Handle(0)], 0) == [Char("a")]
    assert perform(backend, desc, [Handle(0)], 1) == [Char("b")]
    assert perform(backend, desc, [Handle(0)], 2) == [EOF]
    assert perform(backend, desc, [Handle(0)], 3) == [EOF]


def test_close_unknown_handle_is_an_error():
    backend = ScriptedBackend()
    desc = find_primitive("close_file")
    (result,) = perform(backend, desc, [Handle(5)], 0)
    assert result == V.error("close on closed stream")


def test_close_twice_is_an_error():
    backend = ScriptedBackend(files={"f": "x"})
    ok, handle = backend.open("f", "read")
    assert ok == OK
    assert backend.close(handle.id) == OK
    assert backend.close(handle.id) == V.error("close on closed stream")


def test_open_grows_handle_set():
    backend = ScriptedBackend(files={"in.txt": "hello"})
    desc = find_primitive("open_file")
    status, handle = perform(backend, desc, [Str("in.txt"), Str("read")], 0)
    assert status == OK
    assert handle == Handle(2)
    assert backend.open_file_count == 1


def test_open_missing_file():
    backend = ScriptedBackend()
    status, handle = backend.open("nope", "read")
    assert V.is_error(status)
    assert handle == V.UNIT


def test_handle_ids_never_reused():
    backend = ScriptedBackend(files={"f": ""})
    _, h1 = backend.open("f", "read")
    backend.close(h1.id)
    _, h2 = backend.open("f", "read")
    assert h2.id > h1.id


def test_read_line_semantics():
    backend = ScriptedBackend(stdin_script="one\ntwo")
    assert backend.read_line(0) == Str("one")
    assert backend.read_line(0) == Str("two")
    assert backend.read_line(0) == EOF


def test_write_and_stdout_capture():
    backend = ScriptedBackend()
    assert backend.write_string(1, "hi") == OK
    assert backend.write_string(1, " there") == OK
    assert backend.stdout_text == "hi there"


def test_write_to_read_handle_rejected():
    backend = ScriptedBackend(files={"f": "x"})
    _, h = backend.open("f", "read")
    assert V.is_error(backend.write_string(h.id, "nope"))


def test_failure_injection_forces_error():
    backend = ScriptedBackend(stdin_script="ab", failure_injections={1: "disk on fire"})
    assert backend.read_char(0) == Char("a")
    assert backend.read_char(0) == V.error("disk on fire")
    assert backend.read_char(0) == Char("b")


def test_trace_appends_only_on_invocation():
    backend = ScriptedBackend(stdin_script="a")
    desc = find_primitive("read_char")
    perform(backend, desc, [Handle(0)], 0)
    assert len(backend.trace) == 1
    record = backend.trace.records[0]
    assert (record.seq, record.action_number, record.name) == (0, 0, "read_char")
    assert record.outputs == (Char("a"),)


def test_pure_primitives_skip_the_trace_and_are_referentially_transparent():
    backend = ScriptedBackend()
    for name, args in [
        ("string_length", [Str("abc")]),
        ("int_to_string", [Int(42)]),
        ("char_to_string", [Char("x")]),
        ("string_to_int", [Str("17")]),
        ("string_to_int", [Str("nope")]),
    ]:
        desc = find_primitive(name)
        first = perform(backend, desc, args)
        second = perform(backend, desc, args)
        assert first == second
    assert len(backend.trace) == 0


def test_dump_trace_format():
    backend = ScriptedBackend()
    desc = find_primitive("write_string")
    perform(backend, desc, [Handle(1), Str("hi")], 0)
    assert dump_trace(backend.trace) == '0\t0\twrite_string\t[handle(1), "hi"]\t[ok]\n'


def test_dump_trace_empty():
    assert dump_trace(EffectsTrace()) == ""


def test_handle_hygiene_invariant():
    backend = ScriptedBackend(files={"a": "", "b": ""})
    assert backend.open_file_count == backend.opens - backend.closes == 0
    _, h1 = backend.open("a", "read")
    assert backend.open_file_count == backend.opens - backend.closes == 1
    _, h2 = backend.open("b", "read")
    assert backend.open_file_count == backend.opens - backend.closes == 2
    backend.close(h1.id)
    assert backend.open_file_count == backend.opens - backend.closes == 1
    backend.close(h1.id)  # failed close changes nothing
    assert backend.open_file_count == backend.opens - backend.closes == 1
    backend.close(h2.id)
    assert backend.open_file_count == backend.opens - backend.closes == 0


def test_script_config_round_trip(tmp_path):
    config = tmp_path / "world.script"
    config.write_text(
        '# fixture\n'
        'stdin: "line1\\nline2\\n"\n'
        'file data.txt: "ab"\n'
        'file dir/more.txt: "x\\ty"\n',
        encoding="utf-8",
    )
    backend = load_script_config(config)
    assert backend.stdin_script == "line1\nline2\n"
    assert backend.files == {"data.txt": "ab", "dir/more.txt": "x\ty"}


def test_script_config_rejects_junk(tmp_path):
    config = tmp_path / "bad.script"
    config.write_text("what is this\n", encoding="utf-8")
    with pytest.raises(ValueError):
        load_script_config(config)


def test_os_backend_sandbox(tmp_path):
    (tmp_path / "ok.txt").write_text("hello", encoding="utf-8")
    backend = OsBackend(tmp_path)
    status, handle = backend.open("ok.txt", "read")
    assert status == OK
    assert backend.read_char(handle.id) == Char("h")
    assert backend.read_line(handle.id) == Str("ello")
    assert backend.read_line(handle.id) == EOF
    assert backend.close(handle.id) == OK
    assert backend.close(handle.id) == V.error("close on closed stream")
    status, _ = backend.open("../escape.txt", "read")
    assert V.is_error(status)
    assert "escapes sandbox" in status.payload[0].value


def test_os_backend_write(tmp_path):
    backend = OsBackend(tmp_path)
    status, handle = backend.open("out.txt", "write")
    assert status == OK
    assert backend.write_string(handle.id, "data") == OK
    assert backend.close(handle.id) == OK
    assert (tmp_path / "out.txt").read_text(encoding="utf-8") == "data"
