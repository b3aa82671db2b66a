import pytest

from tardi import vm
from tardi import values as V
from tardi.checker import compile_source
from tardi.io_world import ScriptedBackend
from tardi.tabling import TablingState
from tardi.values import Char, Int
from tardi.vm import (
    BadDepth,
    DirectIoDispatch,
    VmCall,
    VmExit,
    VmExited,
    VmFault,
    VmIo,
    current_stack,
    init_machine,
    pop_to_frame,
    step_event,
)


def make_machine(source, mode="full", stdin="", files=None, dispatch=None):
    checked = compile_source(source)
    backend = ScriptedBackend(stdin_script=stdin, files=files)
    tabling = TablingState(mode=mode)
    machine = init_machine(checked, backend, tabling, dispatch=dispatch(backend) if dispatch else None)
    return machine, backend, tabling


def run_all(machine, limit=1_000_000):
    events = []
    while machine.status == "running" and len(events) < limit:
        events.append(step_event(machine))
    return events


def test_fresh_machine_has_one_frame_with_zero_snapshot():
    machine, _, _ = make_machine("proc main() { }")
    (frame,) = current_stack(machine)
    assert (frame.depth, frame.proc, frame.io_counter_on_entry) == (0, "main", 0)


def test_init_after_prior_run_continues_counter():
    source = "proc main() { read_char(stdin); }"
    checked = compile_source(source)
    backend = ScriptedBackend(stdin_script="ab")
    tabling = TablingState(mode="full")
    machine = init_machine(checked, backend, tabling)
    run_all(machine)
    assert tabling.counter == 1
    second = init_machine(checked, backend, tabling)
    assert current_stack(second)[0].io_counter_on_entry == 1


def test_return_in_main_exits_ignoring_value():
    machine, _, _ = make_machine("proc main() { return; }")
    events = run_all(machine)
    assert events == [VmExited(0)]
    assert machine.status == "exited"


def test_primitive_call_emits_io_event():
    machine, _, _ = make_machine("proc main() { let c = read_char(stdin); }", stdin="a")
    events = run_all(machine)
    io_events = [e for e in events if isinstance(e, VmIo)]
    assert len(io_events) == 1
    assert io_events[0].record.name == "read_char"
    assert io_events[0].record.outputs == (Char("a"),)


def test_match_selects_arm_deterministically():
    source = 'proc main() { let r = match (no) { yes(v) => 1, no => 2 }; let s = int_to_string(r); write_string(stdout, s); }'
    machine, backend, _ = make_machine(source)
    run_all(machine)
    assert backend.stdout_text == "2"


def test_match_failure_faults():
    machine, _, _ = make_machine("proc main() { let r = match (no) { yes(v) => 1 }; }")
    events = run_all(machine)
    assert isinstance(events[-1], VmFault)
    assert "match failure" in events[-1].description
    assert machine.status == "error"
    assert machine.exit_code == 2


def test_arithmetic_overflow_faults():
    machine, _, _ = make_machine(
        "proc main() { let big = 9223372036854775807; let x = big + 1; }"
    )
    events = run_all(machine)
    assert isinstance(events[-1], VmFault)
    assert "overflow" in events[-1].description


def test_division_by_zero_faults():
    machine, _, _ = make_machine("proc main() { let x = 1 / 0; }")
    assert isinstance(run_all(machine)[-1], VmFault)


def test_truncating_division():
    source = """
    proc show(v) { let s = int_to_string(v); write_string(stdout, s); write_string(stdout, " "); return; }
    proc main() { let b = 0 - 7; show(7 / 2); show(b / 2); show(b % 2); }
    """
    machine, backend, _ = make_machine(source)
    run_all(machine)
    assert machine.status == "exited"
    assert backend.stdout_text == "3 -3 -1 "


def test_string_concat_and_compare():
    source = (
        'proc main() { let s = "ab" + "cd"; if (s == "abcd") { write_string(stdout, "y"); } }'
    )
    machine, backend, _ = make_machine(source)
    run_all(machine)
    assert backend.stdout_text == "y"


def test_call_and_exit_events_nest_properly():
    source = """
    proc g() { return 1; }
    proc f() { let x = g(); return x; }
    proc main() { let y = f(); }
    """
    machine, _, _ = make_machine(source)
    events = run_all(machine)
    open_depths = []
    for event in events:
        if isinstance(event, VmCall):
            open_depths.append(event.depth)
        elif isinstance(event, VmExit):
            assert open_depths and open_depths[-1] == event.depth, "exit without matching call"
            open_depths.pop()
    assert open_depths == []


def test_counter_snapshots_nondecreasing_with_depth():
    source = """
    proc g() { read_char(stdin); return; }
    proc f() { read_char(stdin); g(); return; }
    proc main() { read_char(stdin); f(); }
    """
    machine, _, _ = make_machine(source, stdin="xyz")
    snapshots = []
    while machine.status == "running":
        event = step_event(machine)
        stack = current_stack(machine)
        entries = [f.io_counter_on_entry for f in stack]
        assert entries == sorted(entries)
        if isinstance(event, VmCall) and event.callee == "g":
            snapshots.append(entries)
    assert snapshots == [[0, 1, 2]]


def test_determinism_same_events_twice():
    source = """
    proc f(k) { let c = read_char(stdin); return k + 1; }
    proc main() { let a = f(1); let b = f(a); write_string(stdout, "done"); }
    """
    runs = []
    for _ in range(2):
        machine, _, _ = make_machine(source, stdin="ppq")
        runs.append(run_all(machine))
    assert runs[0] == runs[1]


def test_pop_to_frame_restores_arguments_only():
    source = """
    proc f(a) { let b = a + 1; let c = read_char(stdin); return b; }
    proc main() { let r = f(10); }
    """
    machine, _, _ = make_machine(source, stdin="z")
    while machine.status == "running":
        event = step_event(machine)
        if isinstance(event, VmIo):
            break
    frame = machine.stack[1]
    assert frame.env == {"a": Int(10), "b": Int(11), "c": Char("z")}
    machine.status = "stopped"
    pop_to_frame(machine, 1)
    assert frame.env == {"a": Int(10)}
    assert len(machine.stack) == 2
    assert vm.current_location(machine).line == 2  # back at f's first statement


def test_pop_to_frame_zero_restarts_main():
    machine, _, _ = make_machine("proc main() { let x = 1; let y = 2; }")
    step_event(machine)
    machine.status = "stopped"
    pop_to_frame(machine, 0)
    assert machine.stack[0].env == {}
    assert vm.current_statement(machine) is machine.program.procedures["main"].body[0]


def test_pop_to_frame_bad_depth():
    machine, _, _ = make_machine("proc main() { let x = 1; }")
    machine.status = "stopped"
    with pytest.raises(BadDepth):
        pop_to_frame(machine, 7)


def test_redescended_frame_gets_same_snapshot():
    # after a retry to depth 1 and re-descent, g's new snapshot equals its old one
    source = """
    proc g() { read_char(stdin); return; }
    proc f() { read_char(stdin); g(); return; }
    proc main() { f(); }
    """

    def run_and_snapshot(retry: bool):
        machine, backend, tabling = make_machine(source, stdin="abcd")
        snapshots = []
        while machine.status == "running":
            event = step_event(machine)
            if isinstance(event, VmCall) and event.callee == "g":
                snapshots.append(machine.stack[-1].io_counter_on_entry)
                if retry and len(snapshots) == 1:
                    machine.status = "stopped"
                    from tardi.tabling import reset_counter

                    reset_counter(tabling, machine.stack[1].io_counter_on_entry)
                    pop_to_frame(machine, 1)
                    machine.status = "running"
        return snapshots

    assert run_and_snapshot(retry=False) == [1]
    assert run_and_snapshot(retry=True) == [1, 1]


def test_replay_stability_after_retry():
    # forward execution after a retry observes the same (name, inputs) sequence
    source = """
    proc f() { let a = read_char(stdin); let b = read_char(stdin); return; }
    proc main() { f(); }
    """
    machine, backend, tabling = make_machine(source, stdin="ab")
    pairs = []
    retried = False
    while machine.status == "running":
        event = step_event(machine)
        if isinstance(event, VmIo):
            pairs.append((event.record.name, event.record.inputs))
            if len(pairs) == 2 and not retried:
                retried = True
                machine.status = "stopped"
                from tardi.tabling import reset_counter

                reset_counter(tabling, machine.stack[1].io_counter_on_entry)
                pop_to_frame(machine, 1)
                machine.status = "running"
    assert pairs == pairs[:2] * 2
    assert machine.status == "exited"


def test_direct_dispatch_matches_off_mode_trace():
    source = """
    proc loop(n) { if (n == 0) { return; } else { read_char(stdin); loop(n - 1); return; } }
    proc main() { loop(5); write_string(stdout, "x"); }
    """
    from tardi.io_world import dump_trace

    machine_off, backend_off, _ = make_machine(source, mode="off", stdin="aaaaa")
    run_all(machine_off)
    machine_direct, backend_direct, _ = make_machine(source, stdin="aaaaa", dispatch=DirectIoDispatch)
    run_all(machine_direct)
    assert dump_trace(backend_off.trace) == dump_trace(backend_direct.trace)


def test_unknown_handle_read_is_error_value_not_fault():
    source = 'proc main() { let r = read_char(stdin); let s = close_file(stdin); let t = close_file(stdin); }'
    machine, _, _ = make_machine(source, stdin="")
    run_all(machine)
    assert machine.status == "exited"
