"""Interactive debug session: breakpoints, stepping, stack inspection, and the
retry command with its safety check.

A retry jumps back to the start of a currently active call: the target frame's
environment is restored to its original arguments, and the I/O action counter
is reset to the value it had when that frame was entered. The safety check
reports whether every action number the jump crosses lies inside the recorded
region; an unsafe retry is only performed after explicit confirmation.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from . import ast, vm
from .checker import CheckedProgram
from .io_world import IoBackend, dump_trace
from .tabling import (
    DivergenceError,
    IoActionRecord,
    TablingState,
    region_contains,
    reset_counter,
    start_tabling,
    stop_tabling,
    table_dump,
    untabled_in,
)
from .values import Value, render
from .vm import BadDepth, FrameSummary, Location, MachineState

RECENT_CALL_RING = 4096


class SessionStateError(Exception):
    pass


class NoSuchLocation(Exception):
    pass


class UnboundVariable(Exception):
    pass


class NotTabled(Exception):
    pass


# --- events delivered to the CLI / UI ---


@dataclass(frozen=True)
class DebugEvent:
    def kind(self) -> str:
        raise NotImplementedError

    def to_payload(self) -> dict:
        raise NotImplementedError


def _location_payload(loc: Location | None):
    if loc is None:
        return None
    return {"proc": loc.proc, "line": loc.line, "col": loc.col}


@dataclass(frozen=True)
class StoppedEvent(DebugEvent):
    reason: str  # breakpoint | step-complete | entry | fault | retry
    location: Location | None
    depth: int
    detail: str | None = None

    def kind(self) -> str:
        return "stopped"

    def to_payload(self) -> dict:
        payload = {"reason": self.reason, "location": _location_payload(self.location), "depth": self.depth}
        if self.detail is not None:
            payload["detail"] = self.detail
        return payload


@dataclass(frozen=True)
class IoActionEvent(DebugEvent):
    record: IoActionRecord

    def kind(self) -> str:
        return "io_action"

    def to_payload(self) -> dict:
        return self.record.to_payload()


@dataclass(frozen=True)
class WarningEvent(DebugEvent):
    text: str
    requires_confirmation: bool

    def kind(self) -> str:
        return "warning"

    def to_payload(self) -> dict:
        return {"text": self.text, "requires_confirmation": self.requires_confirmation}


@dataclass(frozen=True)
class DivergenceEvent(DebugEvent):
    details: DivergenceError

    def kind(self) -> str:
        return "divergence"

    def to_payload(self) -> dict:
        rec_name, rec_inputs = self.details.recorded
        att_name, att_inputs = self.details.attempted
        return {
            "n": self.details.number,
            "recorded": {"name": rec_name, "inputs": [render(v) for v in rec_inputs]},
            "attempted": {"name": att_name, "inputs": [render(v) for v in att_inputs]},
            "message": str(self.details),
        }


@dataclass(frozen=True)
class ExitedEvent(DebugEvent):
    code: int

    def kind(self) -> str:
        return "exited"

    def to_payload(self) -> dict:
        return {"code": self.code}


@dataclass(frozen=True)
class RetriedEvent(DebugEvent):
    depth: int

    def kind(self) -> str:
        return "retried"

    def to_payload(self) -> dict:
        return {"depth": self.depth}


# --- reports ---


@dataclass(frozen=True)
class RetrySafetyReport:
    target_depth: int
    entry_counter: int
    current_counter: int
    n_actions_crossed: int
    all_tabled: bool
    verdict: str  # "safe" | "unsafe"
    reason: str | None = None

    def to_payload(self) -> dict:
        return {
            "target_depth": self.target_depth,
            "entry_counter": self.entry_counter,
            "current_counter": self.current_counter,
            "n_actions": self.n_actions_crossed,
            "all_tabled": self.all_tabled,
            "verdict": self.verdict,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class CallIoSummary:
    entry_counter: int
    exit_counter: int
    actions: tuple[IoActionRecord, ...]


@dataclass(frozen=True)
class CallRange:
    proc: str
    entry_counter: int
    exit_counter: int


@dataclass
class Session:
    """One program under debug: machine, tabling state, backend, breakpoints."""

    program: CheckedProgram
    backend: IoBackend
    tabling: TablingState
    source_path: str | None = None
    source_text: str | None = None
    machine: MachineState = field(init=False)
    proc_breakpoints: set[str] = field(default_factory=set)
    line_breakpoints: set[int] = field(default_factory=set)
    recent_calls: deque = field(default_factory=lambda: deque(maxlen=RECENT_CALL_RING))
    halted: bool = False  # divergence: inspection and quit only
    finished: bool = False
    exit_code: int = 0
    _events: list[DebugEvent] = field(default_factory=list)

    def __post_init__(self):
        self.machine = vm.init_machine(self.program, self.backend, self.tabling)
        self.machine.status = "stopped"
        self.machine.stop_reason = "entry"
        self._emit(StoppedEvent("entry", vm.current_location(self.machine), 0))

    # --- event plumbing ---

    def _emit(self, event: DebugEvent) -> None:
        self._events.append(event)

    def take_events(self) -> list[DebugEvent]:
        events, self._events = self._events, []
        return events

    # --- state guards ---

    def _require_stopped(self) -> None:
        if self.halted:
            raise SessionStateError("session halted after divergence; only inspection and quit are allowed")
        if self.machine.status == "exited":
            raise SessionStateError("program has exited")
        if self.machine.status == "error":
            raise SessionStateError(f"program faulted: {self.machine.error_description}")
        if self.machine.status != "stopped":
            raise SessionStateError(f"machine is {self.machine.status}")

    def _counter(self) -> int:
        return self.tabling.counter

    def _frame(self, depth: int) -> vm.Frame:
        if not 0 <= depth < len(self.machine.stack):
            raise BadDepth(f"no frame at depth {depth} (stack height {len(self.machine.stack)})")
        return self.machine.stack[depth]

    # --- breakpoints ---

    def cmd_break(self, spec: str) -> list[str]:
        spec = spec.strip()
        if ":" in spec:
            file_part, _, line_part = spec.rpartition(":")
            if not line_part.isdigit():
                raise NoSuchLocation(f"bad breakpoint spec: {spec}")
            if self.source_path is not None and file_part not in (self.source_path, ""):
                from pathlib import Path

                if Path(file_part).name != Path(self.source_path).name:
                    raise NoSuchLocation(f"unknown file: {file_part}")
            self._add_line_breakpoint(int(line_part))
        elif spec.isdigit():
            self._add_line_breakpoint(int(spec))
        else:
            if spec not in self.program.procedures:
                raise NoSuchLocation(f"no procedure named {spec}")
            self.proc_breakpoints.add(spec)
        return self.breakpoint_specs()

    def _add_line_breakpoint(self, line: int) -> None:
        if line not in self.program.stmt_lines:
            raise NoSuchLocation(f"no statement on line {line}")
        self.line_breakpoints.add(line)

    def breakpoint_specs(self) -> list[str]:
        return sorted(self.proc_breakpoints) + [f"line {n}" for n in sorted(self.line_breakpoints)]

    def _at_breakpoint(self, event: vm.VmEvent) -> bool:
        if isinstance(event, vm.VmCall) and event.callee in self.proc_breakpoints:
            return True
        if self.line_breakpoints:
            stmt = vm.current_statement(self.machine)
            if stmt is not None and stmt.span.line in self.line_breakpoints:
                return True
        return False

    # --- run loops ---

    def _run(self, stop_pred, reason: str) -> DebugEvent:
        self._require_stopped()
        machine = self.machine
        machine.status = "running"
        self.tabling.execution_started = True
        while True:
            event = vm.step_event(machine)
            if isinstance(event, vm.VmIo):
                self._emit(IoActionEvent(event.record))
            elif isinstance(event, vm.VmExit):
                self.recent_calls.append(CallRange(event.callee, event.entry_counter, self._counter()))
            if isinstance(event, vm.VmExited):
                self.finished = True
                out: DebugEvent = ExitedEvent(event.code)
                self._emit(out)
                return out
            if isinstance(event, vm.VmFault):
                if event.divergence is not None:
                    self.halted = True
                    self.exit_code = 3
                    out = DivergenceEvent(event.divergence)
                    self._emit(out)
                    return out
                self.exit_code = 2
                out = StoppedEvent("fault", vm.current_location(machine),
                                   len(machine.stack) - 1, detail=event.description)
                self._emit(out)
                return out
            if stop_pred(event):
                machine.status = "stopped"
                machine.stop_reason = reason
                out = StoppedEvent(reason, vm.current_location(machine), len(machine.stack) - 1)
                self._emit(out)
                return out
            if self._at_breakpoint(event):
                machine.status = "stopped"
                machine.stop_reason = "breakpoint"
                out = StoppedEvent("breakpoint", vm.current_location(machine), len(machine.stack) - 1)
                self._emit(out)
                return out

    def cmd_continue(self) -> DebugEvent:
        return self._run(lambda event: False, "step-complete")

    def cmd_step(self) -> DebugEvent:
        return self._run(
            lambda event: isinstance(event, (vm.VmStmt, vm.VmIo, vm.VmCall, vm.VmExit)),
            "step-complete",
        )

    def cmd_next(self) -> DebugEvent:
        self._require_stopped()
        stmt = vm.current_statement(self.machine)
        if isinstance(stmt, ast.Call) and stmt.kind == "user":
            callee_depth = len(self.machine.stack)
            return self._run(
                lambda event: isinstance(event, vm.VmExit) and event.depth == callee_depth,
                "step-complete",
            )
        return self.cmd_step()

    def cmd_finish(self) -> DebugEvent:
        self._require_stopped()
        depth = len(self.machine.stack) - 1
        return self._run(
            lambda event: isinstance(event, vm.VmExit) and event.depth == depth,
            "step-complete",
        )

    # --- retry ---

    def safety_check(self, target_depth: int) -> RetrySafetyReport:
        frame = self._frame(target_depth)
        entry = frame.io_counter_on_entry
        current = self._counter()
        crossed = current - entry
        all_tabled = region_contains(self.tabling, entry, current)
        if all_tabled:
            return RetrySafetyReport(target_depth, entry, current, crossed, True, "safe")
        untabled = untabled_in(self.tabling, entry, current)
        plural = "s" if untabled != 1 else ""
        reason = f"{untabled} untabled I/O action{plural} would re-execute"
        return RetrySafetyReport(target_depth, entry, current, crossed, False, "unsafe", reason)

    def cmd_retry(self, target_depth: int, confirm_unsafe: bool = False) -> DebugEvent:
        self._require_stopped()
        report = self.safety_check(target_depth)
        if report.verdict == "unsafe" and not confirm_unsafe:
            frame = self._frame(target_depth)
            warning = WarningEvent(
                f"unsafe retry of frame {target_depth} ({frame.proc.name}): {report.reason}; "
                f"jump crosses {report.n_actions_crossed} I/O action(s)",
                requires_confirmation=True,
            )
            self._emit(warning)
            return warning
        reset_counter(self.tabling, report.entry_counter)
        vm.pop_to_frame(self.machine, target_depth)
        self.machine.stop_reason = "retry"
        retried = RetriedEvent(target_depth)
        self._emit(retried)
        return retried

    # --- inspection ---

    def cmd_stack(self) -> list[FrameSummary]:
        return vm.current_stack(self.machine)

    def cmd_print(self, name: str) -> Value:
        if not self.machine.stack:
            raise UnboundVariable("no active frame")
        env = self.machine.stack[-1].env
        if name not in env:
            raise UnboundVariable(f"{name} is not bound in the current frame")
        return env[name]

    def list_io_actions(self, depth: int) -> CallIoSummary:
        frame = self._frame(depth)
        entry = frame.io_counter_on_entry
        exit_counter = self._counter()
        if not region_contains(self.tabling, entry, exit_counter):
            raise NotTabled(
                f"actions [{entry}, {exit_counter}) are not fully inside the recorded region"
            )
        actions = []
        for n in range(entry, exit_counter):
            block = self.tabling.table.get(n)
            if block is None:
                continue
            outputs = tuple(v for v in block.outputs if v is not None)
            actions.append(
                IoActionRecord(n, block.name, block.inputs, outputs,
                               replayed=block.replay_count > 0, tabled=True)
            )
        return CallIoSummary(entry, exit_counter, tuple(actions))

    def recent_call_ranges(self) -> list[CallRange]:
        return list(self.recent_calls)

    def cmd_io_table(self) -> str:
        return table_dump(self.tabling)

    def cmd_table(self, action: str) -> None:
        if action == "start":
            start_tabling(self.tabling)
        elif action == "stop":
            stop_tabling(self.tabling)
        else:
            raise ValueError(f"table takes start or stop, not {action!r}")

    def trace_text(self) -> str:
        return dump_trace(self.backend.trace)

    def region_payload(self) -> dict:
        return {
            "mode": self.tabling.mode,
            "start": self.tabling.region_start,
            "end": self.tabling.region_end,
            "enabled": self.tabling.mode == "full" or self.tabling.manual_enabled,
        }
