"""Tree-walking interpreter with an explicit call stack.

Execution is deterministic: expressions are strict and evaluated left to
right, and every effectful primitive call routes through the tabling layer.
Each frame snapshots the I/O action counter at entry; that snapshot is what a
retry resets the counter to.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ast
from .ast import Span
from .checker import CheckedProgram
from .io_world import IoBackend, PrimitiveDescriptor, find_primitive, perform
from .tabling import DivergenceError, IoActionRecord, TablingState, idempotent_execute
from .values import (
    EOF,
    FALSE,
    INT_MAX,
    INT_MIN,
    TRUE,
    UNIT,
    Bool,
    Char,
    Eof,
    Handle,
    Int,
    Str,
    Value,
    Variant,
    boolean,
    render,
)


class VmStateError(Exception):
    pass


class BadDepth(Exception):
    pass


class _Fault(Exception):
    """Internal: aborts the current step and becomes a fault event."""

    def __init__(self, description: str):
        super().__init__(description)
        self.description = description


# --- events ---


@dataclass(frozen=True)
class VmEvent:
    pass


@dataclass(frozen=True)
class VmCall(VmEvent):
    callee: str
    args: tuple[Value, ...]
    depth: int


@dataclass(frozen=True)
class VmExit(VmEvent):
    callee: str
    outputs: tuple[Value, ...]
    depth: int
    entry_counter: int


@dataclass(frozen=True)
class VmStmt(VmEvent):
    span: Span
    depth: int


@dataclass(frozen=True)
class VmIo(VmEvent):
    record: IoActionRecord


@dataclass(frozen=True)
class VmExited(VmEvent):
    code: int


@dataclass(frozen=True)
class VmFault(VmEvent):
    description: str
    divergence: DivergenceError | None = None


# --- dispatch to the world ---


class TabledIoDispatch:
    """Production dispatch: every effectful call goes through the action table."""

    def __init__(self, tabling: TablingState, backend: IoBackend):
        self.tabling = tabling
        self.backend = backend

    @property
    def counter(self) -> int:
        return self.tabling.counter

    def execute(self, descriptor: PrimitiveDescriptor, inputs) -> IoActionRecord:
        return idempotent_execute(self.tabling, self.backend, descriptor, inputs)

    def execute_pure(self, descriptor: PrimitiveDescriptor, inputs):
        return perform(self.backend, descriptor, inputs)


class DirectIoDispatch:
    """Baseline dispatch: a single always-false flag test, then the raw effect.

    Used by differential tests to measure what the tabling layer costs when
    it is switched off."""

    def __init__(self, backend: IoBackend):
        self.backend = backend
        self.counter = 0
        self.tabling_enabled = False

    def execute(self, descriptor: PrimitiveDescriptor, inputs) -> IoActionRecord:
        n = self.counter
        self.counter = n + 1
        if self.tabling_enabled:
            raise AssertionError("direct dispatch never tables")
        outputs = tuple(perform(self.backend, descriptor, inputs, n))
        return IoActionRecord(n, descriptor.name, tuple(inputs), outputs, replayed=False, tabled=False)

    def execute_pure(self, descriptor: PrimitiveDescriptor, inputs):
        return perform(self.backend, descriptor, inputs)


# --- machine ---


@dataclass
class Frame:
    proc: ast.Procedure
    env: dict[str, Value]
    args: dict[str, Value]
    cursor: list[list]  # stack of [statements, index] pairs
    call_site: Span | None
    io_counter_on_entry: int
    depth: int


@dataclass(frozen=True)
class FrameSummary:
    depth: int
    proc: str
    call_site: Span | None
    io_counter_on_entry: int


@dataclass
class MachineState:
    program: CheckedProgram
    io: object  # TabledIoDispatch or DirectIoDispatch
    stack: list[Frame] = field(default_factory=list)
    status: str = "running"  # running | stopped | exited | error
    stop_reason: str | None = None
    exit_code: int | None = None
    error_description: str | None = None
    divergence: DivergenceError | None = None


def init_machine(program: CheckedProgram, backend: IoBackend, tabling: TablingState,
                 dispatch=None) -> MachineState:
    io = dispatch if dispatch is not None else TabledIoDispatch(tabling, backend)
    machine = MachineState(program=program, io=io)
    main = program.procedures[ast.Program.ENTRY]
    frame = Frame(
        proc=main,
        env={},
        args={},
        cursor=[[main.body, 0]],
        call_site=None,
        io_counter_on_entry=io.counter,
        depth=0,
    )
    machine.stack.append(frame)
    _normalize(frame)
    return machine


def _normalize(frame: Frame) -> None:
    while frame.cursor:
        stmts, idx = frame.cursor[-1]
        if idx < len(stmts):
            return
        frame.cursor.pop()
        if frame.cursor:
            frame.cursor[-1][1] += 1


def _advance(frame: Frame) -> None:
    frame.cursor[-1][1] += 1
    _normalize(frame)


def current_statement(machine: MachineState) -> ast.Stmt | None:
    if not machine.stack:
        return None
    frame = machine.stack[-1]
    if not frame.cursor:
        return None
    stmts, idx = frame.cursor[-1]
    return stmts[idx]


@dataclass(frozen=True)
class Location:
    proc: str
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.proc}:{self.line}:{self.col}"


def current_location(machine: MachineState) -> Location | None:
    stmt = current_statement(machine)
    if stmt is None:
        return None
    return Location(machine.stack[-1].proc.name, stmt.span.line, stmt.span.col)


def step_event(machine: MachineState) -> VmEvent:
    """Execute the smallest unit of work that produces one event."""
    if machine.status != "running":
        raise VmStateError(f"machine is {machine.status}, not running")
    frame = machine.stack[-1]
    try:
        if not frame.cursor:
            return _do_return(machine, [])
        stmts, idx = frame.cursor[-1]
        stmt = stmts[idx]
        if isinstance(stmt, ast.Call):
            return _do_call(machine, frame, stmt)
        if isinstance(stmt, ast.Bind):
            value = _eval(frame.env, stmt.value)
            if stmt.name in frame.env:
                raise _Fault(f"{stmt.name} rebound")
            frame.env[stmt.name] = value
            _advance(frame)
            return VmStmt(stmt.span, frame.depth)
        if isinstance(stmt, ast.If):
            cond = _eval(frame.env, stmt.cond)
            if not isinstance(cond, Bool):
                raise _Fault(f"condition is not a bool: {render(cond)}")
            if cond.value:
                frame.cursor.append([stmt.then_body, 0])
            elif stmt.else_body is not None:
                frame.cursor.append([stmt.else_body, 0])
            else:
                frame.cursor[-1][1] += 1
            _normalize(frame)
            return VmStmt(stmt.span, frame.depth)
        if isinstance(stmt, ast.Return):
            outputs = [_eval(frame.env, v) for v in stmt.values]
            return _do_return(machine, outputs)
        raise TypeError(f"not a statement: {stmt!r}")
    except _Fault as fault:
        machine.status = "error"
        machine.error_description = fault.description
        machine.exit_code = 2
        return VmFault(fault.description)


def _do_call(machine: MachineState, frame: Frame, stmt: ast.Call) -> VmEvent:
    args = [_eval(frame.env, a) for a in stmt.args]
    if stmt.kind == "user":
        callee = machine.program.procedures[stmt.callee]
        env = dict(zip(callee.params, args))
        new = Frame(
            proc=callee,
            env=env,
            args=dict(env),
            cursor=[[callee.body, 0]],
            call_site=stmt.span,
            io_counter_on_entry=machine.io.counter,
            depth=len(machine.stack),
        )
        machine.stack.append(new)
        _normalize(new)
        return VmCall(callee.name, tuple(args), new.depth)
    descriptor = find_primitive(stmt.callee)
    if descriptor is None:
        raise _Fault(f"unknown primitive {stmt.callee}")
    if descriptor.effectful:
        try:
            record = machine.io.execute(descriptor, args)
        except DivergenceError as div:
            machine.status = "error"
            machine.error_description = str(div)
            machine.divergence = div
            machine.exit_code = 3
            return VmFault(str(div), divergence=div)
        _bind_outputs(frame, stmt, list(record.outputs))
        _advance(frame)
        return VmIo(record)
    outputs = machine.io.execute_pure(descriptor, args)
    _bind_outputs(frame, stmt, list(outputs))
    _advance(frame)
    return VmStmt(stmt.span, frame.depth)


def _bind_outputs(frame: Frame, stmt: ast.Call, outputs: list[Value]) -> None:
    if stmt.binders is None:
        return
    if len(stmt.binders) != len(outputs):
        raise _Fault(f"{stmt.callee} produced {len(outputs)} outputs for {len(stmt.binders)} binders")
    for binder, value in zip(stmt.binders, outputs):
        if binder in frame.env:
            raise _Fault(f"{binder} rebound")
        frame.env[binder] = value


def _do_return(machine: MachineState, outputs: list[Value]) -> VmEvent:
    popped = machine.stack.pop()
    if not machine.stack:
        machine.status = "exited"
        machine.exit_code = 0
        return VmExited(0)
    caller = machine.stack[-1]
    stmts, idx = caller.cursor[-1]
    call = stmts[idx]
    _bind_outputs(caller, call, outputs)
    _advance(caller)
    return VmExit(popped.proc.name, tuple(outputs), popped.depth, popped.io_counter_on_entry)


def pop_to_frame(machine: MachineState, depth: int) -> None:
    """Discard frames above `depth` and restart that frame at its first
    statement with its original arguments. The I/O counter is not touched;
    callers reset it separately."""
    if machine.status != "stopped":
        raise VmStateError(f"machine is {machine.status}, not stopped")
    if not 0 <= depth < len(machine.stack):
        raise BadDepth(f"no frame at depth {depth} (stack height {len(machine.stack)})")
    del machine.stack[depth + 1 :]
    frame = machine.stack[depth]
    frame.env = dict(frame.args)
    frame.cursor = [[frame.proc.body, 0]]
    _normalize(frame)


def current_stack(machine: MachineState) -> list[FrameSummary]:
    return [
        FrameSummary(f.depth, f.proc.name, f.call_site, f.io_counter_on_entry)
        for f in machine.stack
    ]


# --- expression evaluation ---


def _eval(env: dict[str, Value], expr: ast.Expr) -> Value:
    if isinstance(expr, ast.Var):
        try:
            return env[expr.name]
        except KeyError:
            raise _Fault(f"unbound variable {expr.name}") from None
    if isinstance(expr, ast.IntLit):
        return Int(expr.value)
    if isinstance(expr, ast.Binary):
        return _eval_binary(env, expr)
    if isinstance(expr, ast.StrLit):
        return Str(expr.value)
    if isinstance(expr, ast.CharLit):
        return Char(expr.value)
    if isinstance(expr, ast.BoolLit):
        return TRUE if expr.value else FALSE
    if isinstance(expr, ast.UnitLit):
        return UNIT
    if isinstance(expr, ast.EofLit):
        return EOF
    if isinstance(expr, ast.HandleLit):
        return Handle(expr.id)
    if isinstance(expr, ast.Unary):
        operand = _eval(env, expr.operand)
        if expr.op == "-":
            if not isinstance(operand, Int):
                raise _Fault(f"cannot negate {render(operand)}")
            return _checked_int(-operand.value)
        if not isinstance(operand, Bool):
            raise _Fault(f"cannot apply ! to {render(operand)}")
        return boolean(not operand.value)
    if isinstance(expr, ast.Ctor):
        return Variant(expr.tag, tuple(_eval(env, a) for a in expr.args))
    if isinstance(expr, ast.Match):
        return _eval_match(env, expr)
    raise TypeError(f"not an expression: {expr!r}")


def _checked_int(value: int) -> Int:
    if not INT_MIN <= value <= INT_MAX:
        raise _Fault("integer overflow")
    return Int(value)


def _eval_binary(env: dict[str, Value], expr: ast.Binary) -> Value:
    op = expr.op
    left = _eval(env, expr.left)
    right = _eval(env, expr.right)
    if op == "==":
        return boolean(left == right)
    if op == "!=":
        return boolean(left != right)
    if op == "+":
        if isinstance(left, Int) and isinstance(right, Int):
            return _checked_int(left.value + right.value)
        if isinstance(left, Str) and isinstance(right, Str):
            return Str(left.value + right.value)
        raise _Fault(f"cannot add {render(left)} and {render(right)}")
    if op in ("-", "*", "/", "%"):
        if not isinstance(left, Int) or not isinstance(right, Int):
            raise _Fault(f"arithmetic on non-ints: {render(left)} {op} {render(right)}")
        if op == "-":
            return _checked_int(left.value - right.value)
        if op == "*":
            return _checked_int(left.value * right.value)
        if right.value == 0:
            raise _Fault("division by zero")
        quotient = abs(left.value) // abs(right.value)
        if (left.value < 0) != (right.value < 0):
            quotient = -quotient  # truncate toward zero
        if op == "/":
            return _checked_int(quotient)
        return Int(left.value - right.value * quotient)
    if op in ("<", "<=", ">", ">="):
        if not isinstance(left, Int) or not isinstance(right, Int):
            raise _Fault(f"ordering on non-ints: {render(left)} {op} {render(right)}")
        if op == "<":
            return boolean(left.value < right.value)
        if op == "<=":
            return boolean(left.value <= right.value)
        if op == ">":
            return boolean(left.value > right.value)
        return boolean(left.value >= right.value)
    if op in ("&&", "||"):
        if not isinstance(left, Bool) or not isinstance(right, Bool):
            raise _Fault(f"boolean operator on non-bools: {render(left)} {op} {render(right)}")
        return boolean(left.value and right.value if op == "&&" else left.value or right.value)
    raise TypeError(f"unknown operator {op}")


def _eval_match(env: dict[str, Value], expr: ast.Match) -> Value:
    subject = _eval(env, expr.subject)
    for arm in expr.arms:
        bindings = _match_pattern(arm.pattern, subject)
        if bindings is None:
            continue
        if bindings:
            return _eval({**env, **bindings}, arm.body)
        return _eval(env, arm.body)
    raise _Fault(f"match failure: no arm matches {render(subject)}")


def _match_pattern(pattern: ast.Pattern, subject: Value) -> dict[str, Value] | None:
    if isinstance(pattern, ast.CtorPattern):
        if not isinstance(subject, Variant) or subject.tag != pattern.tag:
            return None
        if len(subject.payload) != len(pattern.binders):
            return None
        return {b: v for b, v in zip(pattern.binders, subject.payload) if b != "_"}
    if isinstance(pattern, ast.EofPattern):
        return {} if isinstance(subject, Eof) else None
    if isinstance(pattern, ast.WildcardPattern):
        return {}
    raise TypeError(f"not a pattern: {pattern!r}")
