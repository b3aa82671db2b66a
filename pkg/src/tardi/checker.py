"""Static checks for parsed programs: single assignment, definite binding
before use, arity and callee resolution.

A program passes iff every control path binds each variable at most once and
every use is preceded by a binding on all paths reaching it. Statements after
a `return` (or after an if whose branches both return) lie on no control path
and are skipped.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ast
from .ast import Span
from .io_world import find_primitive
from .lexer import tokenize
from .parser import parse_program


@dataclass
class CheckError:
    span: Span
    message: str

    def __str__(self) -> str:
        return f"{self.span.line}:{self.span.col}: {self.message}"


class CheckFailure(Exception):
    def __init__(self, errors: list[CheckError]):
        super().__init__("; ".join(str(e) for e in errors))
        self.errors = errors


@dataclass
class CheckedProgram:
    program: ast.Program
    procedures: dict[str, ast.Procedure]
    out_arity: dict[str, int]
    stmt_lines: set[int] = field(default_factory=set)


@dataclass
class _Flow:
    definite: set[str]
    maybe: set[str]

    def copy(self) -> "_Flow":
        return _Flow(set(self.definite), set(self.maybe))


def check_program(program: ast.Program) -> CheckedProgram:
    errors: list[CheckError] = []
    procedures: dict[str, ast.Procedure] = {}
    for proc in program.procedures:
        if proc.name in procedures:
            errors.append(CheckError(proc.span, f"procedure {proc.name} defined twice"))
            continue
        if find_primitive(proc.name) is not None:
            errors.append(CheckError(proc.span, f"procedure name {proc.name} conflicts with a primitive"))
            continue
        procedures[proc.name] = proc

    entry = procedures.get(ast.Program.ENTRY)
    if entry is None:
        errors.append(CheckError(Span(1, 1), "missing main procedure"))
    elif entry.params:
        errors.append(CheckError(entry.span, "main takes no parameters"))

    out_arity: dict[str, int] = {}
    for name, proc in procedures.items():
        arities, falls_through = _return_arities(proc.body)
        if falls_through:
            arities.add(0)
        if not arities:
            arities.add(0)
        if len(arities) > 1:
            errors.append(CheckError(proc.span, f"inconsistent return arity in {name}: {sorted(arities)}"))
        out_arity[name] = min(arities)

    checker = _ProcChecker(procedures, out_arity, errors)
    for proc in procedures.values():
        checker.check_proc(proc)

    if errors:
        raise CheckFailure(errors)
    return CheckedProgram(program, procedures, out_arity, ast.statement_lines(program))


def _return_arities(body: list[ast.Stmt]) -> tuple[set[int], bool]:
    """Return arities seen in a body and whether execution can fall off its end."""
    arities: set[int] = set()
    for stmt in body:
        if isinstance(stmt, ast.Return):
            arities.add(len(stmt.values))
            return arities, False
        if isinstance(stmt, ast.If):
            then_a, then_falls = _return_arities(stmt.then_body)
            arities |= then_a
            if stmt.else_body is None:
                continue
            else_a, else_falls = _return_arities(stmt.else_body)
            arities |= else_a
            if not then_falls and not else_falls:
                return arities, False
    return arities, True


class _ProcChecker:
    def __init__(self, procedures, out_arity, errors: list[CheckError]):
        self.procedures = procedures
        self.out_arity = out_arity
        self.errors = errors

    def error(self, span: Span, message: str) -> None:
        self.errors.append(CheckError(span, message))

    def check_proc(self, proc: ast.Procedure) -> None:
        flow = _Flow(set(), set())
        for param in proc.params:
            if param in flow.maybe:
                self.error(proc.span, f"duplicate parameter {param}")
            self.bind(flow, param, proc.span)
        self.check_body(proc.body, flow)

    def bind(self, flow: _Flow, name: str, span: Span) -> None:
        if name == "_":
            self.error(span, "'_' is reserved for match wildcards")
            return
        if name in flow.maybe:
            self.error(span, f"{name} rebound")
            return
        flow.definite.add(name)
        flow.maybe.add(name)

    def check_body(self, body: list[ast.Stmt], flow: _Flow) -> bool:
        """Check statements in order; returns True if every path returns."""
        for stmt in body:
            if isinstance(stmt, ast.Bind):
                self.check_expr(stmt.value, flow)
                self.bind(flow, stmt.name, stmt.span)
            elif isinstance(stmt, ast.Call):
                self.check_call(stmt, flow)
            elif isinstance(stmt, ast.If):
                self.check_expr(stmt.cond, flow)
                then_flow = flow.copy()
                then_done = self.check_body(stmt.then_body, then_flow)
                else_flow = flow.copy()
                else_done = self.check_body(stmt.else_body, else_flow) if stmt.else_body is not None else False
                if then_done and else_done:
                    return True  # anything after this if is unreachable
                if then_done:
                    flow.definite, flow.maybe = else_flow.definite, else_flow.maybe
                elif else_done:
                    flow.definite, flow.maybe = then_flow.definite, then_flow.maybe
                else:
                    flow.definite = then_flow.definite & else_flow.definite
                    flow.maybe = then_flow.maybe | else_flow.maybe
            elif isinstance(stmt, ast.Return):
                for value in stmt.values:
                    self.check_expr(value, flow)
                return True
            else:
                raise TypeError(f"not a statement: {stmt!r}")
        return False

    def check_call(self, stmt: ast.Call, flow: _Flow) -> None:
        for arg in stmt.args:
            self.check_expr(arg, flow)
        n_outputs: int | None = None
        if stmt.callee in self.procedures:
            stmt.kind = "user"
            proc = self.procedures[stmt.callee]
            if len(stmt.args) != len(proc.params):
                self.error(
                    stmt.span,
                    f"arity mismatch: {stmt.callee} takes {len(proc.params)} argument(s), got {len(stmt.args)}",
                )
            n_outputs = self.out_arity[stmt.callee]
        else:
            desc = find_primitive(stmt.callee)
            if desc is None:
                self.error(stmt.span, f"unknown callee {stmt.callee}")
            else:
                stmt.kind = "primitive"
                if len(stmt.args) != desc.n_inputs:
                    self.error(
                        stmt.span,
                        f"arity mismatch: {stmt.callee} takes {desc.n_inputs} argument(s), got {len(stmt.args)}",
                    )
                n_outputs = desc.n_outputs
        if stmt.binders is not None:
            if n_outputs is not None and len(stmt.binders) != n_outputs:
                self.error(
                    stmt.span,
                    f"arity mismatch: {stmt.callee} produces {n_outputs} output(s), got {len(stmt.binders)} binder(s)",
                )
            for binder in stmt.binders:
                self.bind(flow, binder, stmt.span)

    def check_expr(self, expr: ast.Expr, flow: _Flow) -> None:
        if isinstance(expr, ast.Var):
            if expr.name == "_":
                self.error(expr.span, "'_' is reserved for match wildcards")
            elif expr.name not in flow.definite:
                if expr.name in flow.maybe:
                    self.error(expr.span, f"{expr.name} may be unbound here")
                else:
                    self.error(expr.span, f"{expr.name} used before binding")
        elif isinstance(expr, ast.Unary):
            self.check_expr(expr.operand, flow)
        elif isinstance(expr, ast.Binary):
            self.check_expr(expr.left, flow)
            self.check_expr(expr.right, flow)
        elif isinstance(expr, ast.Ctor):
            for arg in expr.args:
                self.check_expr(arg, flow)
        elif isinstance(expr, ast.Match):
            self.check_expr(expr.subject, flow)
            for arm in expr.arms:
                arm_flow = flow.copy()
                self.check_pattern(arm.pattern, arm_flow)
                self.check_expr(arm.body, arm_flow)

    def check_pattern(self, pattern: ast.Pattern, flow: _Flow) -> None:
        if isinstance(pattern, ast.CtorPattern):
            seen: set[str] = set()
            for binder in pattern.binders:
                if binder == "_":  # discards the payload position
                    continue
                if binder in seen:
                    self.error(pattern.span, f"duplicate pattern binder {binder}")
                    continue
                seen.add(binder)
                self.bind(flow, binder, pattern.span)


def compile_source(source: str) -> CheckedProgram:
    """tokenize + parse + check in one step."""
    return check_program(parse_program(tokenize(source)))
