"""AST for Tardi programs, plus a printer that round-trips through the parser.

Spans are excluded from equality so parse(print(ast)) == ast holds whenever the
two trees are structurally identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .values import escape_char, escape_string


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


# --- expressions ---


@dataclass
class Expr:
    pass


@dataclass
class IntLit(Expr):
    value: int
    span: Span = field(compare=False)


@dataclass
class StrLit(Expr):
    value: str
    span: Span = field(compare=False)


@dataclass
class CharLit(Expr):
    value: str
    span: Span = field(compare=False)


@dataclass
class BoolLit(Expr):
    value: bool
    span: Span = field(compare=False)


@dataclass
class UnitLit(Expr):
    span: Span = field(compare=False)


@dataclass
class EofLit(Expr):
    span: Span = field(compare=False)


@dataclass
class HandleLit(Expr):
    """stdin/stdout pseudo-handles, ids 0 and 1."""

    id: int
    span: Span = field(compare=False)


@dataclass
class Var(Expr):
    name: str
    span: Span = field(compare=False)


@dataclass
class Unary(Expr):
    op: str
    operand: Expr
    span: Span = field(compare=False)


@dataclass
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    span: Span = field(compare=False)


@dataclass
class Ctor(Expr):
    """Application of a built-in result constructor: yes/no/ok/error."""

    tag: str
    args: list[Expr]
    span: Span = field(compare=False)


@dataclass
class Pattern:
    pass


@dataclass
class CtorPattern(Pattern):
    tag: str
    binders: list[str]
    span: Span = field(compare=False)


@dataclass
class EofPattern(Pattern):
    span: Span = field(compare=False)


@dataclass
class WildcardPattern(Pattern):
    span: Span = field(compare=False)


@dataclass
class MatchArm:
    pattern: Pattern
    body: Expr
    span: Span = field(compare=False)


@dataclass
class Match(Expr):
    subject: Expr
    arms: list[MatchArm]
    span: Span = field(compare=False)


# --- statements ---


@dataclass
class Stmt:
    pass


@dataclass
class Bind(Stmt):
    name: str
    value: Expr
    span: Span = field(compare=False)


@dataclass
class Call(Stmt):
    """Call statement; binders is None for a bare call that discards outputs."""

    binders: list[str] | None
    callee: str
    args: list[Expr]
    span: Span = field(compare=False)
    kind: str | None = field(default=None, compare=False)  # "user"|"primitive", set by checker


@dataclass
class If(Stmt):
    cond: Expr
    then_body: list[Stmt]
    else_body: list[Stmt] | None
    span: Span = field(compare=False)


@dataclass
class Return(Stmt):
    values: list[Expr]
    span: Span = field(compare=False)


@dataclass
class Procedure:
    name: str
    params: list[str]
    body: list[Stmt]
    span: Span = field(compare=False)


@dataclass
class Program:
    procedures: list[Procedure]

    ENTRY = "main"


def iter_statements(body: list[Stmt]):
    """Yield every statement in a body, including nested if branches."""
    for stmt in body:
        yield stmt
        if isinstance(stmt, If):
            yield from iter_statements(stmt.then_body)
            if stmt.else_body is not None:
                yield from iter_statements(stmt.else_body)


def statement_lines(program: Program) -> set[int]:
    lines: set[int] = set()
    for proc in program.procedures:
        for stmt in iter_statements(proc.body):
            lines.add(stmt.span.line)
    return lines


# --- printer ---


def expr_to_source(e: Expr) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, StrLit):
        return escape_string(e.value)
    if isinstance(e, CharLit):
        return escape_char(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, UnitLit):
        return "unit"
    if isinstance(e, EofLit):
        return "eof"
    if isinstance(e, HandleLit):
        return "stdin" if e.id == 0 else "stdout"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        return "(" + e.op + expr_to_source(e.operand) + ")"
    if isinstance(e, Binary):
        return "(" + expr_to_source(e.left) + " " + e.op + " " + expr_to_source(e.right) + ")"
    if isinstance(e, Ctor):
        if not e.args:
            return e.tag
        return e.tag + "(" + ", ".join(expr_to_source(a) for a in e.args) + ")"
    if isinstance(e, Match):
        arms = ", ".join(_arm_to_source(a) for a in e.arms)
        return "match (" + expr_to_source(e.subject) + ") { " + arms + " }"
    raise TypeError(f"not an expression: {e!r}")


def _pattern_to_source(p: Pattern) -> str:
    if isinstance(p, CtorPattern):
        if not p.binders:
            return p.tag
        return p.tag + "(" + ", ".join(p.binders) + ")"
    if isinstance(p, EofPattern):
        return "eof"
    if isinstance(p, WildcardPattern):
        return "_"
    raise TypeError(f"not a pattern: {p!r}")


def _arm_to_source(arm: MatchArm) -> str:
    return _pattern_to_source(arm.pattern) + " => " + expr_to_source(arm.body)


def _stmt_to_lines(stmt: Stmt, indent: str) -> list[str]:
    if isinstance(stmt, Bind):
        return [indent + "let " + stmt.name + " = " + expr_to_source(stmt.value) + ";"]
    if isinstance(stmt, Call):
        call = stmt.callee + "(" + ", ".join(expr_to_source(a) for a in stmt.args) + ")"
        if stmt.binders is None:
            return [indent + call + ";"]
        return [indent + "let " + ", ".join(stmt.binders) + " = " + call + ";"]
    if isinstance(stmt, If):
        lines = [indent + "if (" + expr_to_source(stmt.cond) + ") {"]
        for s in stmt.then_body:
            lines.extend(_stmt_to_lines(s, indent + "    "))
        if stmt.else_body is None:
            lines.append(indent + "}")
        else:
            lines.append(indent + "} else {")
            for s in stmt.else_body:
                lines.extend(_stmt_to_lines(s, indent + "    "))
            lines.append(indent + "}")
        return lines
    if isinstance(stmt, Return):
        if not stmt.values:
            return [indent + "return;"]
        return [indent + "return " + ", ".join(expr_to_source(v) for v in stmt.values) + ";"]
    raise TypeError(f"not a statement: {stmt!r}")


def program_to_source(program: Program) -> str:
    chunks = []
    for proc in program.procedures:
        lines = ["proc " + proc.name + "(" + ", ".join(proc.params) + ") {"]
        for stmt in proc.body:
            lines.extend(_stmt_to_lines(stmt, "    "))
        lines.append("}")
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks) + "\n"
