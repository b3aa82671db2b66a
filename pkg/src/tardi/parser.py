"""Recursive-descent parser producing the Tardi AST.

Grammar is LL(2); the only lookahead past one token distinguishes a call
statement (`name(...)`) from an expression on the right of `let x =`.
"""

from __future__ import annotations

from . import ast
from .ast import Span
from .lexer import Token

_CTOR_KINDS = {"YES": "yes", "NO": "no", "OK": "ok", "ERROR": "error"}

_KIND_NAMES = {
    "IDENT": "identifier",
    "INT": "integer",
    "STRING": "string",
    "CHAR": "char",
    "EQ": "'='",
    "SEMI": "';'",
    "COMMA": "','",
    "LPAREN": "'('",
    "RPAREN": "')'",
    "LBRACE": "'{'",
    "RBRACE": "'}'",
    "ARROW": "'=>'",
    "PROC": "'proc'",
}


class ParseError(Exception):
    def __init__(self, span: Span, expected: str, found: str):
        super().__init__(f"{span.line}:{span.col}: expected {expected}, found {found}")
        self.span = span
        self.expected = expected
        self.found = found


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, offset: int = 0) -> Token | None:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def at(self, kind: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok is not None and tok.kind == kind

    def _here(self) -> Span:
        tok = self.peek()
        if tok is not None:
            return Span(tok.line, tok.col)
        if self.tokens:
            last = self.tokens[-1]
            return Span(last.line, last.col)
        return Span(1, 1)

    def _found(self) -> str:
        tok = self.peek()
        if tok is None:
            return "end of input"
        if tok.kind == "IDENT":
            return f"identifier '{tok.value}'"
        if tok.kind in ("INT", "STRING", "CHAR"):
            return repr(tok.value)
        return _KIND_NAMES.get(tok.kind, f"'{tok.kind.lower()}'")

    def expect(self, kind: str, expected: str | None = None) -> Token:
        tok = self.peek()
        if tok is None or tok.kind != kind:
            raise ParseError(self._here(), expected or _KIND_NAMES.get(kind, kind.lower()), self._found())
        self.pos += 1
        return tok

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    # --- toplevel ---

    def program(self) -> ast.Program:
        procedures = []
        while self.peek() is not None:
            procedures.append(self.procedure())
        return ast.Program(procedures)

    def procedure(self) -> ast.Procedure:
        start = self.expect("PROC")
        name = self.expect("IDENT").value
        self.expect("LPAREN")
        params: list[str] = []
        if not self.at("RPAREN"):
            params.append(self.expect("IDENT").value)
            while self.at("COMMA"):
                self.advance()
                params.append(self.expect("IDENT").value)
        self.expect("RPAREN")
        body = self.block()
        return ast.Procedure(name, params, body, Span(start.line, start.col))

    def block(self) -> list[ast.Stmt]:
        self.expect("LBRACE")
        stmts: list[ast.Stmt] = []
        while not self.at("RBRACE"):
            if self.peek() is None:
                raise ParseError(self._here(), "'}'", "end of input")
            stmts.append(self.statement())
        self.advance()
        return stmts

    # --- statements ---

    def statement(self) -> ast.Stmt:
        tok = self.peek()
        if tok is None:
            raise ParseError(self._here(), "statement", "end of input")
        if tok.kind == "LET":
            return self.let_statement()
        if tok.kind == "IF":
            return self.if_statement()
        if tok.kind == "RETURN":
            return self.return_statement()
        if tok.kind == "IDENT" and self.at("LPAREN", 1):
            return self.bare_call()
        raise ParseError(self._here(), "statement", self._found())

    def let_statement(self) -> ast.Stmt:
        start = self.advance()
        span = Span(start.line, start.col)
        binders = [self.expect("IDENT").value]
        while self.at("COMMA"):
            self.advance()
            binders.append(self.expect("IDENT").value)
        self.expect("EQ")
        if self.at("IDENT") and self.at("LPAREN", 1):
            callee = self.advance().value
            args = self.call_args()
            self.expect("SEMI")
            return ast.Call(binders, callee, args, span)
        if len(binders) > 1:
            raise ParseError(self._here(), "call producing multiple outputs", self._found())
        value = self.expression()
        self.expect("SEMI")
        return ast.Bind(binders[0], value, span)

    def bare_call(self) -> ast.Stmt:
        tok = self.advance()
        args = self.call_args()
        self.expect("SEMI")
        return ast.Call(None, tok.value, args, Span(tok.line, tok.col))

    def call_args(self) -> list[ast.Expr]:
        self.expect("LPAREN")
        args: list[ast.Expr] = []
        if not self.at("RPAREN"):
            args.append(self.expression())
            while self.at("COMMA"):
                self.advance()
                args.append(self.expression())
        self.expect("RPAREN")
        return args

    def if_statement(self) -> ast.Stmt:
        start = self.advance()
        self.expect("LPAREN")
        cond = self.expression()
        self.expect("RPAREN")
        then_body = self.block()
        else_body = None
        if self.at("ELSE"):
            self.advance()
            if self.at("IF"):
                else_body = [self.if_statement()]
            else:
                else_body = self.block()
        return ast.If(cond, then_body, else_body, Span(start.line, start.col))

    def return_statement(self) -> ast.Stmt:
        start = self.advance()
        values: list[ast.Expr] = []
        if not self.at("SEMI"):
            values.append(self.expression())
            while self.at("COMMA"):
                self.advance()
                values.append(self.expression())
        self.expect("SEMI")
        return ast.Return(values, Span(start.line, start.col))

    # --- expressions, lowest to highest precedence ---

    def expression(self) -> ast.Expr:
        return self.or_expr()

    def or_expr(self) -> ast.Expr:
        left = self.and_expr()
        while self.at("OROR"):
            tok = self.advance()
            right = self.and_expr()
            left = ast.Binary("||", left, right, Span(tok.line, tok.col))
        return left

    def and_expr(self) -> ast.Expr:
        left = self.cmp_expr()
        while self.at("ANDAND"):
            tok = self.advance()
            right = self.cmp_expr()
            left = ast.Binary("&&", left, right, Span(tok.line, tok.col))
        return left

    _CMP = {"EQEQ": "==", "NEQ": "!=", "LT": "<", "LE": "<=", "GT": ">", "GE": ">="}

    def cmp_expr(self) -> ast.Expr:
        left = self.add_expr()
        tok = self.peek()
        if tok is not None and tok.kind in self._CMP:
            self.advance()
            right = self.add_expr()
            return ast.Binary(self._CMP[tok.kind], left, right, Span(tok.line, tok.col))
        return left

    def add_expr(self) -> ast.Expr:
        left = self.mul_expr()
        while self.at("PLUS") or self.at("MINUS"):
            tok = self.advance()
            op = "+" if tok.kind == "PLUS" else "-"
            right = self.mul_expr()
            left = ast.Binary(op, left, right, Span(tok.line, tok.col))
        return left

    _MUL = {"STAR": "*", "SLASH": "/", "PERCENT": "%"}

    def mul_expr(self) -> ast.Expr:
        left = self.unary_expr()
        tok = self.peek()
        while tok is not None and tok.kind in self._MUL:
            self.advance()
            right = self.unary_expr()
            left = ast.Binary(self._MUL[tok.kind], left, right, Span(tok.line, tok.col))
            tok = self.peek()
        return left

    def unary_expr(self) -> ast.Expr:
        if self.at("MINUS") or self.at("BANG"):
            tok = self.advance()
            op = "-" if tok.kind == "MINUS" else "!"
            return ast.Unary(op, self.unary_expr(), Span(tok.line, tok.col))
        return self.primary()

    def primary(self) -> ast.Expr:
        tok = self.peek()
        if tok is None:
            raise ParseError(self._here(), "expression", "end of input")
        span = Span(tok.line, tok.col)
        if tok.kind == "INT":
            self.advance()
            return ast.IntLit(tok.value, span)
        if tok.kind == "STRING":
            self.advance()
            return ast.StrLit(tok.value, span)
        if tok.kind == "CHAR":
            self.advance()
            return ast.CharLit(tok.value, span)
        if tok.kind == "TRUE" or tok.kind == "FALSE":
            self.advance()
            return ast.BoolLit(tok.kind == "TRUE", span)
        if tok.kind == "UNIT":
            self.advance()
            return ast.UnitLit(span)
        if tok.kind == "EOF":
            self.advance()
            return ast.EofLit(span)
        if tok.kind == "STDIN":
            self.advance()
            return ast.HandleLit(0, span)
        if tok.kind == "STDOUT":
            self.advance()
            return ast.HandleLit(1, span)
        if tok.kind in _CTOR_KINDS:
            self.advance()
            args = self.call_args() if self.at("LPAREN") else []
            return ast.Ctor(_CTOR_KINDS[tok.kind], args, span)
        if tok.kind == "IDENT":
            self.advance()
            return ast.Var(tok.value, span)
        if tok.kind == "LPAREN":
            self.advance()
            inner = self.expression()
            self.expect("RPAREN")
            return inner
        if tok.kind == "MATCH":
            return self.match_expr()
        raise ParseError(span, "expression", self._found())

    def match_expr(self) -> ast.Expr:
        start = self.advance()
        self.expect("LPAREN")
        subject = self.expression()
        self.expect("RPAREN")
        self.expect("LBRACE")
        arms = [self.match_arm()]
        while self.at("COMMA"):
            self.advance()
            if self.at("RBRACE"):
                break
            arms.append(self.match_arm())
        self.expect("RBRACE")
        return ast.Match(subject, arms, Span(start.line, start.col))

    def match_arm(self) -> ast.MatchArm:
        pattern = self.pattern()
        self.expect("ARROW")
        body = self.expression()
        return ast.MatchArm(pattern, body, _pattern_span(pattern))

    def pattern(self) -> ast.Pattern:
        tok = self.peek()
        if tok is None:
            raise ParseError(self._here(), "pattern", "end of input")
        span = Span(tok.line, tok.col)
        if tok.kind in _CTOR_KINDS:
            self.advance()
            binders: list[str] = []
            if self.at("LPAREN"):
                self.advance()
                binders.append(self.expect("IDENT").value)
                while self.at("COMMA"):
                    self.advance()
                    binders.append(self.expect("IDENT").value)
                self.expect("RPAREN")
            return ast.CtorPattern(_CTOR_KINDS[tok.kind], binders, span)
        if tok.kind == "EOF":
            self.advance()
            return ast.EofPattern(span)
        if tok.kind == "IDENT" and tok.value == "_":
            self.advance()
            return ast.WildcardPattern(span)
        raise ParseError(span, "pattern", self._found())


def _pattern_span(p: ast.Pattern) -> Span:
    return p.span


def parse_program(tokens: list[Token]) -> ast.Program:
    return _Parser(tokens).program()
