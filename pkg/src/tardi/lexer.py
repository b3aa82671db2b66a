"""Tokenizer for Tardi source text."""

from __future__ import annotations

from dataclasses import dataclass

KEYWORDS = {
    "proc": "PROC",
    "let": "LET",
    "if": "IF",
    "else": "ELSE",
    "return": "RETURN",
    "match": "MATCH",
    "true": "TRUE",
    "false": "FALSE",
    "unit": "UNIT",
    "eof": "EOF",
    "stdin": "STDIN",
    "stdout": "STDOUT",
    "yes": "YES",
    "no": "NO",
    "ok": "OK",
    "error": "ERROR",
}

_TWO_CHAR = {
    "==": "EQEQ",
    "!=": "NEQ",
    "<=": "LE",
    ">=": "GE",
    "&&": "ANDAND",
    "||": "OROR",
    "=>": "ARROW",
}

_ONE_CHAR = {
    "=": "EQ",
    "<": "LT",
    ">": "GT",
    "+": "PLUS",
    "-": "MINUS",
    "*": "STAR",
    "/": "SLASH",
    "%": "PERCENT",
    "!": "BANG",
    "(": "LPAREN",
    ")": "RPAREN",
    "{": "LBRACE",
    "}": "RBRACE",
    ",": "COMMA",
    ";": "SEMI",
}

_STRING_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", '"': '"', "'": "'", "0": "\0"}


class LexError(Exception):
    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.message = message


@dataclass(frozen=True)
class Token:
    kind: str
    value: object  # int for INT, str for IDENT/STRING/CHAR, None otherwise
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def advance(k: int = 1) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if i < n and source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            advance()
            continue
        if ch == "/" and i + 1 < n and source[i + 1] == "/":
            while i < n and source[i] != "\n":
                advance()
            continue
        start_line, start_col = line, col
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(Token("INT", int(source[i:j]), start_line, start_col))
            advance(j - i)
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            kind = KEYWORDS.get(word, "IDENT")
            tokens.append(Token(kind, word if kind == "IDENT" else None, start_line, start_col))
            advance(j - i)
            continue
        if ch == '"':
            advance()
            text = _scan_quoted(source, '"', start_line, start_col, advance, lambda: i)
            tokens.append(Token("STRING", text, start_line, start_col))
            continue
        if ch == "'":
            advance()
            text = _scan_quoted(source, "'", start_line, start_col, advance, lambda: i)
            if len(text) != 1:
                raise LexError(start_line, start_col, "char literal must hold exactly one character")
            tokens.append(Token("CHAR", text, start_line, start_col))
            continue
        two = source[i : i + 2]
        if two in _TWO_CHAR:
            tokens.append(Token(_TWO_CHAR[two], None, start_line, start_col))
            advance(2)
            continue
        if ch in _ONE_CHAR:
            tokens.append(Token(_ONE_CHAR[ch], None, start_line, start_col))
            advance()
            continue
        raise LexError(start_line, start_col, f"illegal character {ch!r}")
    return tokens


def _scan_quoted(source, quote, start_line, start_col, advance, pos) -> str:
    out: list[str] = []
    n = len(source)
    while True:
        i = pos()
        if i >= n or source[i] == "\n":
            kind = "string" if quote == '"' else "char literal"
            raise LexError(start_line, start_col, f"unterminated {kind}")
        ch = source[i]
        if ch == quote:
            advance()
            return "".join(out)
        if ch == "\\":
            if i + 1 >= n:
                raise LexError(start_line, start_col, "unterminated string")
            esc = source[i + 1]
            if esc not in _STRING_ESCAPES:
                raise LexError(start_line, start_col, f"bad escape \\{esc}")
            out.append(_STRING_ESCAPES[esc])
            advance(2)
            continue
        out.append(ch)
        advance()
