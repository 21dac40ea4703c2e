"""Text form of Karel programs.

Grammar (whitespace-insensitive):

    prog := stmt+
    stmt := action
          | if(cond){stmt+}
          | ifelse(cond){stmt+}{stmt+}
          | while(cond){stmt+}
          | repeat(int){stmt+}
    cond := frontIsClear | leftIsClear | rightIsClear
          | markersPresent | noMarkersPresent | not(cond)
    action := move | turnLeft | turnRight | putMarker | pickMarker

pretty_print emits the canonical rendering (one statement per line,
two-space indent) and parse(pretty_print(p)) == p for every valid p.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    Action,
    ActionKind,
    Cond,
    CondKind,
    Condition,
    If,
    IfElse,
    KarelError,
    MAX_REPEAT,
    MIN_REPEAT,
    Not,
    Program,
    Repeat,
    Statement,
    While,
)

_ACTIONS = {kind.value: kind for kind in ActionKind}
_CONDS = {kind.value: kind for kind in CondKind}
_KEYWORDS = set(_ACTIONS) | set(_CONDS) | {"if", "ifelse", "while", "repeat", "not"}


class ParseError(KarelError):
    """Syntax error with a 1-based source position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class _Token:
    kind: str  # "ident", "int", "(", ")", "{", "}", "eof"
    text: str
    line: int
    col: int


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch in "(){}":
            tokens.append(_Token(ch, ch, line, col))
            i += 1
            col += 1
            continue
        if ch.isalpha() or ch == "_":
            start = i
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
            text = source[start:i]
            tokens.append(_Token("ident", text, line, col))
            col += i - start
            continue
        if ch.isdigit():
            start = i
            while i < n and source[i].isdigit():
                i += 1
            tokens.append(_Token("int", source[start:i], line, col))
            col += i - start
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            found = tok.text or "end of input"
            raise ParseError(f"expected {kind!r}, found {found!r}", tok.line, tok.col)
        return self.advance()

    def parse_program(self) -> Program:
        body = [self.parse_statement()]
        while self.peek().kind != "eof":
            body.append(self.parse_statement())
        return Program(tuple(body))

    def parse_statement(self) -> Statement:
        tok = self.peek()
        if tok.kind != "ident":
            found = tok.text or "end of input"
            raise ParseError(f"expected statement, found {found!r}", tok.line, tok.col)
        if tok.text in _ACTIONS:
            self.advance()
            return Action(_ACTIONS[tok.text])
        if tok.text == "if":
            self.advance()
            cond = self.parse_paren_cond()
            return If(cond, self.parse_block())
        if tok.text == "ifelse":
            self.advance()
            cond = self.parse_paren_cond()
            then_block = self.parse_block()
            else_block = self.parse_block()
            return IfElse(cond, then_block, else_block)
        if tok.text == "while":
            self.advance()
            cond = self.parse_paren_cond()
            return While(cond, self.parse_block())
        if tok.text == "repeat":
            self.advance()
            self.expect("(")
            count_tok = self.expect("int")
            times = int(count_tok.text)
            if not MIN_REPEAT <= times <= MAX_REPEAT:
                raise ParseError(
                    f"repeat count {times} outside [{MIN_REPEAT}, {MAX_REPEAT}]",
                    count_tok.line,
                    count_tok.col,
                )
            self.expect(")")
            return Repeat(times, self.parse_block())
        raise ParseError(f"unknown statement {tok.text!r}", tok.line, tok.col)

    def parse_paren_cond(self) -> Condition:
        self.expect("(")
        cond = self.parse_condition()
        self.expect(")")
        return cond

    def parse_condition(self) -> Condition:
        tok = self.peek()
        if tok.kind != "ident":
            found = tok.text or "end of input"
            raise ParseError(f"expected condition, found {found!r}", tok.line, tok.col)
        if tok.text in _CONDS:
            self.advance()
            return Cond(_CONDS[tok.text])
        if tok.text == "not":
            self.advance()
            return Not(self.parse_paren_cond())
        raise ParseError(f"unknown condition {tok.text!r}", tok.line, tok.col)

    def parse_block(self) -> tuple[Statement, ...]:
        open_tok = self.expect("{")
        tok = self.peek()
        if tok.kind == "}":
            raise ParseError("empty block", open_tok.line, open_tok.col)
        stmts = [self.parse_statement()]
        while self.peek().kind not in ("}", "eof"):
            stmts.append(self.parse_statement())
        self.expect("}")
        return tuple(stmts)


def parse(source: str | bytes) -> Program:
    """Parse program text. Raises ParseError on bad syntax and
    DepthError/SizeError when the AST violates the global caps."""
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"invalid UTF-8: {exc.reason}", 1, 1) from exc
    return _Parser(_tokenize(source)).parse_program()


def _render_cond(cond: Condition) -> str:
    if isinstance(cond, Not):
        return f"not({_render_cond(cond.inner)})"
    return cond.kind.value


def _render_block(stmts: tuple[Statement, ...], indent: int, out: list[str]) -> None:
    pad = "  " * indent
    for stmt in stmts:
        if isinstance(stmt, Action):
            out.append(f"{pad}{stmt.kind.value}")
        elif isinstance(stmt, If):
            out.append(f"{pad}if({_render_cond(stmt.cond)}) {{")
            _render_block(stmt.block, indent + 1, out)
            out.append(f"{pad}}}")
        elif isinstance(stmt, IfElse):
            out.append(f"{pad}ifelse({_render_cond(stmt.cond)}) {{")
            _render_block(stmt.then_block, indent + 1, out)
            out.append(f"{pad}}} {{")
            _render_block(stmt.else_block, indent + 1, out)
            out.append(f"{pad}}}")
        elif isinstance(stmt, While):
            out.append(f"{pad}while({_render_cond(stmt.cond)}) {{")
            _render_block(stmt.block, indent + 1, out)
            out.append(f"{pad}}}")
        elif isinstance(stmt, Repeat):
            out.append(f"{pad}repeat({stmt.times}) {{")
            _render_block(stmt.block, indent + 1, out)
            out.append(f"{pad}}}")
        else:
            raise KarelError(f"unknown statement node {stmt!r}")


def pretty_print(program: Program) -> str:
    """Canonical text rendering; no trailing newline."""
    out: list[str] = []
    _render_block(program.body, 0, out)
    return "\n".join(out)
