"""Embedded grammar-driven parser producing :class:`SyntaxNode` trees.

The toolkit does not bundle full-language grammars (see the external dump
path in :mod:`turducken.syntax_tree`), but it embeds one small recursive
descent grammar, ``mini_python``, that covers the statement/expression subset
the synthetic corpus and the offline parse checker need:

    module      := (statement (sep statement)*)?        sep := NEWLINE | ';'
    statement   := 'return' [expr] | target '=' expr | expr
    expr        := additive ((== != < > <= >=) additive)*
    additive    := multiplicative (('+'|'-') multiplicative)*
    multiplicative := postfix (('*'|'/'|'%') postfix)*
    postfix     := primary ('(' args ')' | '.' identifier)*
    primary     := identifier | integer | string | '(' expr ')'

Node kinds mirror the conventional tree-sitter Python vocabulary (module,
expression_statement, assignment, return_statement, binary_operator,
comparison_operator, call, argument_list, attribute, parenthesized_expression,
identifier, integer, string).  A string literal is a single leaf whose value
keeps its quotes.  Keyword and punctuation leaves are anonymous
(``named=False``) with their kind equal to their text, except ``return``
which keeps the conventional keyword kind.

Parse failures never raise: the offending token run is folded into an
``ERROR`` node so that :func:`turducken.syntax_tree.has_error` can act as a
fast executability proxy.  Statement separators: newlines and ``;``.  The
``;`` form is emitted as a leaf, so single-line sources round-trip through a
flat token stream.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

from .errors import GrammarNotFoundError
from .syntax_tree import SourcePoint, SyntaxNode

_TOKEN_RE = re.compile(
    r"""
    (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<space>[ \t\r]+)
  | (?P<string>"(?:[^"\\\n]|\\.)*" | '(?:[^'\\\n]|\\.)*')
  | (?P<badstring>"(?:[^"\\\n]|\\.)* | '(?:[^'\\\n]|\\.)*)
  | (?P<integer>\d+)
  | (?P<identifier>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|!=|<=|>=|[-+*/%<>=(),.:;])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"return"}
_COMPARISON_OPS = {"==", "!=", "<", ">", "<=", ">="}
_ADDITIVE_OPS = {"+", "-"}
_MULTIPLICATIVE_OPS = {"*", "/", "%"}


@dataclass(frozen=True)
class _Token:
    kind: str  # identifier | integer | string | op text | keyword text | newline | ERROR
    text: str
    start: SourcePoint
    end: SourcePoint


def _lex(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    row = col = pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            # Unknown character: one-char lexical error token.
            text = source[pos]
            tokens.append(_Token("ERROR", text, SourcePoint(row, col), SourcePoint(row, col + 1)))
            pos += 1
            col += 1
            continue
        text = m.group(0)
        group = m.lastgroup
        start = SourcePoint(row, col)
        if group == "newline":
            tokens.append(_Token("newline", text, start, SourcePoint(row + 1, 0)))
            row += 1
            col = 0
        else:
            col += len(text)
            end = SourcePoint(row, col)
            if group == "comment" or group == "space":
                pass
            elif group == "identifier" and text in _KEYWORDS:
                tokens.append(_Token(text, text, start, end))
            elif group == "op":
                tokens.append(_Token(text, text, start, end))
            elif group == "badstring":
                tokens.append(_Token("ERROR", text, start, end))
            else:
                assert group is not None
                tokens.append(_Token(group, text, start, end))
        pos = m.end() if m.end() > pos else pos + 1
    return tokens


class _ParseFailure(Exception):
    pass


def _leaf(tok: _Token, kind: str | None = None, named: bool | None = None) -> SyntaxNode:
    k = kind or tok.kind
    if named is None:
        named = k in {"identifier", "integer", "string", "ERROR"} or k in _KEYWORDS
    return SyntaxNode(kind=k, value=tok.text, named=named, start=tok.start, end=tok.end)


def _internal(kind: str, children: list[SyntaxNode]) -> SyntaxNode:
    return SyntaxNode(
        kind=kind, named=True,
        start=children[0].start, end=children[-1].end,
        children=tuple(children),
    )


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> _Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def at(self, kind: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == kind

    def take(self) -> _Token:
        tok = self.peek()
        if tok is None:
            raise _ParseFailure("unexpected end of input")
        self.i += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok is None or tok.kind != kind:
            raise _ParseFailure(f"expected {kind!r}")
        return self.take()

    # --- grammar rules -------------------------------------------------

    def parse_module(self) -> SyntaxNode:
        children: list[SyntaxNode] = []
        while self.peek() is not None:
            if self.at("newline"):
                self.take()
                continue
            if self.at(";"):
                children.append(_leaf(self.take(), named=False))
                continue
            start_i = self.i
            try:
                children.append(self.parse_statement())
            except _ParseFailure:
                children.append(self._error_node(start_i))
        if not children:
            return SyntaxNode(kind="module", value="")
        return _internal("module", children)

    def _error_node(self, start_i: int) -> SyntaxNode:
        # Recover by folding everything up to the next separator into ERROR.
        self.i = max(self.i, start_i)
        leaves: list[SyntaxNode] = []
        if self.i == start_i and self.peek() is not None:
            leaves.append(_leaf(self.take(), kind="ERROR"))
        else:
            leaves.extend(_leaf(self.tokens[j]) for j in range(start_i, self.i))
        while self.peek() is not None and not self.at("newline") and not self.at(";"):
            leaves.append(_leaf(self.take()))
        return _internal("ERROR", leaves)

    def parse_statement(self) -> SyntaxNode:
        if self.at("return"):
            kw = _leaf(self.take())
            if self.peek() is None or self.at("newline") or self.at(";"):
                return _internal("return_statement", [kw])
            value = self.parse_expr()
            self._expect_statement_end()
            return _internal("return_statement", [kw, value])
        expr = self.parse_expr()
        if self.at("=") and expr.kind in {"identifier", "attribute"}:
            eq = _leaf(self.take(), named=False)
            rhs = self.parse_expr()
            self._expect_statement_end()
            assign = _internal("assignment", [expr, eq, rhs])
            return _internal("expression_statement", [assign])
        self._expect_statement_end()
        return _internal("expression_statement", [expr])

    def _expect_statement_end(self) -> None:
        if self.peek() is not None and not self.at("newline") and not self.at(";"):
            raise _ParseFailure("trailing tokens after expression")

    def parse_expr(self) -> SyntaxNode:
        node = self.parse_additive()
        while self.peek() is not None and self.peek().kind in _COMPARISON_OPS:  # type: ignore[union-attr]
            op = _leaf(self.take(), named=False)
            rhs = self.parse_additive()
            node = _internal("comparison_operator", [node, op, rhs])
        return node

    def parse_additive(self) -> SyntaxNode:
        node = self.parse_multiplicative()
        while self.peek() is not None and self.peek().kind in _ADDITIVE_OPS:  # type: ignore[union-attr]
            op = _leaf(self.take(), named=False)
            rhs = self.parse_multiplicative()
            node = _internal("binary_operator", [node, op, rhs])
        return node

    def parse_multiplicative(self) -> SyntaxNode:
        node = self.parse_postfix()
        while self.peek() is not None and self.peek().kind in _MULTIPLICATIVE_OPS:  # type: ignore[union-attr]
            op = _leaf(self.take(), named=False)
            rhs = self.parse_postfix()
            node = _internal("binary_operator", [node, op, rhs])
        return node

    def parse_postfix(self) -> SyntaxNode:
        node = self.parse_primary()
        while True:
            if self.at("("):
                lparen = _leaf(self.take(), named=False)
                args: list[SyntaxNode] = [lparen]
                if not self.at(")"):
                    args.append(self.parse_expr())
                    while self.at(","):
                        args.append(_leaf(self.take(), named=False))
                        args.append(self.parse_expr())
                args.append(_leaf(self.expect(")"), named=False))
                node = _internal("call", [node, _internal("argument_list", args)])
            elif self.at("."):
                dot = _leaf(self.take(), named=False)
                attr = _leaf(self.expect("identifier"))
                node = _internal("attribute", [node, dot, attr])
            else:
                return node

    def parse_primary(self) -> SyntaxNode:
        tok = self.peek()
        if tok is None:
            raise _ParseFailure("expected an expression")
        if tok.kind in {"identifier", "integer", "string"}:
            return _leaf(self.take())
        if tok.kind == "(":
            lparen = _leaf(self.take(), named=False)
            inner = self.parse_expr()
            rparen = _leaf(self.expect(")"), named=False)
            return _internal("parenthesized_expression", [lparen, inner, rparen])
        raise _ParseFailure(f"unexpected token {tok.text!r}")


def parse_mini_python(source: str) -> SyntaxNode:
    """Parse ``source`` under the mini_python grammar.

    Always returns a tree; syntax problems surface as ERROR nodes.  Empty
    (or all-whitespace) input parses to a bare module leaf.
    """
    return _Parser(_lex(source)).parse_module()


_GRAMMARS: dict[str, Callable[[str], SyntaxNode]] = {
    "mini_python": parse_mini_python,
}


def available_grammars() -> list[str]:
    return sorted(_GRAMMARS)


def parse(source: str, grammar_id: str = "mini_python") -> SyntaxNode:
    """Parse with a registered grammar; unknown ids raise GrammarNotFoundError."""
    try:
        parser = _GRAMMARS[grammar_id]
    except KeyError:
        raise GrammarNotFoundError(
            f"unknown grammar {grammar_id!r}; available: {', '.join(available_grammars())}"
        ) from None
    return parser(source)


def register_grammar(grammar_id: str, parser: Callable[[str], SyntaxNode]) -> None:
    """Register an additional in-process parser (e.g. a tree-sitter wrapper)."""
    _GRAMMARS[grammar_id] = parser
