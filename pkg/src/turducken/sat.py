"""Syntax-augmented traversal: tag-annotated token sequences and their inverse.

``sat_encode`` walks a concrete syntax tree in pre-order and emits, for every
internal node, an opening and closing tag derived from the node kind, and for
every leaf its source text.  String-literal leaves are replaced by a fixed
placeholder token (default ``STR``) whose original text is preserved in a
side table so the sequence stays losslessly invertible.  ``sat_decode`` drops
the tags and restores placeholders, recovering the original leaf token
stream.

The rendered surface form joins tokens with single spaces, e.g.::

    <mod> <ret> return 1 </ret> </mod>

Tag length is configurable: full node kinds or a fixed-length prefix
(default 3).  Prefix truncation may collide across kinds; collisions are
deterministic and harmless because decoding never inspects tag text beyond
balance checking.

All functions are pure over immutable inputs and thread-safe.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Literal, Union

from .errors import SatConsistencyError, SatStructureError
from .syntax_tree import SyntaxNode, count_nodes

FULL = "full"

PYTHON_IDENTIFIER_KINDS = frozenset({"identifier"})
PYTHON_STRING_KINDS = frozenset({"string", "string_content"})
JAVA_IDENTIFIER_KINDS = frozenset({"identifier"})
JAVA_STRING_KINDS = frozenset({"string_literal", "string_fragment"})

_QUOTE_RE = re.compile(r"""^("(?:[^"\\]|\\.)*"|'(?:[^'\\]|\\.)*')$""", re.DOTALL)


def _is_quoted(text: str) -> bool:
    return len(text) >= 2 and _QUOTE_RE.match(text) is not None


@dataclass(frozen=True)
class TagPolicy:
    """Controls tag derivation and the placeholder rule.

    ``tag_length`` is either ``"full"`` or a positive prefix length.  A leaf
    becomes the placeholder when the grammar marks it as a string literal
    (``string_kinds``) or when an identifier-kind leaf carries a quoted
    string value; which kinds count is grammar-dependent, hence configurable.
    Defaults match a Python-style grammar.
    """

    tag_length: Union[int, Literal["full"]] = 3
    placeholder: str = "STR"
    identifier_kinds: frozenset[str] = PYTHON_IDENTIFIER_KINDS
    string_kinds: frozenset[str] = PYTHON_STRING_KINDS

    def __post_init__(self):
        if self.tag_length != FULL and (not isinstance(self.tag_length, int) or self.tag_length < 1):
            raise ValueError("tag_length must be 'full' or a positive integer")
        if not self.placeholder:
            raise ValueError("placeholder must be non-empty")

    @classmethod
    def for_java(cls, **kw) -> "TagPolicy":
        return cls(identifier_kinds=JAVA_IDENTIFIER_KINDS, string_kinds=JAVA_STRING_KINDS, **kw)

    def tag(self, kind: str) -> str:
        if self.tag_length == FULL:
            return kind
        return kind[: self.tag_length]

    def is_string_leaf(self, kind: str, value: str) -> bool:
        if kind in self.string_kinds:
            return True
        return kind in self.identifier_kinds and _is_quoted(value)


@dataclass(frozen=True)
class SatToken:
    """One element of a syntax-guided sequence: an opening or closing tag
    (``variant`` ``"open"``/``"close"`` with the tag text) or a ``"leaf"``
    carrying source text."""

    variant: Literal["open", "close", "leaf"]
    text: str

    def __post_init__(self):
        if self.variant not in ("open", "close", "leaf"):
            raise ValueError(f"bad variant {self.variant!r}")
        if self.variant != "leaf" and not self.text:
            raise ValueError("tag text must be non-empty")

    @classmethod
    def open(cls, tag: str) -> "SatToken":
        return cls("open", tag)

    @classmethod
    def close(cls, tag: str) -> "SatToken":
        return cls("close", tag)

    @classmethod
    def leaf(cls, text: str) -> "SatToken":
        return cls("leaf", text)

    def render(self) -> str:
        if self.variant == "open":
            return f"<{self.text}>"
        if self.variant == "close":
            return f"</{self.text}>"
        return self.text


@dataclass(frozen=True)
class SatSequence:
    """Tag-annotated token sequence plus the string side table.

    ``string_table`` holds the original text of each placeholder leaf in
    emission order; sequences parsed back from rendered model output carry an
    empty table (the model reproduces placeholders, not contents).
    """

    tokens: tuple[SatToken, ...]
    string_table: tuple[str, ...] = ()
    tag_policy: TagPolicy | None = None

    def render(self) -> str:
        return render(self)

    def to_json_dict(self) -> dict:
        return {
            "tokens": [[t.variant, t.text] for t in self.tokens],
            "string_table": list(self.string_table),
            "tag_length": self.tag_policy.tag_length if self.tag_policy else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SatSequence":
        tokens = tuple(SatToken(v, t) for v, t in doc["tokens"])
        policy = None
        if doc.get("tag_length") is not None:
            policy = TagPolicy(tag_length=doc["tag_length"])
        return cls(tokens=tokens, string_table=tuple(doc.get("string_table", ())), tag_policy=policy)


def sat_encode(tree: SyntaxNode, policy: TagPolicy | None = None) -> SatSequence:
    """Pre-order traversal: ``<tag(kind)> ... children ... </tag(kind)>``
    around every internal node, leaf text otherwise, string-literal leaves
    replaced by the placeholder with their text appended to the side table.

    The token count equals ``leaves + 2 * internal_nodes``.
    """
    policy = policy or TagPolicy()
    tokens: list[SatToken] = []
    table: list[str] = []
    # Explicit stack; parser output can nest deeper than Python's default
    # recursion limit on adversarial inputs.
    stack: list[tuple[SyntaxNode, bool]] = [(tree, False)]
    while stack:
        node, closing = stack.pop()
        if closing:
            tokens.append(SatToken.close(policy.tag(node.kind)))
            continue
        if node.is_leaf:
            value = node.value or ""
            if policy.is_string_leaf(node.kind, value):
                tokens.append(SatToken.leaf(policy.placeholder))
                table.append(value)
            else:
                tokens.append(SatToken.leaf(value))
        else:
            tokens.append(SatToken.open(policy.tag(node.kind)))
            stack.append((node, True))
            stack.extend((c, False) for c in reversed(node.children))
    seq = SatSequence(tokens=tuple(tokens), string_table=tuple(table), tag_policy=policy)
    leaves, internal = count_nodes(tree)
    assert len(seq.tokens) == leaves + 2 * internal
    return seq


def check_balanced(tokens: Iterable[SatToken]) -> None:
    """Raise :class:`SatStructureError` unless tags nest properly."""
    stack: list[str] = []
    for tok in tokens:
        if tok.variant == "open":
            stack.append(tok.text)
        elif tok.variant == "close":
            if not stack:
                raise SatStructureError(f"closing tag </{tok.text}> with no open tag")
            top = stack.pop()
            if top != tok.text:
                raise SatStructureError(f"closing tag </{tok.text}> does not match <{top}>")
    if stack:
        raise SatStructureError(f"dangling open tag <{stack[-1]}>")


def sat_decode(seq: SatSequence) -> list[str]:
    """Invert :func:`sat_encode`: drop tags, substitute placeholder leaves
    from the side table, return the original leaf texts in order.

    A sequence parsed from rendered model output carries an empty side table;
    its placeholders are passed through verbatim so the caller can still
    compare token streams.  Any other count mismatch is an inconsistency.
    """
    check_balanced(seq.tokens)
    placeholder = (seq.tag_policy or TagPolicy()).placeholder
    leaves = [t.text for t in seq.tokens if t.variant == "leaf"]
    n_placeholders = sum(1 for t in leaves if t == placeholder)
    if not seq.string_table and n_placeholders:
        return leaves
    if n_placeholders != len(seq.string_table):
        raise SatConsistencyError(
            f"{n_placeholders} placeholder tokens vs {len(seq.string_table)} side-table entries"
        )
    out: list[str] = []
    table = iter(seq.string_table)
    for text in leaves:
        out.append(next(table) if text == placeholder else text)
    return out


def render(seq: SatSequence) -> str:
    """Single-space-joined surface form with angle-bracket tags."""
    return " ".join(t.render() for t in seq.tokens)


_OPEN_RE = re.compile(r"^<([^<>/\s]+)>$")
_CLOSE_RE = re.compile(r"^</([^<>/\s]+)>$")


def parse_rendered(text: str, policy: TagPolicy | None = None) -> SatSequence:
    """Classify whitespace-separated tokens back into a :class:`SatSequence`.

    Anything not shaped like ``<tag>`` or ``</tag>`` becomes a leaf, so model
    output never fails here; balance problems are reported by
    :func:`sat_decode`.  The returned sequence has an empty string table.
    """
    tokens: list[SatToken] = []
    for word in text.split():
        m = _OPEN_RE.match(word)
        if m:
            tokens.append(SatToken.open(m.group(1)))
            continue
        m = _CLOSE_RE.match(word)
        if m:
            tokens.append(SatToken.close(m.group(1)))
            continue
        tokens.append(SatToken.leaf(word))
    return SatSequence(tokens=tuple(tokens), string_table=(), tag_policy=policy)
