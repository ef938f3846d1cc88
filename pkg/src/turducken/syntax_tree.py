"""Concrete syntax tree data model, ingestion and queries.

Trees come from one of two sources with an identical data model: the embedded
grammar-driven parser (:mod:`turducken.grammar`) or a JSON document in the
Tree Interchange Format::

    {"kind": str, "named": bool, "value": str?, "start": [row, col]?,
     "end": [row, col]?, "children": [node...]}

"value" and a non-empty "children" list are mutually exclusive; an absent
"children" key means the node is a leaf.  Absent spans default to the null
span ``(0,0)-(0,0)``, which is exempt from span ordering checks.

Trees are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator, NamedTuple

from .errors import TreeFormatError, TreeStructureError

DEFAULT_ERROR_KINDS = frozenset({"ERROR", "MISSING"})


class SourcePoint(NamedTuple):
    """0-based (row, byte column) position; ordering is lexicographic."""

    row: int
    col: int


NULL_POINT = SourcePoint(0, 0)


@dataclass(frozen=True)
class SyntaxNode:
    """One node of a concrete syntax tree.

    Leaves carry source text in ``value``; internal nodes carry only their
    ``kind`` and children.  ``named`` mirrors the grammar's distinction
    between named rules and anonymous tokens (keywords, punctuation).
    """

    kind: str
    value: str | None = None
    named: bool = True
    start: SourcePoint = NULL_POINT
    end: SourcePoint = NULL_POINT
    children: tuple["SyntaxNode", ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.kind:
            raise TreeStructureError("<node>", "kind must be a non-empty string")
        if self.children and self.value is not None:
            raise TreeStructureError(self.kind, "a node cannot carry both a value and children")
        if not self.children and self.value is None:
            # Normalize: a childless node is a leaf with empty text
            # (e.g. the module node of an empty source file).
            object.__setattr__(self, "value", "")

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def walk(self) -> Iterator["SyntaxNode"]:
        """Pre-order traversal over this subtree."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def has_null_span(self) -> bool:
        return self.start == NULL_POINT and self.end == NULL_POINT


def leaf_tokens(tree: SyntaxNode) -> list[tuple[str, str]]:
    """All leaves of ``tree`` as (kind, value) in left-to-right source order.

    Pre-order traversal visits leaves in span order because child spans are
    ordered within their parent.
    """
    return [(n.kind, n.value or "") for n in tree.walk() if n.is_leaf]


def has_error(tree: SyntaxNode, error_kinds: frozenset[str] = DEFAULT_ERROR_KINDS) -> bool:
    """True iff any node kind is one of the grammar's error sentinels."""
    return any(n.kind in error_kinds for n in tree.walk())


def count_nodes(tree: SyntaxNode) -> tuple[int, int]:
    """(leaf count, internal node count)."""
    leaves = internal = 0
    for n in tree.walk():
        if n.is_leaf:
            leaves += 1
        else:
            internal += 1
    return leaves, internal


def validate_tree(tree: SyntaxNode, path: str = "$") -> None:
    """Check span invariants recursively; dataclass construction already
    enforces the kind/value/children invariants.

    Nodes with the null span carry no position information and are exempt.
    Raises :class:`TreeStructureError` naming the offending path.
    """
    if not tree.has_null_span() and tree.end < tree.start:
        raise TreeStructureError(path, f"span end {tree.end} precedes start {tree.start}")
    prev_end: SourcePoint | None = None
    for i, child in enumerate(tree.children):
        child_path = f"{path}.children[{i}]"
        if not child.has_null_span() and not tree.has_null_span():
            if child.start < tree.start or tree.end < child.end:
                raise TreeStructureError(child_path, "child span escapes parent span")
            if prev_end is not None and child.start < prev_end:
                raise TreeStructureError(child_path, "children spans out of order")
            prev_end = child.end
        validate_tree(child, child_path)


def ingest_tree(doc: Any) -> SyntaxNode:
    """Parse a Tree Interchange Format document into a :class:`SyntaxNode`.

    Child order is preserved.  Malformed documents raise
    :class:`TreeFormatError`; a node with both a value and (non-empty)
    children raises :class:`TreeStructureError`.  Either error names the
    offending JSON path.
    """
    root = _ingest_node(doc, "$")
    validate_tree(root)
    return root


def _ingest_node(doc: Any, path: str) -> SyntaxNode:
    if not isinstance(doc, dict):
        raise TreeFormatError(path, f"expected an object, got {type(doc).__name__}")
    unknown = set(doc) - {"kind", "named", "value", "start", "end", "children"}
    if unknown:
        raise TreeFormatError(path, f"unknown fields {sorted(unknown)}")

    kind = doc.get("kind")
    if not isinstance(kind, str) or not kind:
        raise TreeFormatError(f"{path}.kind", "kind must be a non-empty string")
    named = doc.get("named", True)
    if not isinstance(named, bool):
        raise TreeFormatError(f"{path}.named", "named must be a boolean")

    value = doc.get("value")
    if value is not None and not isinstance(value, str):
        raise TreeFormatError(f"{path}.value", "value must be a string")

    raw_children = doc.get("children")
    if raw_children is None:
        raw_children = []
    if not isinstance(raw_children, list):
        raise TreeFormatError(f"{path}.children", "children must be a list")
    if value is not None and raw_children:
        raise TreeStructureError(path, "leaf value and children are mutually exclusive")

    children = tuple(
        _ingest_node(c, f"{path}.children[{i}]") for i, c in enumerate(raw_children)
    )
    start = _ingest_point(doc.get("start"), f"{path}.start")
    end = _ingest_point(doc.get("end"), f"{path}.end")
    return SyntaxNode(
        kind=kind, value=value if not children else None, named=named,
        start=start, end=end, children=children,
    )


def _ingest_point(raw: Any, path: str) -> SourcePoint:
    if raw is None:
        return NULL_POINT
    if (
        not isinstance(raw, (list, tuple)) or len(raw) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in raw)
    ):
        raise TreeFormatError(path, "position must be [row, col] with non-negative integers")
    return SourcePoint(raw[0], raw[1])


def tree_to_document(tree: SyntaxNode) -> dict[str, Any]:
    """Serialize back to the Tree Interchange Format.

    ``ingest_tree(tree_to_document(t))`` is structurally equal to ``t``.
    """
    doc: dict[str, Any] = {"kind": tree.kind, "named": tree.named}
    if not tree.has_null_span():
        doc["start"] = list(tree.start)
        doc["end"] = list(tree.end)
    if tree.children:
        doc["children"] = [tree_to_document(c) for c in tree.children]
    else:
        doc["value"] = tree.value or ""
    return doc


def source_from_leaves(tree: SyntaxNode) -> str:
    """Best-effort exact source reconstruction by splicing leaf values at
    their recorded spans.  Only meaningful when the tree carries real spans
    (columns are treated as character offsets)."""
    out: list[str] = []
    row, col = 0, 0
    for kind, value, start in (
        (n.kind, n.value or "", n.start) for n in tree.walk() if n.is_leaf
    ):
        if start.row > row:
            out.append("\n" * (start.row - row))
            row, col = start.row, 0
        if start.col > col:
            out.append(" " * (start.col - col))
        out.append(value)
        col = start.col + len(value)
        row = start.row + value.count("\n")
    return "".join(out)
