"""Syntax-level similarity: subtree match and exact AST+SQL match.

``syntax_match`` follows the
subtree-accuracy definition used by composite code metrics: every internal
node of the reference contributes its full kind-labeled subtree shape (leaf
values excluded), and the score is the fraction found in the candidate's
subtree multiset.  It is therefore invariant to identifier renaming.

``syntax_exact_match`` is the strict variant: the two trees must be
isomorphic including leaf values, except that embedded SQL segments are
compared after SQL normalization (whitespace collapsed, keywords upper-cased).
Which segments count as SQL depends on the corpus style: native style takes
string literals passed to execution calls; ORM style takes the full argument
expression of ORM call chains.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Literal

from ..grammar import parse
from ..syntax_tree import SyntaxNode, has_error

SQL_KEYWORDS = frozenset(
    """select from where and or not null insert into values update set delete
    join inner left right outer full on group by order limit offset having
    distinct as in is like between exists union all create table drop alter
    add primary key foreign references default check unique index view asc
    desc count sum avg min max""".split()
)

_QUOTED_RE = re.compile(r"""^("(?:[^"\\]|\\.)*"|'(?:[^'\\]|\\.)*')$""", re.DOTALL)

Path = tuple[int, ...]


def _subtree_shape(node: SyntaxNode) -> Hashable:
    if node.is_leaf:
        return (node.kind,)
    return (node.kind, tuple(_subtree_shape(c) for c in node.children))


def _internal_shapes(tree: SyntaxNode) -> Counter:
    shapes: Counter = Counter()
    for node in tree.walk():
        if not node.is_leaf:
            shapes[_subtree_shape(node)] += 1
    return shapes


def syntax_match(candidate_tree: SyntaxNode | None, reference_tree: SyntaxNode) -> float:
    """Fraction of reference subtrees present in the candidate (multiset
    semantics).  ``None`` or error-marked candidates score 0; a reference
    without internal nodes matches vacuously (1.0)."""
    if candidate_tree is None or has_error(candidate_tree):
        return 0.0
    ref_shapes = _internal_shapes(reference_tree)
    total = sum(ref_shapes.values())
    if total == 0:
        return 1.0
    cand_shapes = _internal_shapes(candidate_tree)
    matched = sum(min(c, cand_shapes[shape]) for shape, c in ref_shapes.items())
    return matched / total


def sql_normalize(text: str) -> str:
    """Normalize an SQL segment: strip surrounding quotes, collapse runs of
    whitespace, upper-case keywords (identifiers keep their case)."""
    s = text.strip()
    if _QUOTED_RE.match(s):
        s = s[1:-1]
    words = s.split()
    return " ".join(w.upper() if w.lower() in SQL_KEYWORDS else w for w in words)


@dataclass(frozen=True)
class SqlMatcher:
    """Locates embedded SQL segments per corpus style.

    native_sql: string-literal arguments of calls whose callee name is one of
    ``exec_callees`` (leaf paths).  orm: the whole argument expression of
    calls whose callee is one of ``orm_callees`` (subtree paths, compared as
    normalized text)."""

    style: Literal["native_sql", "orm"] = "native_sql"
    exec_callees: frozenset[str] = frozenset({"execute", "executemany", "executescript", "read_sql"})
    orm_callees: frozenset[str] = frozenset({"filter", "filter_by", "where", "query", "select_from", "order_by"})

    def sql_paths(self, tree: SyntaxNode) -> tuple[set[Path], set[Path]]:
        """(leaf paths compared as normalized SQL, subtree paths compared as
        normalized joined text)."""
        leaf_paths: set[Path] = set()
        subtree_paths: set[Path] = set()

        def visit(node: SyntaxNode, path: Path) -> None:
            if node.kind == "call" and len(node.children) == 2:
                callee = _callee_name(node.children[0])
                args = node.children[1]
                args_path = path + (1,)
                if self.style == "native_sql" and callee in self.exec_callees:
                    for i, child in enumerate(args.children):
                        if child.is_leaf and child.kind == "string":
                            leaf_paths.add(args_path + (i,))
                elif self.style == "orm" and callee in self.orm_callees:
                    subtree_paths.add(args_path)
            for i, child in enumerate(node.children):
                visit(child, path + (i,))

        visit(tree, ())
        return leaf_paths, subtree_paths


def _callee_name(fn_node: SyntaxNode) -> str | None:
    """Rightmost identifier of the function expression (``db.cur.execute``
    resolves to ``execute``)."""
    if fn_node.is_leaf:
        return fn_node.value if fn_node.kind == "identifier" else None
    if fn_node.kind == "attribute" and len(fn_node.children) == 3:
        member = fn_node.children[2]
        return member.value if member.kind == "identifier" else None
    return None


def _subtree_text(node: SyntaxNode) -> str:
    leaves = [n.value or "" for n in node.walk() if n.is_leaf]
    # argument_list includes its parentheses; drop them from the SQL text
    if leaves and leaves[0] == "(" and leaves[-1] == ")":
        leaves = leaves[1:-1]
    return " ".join(leaves)


def syntax_exact_match(
    candidate_source: str,
    reference_source: str,
    matcher: SqlMatcher | None = None,
    grammar_id: str = "mini_python",
) -> int:
    """1 iff the candidate and reference parse to isomorphic trees (leaf
    values included) with embedded SQL segments equal after normalization,
    else 0.  Either side failing to parse yields 0."""
    matcher = matcher or SqlMatcher()
    cand_tree = parse(candidate_source, grammar_id)
    ref_tree = parse(reference_source, grammar_id)
    if has_error(cand_tree) or has_error(ref_tree):
        return 0
    leaf_paths, subtree_paths = matcher.sql_paths(ref_tree)

    def match(c: SyntaxNode, r: SyntaxNode, path: Path) -> bool:
        if c.kind != r.kind or c.is_leaf != r.is_leaf:
            return False
        if path in subtree_paths:
            return sql_normalize(_subtree_text(c)) == sql_normalize(_subtree_text(r))
        if c.is_leaf:
            if path in leaf_paths:
                return sql_normalize(c.value or "") == sql_normalize(r.value or "")
            return c.value == r.value
        if len(c.children) != len(r.children):
            return False
        return all(
            match(cc, rc, path + (i,)) for i, (cc, rc) in enumerate(zip(c.children, r.children))
        )

    return int(match(cand_tree, ref_tree, ()))
