"""Simplified def-use data-flow comparison.

This is a deliberately reduced stand-in for full data-flow-graph matching:
a def-use event is "an identifier that was previously assigned is read
again", and two programs are compared on the multiset of such event names.
Reports that include this component are flagged accordingly.
"""

from __future__ import annotations

from collections import Counter

from ..syntax_tree import SyntaxNode


def _identifier_uses(node: SyntaxNode, skip: SyntaxNode | None = None) -> list[str]:
    """Identifier leaves read as variables: excludes the assignment target
    ``skip`` and attribute member names (``db.execute`` reads ``db`` only)."""
    uses: list[str] = []

    def visit(n: SyntaxNode) -> None:
        if n is skip:
            return
        if n.is_leaf:
            if n.kind == "identifier":
                uses.append(n.value or "")
            return
        children = n.children
        if n.kind == "attribute" and len(children) == 3:
            visit(children[0])
            return
        for c in children:
            visit(c)

    visit(node)
    return uses


def def_use_events(tree: SyntaxNode) -> Counter:
    """Multiset of names defined by an assignment and later (or in the same
    right-hand side) read again, in statement order."""
    defined: set[str] = set()
    events: Counter = Counter()
    for stmt in tree.children or ():
        assign = _assignment_of(stmt)
        target_leaf = None
        if assign is not None and assign.children[0].kind == "identifier":
            target_leaf = assign.children[0]
        for name in _identifier_uses(stmt, skip=target_leaf):
            if name in defined:
                events[name] += 1
        if target_leaf is not None:
            defined.add(target_leaf.value or "")
    return events


def _assignment_of(stmt: SyntaxNode) -> SyntaxNode | None:
    if stmt.kind == "assignment":
        return stmt
    if stmt.kind == "expression_statement" and stmt.children:
        inner = stmt.children[0]
        if inner.kind == "assignment":
            return inner
    return None


def dataflow_match(candidate_tree: SyntaxNode | None, reference_tree: SyntaxNode) -> float | None:
    """Fraction of reference def-use events present in the candidate.

    Returns None when the reference has no def-use events at all (extraction
    unavailable; the composite metric redistributes this component's weight).
    An unparseable candidate scores 0.
    """
    ref_events = def_use_events(reference_tree)
    total = sum(ref_events.values())
    if total == 0:
        return None
    if candidate_tree is None:
        return 0.0
    cand_events = def_use_events(candidate_tree)
    matched = sum(min(c, cand_events[name]) for name, c in ref_events.items())
    return matched / total
