"""Deterministic synthetic NL <-> code corpus over the embedded grammar.

Used by the toy training runs and by property tests that need "real" parse
trees without shipping a dataset.  Statements are single-line (joined by
``;`` where a template needs two), so the flat leaf-token stream detokenizes
back to parseable source by simple space-joining.
"""

from __future__ import annotations

import numpy as np

from .corpus import Sample

_NAMES = (
    "x", "y", "total", "count", "result", "value", "acc", "tmp",
    "score", "flag", "limit", "size", "rate", "delta", "level", "index",
)
_FUNCS = ("foo", "bar", "compute", "process", "load", "fetch", "update", "scan")
_TABLES = ("users", "orders", "items", "logs", "events", "tags", "posts", "files")
_COLUMNS = ("id", "name", "price", "status", "owner", "city", "stamp", "kind")


def _templates(rng: np.random.Generator) -> tuple[str, str]:
    name, other = rng.choice(_NAMES, size=2, replace=False)
    fn = str(rng.choice(_FUNCS))
    table = str(rng.choice(_TABLES))
    col, col2 = rng.choice(_COLUMNS, size=2, replace=False)
    a, b, v = (int(rng.integers(0, 100)) for _ in range(3))
    kind = int(rng.integers(0, 8))
    if kind == 0:
        return f"assign {v} to {name}", f"{name} = {v}"
    if kind == 1:
        return f"assign {v} to {name} and return it", f"{name} = {v} ; return {name}"
    if kind == 2:
        return f"return the sum of {a} and {b}", f"return {a} + {b}"
    if kind == 3:
        return f"call {fn} with {v}", f"{fn}({v})"
    if kind == 4:
        return f"fetch all rows from {table}", f'db.execute("SELECT * FROM {table}")'
    if kind == 5:
        return (
            f"fetch {col} from {table} where {col2} equals {v}",
            f'cur.execute("SELECT {col} FROM {table} WHERE {col2} = {v}")',
        )
    if kind == 6:
        return f"check whether {name} equals {v}", f"return {name} == {v}"
    return f"multiply {a} by {b} into {name} and return it", f"{name} = {a} * {b} ; return {name}"


def synthetic_corpus(n: int, seed: int = 1234, language: str = "python") -> list[Sample]:
    """``n`` distinct samples, reproducible for a fixed seed."""
    rng = np.random.default_rng(seed)
    samples: list[Sample] = []
    seen: set[tuple[str, str]] = set()
    attempts = 0
    while len(samples) < n:
        attempts += 1
        if attempts > 100 * n:
            raise ValueError(f"cannot generate {n} distinct samples from the template pool")
        nl, code = _templates(rng)
        if (nl, code) in seen:
            continue
        seen.add((nl, code))
        samples.append(
            Sample(
                id=f"syn-{len(samples):05d}",
                nl=nl,
                code=code,
                language=language,
                style="native_sql",
            )
        )
    return samples


def random_tree(rng: np.random.Generator, max_depth: int = 4, max_children: int = 4):
    """A random grammar-shaped tree (valid SyntaxNode invariants, no spans):
    internal kinds from a fixed pool, leaves either plain tokens or quoted
    string literals so the placeholder path gets exercised."""
    from .syntax_tree import SyntaxNode

    internal_kinds = (
        "module", "expression_statement", "return_statement", "assignment",
        "binary_operator", "call", "argument_list", "attribute", "block",
    )
    leaf_words = ("alpha", "beta", "gamma", "delta", "idx", "n0", "n1", "+", "-", "(", ")", "=", "return")

    def node(depth: int) -> SyntaxNode:
        if depth >= max_depth or rng.random() < 0.4:
            if rng.random() < 0.2:
                text = '"' + str(rng.choice(("SELECT 1", "a b", "hello world"))) + '"'
                return SyntaxNode(kind="string", value=text)
            if rng.random() < 0.3:
                return SyntaxNode(kind="identifier", value=str(rng.choice(leaf_words[:7])))
            word = str(rng.choice(leaf_words))
            kind = "identifier" if word.isalnum() else word
            return SyntaxNode(kind=kind, value=word, named=word.isalnum())
        k = int(rng.integers(1, max_children + 1))
        return SyntaxNode(
            kind=str(rng.choice(internal_kinds)),
            children=tuple(node(depth + 1) for _ in range(k)),
        )

    root = node(0)
    if root.is_leaf:
        root = SyntaxNode(kind="module", children=(root,))
    return root
