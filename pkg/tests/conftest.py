"""Shared strategies and fixtures."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from turducken.syntax_tree import SyntaxNode

KINDS = ("module", "expression_statement", "return_statement", "binary_operator", "call", "block")
LEAF_KINDS = ("identifier", "integer", "keyword")
# no whitespace (the rendered form is space-joined), no tag shapes, and not
# the placeholder token itself
LEAF_VALUES = ("x", "y", "foo", "bar", "1", "42", "return", "+", "(", ")")
STRING_VALUES = ('"hello"', '"SELECT 1"', "'a b c'")


def leaf_nodes():
    plain = st.builds(
        lambda kind, value: SyntaxNode(kind=kind, value=value),
        st.sampled_from(LEAF_KINDS),
        st.sampled_from(LEAF_VALUES),
    )
    strings = st.builds(
        lambda value: SyntaxNode(kind="string", value=value),
        st.sampled_from(STRING_VALUES),
    )
    return st.one_of(plain, plain, strings)


def trees():
    return st.recursive(
        leaf_nodes(),
        lambda inner: st.builds(
            lambda kind, children: SyntaxNode(kind=kind, children=tuple(children)),
            st.sampled_from(KINDS),
            st.lists(inner, min_size=1, max_size=4),
        ),
        max_leaves=25,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
