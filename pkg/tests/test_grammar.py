import pytest

from turducken.errors import GrammarNotFoundError
from turducken.grammar import available_grammars, parse
from turducken.syntax_tree import has_error, leaf_tokens, validate_tree


def kinds(tree):
    return [n.kind for n in tree.walk()]


def test_return_statement_shape():
    tree = parse("return 1")
    assert kinds(tree) == ["module", "return_statement", "return", "integer"]


def test_assignment_is_wrapped_in_expression_statement():
    tree = parse("x = 1")
    assert kinds(tree) == [
        "module", "expression_statement", "assignment", "identifier", "=", "integer",
    ]


def test_call_with_attribute_and_string():
    tree = parse('db.execute("SELECT * FROM t")')
    assert "call" in kinds(tree)
    assert "attribute" in kinds(tree)
    string_leaves = [n for n in tree.walk() if n.kind == "string"]
    assert [s.value for s in string_leaves] == ['"SELECT * FROM t"']
    assert not has_error(tree)


def test_operator_precedence():
    tree = parse("return 1 + 2 * 3")
    # the + node's right child must be the * subtree
    plus = next(n for n in tree.walk() if n.kind == "binary_operator" and n.children[1].value == "+")
    assert plus.children[2].kind == "binary_operator"
    assert plus.children[2].children[1].value == "*"


def test_comparison_node():
    tree = parse("return x == 1")
    assert "comparison_operator" in kinds(tree)


def test_semicolon_separated_statements_roundtrip_through_tokens():
    source = "x = 1 ; return x"
    tree = parse(source)
    assert not has_error(tree)
    rebuilt = " ".join(v for _, v in leaf_tokens(tree))
    assert rebuilt == source
    assert not has_error(parse(rebuilt))


def test_newline_separated_statements():
    tree = parse("x = 1\nreturn x")
    assert not has_error(tree)
    assert kinds(tree).count("expression_statement") == 1
    assert kinds(tree).count("return_statement") == 1


def test_error_recovery_keeps_later_statements():
    tree = parse("return ((\nx = 1")
    assert has_error(tree)
    assert "expression_statement" in kinds(tree)


@pytest.mark.parametrize("bad", ["return ((", "x = ", "(", "1 2", 'foo("unterminated', "x = 1 2"])
def test_error_inputs_produce_error_nodes(bad):
    assert has_error(parse(bad))


def test_empty_source_parses_to_bare_module():
    tree = parse("")
    assert tree.kind == "module"
    assert tree.is_leaf
    assert not has_error(tree)
    assert not has_error(parse("   \n  # comment only\n"))


def test_comments_are_skipped():
    tree = parse("return 1  # trailing comment")
    assert not has_error(tree)
    assert [v for _, v in leaf_tokens(tree)] == ["return", "1"]


def test_spans_are_consistent():
    validate_tree(parse('x = foo(1, "a")\ny = x + 2\nreturn y'))


def test_parenthesized_expression():
    tree = parse("return (1 + 2) * 3")
    assert "parenthesized_expression" in kinds(tree)
    assert not has_error(tree)


def test_unknown_grammar_is_a_configuration_error():
    with pytest.raises(GrammarNotFoundError):
        parse("return 1", "cobol")
    assert "mini_python" in available_grammars()
