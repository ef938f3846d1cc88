"""Composite code similarity (weighted mix of lexical and syntactic parts)
and the corpus-level executable rate."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from ..grammar import parse
from ..syntax_tree import SyntaxNode, has_error, leaf_tokens
from .dataflow import dataflow_match
from .ngram import KeywordWeights, bleu, weighted_bleu
from .syntax import syntax_match

DEFAULT_WEIGHTS = (0.25, 0.25, 0.25, 0.25)


def code_tokens(source: str, grammar_id: str = "mini_python") -> list[str]:
    """Token stream for lexical metrics: parser leaves when the source parses
    cleanly, whitespace split otherwise."""
    tree = parse(source, grammar_id)
    if has_error(tree):
        return source.split()
    return [v for _, v in leaf_tokens(tree) if v]


@dataclass(frozen=True)
class CodeBleuResult:
    value: float
    ngram: float
    weighted: float
    syntax: float
    dataflow: float | None  # None: no reference def-use events; weight redistributed

    @property
    def dataflow_available(self) -> bool:
        return self.dataflow is not None


def code_bleu_result(
    candidate_source: str,
    reference_source: str,
    weights: tuple[float, float, float, float] = DEFAULT_WEIGHTS,
    keyword_weights: KeywordWeights | None = None,
    grammar_id: str = "mini_python",
    max_n: int = 4,
) -> CodeBleuResult:
    """Weighted sum of (bleu, weighted_bleu, syntax_match, dataflow_match).

    When the data-flow component is unavailable for a pair its weight is
    redistributed proportionally over the remaining components.
    """
    if len(weights) != 4 or any(w < 0 for w in weights):
        raise ValueError("weights must be four non-negative numbers")
    cand_tokens = code_tokens(candidate_source, grammar_id)
    ref_tokens = code_tokens(reference_source, grammar_id)
    cand_tree: SyntaxNode | None = parse(candidate_source, grammar_id)
    if cand_tree is not None and has_error(cand_tree):
        cand_tree = None
    ref_tree = parse(reference_source, grammar_id)

    b = bleu(cand_tokens, ref_tokens, max_n)
    w = weighted_bleu(cand_tokens, ref_tokens, keyword_weights, max_n)
    s = syntax_match(cand_tree, ref_tree)
    d = dataflow_match(cand_tree, ref_tree)

    parts = [(weights[0], b), (weights[1], w), (weights[2], s)]
    if d is not None:
        parts.append((weights[3], d))
    weight_sum = sum(wt for wt, _ in parts)
    value = sum(wt * m for wt, m in parts) / weight_sum if weight_sum > 0 else 0.0
    return CodeBleuResult(value=value, ngram=b, weighted=w, syntax=s, dataflow=d)


def code_bleu(
    candidate_source: str,
    reference_source: str,
    weights: tuple[float, float, float, float] = DEFAULT_WEIGHTS,
    keyword_weights: KeywordWeights | None = None,
    grammar_id: str = "mini_python",
    max_n: int = 4,
) -> float:
    return code_bleu_result(
        candidate_source, reference_source, weights, keyword_weights, grammar_id, max_n
    ).value


def code_executable(candidates: Sequence[str], checker: Callable[[str], "CheckOutcome"]) -> float:
    """Fraction of candidate sources the checker marks executable."""
    if not candidates:
        raise ValueError("candidates must be non-empty")
    from ..checkers import parallel_check_all

    outcomes = parallel_check_all(checker, candidates)
    return sum(1 for o in outcomes if o.executable) / len(candidates)
