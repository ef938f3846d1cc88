"""Automatic evaluation metrics for generated code."""

from .composite import (
    CodeBleuResult,
    code_bleu,
    code_bleu_result,
    code_executable,
    code_tokens,
)
from .dataflow import dataflow_match, def_use_events
from .ngram import (
    KeywordWeights,
    TrivialNGramSet,
    bleu,
    crystal_bleu,
    crystal_bleu_flagged,
    weighted_bleu,
)
from .report import EvalPair, MetricReport, PairRow, evaluate_pairs
from .syntax import SqlMatcher, sql_normalize, syntax_exact_match, syntax_match
from .wilcoxon import WilcoxonResult, wilcoxon_signed_rank

__all__ = [
    "CodeBleuResult",
    "EvalPair",
    "KeywordWeights",
    "MetricReport",
    "PairRow",
    "SqlMatcher",
    "TrivialNGramSet",
    "WilcoxonResult",
    "bleu",
    "code_bleu",
    "code_bleu_result",
    "code_executable",
    "code_tokens",
    "crystal_bleu",
    "crystal_bleu_flagged",
    "dataflow_match",
    "def_use_events",
    "evaluate_pairs",
    "sql_normalize",
    "syntax_exact_match",
    "syntax_match",
    "weighted_bleu",
    "wilcoxon_signed_rank",
]
