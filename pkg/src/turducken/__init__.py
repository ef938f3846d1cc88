"""Syntax-guided code generation toolkit.

Pieces: concrete-syntax-tree ingestion and an embedded mini grammar, the
tag-annotated traversal and its inverse, prompt templates for the dual-task
setup, a toy encoder-decoder with a gated primary head, decoding strategies
including compiler-feedback beam search, executability checkers, and the
code-similarity metric suite.
"""

__version__ = "0.1.0"

from .checkers import (
    AcceptAllChecker,
    CheckOutcome,
    ExternalChecker,
    ExternalCheckerConfig,
    ParseChecker,
    check_external,
    check_parse,
    parallel_check_all,
)
from .decode import Candidate, DecodeOpts, Scorer, beam, greedy, sample, sf_beam
from .errors import TurduckenError
from .grammar import available_grammars, parse, register_grammar
from .prompts import PromptTemplate, TaskId, build_prompt
from .sat import SatSequence, SatToken, TagPolicy, parse_rendered, render, sat_decode, sat_encode
from .scorers import TableScorer
from .syntax_tree import (
    SourcePoint,
    SyntaxNode,
    has_error,
    ingest_tree,
    leaf_tokens,
    tree_to_document,
)
from .vocab import Vocabulary

__all__ = [
    "AcceptAllChecker",
    "Candidate",
    "CheckOutcome",
    "DecodeOpts",
    "ExternalChecker",
    "ExternalCheckerConfig",
    "ParseChecker",
    "PromptTemplate",
    "SatSequence",
    "SatToken",
    "Scorer",
    "SourcePoint",
    "SyntaxNode",
    "TableScorer",
    "TagPolicy",
    "TaskId",
    "TurduckenError",
    "Vocabulary",
    "available_grammars",
    "beam",
    "build_prompt",
    "check_external",
    "check_parse",
    "greedy",
    "has_error",
    "ingest_tree",
    "leaf_tokens",
    "parallel_check_all",
    "parse",
    "parse_rendered",
    "register_grammar",
    "render",
    "sample",
    "sat_decode",
    "sat_encode",
    "sf_beam",
    "tree_to_document",
]
