"""Corpus-level evaluation: per-pair metric rows, aggregates, config echo."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

from ..grammar import parse
from ..syntax_tree import has_error
from .composite import DEFAULT_WEIGHTS, code_bleu_result, code_tokens
from .ngram import KeywordWeights, TrivialNGramSet, bleu, crystal_bleu_flagged, weighted_bleu
from .syntax import SqlMatcher, syntax_exact_match, syntax_match

SIMILARITY_METRICS = (
    "bleu",
    "weighted_bleu",
    "crystal_bleu",
    "code_bleu",
    "syntax_match",
    "syntax_exact_match",
)


@dataclass(frozen=True)
class EvalPair:
    id: str
    candidate: str
    reference: str


@dataclass(frozen=True)
class PairRow:
    id: str
    values: dict[str, float]
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class MetricReport:
    """Per-pair values plus corpus means for the six similarity metrics, an
    optional corpus-level executable rate, and the configuration echo."""

    rows: tuple[PairRow, ...]
    aggregates: dict[str, float]
    code_executable: float | None
    config: dict

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "pairs": [
                {"id": r.id, **r.values, "flags": list(r.flags)} for r in self.rows
            ],
            "aggregates": {
                **self.aggregates,
                **({"code_executable": self.code_executable} if self.code_executable is not None else {}),
            },
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_json_dict(), indent=indent)


def evaluate_pairs(
    pairs: Sequence[EvalPair],
    *,
    keyword_weights: KeywordWeights | None = None,
    trivial: TrivialNGramSet | None = None,
    code_bleu_weights: tuple[float, float, float, float] = DEFAULT_WEIGHTS,
    sql_matcher: SqlMatcher | None = None,
    grammar_id: str = "mini_python",
    max_n: int = 4,
    checker: Callable[[str], "CheckOutcome"] | None = None,
    checker_id: str | None = None,
    metrics: Sequence[str] = SIMILARITY_METRICS,
) -> MetricReport:
    """Compute the selected metrics for every (candidate, reference) pair.

    The trivial-n-gram set for the filtered BLEU variant should come from a
    background (training) corpus; without one the filter is empty and the
    metric reduces to plain BLEU, which the config echo records.  A checker
    enables the corpus-level executable rate.
    """
    if not pairs:
        raise ValueError("pairs must be non-empty")
    unknown = set(metrics) - set(SIMILARITY_METRICS)
    if unknown:
        raise ValueError(f"unknown metrics: {sorted(unknown)}")
    keyword_weights = keyword_weights or KeywordWeights.uniform()
    sql_matcher = sql_matcher or SqlMatcher()
    background_supplied = trivial is not None
    if trivial is None:
        trivial = TrivialNGramSet.empty()

    rows: list[PairRow] = []
    for pair in pairs:
        cand_tokens = code_tokens(pair.candidate, grammar_id)
        ref_tokens = code_tokens(pair.reference, grammar_id)
        cand_tree = parse(pair.candidate, grammar_id)
        ref_tree = parse(pair.reference, grammar_id)
        flags: list[str] = []
        if has_error(cand_tree):
            cand_tree = None
            flags.append("candidate_unparseable")
        values: dict[str, float] = {}
        if "bleu" in metrics:
            values["bleu"] = bleu(cand_tokens, ref_tokens, max_n)
        if "weighted_bleu" in metrics:
            values["weighted_bleu"] = weighted_bleu(cand_tokens, ref_tokens, keyword_weights, max_n)
        if "crystal_bleu" in metrics:
            values["crystal_bleu"], degenerate = crystal_bleu_flagged(
                cand_tokens, ref_tokens, trivial, max_n
            )
            if degenerate:
                flags.append("crystal_bleu_degenerate")
        if "code_bleu" in metrics:
            cb = code_bleu_result(
                pair.candidate, pair.reference, code_bleu_weights, keyword_weights, grammar_id, max_n
            )
            values["code_bleu"] = cb.value
            if not cb.dataflow_available:
                flags.append("dataflow_unavailable")
        if "syntax_match" in metrics:
            values["syntax_match"] = syntax_match(cand_tree, ref_tree)
        if "syntax_exact_match" in metrics:
            values["syntax_exact_match"] = float(
                syntax_exact_match(pair.candidate, pair.reference, sql_matcher, grammar_id)
            )
        rows.append(PairRow(id=pair.id, values=values, flags=tuple(flags)))

    aggregates = {
        name: sum(r.values[name] for r in rows) / len(rows)
        for name in metrics
    }
    executable_rate = None
    if checker is not None:
        from .composite import code_executable

        executable_rate = code_executable([p.candidate for p in pairs], checker)

    config = {
        "metrics": list(metrics),
        "max_n": max_n,
        "grammar": grammar_id,
        "keyword_weights": {
            "default": keyword_weights.default,
            "n_weighted_tokens": len(keyword_weights.weights),
        },
        "code_bleu_weights": list(code_bleu_weights),
        "trivial_ngrams": {
            "hash": trivial.digest(),
            "k": trivial.k,
            "background_supplied": background_supplied,
        },
        "sql_style": sql_matcher.style,
        "checker_id": checker_id,
        "notes": [
            "dataflow component is a simplified def-use approximation",
            "smoothing: add-one on zero counts for n >= 2",
        ],
    }
    return MetricReport(
        rows=tuple(rows),
        aggregates=aggregates,
        code_executable=executable_rate,
        config=config,
    )
