"""Lexical similarity metrics: sentence BLEU and its keyword-weighted and
trivial-n-gram-filtered variants.

The exact formula is pinned here for reproducibility (upstream evaluation
scripts differ in their smoothing choices):

* modified n-gram precision ``p_n`` with reference-clipped counts, for
  n = 1..min(max_n, len(candidate));
* add-one smoothing only when a higher-order count is zero:
  ``p_n = 1 / (total_n + 1)`` for n >= 2 with zero clipped matches;
  a zero unigram match yields 0 outright;
* brevity penalty ``min(1, exp(1 - len(ref)/len(cand)))``;
* score = BP * geometric mean of the used precisions.

All values lie in [0, 1]; identical sequences score 1.
"""

from __future__ import annotations

import hashlib
import json
import keyword
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

Token = str
NGram = tuple[Token, ...]

JAVA_KEYWORDS = frozenset(
    """abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package private
    protected public return short static strictfp super switch synchronized
    this throw throws transient try void volatile while""".split()
)

PYTHON_KEYWORDS = frozenset(keyword.kwlist)

DEFAULT_KEYWORD_WEIGHT = 5.0


@dataclass(frozen=True)
class KeywordWeights:
    """Per-token match weights; language keywords default to weight 5,
    everything else to 1."""

    weights: Mapping[Token, float] = field(default_factory=dict)
    default: float = 1.0

    def __post_init__(self):
        for tok, w in self.weights.items():
            if not (w >= 1.0 and math.isfinite(w)):
                raise ValueError(f"weight for {tok!r} must be finite and >= 1")
        if self.default < 1.0:
            raise ValueError("default weight must be >= 1")

    @classmethod
    def for_language(cls, language: str, keyword_weight: float = DEFAULT_KEYWORD_WEIGHT) -> "KeywordWeights":
        table = {"python": PYTHON_KEYWORDS, "java": JAVA_KEYWORDS}
        try:
            kws = table[language]
        except KeyError:
            raise ValueError(f"no keyword table for language {language!r}") from None
        return cls(weights={k: keyword_weight for k in kws})

    @classmethod
    def uniform(cls) -> "KeywordWeights":
        return cls()

    def of(self, token: Token) -> float:
        return self.weights.get(token, self.default)

    def of_ngram(self, gram: NGram) -> float:
        return sum(self.of(t) for t in gram) / len(gram)


def _ngrams(tokens: Sequence[Token], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _brevity_penalty(cand_len: int, ref_len: int) -> float:
    if cand_len >= ref_len:
        return 1.0
    return math.exp(1.0 - ref_len / cand_len)


def _combine(log_precisions: list[float], cand_len: int, ref_len: int) -> float:
    bp = _brevity_penalty(cand_len, ref_len)
    return bp * math.exp(sum(log_precisions) / len(log_precisions))


def bleu(candidate: Sequence[Token], reference: Sequence[Token], max_n: int = 4) -> float:
    """Sentence BLEU with the smoothing pinned in the module docstring."""
    if not reference:
        raise ValueError("reference must be non-empty")
    if not candidate:
        return 0.0
    logs: list[float] = []
    for n in range(1, min(max_n, len(candidate)) + 1):
        cand_counts = _ngrams(candidate, n)
        ref_counts = _ngrams(reference, n)
        total = sum(cand_counts.values())
        clipped = sum(min(c, ref_counts[g]) for g, c in cand_counts.items())
        if clipped == 0:
            if n == 1:
                return 0.0
            logs.append(math.log(1.0 / (total + 1)))
        else:
            logs.append(math.log(clipped / total))
    return _combine(logs, len(candidate), len(reference))


def weighted_bleu(
    candidate: Sequence[Token],
    reference: Sequence[Token],
    weights: KeywordWeights | None = None,
    max_n: int = 4,
) -> float:
    """BLEU with n-gram match mass weighted by per-token keyword weights
    (an n-gram weighs the mean of its token weights).  Uniform weights reduce
    exactly to :func:`bleu`."""
    if not reference:
        raise ValueError("reference must be non-empty")
    if not candidate:
        return 0.0
    weights = weights or KeywordWeights.uniform()
    logs: list[float] = []
    for n in range(1, min(max_n, len(candidate)) + 1):
        cand_counts = _ngrams(candidate, n)
        ref_counts = _ngrams(reference, n)
        total = sum(c * weights.of_ngram(g) for g, c in cand_counts.items())
        matched = sum(min(c, ref_counts[g]) * weights.of_ngram(g) for g, c in cand_counts.items())
        if matched == 0.0:
            if n == 1:
                return 0.0
            logs.append(math.log(1.0 / (total + 1)))
        else:
            logs.append(math.log(matched / total))
    return _combine(logs, len(candidate), len(reference))


@dataclass(frozen=True)
class TrivialNGramSet:
    """The k most frequent n-grams of a background corpus, per order n.

    These are the "trivially shared" n-grams excluded from the filtered BLEU
    variant.  Construction is deterministic: frequency descending, then
    lexicographic n-gram order.
    """

    by_order: Mapping[int, frozenset[NGram]] = field(default_factory=dict)
    k: int = 500

    @classmethod
    def empty(cls) -> "TrivialNGramSet":
        return cls(by_order={})

    @classmethod
    def from_corpus(
        cls, token_lists: Iterable[Sequence[Token]], max_n: int = 4, k: int = 500
    ) -> "TrivialNGramSet":
        counts: dict[int, Counter] = {n: Counter() for n in range(1, max_n + 1)}
        for tokens in token_lists:
            for n in range(1, max_n + 1):
                counts[n].update(_ngrams(tokens, n))
        by_order = {}
        for n, counter in counts.items():
            ranked = sorted(counter.items(), key=lambda item: (-item[1], item[0]))
            by_order[n] = frozenset(g for g, _ in ranked[:k])
        return cls(by_order=by_order, k=k)

    def grams(self, n: int) -> frozenset[NGram]:
        return self.by_order.get(n, frozenset())

    def digest(self) -> str:
        """Stable content hash, echoed into evaluation reports."""
        payload = {
            str(n): sorted(" ".join(g) for g in grams)
            for n, grams in sorted(self.by_order.items())
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def crystal_bleu_flagged(
    candidate: Sequence[Token],
    reference: Sequence[Token],
    trivial: TrivialNGramSet | None = None,
    max_n: int = 4,
) -> tuple[float, bool]:
    """BLEU after deleting trivially shared n-grams from both sides.

    Returns (score, degenerate).  A pair is degenerate when every candidate
    unigram is trivial; it scores 0 by convention so corpus means stay
    defined.  Brevity penalty uses the unfiltered lengths.  An empty trivial
    set reduces exactly to :func:`bleu`.
    """
    if not reference:
        raise ValueError("reference must be non-empty")
    if not candidate:
        return 0.0, False
    trivial = trivial or TrivialNGramSet.empty()
    logs: list[float] = []
    for n in range(1, min(max_n, len(candidate)) + 1):
        drop = trivial.grams(n)
        cand_counts = Counter({g: c for g, c in _ngrams(candidate, n).items() if g not in drop})
        ref_counts = Counter({g: c for g, c in _ngrams(reference, n).items() if g not in drop})
        total = sum(cand_counts.values())
        if n == 1 and total == 0:
            return 0.0, True
        clipped = sum(min(c, ref_counts[g]) for g, c in cand_counts.items())
        if clipped == 0:
            if n == 1:
                return 0.0, False
            logs.append(math.log(1.0 / (total + 1)))
        else:
            logs.append(math.log(clipped / total))
    return _combine(logs, len(candidate), len(reference)), False


def crystal_bleu(
    candidate: Sequence[Token],
    reference: Sequence[Token],
    trivial: TrivialNGramSet | None = None,
    max_n: int = 4,
) -> float:
    return crystal_bleu_flagged(candidate, reference, trivial, max_n)[0]
