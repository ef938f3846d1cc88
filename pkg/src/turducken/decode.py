"""Decoding strategies over any token scorer: sampling, greedy, beam, and
syntax-first beam search driven by compiler feedback.

A scorer exposes ``next_distribution(prefix_ids, task)`` returning normalized
log-probabilities over the vocabulary (log-sum-exp 0 within 1e-4) plus its
special token ids.  ``prefix_ids`` are the tokens generated so far, without
any begin-of-sequence marker: that convention is the scorer's own business.

Candidates accumulate pure (length-unnormalized) log-likelihood; an optional
length penalty exists but defaults off.  Ties order by token-id sequence, so
results are fully deterministic for a deterministic scorer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, Protocol, Sequence, runtime_checkable

import numpy as np

from .checkers import CheckOutcome, parallel_check_all
from .errors import ScorerContractError
from .prompts import TaskId

Strategy = Literal["sampling", "greedy", "beam", "sf_beam"]

_NORMALIZATION_TOL = 1e-4


@runtime_checkable
class Scorer(Protocol):
    """Contract shared by the toy model, scripted tables and the bridge client."""

    vocab_size: int
    eos_id: int
    bos_id: int | None
    pad_id: int | None

    def next_distribution(self, prefix_ids: Sequence[int], task: TaskId | str) -> np.ndarray: ...


@dataclass(frozen=True)
class Candidate:
    """A decoded sequence (ending at eos or the length cap) with the sum of
    per-token log-probabilities along its path."""

    ids: tuple[int, ...]
    logprob: float

    def ends_with_eos(self, eos_id: int) -> bool:
        return bool(self.ids) and self.ids[-1] == eos_id


@dataclass(frozen=True)
class DecodeOpts:
    strategy: Strategy = "beam"
    beam_k: int = 10
    max_len: int = 256
    seed: int | None = None
    temperature: float = 1.0
    length_penalty: float = 0.0  # 0 = pure cumulative log-likelihood

    def __post_init__(self):
        if self.beam_k < 1:
            raise ValueError("beam_k must be >= 1")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")


def _validated_distribution(scorer: Scorer, prefix: tuple[int, ...], task) -> np.ndarray:
    logp = np.asarray(scorer.next_distribution(prefix, task), dtype=np.float64)
    if logp.shape != (scorer.vocab_size,):
        raise ScorerContractError(
            f"distribution shape {logp.shape} != ({scorer.vocab_size},)"
        )
    m = float(np.max(logp))
    lse = m + math.log(float(np.sum(np.exp(logp - m))))
    if not math.isfinite(lse) or abs(lse) > _NORMALIZATION_TOL:
        raise ScorerContractError(f"log-probabilities are not normalized (logsumexp={lse:.6g})")
    return logp


def _masked(logp: np.ndarray, pad_id: int | None) -> np.ndarray:
    if pad_id is None:
        return logp
    out = logp.copy()
    out[pad_id] = -np.inf
    return out


def _order_key(item: tuple[tuple[int, ...], float]):
    ids, lp = item
    return (-lp, ids)


def greedy(scorer: Scorer, task, opts: DecodeOpts | None = None) -> Candidate:
    """Pick the argmax token at every step (ties resolve to the lowest id);
    stop at eos or the length cap."""
    opts = opts or DecodeOpts(strategy="greedy")
    ids: tuple[int, ...] = ()
    logprob = 0.0
    for _ in range(opts.max_len):
        logp = _validated_distribution(scorer, ids, task)
        tok = int(np.argmax(_masked(logp, scorer.pad_id)))
        logprob += float(logp[tok])
        ids += (tok,)
        if tok == scorer.eos_id:
            break
    return Candidate(ids=ids, logprob=logprob)


def sample(scorer: Scorer, task, opts: DecodeOpts) -> Candidate:
    """Ancestral sampling from the temperature-scaled distribution;
    reproducible for a fixed seed.  The accumulated logprob uses the
    scorer's own (unscaled) log-probabilities."""
    if opts.seed is None:
        raise ValueError("sampling requires a seed")
    rng = np.random.default_rng(opts.seed)
    ids: tuple[int, ...] = ()
    logprob = 0.0
    for _ in range(opts.max_len):
        logp = _validated_distribution(scorer, ids, task)
        scaled = _masked(logp, scorer.pad_id) / opts.temperature
        probs = np.exp(scaled - np.max(scaled[np.isfinite(scaled)]))
        probs[~np.isfinite(probs)] = 0.0
        probs /= probs.sum()
        tok = int(rng.choice(scorer.vocab_size, p=probs))
        logprob += float(logp[tok])
        ids += (tok,)
        if tok == scorer.eos_id:
            break
    return Candidate(ids=ids, logprob=logprob)


def beam(scorer: Scorer, task, opts: DecodeOpts | None = None) -> list[Candidate]:
    """Length-unnormalized beam search.

    Every live hypothesis is expanded with the full vocabulary each step;
    hypotheses reaching eos retire to the result pool without consuming beam
    budget.  The result is sorted by log-likelihood descending (token-id
    order on ties) and truncated to ``beam_k``.
    """
    opts = opts or DecodeOpts(strategy="beam")
    k = opts.beam_k
    alive: list[tuple[tuple[int, ...], float]] = [((), 0.0)]
    pool: list[tuple[tuple[int, ...], float]] = []
    for _ in range(opts.max_len):
        if not alive:
            break
        expansions: list[tuple[tuple[int, ...], float]] = []
        for ids, lp in alive:
            logp = _validated_distribution(scorer, ids, task)
            for tok in range(scorer.vocab_size):
                if scorer.pad_id is not None and tok == scorer.pad_id:
                    continue
                expansions.append((ids + (tok,), lp + float(logp[tok])))
        expansions.sort(key=_order_key)
        alive = []
        for ids, lp in expansions[:k]:  # top-k survive; eos ones retire
            if ids[-1] == scorer.eos_id:
                pool.append((ids, lp))
            else:
                alive.append((ids, lp))
        if len(pool) >= k:
            # log-likelihood never increases along a path, so once the best
            # live hypothesis is strictly below the k-th pooled score no
            # extension can enter the result
            pool.sort(key=_order_key)
            if not alive or alive[0][1] < pool[k - 1][1]:
                alive = []
    pool.extend(alive)  # length-capped hypotheses count as finished
    pool.sort(key=_sort_key_with_penalty(opts.length_penalty))
    return [Candidate(ids=ids, logprob=lp) for ids, lp in pool[:k]]


def _sort_key_with_penalty(penalty: float):
    if not penalty:
        return _order_key

    def key(item: tuple[tuple[int, ...], float]):
        ids, lp = item
        return (-(lp / (len(ids) ** penalty)), ids)

    return key


def sf_beam(
    scorer: Scorer,
    task,
    opts: DecodeOpts,
    checker: Callable[[str], CheckOutcome],
    detokenize: Callable[[Sequence[int]], str] | None = None,
    parallel: bool = False,
    max_workers: int | None = None,
) -> tuple[Candidate, CheckOutcome]:
    """Beam search, then compile-check candidates in descending likelihood
    order and return the first executable one; if none passes, fall back to
    the likelihood argmax (flagged not executable by its outcome).

    ``parallel=True`` fans all checks out concurrently; selection still
    follows rank order, never completion order.  The returned candidate is
    always a member of the beam's candidate set.
    """
    detok = detokenize or getattr(scorer, "detokenize", None)
    if detok is None:
        raise ValueError("sf_beam needs a detokenizer (argument or scorer.detokenize)")
    candidates = beam(scorer, task, opts)
    sources = [detok(c.ids) for c in candidates]
    if parallel:
        outcomes = parallel_check_all(checker, sources, max_workers=max_workers)
        for cand, outcome in zip(candidates, outcomes):
            if outcome.executable:
                return cand, outcome
        return candidates[0], outcomes[0]
    first_outcome: CheckOutcome | None = None
    for i, (cand, source) in enumerate(zip(candidates, sources)):
        outcome = checker(source)
        if i == 0:
            first_outcome = outcome
        if outcome.executable:
            return cand, outcome
    assert first_outcome is not None
    return candidates[0], first_outcome


def decode(scorer: Scorer, task, opts: DecodeOpts, **kw):
    """Dispatch on ``opts.strategy``; sf_beam forwards checker/detokenizer
    keywords."""
    if opts.strategy == "greedy":
        return greedy(scorer, task, opts)
    if opts.strategy == "sampling":
        return sample(scorer, task, opts)
    if opts.strategy == "beam":
        return beam(scorer, task, opts)
    if opts.strategy == "sf_beam":
        return sf_beam(scorer, task, opts, **kw)
    raise ValueError(f"unknown strategy {opts.strategy!r}")
