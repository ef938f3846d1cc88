import math

import numpy as np
import pytest

from turducken.checkers import CheckOutcome
from turducken.decode import Candidate, DecodeOpts, beam, greedy, sample, sf_beam
from turducken.errors import ScorerContractError
from turducken.scorers import TableScorer


def enumerate_all(scorer, max_len, task="origin"):
    """Brute-force oracle: every terminal sequence with its exact score."""
    results = []

    def rec(prefix, lp):
        if (prefix and prefix[-1] == scorer.eos_id) or len(prefix) == max_len:
            results.append((prefix, lp))
            return
        logp = scorer.next_distribution(prefix, task)
        for tok in range(scorer.vocab_size):
            rec(prefix + (tok,), lp + float(logp[tok]))

    rec((), 0.0)
    results.sort(key=lambda item: (-item[1], item[0]))
    return results


HAND_TABLE = {
    (): [0.5, 0.3, 0.2],
    (0,): [0.1, 0.6, 0.3],
    (0, 1): [0.2, 0.2, 0.6],
    (1,): [0.4, 0.1, 0.5],
}


def hand_scorer():
    return TableScorer.from_probs(HAND_TABLE, vocab=["a", "b", "</s>"])


def test_scorer_contract_enforced():
    class Broken:
        vocab_size = 3
        eos_id = 2
        bos_id = None
        pad_id = None

        def next_distribution(self, prefix, task):
            return np.log(np.array([0.5, 0.5, 0.5]))  # sums to 1.5

    with pytest.raises(ScorerContractError):
        greedy(Broken(), "origin")


def test_greedy_eos_peaked_scorer():
    scorer = TableScorer.from_probs({(): [0.1, 0.1, 0.8]})
    cand = greedy(scorer, "origin", DecodeOpts(max_len=5))
    assert cand.ids == (2,)
    assert cand.logprob == pytest.approx(math.log(0.8))


def test_greedy_hand_traced_path():
    # by hand over HAND_TABLE: argmax a (0.5), then b (0.6), then eos (0.6)
    cand = greedy(hand_scorer(), "origin", DecodeOpts(max_len=10))
    assert cand.ids == (0, 1, 2)
    assert cand.logprob == pytest.approx(math.log(0.5) + math.log(0.6) + math.log(0.6))


def test_greedy_tie_breaks_to_lowest_id():
    scorer = TableScorer.from_probs({(): [0.4, 0.4, 0.2], (0,): [0.0, 0.0, 1.0]})
    assert greedy(scorer, "origin", DecodeOpts(max_len=3)).ids[0] == 0


def test_greedy_equals_beam_k1():
    for seed in range(10):
        scorer = TableScorer.random(4, max_len=4, seed=seed)
        g = greedy(scorer, "origin", DecodeOpts(max_len=4))
        b = beam(scorer, "origin", DecodeOpts(beam_k=1, max_len=4))
        assert len(b) == 1
        assert b[0] == g


def test_sample_one_hot_equals_greedy():
    scorer = TableScorer.from_probs({(): [0.0, 1.0, 0.0], (1,): [0.0, 0.0, 1.0]})
    g = greedy(scorer, "origin", DecodeOpts(max_len=4))
    for seed in (0, 7, 99):
        s = sample(scorer, "origin", DecodeOpts(strategy="sampling", max_len=4, seed=seed))
        assert s == g


def test_sample_deterministic_for_fixed_seed():
    scorer = TableScorer.random(4, max_len=5, seed=3)
    opts = DecodeOpts(strategy="sampling", max_len=5, seed=1234)
    assert sample(scorer, "origin", opts) == sample(scorer, "origin", opts)
    other = sample(scorer, "origin", DecodeOpts(strategy="sampling", max_len=5, seed=4321))
    assert isinstance(other, Candidate)


def test_sample_requires_seed():
    with pytest.raises(ValueError):
        sample(hand_scorer(), "origin", DecodeOpts(strategy="sampling", max_len=2))


def test_sample_monte_carlo_frequencies():
    probs = [0.2, 0.3, 0.5]
    scorer = TableScorer.from_probs({(): probs})
    n = 100_000
    counts = np.zeros(3)
    for seed in range(n):
        first = sample(scorer, "origin", DecodeOpts(strategy="sampling", max_len=1, seed=seed)).ids[0]
        counts[first] += 1
    freqs = counts / n
    for p, f in zip(probs, freqs):
        sigma = math.sqrt(p * (1 - p) / n)
        assert abs(f - p) < 3 * sigma, (p, f)


def test_beam_equals_exhaustive_on_hand_table():
    scorer = hand_scorer()
    oracle = enumerate_all(scorer, max_len=3)
    got = beam(scorer, "origin", DecodeOpts(beam_k=27, max_len=3))
    assert [(c.ids, c.logprob) for c in got] == oracle[:27]


def test_beam_equals_exhaustive_on_random_tables():
    for seed in range(20):
        scorer = TableScorer.random(3, max_len=3, seed=100 + seed)
        oracle = enumerate_all(scorer, max_len=3)
        got = beam(scorer, "origin", DecodeOpts(beam_k=27, max_len=3))
        assert [(c.ids, c.logprob) for c in got] == oracle[: len(got)]
        assert len(got) == min(27, len(oracle))


def test_beam_top1_monotone_in_k():
    for seed in range(10):
        scorer = TableScorer.random(4, max_len=4, seed=seed)
        top1 = beam(scorer, "origin", DecodeOpts(beam_k=1, max_len=4))[0]
        top10 = beam(scorer, "origin", DecodeOpts(beam_k=10, max_len=4))[0]
        assert top10.logprob >= top1.logprob


def test_beam_candidates_distinct_and_sorted():
    scorer = TableScorer.random(4, max_len=4, seed=5)
    cands = beam(scorer, "origin", DecodeOpts(beam_k=10, max_len=4))
    ids = [c.ids for c in cands]
    assert len(set(ids)) == len(ids)
    assert all(a.logprob >= b.logprob for a, b in zip(cands, cands[1:]))


def test_candidate_logprob_recomputable():
    scorer = TableScorer.random(4, max_len=4, seed=8)
    for cand in beam(scorer, "origin", DecodeOpts(beam_k=8, max_len=4)):
        lp = 0.0
        for i, tok in enumerate(cand.ids):
            lp += float(scorer.next_distribution(cand.ids[:i], "origin")[tok])
        assert cand.logprob == pytest.approx(lp, abs=1e-12)
        assert cand.logprob <= 1e-9


def _outcome(ok):
    return CheckOutcome(executable=ok, diagnostics="", duration_ms=0.0, checker_id="mock")


def test_sf_beam_accept_all_returns_top1():
    scorer = TableScorer.random(4, max_len=4, seed=2)
    opts = DecodeOpts(strategy="sf_beam", beam_k=6, max_len=4)
    top1 = beam(scorer, "origin", opts)[0]
    cand, outcome = sf_beam(scorer, "origin", opts, lambda s: _outcome(True))
    assert cand == top1
    assert outcome.executable


def test_sf_beam_reject_all_falls_back_to_top1():
    scorer = TableScorer.random(4, max_len=4, seed=2)
    opts = DecodeOpts(strategy="sf_beam", beam_k=6, max_len=4)
    top1 = beam(scorer, "origin", opts)[0]
    cand, outcome = sf_beam(scorer, "origin", opts, lambda s: _outcome(False))
    assert cand == top1
    assert not outcome.executable


@pytest.mark.parametrize("parallel", [False, True])
def test_sf_beam_picks_first_executable_by_rank(parallel):
    scorer = TableScorer.random(4, max_len=4, seed=21)
    opts = DecodeOpts(strategy="sf_beam", beam_k=6, max_len=4)
    cands = beam(scorer, "origin", opts)
    assert len(cands) >= 3
    accepted = scorer.detokenize(cands[2].ids)

    def checker(source):
        return _outcome(source == accepted)

    cand, outcome = sf_beam(scorer, "origin", opts, checker, parallel=parallel)
    assert cand == cands[2]
    assert outcome.executable


def test_sf_beam_output_is_member_of_beam_set():
    for seed in range(8):
        scorer = TableScorer.random(3, max_len=3, seed=seed)
        opts = DecodeOpts(strategy="sf_beam", beam_k=5, max_len=3)
        cands = beam(scorer, "origin", opts)
        rng = np.random.default_rng(seed)
        accepted = {scorer.detokenize(c.ids) for c in cands if rng.random() < 0.4}
        cand, _ = sf_beam(scorer, "origin", opts, lambda s: _outcome(s in accepted))
        assert cand in cands


def test_sf_beam_needs_detokenizer():
    class Bare:
        vocab_size = 3
        eos_id = 2
        bos_id = None
        pad_id = None

        def next_distribution(self, prefix, task):
            return np.log(np.ones(3) / 3)

    with pytest.raises(ValueError):
        sf_beam(Bare(), "origin", DecodeOpts(max_len=2), lambda s: _outcome(True))


def test_decode_opts_validation():
    with pytest.raises(ValueError):
        DecodeOpts(beam_k=0)
    with pytest.raises(ValueError):
        DecodeOpts(max_len=0)
    with pytest.raises(ValueError):
        DecodeOpts(temperature=0.0)
