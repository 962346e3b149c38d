import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mhtext.errors import DataError
from mhtext.metrics import (
    BleuConfig,
    bleu,
    bleu_ori,
    bleu_ref,
    corpus_bleu,
    corpus_nll,
    gleu,
)
from mhtext.textcore import tokenize

LN4 = math.log(4.0)


# ----------------------------------------------------------------------
# BLEU


def test_bleu_identity_is_100():
    assert bleu("a b c d e".split(), ["a b c d e".split()]) == pytest.approx(100.0)


def test_bleu_identity_for_random_sentences():
    rng = np.random.default_rng(0)
    words = list("abcdefgh")
    for _ in range(100):
        length = int(rng.integers(1, 12))
        sent = [words[i] for i in rng.integers(0, len(words), size=length)]
        assert bleu(sent, [sent]) == pytest.approx(100.0)


def test_bleu_hand_computed_bigram_case():
    # candidate "a b c" vs reference "a b d", order 2:
    # p1 = 2/3, p2 = 1/2, BP = 1 -> 100*sqrt(1/3) = 57.735
    score = bleu(["a", "b", "c"], [["a", "b", "d"]], BleuConfig(order=2))
    assert score == pytest.approx(100.0 * math.sqrt(1.0 / 3.0), abs=1e-9)
    assert score == pytest.approx(57.74, abs=0.01)


def test_bleu_zero_overlap_is_tiny_but_finite():
    score = bleu(["x", "y"], [["a", "b"]])
    assert 0.0 < score < 0.1


def test_bleu_brevity_penalty():
    # candidate shorter than reference: BP = exp(1 - r/c)
    score = bleu(["a", "b"], [["a", "b", "c", "d"]], BleuConfig(order=1))
    assert score == pytest.approx(100.0 * math.exp(1 - 4 / 2), abs=1e-9)


def test_bleu_effective_order_short_candidate():
    assert bleu(["a"], [["a"]]) == pytest.approx(100.0)


def test_bleu_empty_candidate_errors():
    with pytest.raises(DataError):
        bleu([], [["a"]])
    with pytest.raises(DataError):
        bleu(["a"], [])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from("abcd"), min_size=1, max_size=8),
       st.permutations(range(3)))
def test_bleu_reference_permutation_invariance(cand, perm):
    refs = [["a", "b"], ["b", "c", "d"], ["a", "c"]]
    shuffled = [refs[i] for i in perm]
    assert bleu(cand, refs) == pytest.approx(bleu(cand, shuffled), abs=1e-12)


def test_bleu_ref_and_ori_wrappers():
    cand = "a b c".split()
    assert bleu_ori(cand, cand) == pytest.approx(100.0)
    assert bleu_ref(cand, [["a", "b", "c"], ["x"]]) == pytest.approx(100.0)
    assert bleu_ori(["x", "y", "z"], cand) < 1.0


# ----------------------------------------------------------------------
# GLEU


def _gleu_oracle(cand, src, ref, order):
    """Independent n-gram set arithmetic, straight from the definition."""
    log_sum, used = 0.0, 0
    for n in range(1, min(order, len(cand)) + 1):
        c = Counter(tuple(cand[i:i + n]) for i in range(len(cand) - n + 1))
        s = Counter(tuple(src[i:i + n]) for i in range(len(src) - n + 1))
        r = Counter(tuple(ref[i:i + n]) for i in range(len(ref) - n + 1))
        num = 0
        for g, k in c.items():
            num += min(k, r[g]) - max(0, min(k, s[g]) - min(k, r[g]))
        den = sum(c.values())
        p = num / den if num > 0 else 1e-9
        log_sum += math.log(p)
        used += 1
    bp = 1.0 if len(cand) >= len(ref) else math.exp(1 - len(ref) / len(cand))
    return 100.0 * math.exp(log_sum / used) * bp


def test_gleu_identity_triple():
    s = "the cat sat".split()
    assert gleu(s, s, [s]) == pytest.approx(100.0)


def test_gleu_copying_the_error_scores_below_fixing_it():
    src = "the cat sat".split()
    ref = "the cat sits".split()
    assert gleu(ref, src, [ref]) > gleu(src, src, [ref])


def test_gleu_golden_micro_case():
    # S="a x c", R="a b c", C="a b x", order 2:
    # n=1: matches 2, penalty 1 -> 1/3; n=2: "a b" matches -> 1/2; BP=1
    cand, src, ref = ["a", "b", "x"], ["a", "x", "c"], ["a", "b", "c"]
    expected = 100.0 * math.sqrt(1.0 / 6.0)
    cfg = BleuConfig(order=2)
    assert gleu(cand, src, [ref], cfg) == pytest.approx(expected, abs=1e-9)
    assert gleu(cand, src, [ref], cfg) == pytest.approx(
        _gleu_oracle(cand, src, ref, 2), abs=1e-12
    )


def test_gleu_matches_oracle_on_random_triples():
    rng = np.random.default_rng(3)
    words = list("abcde")
    for _ in range(200):
        def sent():
            n = int(rng.integers(1, 7))
            return [words[i] for i in rng.integers(0, len(words), size=n)]
        cand, src, ref = sent(), sent(), sent()
        assert gleu(cand, src, [ref]) == pytest.approx(
            _gleu_oracle(cand, src, ref, 4), abs=1e-9
        )


def test_gleu_reduces_to_bleu_when_source_equals_reference():
    cand = "a b c d".split()
    ref = "a b e d".split()
    assert gleu(cand, ref, [ref]) == pytest.approx(bleu(cand, [ref]), abs=1e-12)


def test_gleu_multiple_references_average():
    cand = "a b".split()
    src = "a x".split()
    refs = [["a", "b"], ["a", "c"]]
    expected = (gleu(cand, src, [refs[0]]) + gleu(cand, src, [refs[1]])) / 2
    assert gleu(cand, src, refs) == pytest.approx(expected, abs=1e-12)


# ----------------------------------------------------------------------
# corpus metrics


def test_corpus_nll_uniform_fixture(uniform):
    models, _ = uniform
    vocab = models.vocab
    sentences = [tokenize(t, vocab) for t in ("a", "b c", "a b c")]
    assert corpus_nll(models.fwd, sentences) == pytest.approx(LN4, abs=1e-12)


def test_corpus_nll_singleton_equals_per_token(toy_models, toy_vocab):
    s = tokenize("the cat sat on the mat .", toy_vocab)
    assert corpus_nll(toy_models.fwd, [s]) == pytest.approx(
        toy_models.fwd.per_token_nll(s)
    )


def test_corpus_nll_empty_errors(toy_models):
    with pytest.raises(DataError):
        corpus_nll(toy_models.fwd, [])


def test_corpus_bleu_identity():
    cands = [["a", "b"], ["c", "d", "e"]]
    assert corpus_bleu(cands, [[c] for c in cands]) == pytest.approx(100.0)


def test_corpus_bleu_length_mismatch():
    with pytest.raises(DataError):
        corpus_bleu([["a"]], [])
