import io

import pytest
from hypothesis import given, strategies as st

from mhtext.errors import CorpusError, FormatError
from mhtext.textcore import (
    BOS_ID,
    EOS_ID,
    PHD_ID,
    UNK_ID,
    Sentence,
    Vocabulary,
    build_vocab,
    detokenize,
    tokenize,
)


def test_specials_occupy_fixed_ids():
    vocab = Vocabulary(["x"])
    assert vocab.id_of["<bos>"] == BOS_ID == 0
    assert vocab.id_of["<eos>"] == EOS_ID == 1
    assert vocab.id_of["<unk>"] == UNK_ID == 2
    assert vocab.id_of["<phd>"] == PHD_ID == 3
    assert vocab.id_of["x"] == 4
    assert [vocab.id_of[t] for t in vocab.tokens] == list(range(len(vocab)))


def test_build_vocab_frequency_then_first_occurrence():
    vocab = build_vocab(["a b", "b c", "b"], max_size=2)
    # b occurs 3 times; a and c once each, a seen first
    assert vocab.tokens[4:] == ["b", "a"]


def test_build_vocab_no_truncation_when_room():
    vocab = build_vocab(["a b", "b c", "b"], max_size=50)
    assert sorted(vocab.tokens[4:]) == ["a", "b", "c"]


def test_build_vocab_empty_corpus():
    with pytest.raises(CorpusError):
        build_vocab(["", "   "], max_size=5)


def test_build_vocab_deterministic(toy_corpus):
    a = build_vocab(toy_corpus, max_size=10)
    b = build_vocab(toy_corpus, max_size=10)
    assert a.tokens == b.tokens


def test_tokenize_basic_and_oov():
    vocab = build_vocab(["a b"], max_size=5)
    assert tokenize("a b", vocab).ids == (vocab.id_of["a"], vocab.id_of["b"])
    assert tokenize("a z", vocab).ids == (vocab.id_of["a"], UNK_ID)


def test_tokenize_case_folding():
    vocab = build_vocab(["a b"], max_size=5, lowercase=True)
    assert tokenize("A b", vocab).ids == (vocab.id_of["a"], vocab.id_of["b"])


def test_tokenize_empty_text():
    vocab = build_vocab(["a"], max_size=5)
    with pytest.raises(CorpusError):
        tokenize("   ", vocab)


def test_detokenize_and_single_token():
    vocab = build_vocab(["a b"], max_size=5)
    s = tokenize("a b", vocab)
    assert detokenize(s, vocab) == "a b"
    assert detokenize(Sentence((vocab.id_of["a"],)), vocab) == "a"


def test_round_trip_paper_style_sentence():
    text = "the decision is to build a new home ."
    vocab = build_vocab([text], max_size=50)
    assert detokenize(tokenize(text, vocab), vocab) == text


@given(st.lists(st.sampled_from("abcde"), min_size=1, max_size=12))
def test_round_trip_property(tokens):
    vocab = build_vocab([" ".join("abcde")], max_size=10)
    text = " ".join(tokens)
    assert detokenize(tokenize(text, vocab), vocab) == text


def test_sentence_rejects_boundary_ids():
    for bad in (BOS_ID, EOS_ID, PHD_ID):
        with pytest.raises(ValueError):
            Sentence((4, bad))
    with pytest.raises(ValueError):
        Sentence(())
    assert len(Sentence((UNK_ID,))) == 1  # UNK is allowed inside


def test_vocab_save_load_round_trip(tmp_path):
    vocab = build_vocab(["b a", "b"], max_size=5)
    sink = io.StringIO()
    vocab.save(sink)
    reloaded = Vocabulary.load(io.StringIO(sink.getvalue()))
    assert reloaded.tokens == vocab.tokens


def test_vocab_load_requires_specials_first():
    with pytest.raises(FormatError):
        Vocabulary.load(io.StringIO("a\nb\n"))
