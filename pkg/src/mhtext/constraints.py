"""Constraint scoring and the unnormalized target distribution.

The sampler's target is pi(x) proportional to p_LM(x)^alpha times a stack
of constraint factors: a hard keyword indicator (zero outside its support)
and/or a soft word-vector matching score raised to beta. Everything
downstream consumes only differences of log scores, so no normalizer is
ever computed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable

import numpy as np

from .embeddings import EmbeddingTable, max_sim_to_reference
from .errors import DataError
from .ngram import NGramModel
from .textcore import UNK_ID, Sentence, Vocabulary

NEG_INF = float("-inf")

# Soft scores are clamped below by this before entering the target
# distribution so the chain stays irreducible on the hard support.
SIM_FLOOR = 0.01

MODE_MIN = "min"
MODE_AVG = "avg"


def load_stopwords(source: Iterable[str] | None = None) -> frozenset[str]:
    """One word per line; defaults to the packaged English list."""
    if source is None:
        text = resources.files("mhtext").joinpath("data/stopwords.txt").read_text()
        source = text.splitlines()
    words = {line.strip().lower() for line in source}
    words.discard("")
    return frozenset(words)


@dataclass
class EmbedMatch:
    """Soft word-vector matching against a fixed reference sentence.

    bidirectional additionally scores how well the candidate covers the
    reference words (averaged with the forward score), which makes the
    dropped-word direction visible; word-order changes never move either
    side. The error-correction task turns this on.
    """

    mode: str
    table: EmbeddingTable
    reference: Sentence
    content_only: bool = False
    stopwords: frozenset[str] = frozenset()
    bidirectional: bool = False

    def __post_init__(self):
        if self.mode not in (MODE_MIN, MODE_AVG):
            raise ValueError(f"mode must be {MODE_MIN!r} or {MODE_AVG!r}")


@dataclass
class ConstraintSpec:
    """Declarative constraint stack plus the exponents on each factor.

    alpha weighs the language-model factor, beta the soft match factor;
    both default to 1 which reproduces plain factor multiplication.
    Instances are treated as immutable after construction (the similarity
    memo is a cache of pure lookups).
    """

    vocab: Vocabulary
    keywords: frozenset[int] | None = None
    embed: EmbedMatch | None = None
    alpha: float = 1.0
    beta: float = 1.0
    _sim_cache: dict[int, float] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.keywords is not None and not self.keywords:
            raise ValueError("empty keyword set: pass None for no keyword constraint")

    def word_sim(self, ident: int) -> float:
        """Clamped max similarity of one word against the reference."""
        cached = self._sim_cache.get(ident)
        if cached is not None:
            return cached
        em = self.embed
        ref_words = [self.vocab.surface(i) for i in em.reference.ids]
        sim = max_sim_to_reference(self.vocab.surface(ident), ref_words, em.table)
        sim = min(max(sim, SIM_FLOOR), 1.0)
        self._sim_cache[ident] = sim
        return sim


@dataclass(frozen=True)
class MatchScore:
    """Combined constraint factor: zero exactly when a hard constraint fails."""

    value: float
    hard_ok: bool


def keyword_indicator(x: Sentence, keywords: Iterable[int]) -> int:
    """1 iff every keyword id occurs at least once in x."""
    present = set(x.ids)
    return int(all(k in present for k in keywords))


def _content_ids(ids, spec: ConstraintSpec, stopwords: frozenset[str]) -> list[int]:
    content = [
        i for i in ids
        if i != UNK_ID and spec.vocab.surface(i).lower() not in stopwords
    ]
    return content or list(ids)


def _aggregate(sims: list[float], mode: str) -> float:
    if mode == MODE_MIN:
        return min(sims)
    return sum(sims) / len(sims)


def match_score_wv(x: Sentence, spec: ConstraintSpec) -> float:
    """Aggregate word-vector match of x against the spec's reference.

    Per word of x: the max cosine to any reference word, clamped to
    [SIM_FLOOR, 1]; aggregated by min (mode "min") or arithmetic mean
    (mode "avg"). With content_only set, stopwords of x are skipped, which
    keeps function-word edits from moving the score; an all-stopword
    sentence falls back to using every word. A bidirectional match
    averages in the same score with the roles of x and the reference
    swapped.
    """
    em = spec.embed
    ids = list(x.ids)
    if em.content_only:
        ids = _content_ids(ids, spec, em.stopwords)
    sims = [spec.word_sim(i) for i in ids]
    forward = _aggregate(sims, em.mode)
    if not em.bidirectional:
        return forward
    # worst side governs: a dropped reference word cannot hide behind a
    # perfect forward score
    return min(forward, _coverage_score(x, spec))


def _coverage_score(x: Sentence, spec: ConstraintSpec) -> float:
    """Reference words matched into x: per reference word, the clamped max
    cosine to any word of x, aggregated like the forward direction."""
    em = spec.embed
    ref_ids = list(em.reference.ids)
    x_ids = list(x.ids)
    if em.content_only:
        ref_ids = _content_ids(ref_ids, spec, em.stopwords)
        x_ids = _content_ids(x_ids, spec, em.stopwords)
    units = [em.table.unit(spec.vocab.surface(i)) for i in x_ids]
    rows = [u for u in units if u is not None]
    matrix = np.stack(rows) if rows else None
    sims = []
    for ident in ref_ids:
        query = em.table.unit(spec.vocab.surface(ident))
        if query is None or matrix is None:
            sim = em.table.oov_similarity
        else:
            sim = float((matrix @ query).max())
        sims.append(min(max(sim, SIM_FLOOR), 1.0))
    return _aggregate(sims, em.mode)


def evaluate_constraints(x: Sentence, spec: ConstraintSpec) -> MatchScore:
    if spec.keywords is not None and not keyword_indicator(x, spec.keywords):
        return MatchScore(0.0, False)
    value = 1.0
    if spec.embed is not None:
        value = match_score_wv(x, spec)
    return MatchScore(value, True)


def stationary_logscore(x: Sentence, spec: ConstraintSpec, lm: NGramModel) -> float:
    """log of the unnormalized target; -inf when a hard constraint fails."""
    score = evaluate_constraints(x, spec)
    if not score.hard_ok:
        return NEG_INF
    total = spec.alpha * lm.seq_logprob(x)
    if spec.embed is not None:
        total += spec.beta * math.log(score.value)
    return total


# ----------------------------------------------------------------------
# RAKE keyword extraction


def _split_phrases(
    x: Sentence, vocab: Vocabulary, stopwords: frozenset[str]
) -> list[tuple[int, list[int]]]:
    """Maximal runs between delimiters, as (start position, member ids).

    Delimiters are stopwords, punctuation-only tokens, and UNK.
    """

    def is_delimiter(ident: int) -> bool:
        if ident == UNK_ID:
            return True
        tok = vocab.surface(ident)
        if tok.lower() in stopwords:
            return True
        return not any(c.isalnum() for c in tok)

    phrases: list[tuple[int, list[int]]] = []
    current: list[int] = []
    for pos, ident in enumerate(x.ids):
        if is_delimiter(ident):
            if current:
                phrases.append((pos - len(current), current))
                current = []
        else:
            current.append(ident)
    if current:
        phrases.append((len(x) - len(current), current))
    return phrases


def phrase_scores(
    x: Sentence, vocab: Vocabulary, stopwords: frozenset[str]
) -> list[tuple[list[int], float]]:
    """Candidate phrases with their RAKE scores, best first.

    Word score = degree/frequency over co-occurrence within phrases;
    phrase score = sum of member word scores; ties break by sentence
    position.
    """
    phrases = _split_phrases(x, vocab, stopwords)
    if not phrases:
        return []
    freq: dict[int, int] = {}
    degree: dict[int, int] = {}
    for _, members in phrases:
        for ident in members:
            freq[ident] = freq.get(ident, 0) + 1
            degree[ident] = degree.get(ident, 0) + len(members)
    scored = [
        (members, sum(degree[i] / freq[i] for i in members), start)
        for start, members in phrases
    ]
    scored.sort(key=lambda t: (-t[1], t[2]))
    return [(members, score) for members, score, _ in scored]


def rake_extract(
    x: Sentence,
    vocab: Vocabulary,
    stopwords: frozenset[str],
    top_k: int,
) -> list[int]:
    """Content words of the top_k RAKE phrases of x, in sentence order.

    Returns [] for an all-stopword sentence, letting the caller pick a
    fallback.
    """
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    ranked = phrase_scores(x, vocab, stopwords)
    chosen = {ident for members, _ in ranked[:top_k] for ident in members}
    ordered: list[int] = []
    for ident in x.ids:
        if ident in chosen:
            ordered.append(ident)
            chosen.discard(ident)
    return ordered


def keywords_from_surfaces(words: Iterable[str], vocab: Vocabulary) -> list[int]:
    """Resolve user-supplied keyword strings to ids; OOV is an error."""
    ids = []
    for word in words:
        word = word.strip()
        if not word:
            continue
        try:
            ids.append(vocab.require(word))
        except DataError:
            raise DataError(f"keyword {word!r} is not in the vocabulary") from None
    if not ids:
        raise DataError("no usable keywords supplied")
    return ids
