"""BLEU, BLEU-ref/BLEU-ori, GLEU, and corpus NLL.

Metrics work on plain token sequences (ids or strings), so the same code
scores chain states and whitespace-split text files. Sentence-level BLEU
with epsilon smoothing is the default; corpus-level aggregation is
available through BleuConfig.level.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Sequence

from .errors import DataError
from .ngram import NGramModel
from .textcore import Sentence

Tokens = Sequence[Hashable]


@dataclass(frozen=True)
class BleuConfig:
    order: int = 4
    epsilon: float = 1e-9  # replaces zero n-gram precisions
    level: str = "sentence"

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if self.level not in ("sentence", "corpus"):
            raise ValueError("level must be 'sentence' or 'corpus'")


def _ngrams(tokens: Tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i: i + n]) for i in range(len(tokens) - n + 1))


def _closest_ref_len(cand_len: int, references: Sequence[Tokens]) -> int:
    # ties go to the shorter reference, independent of list order
    return min((abs(len(r) - cand_len), len(r)) for r in references)[1]


def _clipped_matches(cand: Counter, references: Sequence[Tokens], n: int) -> int:
    if not cand:
        return 0
    merged: Counter = Counter()
    for ref in references:
        ref_counts = _ngrams(ref, n)
        for gram, count in ref_counts.items():
            if count > merged[gram]:
                merged[gram] = count
    return sum(min(count, merged[gram]) for gram, count in cand.items())


def _brevity_penalty(cand_len: int, ref_len: int) -> float:
    if cand_len >= ref_len:
        return 1.0
    return math.exp(1.0 - ref_len / cand_len)


def bleu(candidate: Tokens, references: Sequence[Tokens],
         cfg: BleuConfig | None = None) -> float:
    """Sentence BLEU on a 0-100 scale.

    Modified n-gram precision up to cfg.order (capped at the candidate
    length so short sentences use their effective order), geometric mean,
    times the brevity penalty. Zero precisions are replaced by epsilon, so
    disjoint pairs score near but never exactly zero.
    """
    cfg = cfg or BleuConfig()
    candidate = list(candidate)
    if not candidate:
        raise DataError("empty candidate")
    if not references:
        raise DataError("need at least one reference")
    references = [list(r) for r in references]
    effective = min(cfg.order, len(candidate))
    log_sum = 0.0
    for n in range(1, effective + 1):
        cand = _ngrams(candidate, n)
        total = sum(cand.values())
        matched = _clipped_matches(cand, references, n)
        precision = matched / total if matched else cfg.epsilon
        log_sum += math.log(precision)
    geo = math.exp(log_sum / effective)
    bp = _brevity_penalty(len(candidate), _closest_ref_len(len(candidate), references))
    return 100.0 * geo * bp


def bleu_ref(candidate: Tokens, references: Sequence[Tokens],
             cfg: BleuConfig | None = None) -> float:
    """BLEU against the gold reference set (higher is better)."""
    return bleu(candidate, references, cfg)


def bleu_ori(candidate: Tokens, original: Tokens,
             cfg: BleuConfig | None = None) -> float:
    """BLEU against the original input; good paraphrases keep this low."""
    return bleu(candidate, [original], cfg)


def gleu(candidate: Tokens, source: Tokens, references: Sequence[Tokens],
         cfg: BleuConfig | None = None) -> float:
    """Correction-oriented BLEU variant on a 0-100 scale.

    Per n-gram order, the reference matches are reduced by the candidate
    n-grams that are supported only by the erroneous source, rewarding
    corrections and penalizing copied errors. Scores against multiple
    references are averaged.
    """
    cfg = cfg or BleuConfig()
    if not references:
        raise DataError("need at least one reference")
    return sum(
        _gleu_single(candidate, source, ref, cfg) for ref in references
    ) / len(references)


def _gleu_single(candidate: Tokens, source: Tokens, reference: Tokens,
                 cfg: BleuConfig) -> float:
    candidate = list(candidate)
    if not candidate:
        raise DataError("empty candidate")
    source = list(source)
    reference = list(reference)
    effective = min(cfg.order, len(candidate))
    log_sum = 0.0
    for n in range(1, effective + 1):
        cand = _ngrams(candidate, n)
        src = _ngrams(source, n)
        ref = _ngrams(reference, n)
        total = sum(cand.values())
        numer = 0
        for gram, count in cand.items():
            match_ref = min(count, ref[gram])
            match_src = min(count, src[gram])
            numer += match_ref - max(0, match_src - match_ref)
        precision = numer / total if numer > 0 else cfg.epsilon
        log_sum += math.log(precision)
    geo = math.exp(log_sum / effective)
    bp = _brevity_penalty(len(candidate), len(reference))
    return 100.0 * geo * bp


def corpus_bleu(candidates: Sequence[Tokens],
                reference_sets: Sequence[Sequence[Tokens]],
                cfg: BleuConfig | None = None) -> float:
    """Corpus-level BLEU: pooled counts, one brevity penalty."""
    cfg = cfg or BleuConfig()
    if len(candidates) != len(reference_sets):
        raise DataError("candidate/reference counts differ")
    if not candidates:
        raise DataError("empty corpus")
    order = cfg.order
    totals = [0] * order
    matches = [0] * order
    cand_len = 0
    ref_len = 0
    for candidate, references in zip(candidates, reference_sets):
        candidate = list(candidate)
        references = [list(r) for r in references]
        cand_len += len(candidate)
        ref_len += _closest_ref_len(len(candidate), references)
        for n in range(1, order + 1):
            cand = _ngrams(candidate, n)
            totals[n - 1] += sum(cand.values())
            matches[n - 1] += _clipped_matches(cand, references, n)
    log_sum = 0.0
    used = 0
    for n in range(order):
        if totals[n] == 0:
            continue
        used += 1
        precision = matches[n] / totals[n] if matches[n] else cfg.epsilon
        log_sum += math.log(precision)
    if used == 0:
        raise DataError("no n-grams to score")
    geo = math.exp(log_sum / used)
    return 100.0 * geo * _brevity_penalty(cand_len, ref_len)


def corpus_nll(model: NGramModel, sentences: Sequence[Sentence]) -> float:
    """Token-weighted mean per-token NLL (EOS counted) over the corpus."""
    if not sentences:
        raise DataError("empty corpus")
    total_logprob = 0.0
    total_tokens = 0
    for sentence in sentences:
        total_logprob += model.seq_logprob(sentence)
        total_tokens += len(sentence) + 1
    return -total_logprob / total_tokens
